"""Closed-loop 0D cardiovascular model.

Circuit layout (all pressures relative to a venous reference of 0 Pa):

* Heart: time-varying elastance P_LV = E(t)*(V_LV - V_0); ideal-diode
  mitral/aortic valves with series resistance and inertance; constant
  left-atrial pressure P_LA.
* Aorta: three-element Windkessel (R_sp proximal, C_s || R_sd distal);
  the aortic-root pressure P_ao is solved algebraically from flux balance
  at the root node each evaluation, so the node is conservative to
  round-off by construction.
* Coronary outlets: per-terminal Kim-type LPM (R_a -> C_a -> R_ap ->
  C_im -> R_ad) fed through the tree path resistance R_3D,i, with
  intramyocardial compression entering as P_im,i = alpha_i * P_LV on the
  C_im bottom plate (alpha 0.5 left / 0.25 right).

Internal units: Pa, mm^3, s (resistance Pa*s/mm^3, compliance mm^3/Pa,
inertance Pa*s^2/mm^3).  Conversions to clinical units happen only at the
metric/CSV boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import _kernels as k
from .errors import ConfigError, NumericalError
from .tree import FluidProperties, VesselTree, path_resistance, poiseuille_resistance
from .units import mm3_to_ml, mm3s_to_lmin, pa_to_mmhg

ALPHA_BY_SIDE = {"left": 0.5, "right": 0.25}  # intramyocardial transfer coefficient

# Spec'd integration defaults: production step and the coarse step allowed
# inside calibration loops.
DT_PRODUCTION = 1e-4  # [s]
DT_CALIBRATION = 1e-3  # [s]
DT_MAX = 1e-3  # [s] simulate() precondition


@dataclass(frozen=True)
class ElastanceParams:
    """Five-parameter time-varying elastance (Pa/mm^3, s)."""

    E_max: float
    E_min: float
    t_max: float
    t_r: float
    T: float

    def __post_init__(self) -> None:
        if not 0.0 < self.E_min <= self.E_max:
            raise ConfigError(f"elastance requires 0 < E_min <= E_max, got E_min={self.E_min}, E_max={self.E_max}")
        if not 0.0 < self.t_max < self.t_r < self.T:
            raise ConfigError(
                f"elastance requires 0 < t_max < t_r < T, got t_max={self.t_max}, t_r={self.t_r}, T={self.T}"
            )


@dataclass(frozen=True)
class HeartParams:
    """Left-heart elements: elastance, valve resistances/inertances, preload."""

    elastance: ElastanceParams
    R_MV: float  # mitral valve resistance [Pa*s/mm^3]
    R_AV: float  # aortic valve resistance [Pa*s/mm^3]
    L_MV: float  # mitral inertance [Pa*s^2/mm^3]
    L_AV: float  # aortic inertance [Pa*s^2/mm^3]
    P_LA: float  # left-atrial pressure [Pa]
    V_0: float = 10_000.0  # unstressed LV volume [mm^3]

    def __post_init__(self) -> None:
        for name in ("R_MV", "R_AV", "L_MV", "L_AV"):
            if getattr(self, name) <= 0.0:
                raise ConfigError(f"HeartParams.{name} must be positive, got {getattr(self, name)!r}")
        if self.P_LA <= 0.0:
            raise ConfigError(f"HeartParams.P_LA must be positive, got {self.P_LA!r}")
        if self.V_0 < 0.0:
            raise ConfigError(f"HeartParams.V_0 must be non-negative, got {self.V_0!r}")


@dataclass(frozen=True)
class AortaParams:
    """Three-element Windkessel of the systemic circulation."""

    C_s: float  # systemic compliance [mm^3/Pa]
    R_sp: float  # proximal systemic resistance [Pa*s/mm^3]
    R_sd: float  # distal systemic resistance [Pa*s/mm^3]

    def __post_init__(self) -> None:
        for name in ("C_s", "R_sp", "R_sd"):
            if getattr(self, name) <= 0.0:
                raise ConfigError(f"AortaParams.{name} must be positive, got {getattr(self, name)!r}")


@dataclass(frozen=True)
class CoronaryParams:
    """One coronary-outlet LPM (Kim-type with intramyocardial compression)."""

    R_a: float  # large-artery resistance [Pa*s/mm^3]
    R_ap: float  # proximal microvascular resistance [Pa*s/mm^3]
    R_ad: float  # distal microvascular resistance [Pa*s/mm^3]
    C_a: float  # arterial compliance [mm^3/Pa]
    C_im: float  # intramyocardial compliance [mm^3/Pa]
    alpha: float  # P_im = alpha * P_LV transfer coefficient

    def __post_init__(self) -> None:
        for name in ("R_a", "R_ap", "R_ad", "C_a", "C_im"):
            if getattr(self, name) <= 0.0:
                raise ConfigError(f"CoronaryParams.{name} must be positive, got {getattr(self, name)!r}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"CoronaryParams.alpha must lie in [0, 1], got {self.alpha!r}")

    @property
    def R_total(self) -> float:
        """Series total of the outlet LPM resistances [Pa*s/mm^3]."""
        return self.R_a + self.R_ap + self.R_ad

    def scaled(self, R_a=1.0, R_ap=1.0, R_ad=1.0, C_a=1.0, C_im=1.0) -> "CoronaryParams":
        """New parameter set with the named elements multiplied by factors."""
        return replace(
            self,
            R_a=self.R_a * R_a,
            R_ap=self.R_ap * R_ap,
            R_ad=self.R_ad * R_ad,
            C_a=self.C_a * C_a,
            C_im=self.C_im * C_im,
        )


@dataclass(frozen=True)
class LpmParameterSet:
    """Everything simulate() needs: heart, aorta, per-terminal coronary LPMs.

    ``tree_resistances`` holds the per-segment Poiseuille resistances;
    ``terminal_path_resistance`` the derived ostium->terminal series sums
    (the R_3D,i surrogates feeding each outlet LPM).  Coronary keys match
    the tree terminals exactly, in tree order.
    """

    heart: HeartParams
    aorta: AortaParams
    coronary: dict[str, CoronaryParams]
    tree_resistances: dict[str, float]
    terminal_path_resistance: dict[str, float]

    def __post_init__(self) -> None:
        if not self.coronary:
            raise ConfigError("LpmParameterSet requires at least one coronary terminal")
        if set(self.coronary) != set(self.terminal_path_resistance):
            raise ConfigError(
                "coronary parameter keys must exactly match terminal segments: "
                f"coronary={sorted(self.coronary)}, terminals={sorted(self.terminal_path_resistance)}"
            )

    @property
    def terminal_ids(self) -> tuple[str, ...]:
        return tuple(self.coronary)

    def with_coronary(self, coronary: dict[str, CoronaryParams]) -> "LpmParameterSet":
        """Same heart/aorta/tree with a replacement coronary map."""
        if set(coronary) != set(self.coronary):
            raise ConfigError("replacement coronary map must keep the same terminal keys")
        ordered = {tid: coronary[tid] for tid in self.coronary}
        return replace(self, coronary=ordered)

    def with_heart(self, heart: HeartParams) -> "LpmParameterSet":
        return replace(self, heart=heart)

    def with_aorta(self, aorta: AortaParams) -> "LpmParameterSet":
        return replace(self, aorta=aorta)


def build_parameter_set(
    tree: VesselTree,
    heart: HeartParams,
    aorta: AortaParams,
    coronary: dict[str, CoronaryParams],
    fluid: FluidProperties | None = None,
) -> LpmParameterSet:
    """Assemble and validate a parameter set against a vessel tree.

    Derives the per-segment Poiseuille resistances and the per-terminal
    path sums from the geometry.  Coronary keys must match the tree's
    terminal ids exactly.
    """
    fluid = fluid or FluidProperties()
    missing = set(tree.terminal_ids) - set(coronary)
    extra = set(coronary) - set(tree.terminal_ids)
    if missing or extra:
        raise ConfigError(
            f"coronary parameters do not match tree terminals (missing: {sorted(missing)}, unknown: {sorted(extra)})"
        )
    ordered = {tid: coronary[tid] for tid in tree.terminal_ids}
    seg_R = {seg.id: poiseuille_resistance(seg, fluid) for seg in tree.segments}
    term_R = {tid: path_resistance(tree, tid, fluid) for tid in tree.terminal_ids}
    return LpmParameterSet(
        heart=heart,
        aorta=aorta,
        coronary=ordered,
        tree_resistances=seg_R,
        terminal_path_resistance=term_R,
    )


def default_alpha(tree: VesselTree) -> dict[str, float]:
    """Per-terminal intramyocardial transfer coefficients by tree side."""
    return {seg.id: ALPHA_BY_SIDE[seg.side] for seg in tree.terminals}


def elastance_at(t: float, p: ElastanceParams) -> tuple[float, float]:
    """Elastance E(t) [Pa/mm^3] and its analytic rate dE/dt [Pa/mm^3/s].

    Piecewise half-cosine: rise to E_max over [0, t_max], relaxation back
    to E_min over (t_max, t_r], flat E_min over (t_r, T]; T-periodic for
    any real t.
    """
    return k.elastance_scalar(float(t), p.E_min, p.E_max, p.t_max, p.t_r, p.T)


def _pack(params: LpmParameterSet) -> tuple[np.ndarray, ...]:
    """Flatten dataclasses into the kernel's scalar-vector + arrays form."""
    h, a = params.heart, params.aorta
    e = h.elastance
    hp = np.empty(k.N_HP)
    hp[k.HP_E_MIN] = e.E_min
    hp[k.HP_E_MAX] = e.E_max
    hp[k.HP_T_MAX] = e.t_max
    hp[k.HP_T_R] = e.t_r
    hp[k.HP_T] = e.T
    hp[k.HP_R_MV] = h.R_MV
    hp[k.HP_R_AV] = h.R_AV
    hp[k.HP_L_MV] = h.L_MV
    hp[k.HP_L_AV] = h.L_AV
    hp[k.HP_P_LA] = h.P_LA
    hp[k.HP_V0] = h.V_0
    hp[k.HP_C_S] = a.C_s
    hp[k.HP_R_SP] = a.R_sp
    hp[k.HP_R_SD] = a.R_sd
    cors = list(params.coronary.items())
    R_ser = np.array([params.terminal_path_resistance[tid] + c.R_a for tid, c in cors])
    R_ap = np.array([c.R_ap for _, c in cors])
    R_ad = np.array([c.R_ad for _, c in cors])
    C_a = np.array([c.C_a for _, c in cors])
    C_im = np.array([c.C_im for _, c in cors])
    alpha = np.array([c.alpha for _, c in cors])
    return hp, R_ser, R_ap, R_ad, C_a, C_im, alpha


def initial_state(params: LpmParameterSet) -> np.ndarray:
    """Diastolic start: LV filled to atrial pressure, valves closed.

    V_LV = V_0 + P_LA/E_min (pressure equilibrium with the atrium),
    P_wk = 10 kPa, coronary nodes at 9 kPa.
    """
    h = params.heart
    n = len(params.coronary)
    y = np.empty(4 + 2 * n)
    y[0] = h.V_0 + h.P_LA / h.elastance.E_min
    y[1] = 0.0  # Q_AV, aortic valve closed
    y[2] = 0.0  # Q_MV, mitral valve closed
    y[3] = 10_000.0  # P_wk [Pa]
    y[4:] = 9_000.0  # P1_i, P2_i [Pa]
    return y


def system_rhs(
    t: float,
    state: np.ndarray,
    params: LpmParameterSet,
    aortic_open: bool,
    mitral_open: bool,
) -> tuple[np.ndarray, float]:
    """Reference (pure-Python) time derivative of the closed loop.

    Returns (dstate/dt, P_ao).  The compiled kernel in _kernels.py must
    agree with this to round-off; the equivalence is pinned by a test.
    """
    h, a = params.heart, params.aorta
    e = h.elastance
    n = len(params.coronary)
    state = np.asarray(state, dtype=float)
    if state.shape != (4 + 2 * n,):
        raise ConfigError(f"state must have length {4 + 2 * n}, got {state.shape}")

    E, dEdt = elastance_at(t, e)
    V = state[0]
    Q_AV = state[1] if aortic_open else 0.0
    Q_MV = state[2] if mitral_open else 0.0
    P_wk = state[3]
    P_LV = E * (V - h.V_0)

    cors = list(params.coronary.items())
    R_ser = [params.terminal_path_resistance[tid] + c.R_a for tid, c in cors]

    # Flux balance at the aortic root: Q_AV = Q_sys + sum_i Q_cor,i
    g = 1.0 / a.R_sp + sum(1.0 / R for R in R_ser)
    s = Q_AV + P_wk / a.R_sp + sum(state[4 + 2 * i] / R_ser[i] for i in range(n))
    P_ao = s / g
    Q_sys = (P_ao - P_wk) / a.R_sp

    dy = np.zeros_like(state)
    dy[0] = Q_MV - Q_AV
    dy[1] = (P_LV - P_ao - h.R_AV * Q_AV) / h.L_AV if aortic_open else 0.0
    dy[2] = (h.P_LA - P_LV - h.R_MV * Q_MV) / h.L_MV if mitral_open else 0.0
    dy[3] = (Q_sys - P_wk / a.R_sd) / a.C_s

    dP_LV = dEdt * (V - h.V_0) + E * (Q_MV - Q_AV)
    for i, (_, c) in enumerate(cors):
        P1 = state[4 + 2 * i]
        P2 = state[5 + 2 * i]
        Q_cor = (P_ao - P1) / R_ser[i]
        Q_mid = (P1 - P2) / c.R_ap
        dy[4 + 2 * i] = (Q_cor - Q_mid) / c.C_a
        dy[5 + 2 * i] = (Q_mid - P2 / c.R_ad) / c.C_im + c.alpha * dP_LV
    return dy, P_ao


@dataclass
class HemoSeries:
    """Sampled closed-loop solution on the uniform integration grid.

    Per-terminal series are keyed by terminal segment id.  All values are
    internal units (Pa, mm^3, mm^3/s); to_csv converts to clinical units.
    """

    time: np.ndarray  # [s]
    P_LV: np.ndarray  # [Pa]
    P_ao: np.ndarray  # [Pa]
    V_LV: np.ndarray  # [mm^3]
    Q_AV: np.ndarray  # [mm^3/s]
    Q_MV: np.ndarray  # [mm^3/s]
    P_wk: np.ndarray  # [Pa]
    Q_cor: dict[str, np.ndarray]  # [mm^3/s]
    P1: dict[str, np.ndarray]  # [Pa]
    P2: dict[str, np.ndarray]  # [Pa]
    T: float  # cardiac period [s]
    dt: float  # step [s]
    n_cycles: int
    periodic: bool  # cycle-mean P_ao settled below tolerance

    @property
    def terminal_ids(self) -> tuple[str, ...]:
        return tuple(self.Q_cor)

    def last_cycle_mask(self) -> np.ndarray:
        """Samples belonging to the final cardiac cycle (inclusive ends)."""
        return self.time >= self.time[-1] - self.T - 1e-12

    def to_csv(self, path: str | Path) -> None:
        """Write the series in clinical units with a labeled header row."""
        cols: list[tuple[str, np.ndarray]] = [
            ("time_s", self.time),
            ("P_LV_mmHg", pa_to_mmhg(self.P_LV)),
            ("P_ao_mmHg", pa_to_mmhg(self.P_ao)),
            ("P_wk_mmHg", pa_to_mmhg(self.P_wk)),
            ("V_LV_ml", mm3_to_ml(self.V_LV)),
            ("Q_AV_L_per_min", mm3s_to_lmin(self.Q_AV)),
            ("Q_MV_L_per_min", mm3s_to_lmin(self.Q_MV)),
        ]
        for tid in self.terminal_ids:
            cols.append((f"Q_{tid}_L_per_min", mm3s_to_lmin(self.Q_cor[tid])))
        for tid in self.terminal_ids:
            cols.append((f"P1_{tid}_mmHg", pa_to_mmhg(self.P1[tid])))
            cols.append((f"P2_{tid}_mmHg", pa_to_mmhg(self.P2[tid])))
        data = np.column_stack([c for _, c in cols])
        header = ",".join(name for name, _ in cols)
        np.savetxt(path, data, fmt="%.10g", delimiter=",", header=header, comments="")


def simulate(
    params: LpmParameterSet,
    T: float | None = None,
    dt: float = DT_PRODUCTION,
    n_cycles: int = 8,
    periodicity_tol: float = 1e-3,
) -> HemoSeries:
    """Integrate the closed loop for n_cycles cardiac cycles.

    ``T`` defaults to the elastance period; passing a conflicting value is
    rejected rather than silently re-timing the heart.  The returned series
    flags whether the cycle-mean aortic pressure changed by less than
    ``periodicity_tol`` (relative) between the last two cycles.
    """
    e = params.heart.elastance
    if T is None:
        T = e.T
    elif abs(T - e.T) > 1e-12:
        raise ConfigError(f"simulate T={T} conflicts with elastance period T={e.T}")
    if not 0.0 < dt <= DT_MAX:
        raise ConfigError(f"dt must satisfy 0 < dt <= {DT_MAX} s, got {dt}")
    if n_cycles < 2:
        raise ConfigError(f"n_cycles must be >= 2, got {n_cycles}")

    n_steps = int(round(n_cycles * T / dt))
    n_term = len(params.coronary)
    hp, R_ser, R_ap, R_ad, C_a, C_im, alpha = _pack(params)
    y = initial_state(params)

    rec = {name: np.empty(n_steps + 1) for name in ("V", "QAV", "QMV", "Pwk", "PLV", "Pao")}
    rec_P1 = np.empty((n_steps + 1, n_term))
    rec_P2 = np.empty((n_steps + 1, n_term))
    rec_Qcor = np.empty((n_steps + 1, n_term))

    status = k.integrate(
        y, hp, R_ser, R_ap, R_ad, C_a, C_im, alpha, dt, n_steps,
        rec["V"], rec["QAV"], rec["QMV"], rec["Pwk"], rec["PLV"], rec["Pao"],
        rec_P1, rec_P2, rec_Qcor,
    )
    if status >= 0:
        raise NumericalError(f"simulation diverged: non-finite state at step {status} (t = {status * dt:.6f} s)")

    time = np.arange(n_steps + 1) * dt
    last = time >= time[-1] - T - 1e-12
    prev = (time >= time[-1] - 2 * T - 1e-12) & ~last
    mean_last = float(np.mean(rec["Pao"][last]))
    mean_prev = float(np.mean(rec["Pao"][prev]))
    periodic = abs(mean_last - mean_prev) <= periodicity_tol * abs(mean_prev)

    tids = list(params.coronary)
    return HemoSeries(
        time=time,
        P_LV=rec["PLV"],
        P_ao=rec["Pao"],
        V_LV=rec["V"],
        Q_AV=rec["QAV"],
        Q_MV=rec["QMV"],
        P_wk=rec["Pwk"],
        Q_cor={tid: rec_Qcor[:, i] for i, tid in enumerate(tids)},
        P1={tid: rec_P1[:, i] for i, tid in enumerate(tids)},
        P2={tid: rec_P2[:, i] for i, tid in enumerate(tids)},
        T=T,
        dt=dt,
        n_cycles=n_cycles,
        periodic=periodic,
    )
