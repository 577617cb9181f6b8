"""Two-stage calibration: systemic DE fit, coronary pre-tuning, grid search.

Stage 1 fits the seven heart/aorta parameters (C_s, R_sp, R_sd, E_max,
E_min, t_max, P_LA) to hemodynamic targets with differential evolution,
using penalized constraints on end-diastolic volume and the dicrotic-notch
pressure.  Stage 2 holds those parameters fixed: the coronary outlet models
are first pre-tuned to Murray-law flow splits with diastole-dominant
waveforms, then the per-state total resistances are refined on a small grid
scored against clinical contrast-intensity profiles and the CFR estimate.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from .cip import Cip, align_time_zero, cip_l2
from .config import preset_path, read_config_text
from .de import DEConfig, DEResult, differential_evolution
from .errors import AngiosimError, CalibrationError, ConfigError, NumericalError
from .lpm import (
    DT_CALIBRATION,
    DT_PRODUCTION,
    AortaParams,
    ElastanceParams,
    LpmParameterSet,
    simulate,
)
from .metrics import HemodynamicMetrics, compute_metrics, diastolic_flow_fraction
from .tree import VesselTree, murray_targets
from .units import lmin_to_mm3s

# Design-vector layout shared by bounds, DE, and the parameter rebuild.
STAGE1_PARAM_NAMES = ("C_s", "R_sp", "R_sd", "E_max", "E_min", "t_max", "P_LA")
T_R_OFFSET = 0.1  # [s] relaxation end is pinned at t_max + 0.1 in both states
PENALTY_WEIGHT = 10.0  # per unit relative constraint violation

# Internal split of a coronary outlet's series resistance, R_a : R_ap : R_ad
# (normalized proportions of the reference outlet values; they sum to 1).
R_SPLIT = (0.245, 0.073, 0.682)

GRID_LEVELS_DEFAULT = (-0.09, -0.06, -0.03, 0.0, 0.03, 0.06, 0.09)

CALIBRATION_PRESET = "calibration_targets.yaml"


# --------------------------------------------------------------------------
# Stage 1: heart and aorta against hemodynamic targets
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Stage1Targets:
    """Hemodynamic calibration targets in clinical units."""

    Q_mean_hat: float  # [L/min]
    Q_max_hat: float  # [L/min]
    P_sys_hat: float  # [mmHg]
    P_dia_hat: float  # [mmHg]
    EDV_LB: float  # [ml]
    EDV_UB: float  # [ml]

    def __post_init__(self) -> None:
        for name in ("Q_mean_hat", "Q_max_hat", "P_sys_hat", "P_dia_hat", "EDV_LB", "EDV_UB"):
            if getattr(self, name) <= 0.0:
                raise ConfigError(f"Stage1Targets.{name} must be positive, got {getattr(self, name)!r}")
        if self.EDV_LB >= self.EDV_UB:
            raise ConfigError(f"EDV bounds require LB < UB, got [{self.EDV_LB}, {self.EDV_UB}]")


@dataclass(frozen=True)
class Stage1Bounds:
    """Per-parameter search box for the stage-1 design vector.

    Internal units (mm^3/Pa, Pa*s/mm^3, Pa/mm^3, s, Pa).  Equal low/high
    pins a coordinate — the hyperemic E_min range is a single point.
    """

    C_s: tuple[float, float]
    R_sp: tuple[float, float]
    R_sd: tuple[float, float]
    E_max: tuple[float, float]
    E_min: tuple[float, float]
    t_max: tuple[float, float]
    P_LA: tuple[float, float]

    def __post_init__(self) -> None:
        for name in STAGE1_PARAM_NAMES:
            lo, hi = getattr(self, name)
            if not (np.isfinite(lo) and np.isfinite(hi)):
                raise ConfigError(f"Stage1Bounds.{name} must be finite, got ({lo}, {hi})")
            if lo > hi:
                raise ConfigError(f"Stage1Bounds.{name} has low {lo} > high {hi}")

    def as_array(self) -> np.ndarray:
        """(7, 2) array in STAGE1_PARAM_NAMES order, ready for the optimizer."""
        return np.array([getattr(self, name) for name in STAGE1_PARAM_NAMES], dtype=float)


def hyperemia_bounds(rest_optimum: np.ndarray) -> Stage1Bounds:
    """Hyperemic search box derived from the resting optimum x^r*.

    Vasodilation shrinks the systemic resistances (30-90% of rest) and
    compliance (absolute 2-15 mm^3/Pa drop); contractility rises (E_max at
    least 1.2x rest, capped at 0.533 Pa/mm^3); E_min is pinned at the rest
    value; timing and preload move only a few percent.  A corner that
    violates parameter positivity simply evaluates as an infinite loss.
    """
    x = np.asarray(rest_optimum, dtype=float)
    if x.shape != (len(STAGE1_PARAM_NAMES),):
        raise ConfigError(f"rest optimum must have shape (7,), got {x.shape}")
    C_s, R_sp, R_sd, E_max, E_min, t_max, P_LA = x
    return Stage1Bounds(
        C_s=(C_s - 15.0, C_s - 2.0),
        R_sp=(0.3 * R_sp, 0.9 * R_sp),
        R_sd=(0.3 * R_sd, 0.9 * R_sd),
        E_max=(1.2 * E_max, 0.533),
        E_min=(E_min, E_min),
        t_max=(0.95 * t_max, 1.05 * t_max),
        P_LA=(1.02 * P_LA, 1.08 * P_LA),
    )


def load_stage1_targets(state: str, source: str | Path | None = None) -> Stage1Targets:
    """Targets for 'rest' or 'hyperemia' from a calibration file (or the preset)."""
    doc = read_config_text(source if source is not None else preset_path(CALIBRATION_PRESET))
    table = doc.get("targets")
    if not isinstance(table, dict) or state not in table:
        raise ConfigError(f"calibration file has no targets for state {state!r}")
    entry = table[state]
    keys = ("Q_mean", "Q_max", "P_sys", "P_dia", "EDV_LB", "EDV_UB")
    missing = [key for key in keys if key not in entry]
    if missing:
        raise ConfigError(f"targets.{state} is missing keys: {missing}")
    return Stage1Targets(
        Q_mean_hat=float(entry["Q_mean"]),
        Q_max_hat=float(entry["Q_max"]),
        P_sys_hat=float(entry["P_sys"]),
        P_dia_hat=float(entry["P_dia"]),
        EDV_LB=float(entry["EDV_LB"]),
        EDV_UB=float(entry["EDV_UB"]),
    )


def load_rest_bounds(source: str | Path | None = None) -> Stage1Bounds:
    """Resting-state stage-1 search box from a calibration file (or the preset)."""
    doc = read_config_text(source if source is not None else preset_path(CALIBRATION_PRESET))
    table = doc.get("stage1_bounds_rest")
    if not isinstance(table, dict):
        raise ConfigError("calibration file has no 'stage1_bounds_rest' section")
    missing = [name for name in STAGE1_PARAM_NAMES if name not in table]
    if missing:
        raise ConfigError(f"stage1_bounds_rest is missing parameters: {missing}")
    ranges = {}
    for name in STAGE1_PARAM_NAMES:
        pair = table[name]
        if not isinstance(pair, (list, tuple)) or len(pair) != 2:
            raise ConfigError(f"stage1_bounds_rest.{name} must be a [low, high] pair")
        ranges[name] = (float(pair[0]), float(pair[1]))
    return Stage1Bounds(**ranges)


def load_cfr_hat(source: str | Path | None = None) -> float:
    """Clinical CFR estimate from a calibration file (or the preset)."""
    doc = read_config_text(source if source is not None else preset_path(CALIBRATION_PRESET))
    if "CFR_hat" not in doc:
        raise ConfigError("calibration file has no 'CFR_hat' entry")
    value = float(doc["CFR_hat"])
    if value <= 0.0:
        raise ConfigError(f"CFR_hat must be positive, got {value}")
    return value


@dataclass(frozen=True)
class Stage1LossTerms:
    """Term-by-term breakdown of the stage-1 loss (dimensionless)."""

    Q_mean: float
    Q_max: float
    P_sys: float
    P_dia: float
    EDV_penalty: float
    P_DN_penalty: float

    @property
    def target_error(self) -> float:
        return self.Q_mean + self.Q_max + self.P_sys + self.P_dia

    @property
    def penalty(self) -> float:
        return self.EDV_penalty + self.P_DN_penalty

    @property
    def total(self) -> float:
        return self.target_error + self.penalty


def stage1_loss_terms(metrics: HemodynamicMetrics, targets: Stage1Targets) -> Stage1LossTerms:
    """Four relative target errors plus penalized constraint violations.

    Constraints: EDV inside (EDV_LB, EDV_UB) and the dicrotic-notch pressure
    inside (P_sys - 0.5*P_pulse, P_sys - 0.2*P_pulse), each violated amount
    measured relative to the crossed bound and weighted by PENALTY_WEIGHT.
    A waveform without a notch (aortic valve never closed) is infeasible.
    """
    edv_pen = 0.0
    if metrics.EDV <= targets.EDV_LB:
        edv_pen = PENALTY_WEIGHT * (targets.EDV_LB - metrics.EDV) / targets.EDV_LB
    elif metrics.EDV >= targets.EDV_UB:
        edv_pen = PENALTY_WEIGHT * (metrics.EDV - targets.EDV_UB) / targets.EDV_UB

    if metrics.P_DN is None:
        dn_pen = np.inf
    else:
        lo = metrics.P_sys - 0.5 * metrics.P_pulse
        hi = metrics.P_sys - 0.2 * metrics.P_pulse
        dn_pen = 0.0
        if metrics.P_DN <= lo:
            dn_pen = PENALTY_WEIGHT * (lo - metrics.P_DN) / lo
        elif metrics.P_DN >= hi:
            dn_pen = PENALTY_WEIGHT * (metrics.P_DN - hi) / hi

    return Stage1LossTerms(
        Q_mean=abs(metrics.Q_mean - targets.Q_mean_hat) / targets.Q_mean_hat,
        Q_max=abs(metrics.Q_max - targets.Q_max_hat) / targets.Q_max_hat,
        P_sys=abs(metrics.P_sys - targets.P_sys_hat) / targets.P_sys_hat,
        P_dia=abs(metrics.P_dia - targets.P_dia_hat) / targets.P_dia_hat,
        EDV_penalty=edv_pen,
        P_DN_penalty=dn_pen,
    )


def loss_stage1(metrics: HemodynamicMetrics, targets: Stage1Targets) -> float:
    """Scalar stage-1 loss; infinite when the waveform has no dicrotic notch."""
    return stage1_loss_terms(metrics, targets).total


def stage1_vector(params: LpmParameterSet) -> np.ndarray:
    """Extract the 7-vector (STAGE1_PARAM_NAMES order) from a parameter set."""
    e = params.heart.elastance
    return np.array(
        [
            params.aorta.C_s,
            params.aorta.R_sp,
            params.aorta.R_sd,
            e.E_max,
            e.E_min,
            e.t_max,
            params.heart.P_LA,
        ]
    )


def stage1_parameter_set(x: np.ndarray, base: LpmParameterSet) -> LpmParameterSet:
    """Rebuild a parameter set from a design vector, keeping everything else.

    The cycle period comes from the base set (state-specific, not a design
    variable) and the relaxation end is pinned at t_max + 0.1 s.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (len(STAGE1_PARAM_NAMES),):
        raise ConfigError(f"stage-1 design vector must have shape (7,), got {x.shape}")
    C_s, R_sp, R_sd, E_max, E_min, t_max, P_LA = x
    elastance = ElastanceParams(
        E_max=E_max,
        E_min=E_min,
        t_max=t_max,
        t_r=t_max + T_R_OFFSET,
        T=base.heart.elastance.T,
    )
    heart = replace(base.heart, elastance=elastance, P_LA=P_LA)
    aorta = AortaParams(C_s=C_s, R_sp=R_sp, R_sd=R_sd)
    return base.with_heart(heart).with_aorta(aorta)


@dataclass(frozen=True)
class Stage1Result:
    """Stage-1 optimum with its production-timestep verification."""

    x: np.ndarray
    params: LpmParameterSet
    loss: float  # re-verified at the production timestep
    loss_fast: float  # loss the optimizer saw (calibration timestep)
    metrics: HemodynamicMetrics  # production-timestep metrics at the optimum
    de: DEResult


def calibrate_stage1(
    targets: Stage1Targets,
    bounds: Stage1Bounds,
    base_params: LpmParameterSet,
    cfg: DEConfig | None = None,
    *,
    workers: int = 1,
    polish: bool = True,
    fast_dt: float = DT_CALIBRATION,
    fast_cycles: int = 6,
    verify_dt: float = DT_PRODUCTION,
    verify_cycles: int = 8,
) -> Stage1Result:
    """Fit the heart/aorta design vector to hemodynamic targets with DE.

    The optimizer runs on a fast path (coarse timestep, short window); any
    simulation failure marks the candidate infeasible.  The returned optimum
    is re-simulated at the production timestep for reporting.
    """
    cfg = cfg or DEConfig()

    def objective(x: np.ndarray) -> float:
        try:
            candidate = stage1_parameter_set(x, base_params)
            series = simulate(candidate, dt=fast_dt, n_cycles=fast_cycles)
            return loss_stage1(compute_metrics(series), targets)
        except AngiosimError:
            return np.inf

    de_result = differential_evolution(
        objective, bounds.as_array(), cfg, workers=workers, polish=polish
    )
    if not np.isfinite(de_result.loss):
        raise CalibrationError(
            "stage-1 calibration found no feasible design (every candidate diverged "
            "or lacked a dicrotic notch)",
            last_result=de_result,
        )
    params = stage1_parameter_set(de_result.x, base_params)
    series = simulate(params, dt=verify_dt, n_cycles=verify_cycles)
    metrics = compute_metrics(series)
    return Stage1Result(
        x=de_result.x,
        params=params,
        loss=loss_stage1(metrics, targets),
        loss_fast=de_result.loss,
        metrics=metrics,
        de=de_result,
    )


# --------------------------------------------------------------------------
# Stage 2a: coronary pre-tuning (flow splits + waveform shape)
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PretuneSettings:
    """Targets and caps for the coronary pre-tuning loop.

    Total coronary flow defaults to 4% of cardiac output, split 60:40
    between the left and right trees and among terminals by Murray's law.
    Diastolic dominance is the flow fraction delivered in (t_r, T].
    """

    co_fraction: float = 0.04  # total coronary flow as a share of cardiac output
    left_fraction: float = 0.6  # left-tree share of total coronary flow
    flow_tol: float = 0.02  # relative per-branch mean-flow tolerance
    max_iterations: int = 30  # resistance-update rounds
    dominance_left: float = 0.6  # minimum diastolic flow fraction, left tree
    dominance_right: float = 0.5  # minimum diastolic flow fraction, right tree
    max_halvings: int = 5  # C_a halvings per branch for waveform shaping
    C_a_floor: float = 1e-3  # [mm^3/Pa]
    dt: float = DT_CALIBRATION  # [s] pre-tuning simulations use the fast path
    n_cycles: int = 6

    def __post_init__(self) -> None:
        for name in ("co_fraction", "left_fraction"):
            if not 0.0 < getattr(self, name) <= 1.0:
                raise ConfigError(f"PretuneSettings.{name} must lie in (0, 1], got {getattr(self, name)!r}")
        if self.flow_tol <= 0.0:
            raise ConfigError(f"flow_tol must be positive, got {self.flow_tol}")
        if self.max_iterations < 1:
            raise ConfigError(f"max_iterations must be >= 1, got {self.max_iterations}")
        for name in ("dominance_left", "dominance_right"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"PretuneSettings.{name} must lie in [0, 1], got {getattr(self, name)!r}")
        if self.max_halvings < 0:
            raise ConfigError(f"max_halvings must be >= 0, got {self.max_halvings}")
        if self.C_a_floor <= 0.0:
            raise ConfigError(f"C_a_floor must be positive, got {self.C_a_floor}")
        if self.dt <= 0.0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.n_cycles < 2:
            raise ConfigError(f"n_cycles must be >= 2, got {self.n_cycles}")


def murray_flow_targets(
    tree: VesselTree,
    total_coronary_flow: float,
    left_fraction: float = 0.6,
) -> dict[str, float]:
    """Per-terminal mean-flow targets [mm^3/s] from Murray's law per side.

    The total is split left:right by ``left_fraction`` and within each side
    in proportion to terminal radius cubed.
    """
    if total_coronary_flow <= 0.0:
        raise ConfigError(f"total coronary flow must be positive, got {total_coronary_flow}")
    if not 0.0 <= left_fraction <= 1.0:
        raise ConfigError(f"left_fraction must lie in [0, 1], got {left_fraction}")
    left = [seg for seg in tree.terminals if seg.side == "left"]
    right = [seg for seg in tree.terminals if seg.side == "right"]
    shares = ((left, left_fraction), (right, 1.0 - left_fraction))
    targets: dict[str, float] = {}
    for terminals, fraction in shares:
        if fraction == 0.0:
            continue
        if not terminals:
            raise ConfigError(
                f"a flow share of {fraction:.0%} is assigned to a side with no terminals; "
                "set left_fraction to 0 or 1 for single-sided trees"
            )
        targets.update(murray_targets(terminals, fraction * total_coronary_flow))
    # preserve tree terminal order for deterministic downstream iteration
    return {tid: targets[tid] for tid in tree.terminal_ids if tid in targets}


@dataclass(frozen=True)
class PretuneResult:
    """Pre-tuned coronary set with convergence diagnostics."""

    params: LpmParameterSet
    targets: dict[str, float]  # [mm^3/s]
    iterations: int  # resistance-update rounds performed
    flow_errors: dict[str, float]  # final relative mean-flow errors
    dominance: dict[str, float]  # final diastolic flow fraction per terminal
    halvings: dict[str, int]  # C_a halvings applied per terminal


def _terminal_mean_flows(series) -> dict[str, float]:
    """Final-cycle mean terminal flows [mm^3/s]."""
    metrics = compute_metrics(series)
    return {tid: lmin_to_mm3s(q) for tid, q in metrics.terminal_mean_flow.items()}


def _split_resistance(total: float) -> tuple[float, float, float]:
    return R_SPLIT[0] * total, R_SPLIT[1] * total, R_SPLIT[2] * total


def pretune_coronary(
    params: LpmParameterSet,
    tree: VesselTree,
    targets: dict[str, float],
    settings: PretuneSettings | None = None,
) -> PretuneResult:
    """Iteratively tune coronary outlet resistances to per-branch flow targets.

    Each round multiplies a branch's series resistance R_a + R_ap + R_ad by
    the ratio of simulated to target mean flow (redistributed in the fixed
    R_SPLIT proportions) until every branch is within ``flow_tol`` or the
    iteration cap is hit.  Afterwards the waveform shape is validated:
    branches below their side's diastolic-dominance threshold get C_a halved
    (down to the floor) up to ``max_halvings`` times.

    Raises CalibrationError, carrying the last iterate, when either phase
    fails to converge.
    """
    settings = settings or PretuneSettings()
    terminal_ids = params.terminal_ids
    if set(targets) != set(terminal_ids):
        raise ConfigError(
            f"flow targets must cover the terminals exactly: targets={sorted(targets)}, "
            f"terminals={sorted(terminal_ids)}"
        )
    for tid, q in targets.items():
        if q <= 0.0:
            raise ConfigError(f"flow target for {tid!r} must be positive, got {q}")
    sides = {tid: tree[tid].side for tid in terminal_ids}
    thresholds = {
        tid: settings.dominance_left if sides[tid] == "left" else settings.dominance_right
        for tid in terminal_ids
    }
    t_r = params.heart.elastance.t_r

    def run(candidate: LpmParameterSet):
        series = simulate(candidate, dt=settings.dt, n_cycles=settings.n_cycles)
        flows = _terminal_mean_flows(series)
        errors = {tid: (flows[tid] - targets[tid]) / targets[tid] for tid in terminal_ids}
        return series, flows, errors

    def diagnostics(candidate, series, errors, iterations, halvings) -> PretuneResult:
        dom = {tid: diastolic_flow_fraction(series, t_r, tid) for tid in terminal_ids}
        return PretuneResult(
            params=candidate,
            targets=dict(targets),
            iterations=iterations,
            flow_errors=errors,
            dominance=dom,
            halvings=dict(halvings),
        )

    halvings = {tid: 0 for tid in terminal_ids}
    current = params
    iterations = 0

    # Phase 1: multiplicative fixed point on the per-branch mean flows.
    while True:
        series, flows, errors = run(current)
        if all(abs(err) < settings.flow_tol for err in errors.values()):
            break
        if iterations >= settings.max_iterations:
            raise CalibrationError(
                f"flow pre-tuning did not converge within {settings.max_iterations} iterations "
                f"(worst branch error {max(abs(e) for e in errors.values()):.3%})",
                last_result=diagnostics(current, series, errors, iterations, halvings),
            )
        for tid in terminal_ids:
            if flows[tid] <= 0.0:
                raise CalibrationError(
                    f"mean flow through {tid!r} is non-positive ({flows[tid]:.4g} mm^3/s); "
                    "the multiplicative update cannot proceed",
                    last_result=diagnostics(current, series, errors, iterations, halvings),
                )
        updated = {}
        for tid in terminal_ids:
            c = current.coronary[tid]
            R_a, R_ap, R_ad = _split_resistance(c.R_total * flows[tid] / targets[tid])
            updated[tid] = replace(c, R_a=R_a, R_ap=R_ap, R_ad=R_ad)
        current = current.with_coronary(updated)
        iterations += 1

    # Phase 2: diastolic-dominance shaping by halving arterial compliance.
    while True:
        dominance = {tid: diastolic_flow_fraction(series, t_r, tid) for tid in terminal_ids}
        violators = [tid for tid in terminal_ids if dominance[tid] < thresholds[tid]]
        if not violators:
            break
        capped = [tid for tid in violators if halvings[tid] >= settings.max_halvings]
        if capped:
            raise CalibrationError(
                f"diastolic dominance not reached for {capped} after "
                f"{settings.max_halvings} compliance halvings",
                last_result=diagnostics(current, series, errors, iterations, halvings),
            )
        updated = {}
        for tid in terminal_ids:
            c = current.coronary[tid]
            if tid in violators:
                updated[tid] = replace(c, C_a=max(c.C_a / 2.0, settings.C_a_floor))
                halvings[tid] += 1
            else:
                updated[tid] = c
        current = current.with_coronary(updated)
        series, flows, errors = run(current)

    return diagnostics(current, series, errors, iterations, halvings)


# --------------------------------------------------------------------------
# Stage 2b: grid search over total-resistance perturbations
# --------------------------------------------------------------------------

# An evaluator runs the angiogram pipeline for one parameter set and state
# ("rest" | "hyperemia"), returning the computational CIP and the mean LAD
# flow (any unit consistent across calls; only ratios enter the loss).
Stage2Evaluator = Callable[[LpmParameterSet, str], tuple[Cip, float]]


def loss_stage2(
    cip_rest: Cip,
    cip_hyper: Cip,
    clinical_rest: Cip,
    clinical_hyper: Cip,
    cfr_value: float,
    cfr_hat: float,
) -> float:
    """CIP distances for both states plus the relative CFR mismatch."""
    if cfr_hat <= 0.0:
        raise ConfigError(f"CFR_hat must be positive, got {cfr_hat}")
    return (
        cip_l2(cip_rest, clinical_rest)
        + cip_l2(cip_hyper, clinical_hyper)
        + abs(cfr_value - cfr_hat) / cfr_hat
    )


@dataclass(frozen=True)
class Stage2Config:
    """Grid-search targets and perturbation levels.

    Levels are relative perturbations of each branch's total resistance
    (e.g. 0.03 = +3%); they must be symmetric about and include 0.
    """

    clinical_rest: Cip
    clinical_hyper: Cip
    CFR_hat: float
    levels: tuple[float, ...] = GRID_LEVELS_DEFAULT
    pretune: PretuneSettings = field(default_factory=PretuneSettings)

    def __post_init__(self) -> None:
        if self.CFR_hat <= 0.0:
            raise ConfigError(f"CFR_hat must be positive, got {self.CFR_hat}")
        levels = tuple(float(level) for level in self.levels)
        if not levels:
            raise ConfigError("levels must not be empty")
        if len(set(levels)) != len(levels):
            raise ConfigError(f"levels contain duplicates: {levels}")
        if any(level <= -1.0 for level in levels):
            raise ConfigError("levels must keep resistances positive (> -100%)")
        if 0.0 not in levels:
            raise ConfigError("levels must include 0")
        if set(levels) != {-level for level in levels}:
            raise ConfigError(f"levels must be symmetric about 0, got {levels}")
        object.__setattr__(self, "levels", tuple(sorted(levels)))


def scale_total_resistance(params: LpmParameterSet, delta: float) -> LpmParameterSet:
    """Every branch's three outlet resistances scaled by (1 + delta).

    Internal R_a : R_ap : R_ad proportions are preserved and compliances are
    untouched.  delta = 0 returns the input set unchanged.
    """
    if delta <= -1.0:
        raise ConfigError(f"resistance perturbation must exceed -100%, got {delta:+.0%}")
    if delta == 0.0:
        return params
    f = 1.0 + delta
    return params.with_coronary(
        {tid: c.scaled(R_a=f, R_ap=f, R_ad=f) for tid, c in params.coronary.items()}
    )


def grid_label(delta_rest: float, delta_hyper: float) -> str:
    """Human-readable grid-cell name, e.g. '+6%R & -3%H'."""
    return f"{delta_rest:+.0%}R & {delta_hyper:+.0%}H"


@dataclass(frozen=True)
class GridResult:
    """Full loss surface of the resistance grid plus the winning cell."""

    levels: tuple[float, ...]
    losses: np.ndarray  # (n, n): rows = rest level, cols = hyperemia level
    cfr: np.ndarray  # (n, n) simulated CFR per combination
    best_index: tuple[int, int]
    best_label: str
    best_rest: LpmParameterSet
    best_hyper: LpmParameterSet

    def __post_init__(self) -> None:
        n = len(self.levels)
        if self.losses.shape != (n, n) or self.cfr.shape != (n, n):
            raise ConfigError(
                f"grid matrices must be ({n}, {n}), got losses {self.losses.shape}, cfr {self.cfr.shape}"
            )
        i, j = self.best_index
        if not (0 <= i < n and 0 <= j < n):
            raise ConfigError(f"best_index {self.best_index} outside the {n}x{n} grid")
        if self.losses[i, j] != self.losses.min():
            raise NumericalError(
                f"best cell loss {self.losses[i, j]} is not the grid minimum {self.losses.min()}"
            )

    @property
    def best_loss(self) -> float:
        return float(self.losses[self.best_index])


def grid_search(
    rest_set: LpmParameterSet,
    hyper_set: LpmParameterSet,
    cfg: Stage2Config,
    evaluate: Stage2Evaluator,
) -> GridResult:
    """Score every (rest, hyperemia) resistance-perturbation pair.

    Because the loss separates by state except for the CFR ratio, each of
    the n levels is simulated once per state (2n pipeline runs for the n^2
    grid).  CIPs are aligned to their 5%-of-peak onset before comparison,
    matching the clinical convention.  A failed run marks every cell using
    it infinite.  Ties break by smallest |delta_r| + |delta_h|, then
    row-major order.
    """
    levels = cfg.levels
    n = len(levels)
    clin_rest = align_time_zero(cfg.clinical_rest)
    clin_hyper = align_time_zero(cfg.clinical_hyper)

    def state_sweep(base: LpmParameterSet, state: str, clinical: Cip):
        sets: list[LpmParameterSet] = []
        distances = np.full(n, np.inf)
        q_lad = np.full(n, np.nan)
        for idx, delta in enumerate(levels):
            scaled = scale_total_resistance(base, delta)
            sets.append(scaled)
            try:
                cip, q = evaluate(scaled, state)
                distances[idx] = cip_l2(align_time_zero(cip), clinical)
                q_lad[idx] = q
            except AngiosimError:
                continue
        return sets, distances, q_lad

    rest_sets, rest_l2, q_rest = state_sweep(rest_set, "rest", clin_rest)
    hyper_sets, hyper_l2, q_hyper = state_sweep(hyper_set, "hyperemia", clin_hyper)

    losses = np.full((n, n), np.inf)
    cfr_grid = np.full((n, n), np.nan)
    for i in range(n):
        for j in range(n):
            if not (np.isfinite(rest_l2[i]) and np.isfinite(hyper_l2[j])):
                continue
            if not q_rest[i] > 0.0:
                continue
            ratio = q_hyper[j] / q_rest[i]
            cfr_grid[i, j] = ratio
            losses[i, j] = rest_l2[i] + hyper_l2[j] + abs(ratio - cfg.CFR_hat) / cfg.CFR_hat

    best_i, best_j = 0, 0
    best_key = (losses[0, 0], abs(levels[0]) + abs(levels[0]))
    for i in range(n):
        for j in range(n):
            key = (losses[i, j], abs(levels[i]) + abs(levels[j]))
            if key < best_key:
                best_i, best_j, best_key = i, j, key

    return GridResult(
        levels=levels,
        losses=losses,
        cfr=cfr_grid,
        best_index=(best_i, best_j),
        best_label=grid_label(levels[best_i], levels[best_j]),
        best_rest=rest_sets[best_i],
        best_hyper=hyper_sets[best_j],
    )
