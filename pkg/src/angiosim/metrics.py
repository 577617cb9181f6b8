"""Hemodynamic metric extraction from simulated series.

This is the unit boundary: HemoSeries carries internal Pa/mm^3/s, the
metrics below are clinical (mmHg, L/min, ml).  EF is kept as a fraction;
formatting as percent is the caller's concern.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, NumericalError
from .lpm import HemoSeries
from .units import mm3_to_ml, mm3s_to_lmin, pa_to_mmhg

_trapezoid = getattr(np, "trapezoid", None) or np.trapz


def _cycle_mean(values: np.ndarray, time: np.ndarray) -> float:
    """Trapezoidal time average over the sampled window."""
    return float(_trapezoid(values, time) / (time[-1] - time[0]))


@dataclass(frozen=True)
class HemodynamicMetrics:
    """Cycle metrics in clinical units.

    P_DN (dicrotic-notch pressure: P_ao at aortic valve closure) is None
    when the valve never opened in the analyzed window.
    """

    Q_mean: float  # [L/min]
    Q_max: float  # [L/min]
    P_sys: float  # [mmHg]
    P_dia: float  # [mmHg]
    P_DN: float | None  # [mmHg]
    P_pulse: float  # [mmHg]
    EDV: float  # [ml]
    ESV: float  # [ml]
    SV: float  # [ml]
    EF: float  # fraction of EDV
    terminal_mean_flow: dict[str, float] = field(default_factory=dict)  # [L/min]

    def __post_init__(self) -> None:
        if self.EDV < self.ESV:
            raise NumericalError(f"EDV ({self.EDV}) < ESV ({self.ESV})")
        if abs(self.SV - (self.EDV - self.ESV)) > 1e-9 * max(1.0, self.EDV):
            raise NumericalError("SV must equal EDV - ESV")
        if abs(self.EF - self.SV / self.EDV) > 1e-12:
            raise NumericalError("EF must equal SV/EDV")
        if self.P_DN is not None and not (
            self.P_sys + 1e-9 >= self.P_DN >= self.P_dia - 1e-9
        ):
            raise NumericalError(f"P_DN ({self.P_DN}) outside [P_dia, P_sys] = [{self.P_dia}, {self.P_sys}]")

    def to_dict(self) -> dict:
        d = {
            "Q_mean_L_per_min": self.Q_mean,
            "Q_max_L_per_min": self.Q_max,
            "P_sys_mmHg": self.P_sys,
            "P_dia_mmHg": self.P_dia,
            "P_DN_mmHg": self.P_DN,
            "P_pulse_mmHg": self.P_pulse,
            "EDV_ml": self.EDV,
            "ESV_ml": self.ESV,
            "SV_ml": self.SV,
            "EF_percent": 100.0 * self.EF,
        }
        d.update({f"Q_{tid}_L_per_min": q for tid, q in self.terminal_mean_flow.items()})
        return d

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


def compute_metrics(series: HemoSeries, last_cycle_only: bool = True) -> HemodynamicMetrics:
    """Extract cycle metrics, by default from the final cardiac cycle.

    P_DN is the aortic pressure at the sample where Q_AV returns to zero
    from above (the valve-closure instant); absent if the valve never
    opened in the window.
    """
    if series.time[-1] - series.time[0] < series.T * (1.0 - 1e-9):
        raise ConfigError("series must contain at least one complete cycle")
    mask = series.last_cycle_mask() if last_cycle_only else np.ones_like(series.time, dtype=bool)
    t = series.time[mask]
    Q_AV = series.Q_AV[mask]
    P_ao = series.P_ao[mask]
    V_LV = series.V_LV[mask]

    EDV = mm3_to_ml(float(V_LV.max()))
    ESV = mm3_to_ml(float(V_LV.min()))
    SV = EDV - ESV

    closures = np.flatnonzero((Q_AV[:-1] > 0.0) & (Q_AV[1:] == 0.0))
    P_DN = pa_to_mmhg(float(P_ao[closures[-1] + 1])) if closures.size else None

    P_sys = pa_to_mmhg(float(P_ao.max()))
    P_dia = pa_to_mmhg(float(P_ao.min()))
    return HemodynamicMetrics(
        Q_mean=mm3s_to_lmin(_cycle_mean(Q_AV, t)),
        Q_max=mm3s_to_lmin(float(Q_AV.max())),
        P_sys=P_sys,
        P_dia=P_dia,
        P_DN=P_DN,
        P_pulse=P_sys - P_dia,
        EDV=EDV,
        ESV=ESV,
        SV=SV,
        EF=SV / EDV,
        terminal_mean_flow={
            tid: mm3s_to_lmin(_cycle_mean(series.Q_cor[tid][mask], t)) for tid in series.terminal_ids
        },
    )


def cfr(rest: HemodynamicMetrics, hyper: HemodynamicMetrics, terminal_id: str = "LAD") -> float:
    """Coronary flow reserve: hyperemic over resting mean terminal flow."""
    q_rest = rest.terminal_mean_flow[terminal_id]
    if q_rest <= 0.0:
        raise NumericalError(f"CFR undefined: resting {terminal_id} mean flow is {q_rest}")
    return hyper.terminal_mean_flow[terminal_id] / q_rest


def diastolic_flow_fraction(series: HemoSeries, t_r: float, terminal_id: str) -> float:
    """Share of last-cycle terminal flow volume delivered in phase (t_r, T].

    Coronary perfusion is diastole-dominant, more strongly on the left;
    phases are measured from the start of the final cycle.
    """
    mask = series.last_cycle_mask()
    t = series.time[mask]
    q = series.Q_cor[terminal_id][mask]
    phase = t - t[0]
    total = _trapezoid(q, t)
    if total == 0.0:
        raise NumericalError(f"no flow through {terminal_id} in the final cycle")
    late = phase > t_r
    if not late.any():
        return 0.0
    return float(_trapezoid(q[late], t[late]) / total)
