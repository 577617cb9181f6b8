"""End-to-end angiogram scenarios: hemodynamics -> transport -> frames -> CIP.

A scenario bundles everything an injection run needs beyond the vessel tree
and the lumped-parameter values: the catheter protocol (quoted per cardiac
cycle, the clinical convention), the gantry view, the imaging chain, and the
numerical settings.  ``run_angiogram`` chains the closed-loop solve, the 1D
contrast transport, per-frame rasterization, and CIP extraction; it is the
unit of work behind stage-2 calibration and the sensitivity studies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .cip import Cip, CipFeatures, compute_cip, extract_features
from .config import preset_path, read_config_text
from .errors import ConfigError
from .lpm import DT_MAX, DT_PRODUCTION, HemoSeries, LpmParameterSet, simulate
from .metrics import HemodynamicMetrics, compute_metrics
from .render import AngiogramFrame, RenderConfig, ViewAngles, project_grid, render_frame
from .transport import (
    DT_TRANSPORT_DEFAULT,
    DX_DEFAULT,
    ConcentrationField,
    InjectionProtocol,
    TransportGrid,
    build_grid,
    simulate_transport,
)
from .tree import VesselTree

# Shipped injection/imaging protocols for the two clinical states.
SCENARIO_PRESET = "angiography.yaml"

# Terminal whose mean flow defines CFR and the stage-2 flow readout.
CFR_TERMINAL = "LAD"


@dataclass(frozen=True)
class AngiogramScenario:
    """One injection/imaging protocol, independent of the parameter values.

    The catheter pulse is quoted against the cardiac cycle (1-indexed start
    cycle) so the same protocol stays aligned with the heart when the period
    changes; the absolute-time ``InjectionProtocol`` is derived per run.
    """

    state: str  # "rest" | "hyperemia"
    n_cycles: int  # simulated cardiac cycles
    injection_rate: float  # catheter flow [mm^3/s]; 0 disables injection
    injection_duration: float  # pulse length [s]
    injection_start_cycle: int  # 1-indexed cycle at whose onset the pulse starts
    c0: float  # injectate concentration [mg/ml]
    view: ViewAngles
    render: RenderConfig
    dt: float = DT_PRODUCTION  # hemodynamic step [s]
    dx: float = DX_DEFAULT  # transport cell size [mm]
    dt_tr: float = DT_TRANSPORT_DEFAULT  # transport step ceiling [s]
    diffusivity: float | None = None  # [mm^2/s]; None = blood default
    side: str = "left"  # imaged side of the tree

    def __post_init__(self) -> None:
        if self.state not in ("rest", "hyperemia"):
            raise ConfigError(f"scenario state must be 'rest' or 'hyperemia', got {self.state!r}")
        if self.n_cycles < 2:
            raise ConfigError(f"scenario needs n_cycles >= 2, got {self.n_cycles}")
        if not 1 <= self.injection_start_cycle <= self.n_cycles:
            raise ConfigError(
                f"injection_start_cycle={self.injection_start_cycle} outside the "
                f"simulated 1..{self.n_cycles} cycles"
            )
        if self.injection_rate < 0.0:
            raise ConfigError(f"injection_rate must be non-negative, got {self.injection_rate}")
        if self.injection_duration <= 0.0:
            raise ConfigError(f"injection_duration must be positive, got {self.injection_duration}")
        if not 0.0 < self.dt <= DT_MAX:
            raise ConfigError(f"scenario dt must satisfy 0 < dt <= {DT_MAX}, got {self.dt}")

    def protocol(self, T: float) -> InjectionProtocol:
        """Absolute-time catheter pulse for a heart with period T [s]."""
        return InjectionProtocol(
            c0=self.c0,
            start_time=(self.injection_start_cycle - 1) * T,
            duration=self.injection_duration,
            rate=self.injection_rate,
        )


def frame_grid(t_end: float, fps: float) -> np.ndarray:
    """Acquisition timestamps 1/fps, 2/fps, ... up to t_end [s].

    The first frame is one frame period in (detectors integrate over the
    preceding interval); 8 s at 10 fps gives 80 frames, 6.57 s at 7.5 fps
    gives 49.
    """
    if t_end <= 0.0 or fps <= 0.0:
        raise ConfigError(f"frame grid needs positive t_end and fps, got {t_end}, {fps}")
    n = int(math.floor(t_end * fps * (1.0 + 1e-12)))
    if n < 2:
        raise ConfigError(f"frame grid over {t_end} s at {fps} fps has {n} frames; need >= 2")
    return np.arange(1, n + 1) / fps


def load_scenario(state: str, source: str | Path | None = None, **overrides) -> AngiogramScenario:
    """Build a scenario from the shipped protocol preset (or a file like it).

    ``overrides`` replace scenario fields after loading (numerical settings
    such as dx or dt are the usual case).
    """
    doc = read_config_text(source if source is not None else preset_path(SCENARIO_PRESET))
    if state not in doc:
        raise ConfigError(f"protocol file has no state {state!r}; found {sorted(doc)}")
    sec = doc[state]
    for key in ("n_cycles", "injection", "view", "render"):
        if key not in sec:
            raise ConfigError(f"protocol {state!r} is missing key {key!r}")
    inj, view, render = sec["injection"], sec["view"], sec["render"]
    try:
        scenario = AngiogramScenario(
            state=state,
            n_cycles=int(sec["n_cycles"]),
            injection_rate=float(inj["rate_mm3_per_s"]),
            injection_duration=float(inj["duration_s"]),
            injection_start_cycle=int(inj["start_cycle"]),
            c0=float(inj["c0_mg_per_ml"]),
            view=ViewAngles(rao_lao=float(view["rao_lao_deg"]), cra_cau=float(view["cra_cau_deg"])),
            render=RenderConfig(
                width=int(render.get("width", 512)),
                height=int(render.get("height", 512)),
                pixel_size=float(render["pixel_size_mm"]),
                I_thr=int(render.get("I_thr", 250)),
                fps=float(render["fps"]),
            ),
        )
    except KeyError as exc:
        raise ConfigError(f"protocol {state!r} is missing key {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"protocol {state!r}: non-numeric value: {exc}") from exc
    return replace(scenario, **overrides) if overrides else scenario


@dataclass(frozen=True)
class AngiogramResult:
    """Everything one scenario run produces.

    Frame timestamps stay on the simulation clock; the CIP (and therefore
    the features) is anchored at injection start, the axis used for
    clinical comparison.
    """

    scenario: AngiogramScenario
    protocol: InjectionProtocol
    hemo: HemoSeries
    metrics: HemodynamicMetrics
    grid: TransportGrid
    field: ConcentrationField
    frames: list[AngiogramFrame]
    cip: Cip
    features: CipFeatures | None  # None when contrast never saturates the tree

    @property
    def q_terminal(self) -> dict[str, float]:
        """Cycle-mean terminal flows [L/min]."""
        return self.metrics.terminal_mean_flow


def run_angiogram(
    tree: VesselTree,
    params: LpmParameterSet,
    scenario: AngiogramScenario,
    *,
    hemo: HemoSeries | None = None,
) -> AngiogramResult:
    """Run one full contrast-injection scenario.

    The closed loop is solved for the whole scenario (injection has no
    hemodynamic feedback), contrast is advected over the imaged side, and
    every acquisition frame is rasterized and thresholded into the CIP.
    Pass ``hemo`` to reuse a solved series (e.g. when only the imaging
    settings change).
    """
    T = params.heart.elastance.T
    protocol = scenario.protocol(T)
    if hemo is None:
        hemo = simulate(params, dt=scenario.dt, n_cycles=scenario.n_cycles)
    metrics = compute_metrics(hemo)

    grid = build_grid(tree, dx=scenario.dx, side=scenario.side)
    times = frame_grid(float(hemo.time[-1]), scenario.render.fps)
    field = simulate_transport(
        hemo, grid, protocol, times, diffusivity=scenario.diffusivity, dt_tr=scenario.dt_tr
    )

    projection = project_grid(grid, scenario.view)
    frames = [
        render_frame(field.frames[i], projection, scenario.render, protocol.c0, timestamp=float(t))
        for i, t in enumerate(times)
    ]
    cip = compute_cip(frames, scenario.render.I_thr).shifted(protocol.start_time)
    return AngiogramResult(
        scenario=scenario,
        protocol=protocol,
        hemo=hemo,
        metrics=metrics,
        grid=grid,
        field=field,
        frames=frames,
        cip=cip,
        features=extract_features(cip),
    )


def make_stage2_evaluator(tree: VesselTree, scenarios: dict[str, AngiogramScenario]):
    """Adapt scenario runs to the grid-search evaluator signature.

    Returns ``evaluate(params, state) -> (Cip, Q_LAD [L/min])`` running the
    state's scenario; grid_search calls it once per (level, state).
    """
    missing = [s for s in ("rest", "hyperemia") if s not in scenarios]
    if missing:
        raise ConfigError(f"stage-2 evaluator needs scenarios for {missing}")

    def evaluate(params: LpmParameterSet, state: str) -> tuple[Cip, float]:
        result = run_angiogram(tree, params, scenarios[state])
        return result.cip, result.q_terminal[CFR_TERMINAL]

    return evaluate
