"""1D contrast transport on the epicardial vessel tree.

Advection-diffusion of contrast agent concentration c(x, t) [mg/ml] along
the left coronary tree, driven by branch flows from a closed-loop
hemodynamics run.  Space is discretized per segment into uniform finite
volumes; time stepping is explicit with donor-cell (first-order upwind)
advection and central diffusion, so the scheme is monotone and mass
conservative under the CFL bound.

Velocity in a segment is the plug-flow value u = Q / A with A = pi r^2,
where the segment flow Q is the sum of the coronary outlet flows of all
terminals in its subtree.  Contrast enters at the catheterized ostium,
mixing with ostial blood flow; terminal outlets carry contrast out of the
system (no venous recirculation).  Transient backflow is handled by the
upwind switch everywhere, with zero-gradient ghost values at open ends.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from ._kernels import catheter_mix, transport_span
from .errors import ConfigError, TransportError
from .lpm import HemoSeries
from .tree import FluidProperties, VesselTree
from .units import MM3_PER_ML

# Default spatial step [mm] and transport time step [s].  dt is halved
# automatically whenever the CFL bound demands it, so these defaults stay
# safe across rest and hyperemia flow ranges.
DX_DEFAULT = 0.5
DT_TRANSPORT_DEFAULT = 5.0e-4

# Courant safety factor for the explicit step.
CFL_LIMIT = 0.9


@dataclass(frozen=True)
class InjectionProtocol:
    """Catheter injection as a rectangular flow pulse.

    Q_cath(t) = rate on [start_time, start_time + duration), else zero.
    Contrast concentration in the injectate is c0 [mg/ml]; rate is in
    mm^3/s and total_volume_ml must equal rate * duration (a redundant
    field kept because protocols are usually quoted as a volume).
    """

    c0: float  # injectate concentration [mg/ml]
    start_time: float  # injection onset [s]
    duration: float  # injection length [s]
    rate: float  # catheter flow [mm^3/s]
    total_volume_ml: float | None = None  # dose [ml]; derived when omitted

    def __post_init__(self) -> None:
        if self.c0 <= 0.0:
            raise ConfigError(f"injectate concentration must be positive, got {self.c0}")
        if self.start_time < 0.0 or self.duration < 0.0 or self.rate < 0.0:
            raise ConfigError(
                "injection start_time, duration and rate must be non-negative, got "
                f"start_time={self.start_time}, duration={self.duration}, rate={self.rate}"
            )
        derived = self.rate * self.duration / MM3_PER_ML
        if self.total_volume_ml is None:
            object.__setattr__(self, "total_volume_ml", derived)
        else:
            scale = max(abs(derived), abs(self.total_volume_ml), 1e-12)
            if abs(self.total_volume_ml - derived) > 1e-6 * scale:
                raise ConfigError(
                    f"total_volume_ml={self.total_volume_ml} inconsistent with "
                    f"rate*duration={derived:.6g} ml"
                )

    @property
    def end_time(self) -> float:
        return self.start_time + self.duration

    def catheter_flow(self, t: float) -> float:
        """Q_cath(t) [mm^3/s]."""
        return self.rate if self.start_time <= t < self.end_time else 0.0


def inlet_concentration(Q_cath: float, Q_ostium: float, c0: float) -> float:
    """Concentration entering the root segment [mg/ml].

    Injected contrast dilutes into whatever blood the ostium is drawing:
    c_in = c0 * Q_cath / (Q_cath + max(Q_ostium, 0)), capped at c0.  With
    the catheter off the inlet carries plain blood (c_in = 0).
    """
    return float(catheter_mix(float(Q_cath), float(Q_ostium), float(c0)))


@dataclass(frozen=True)
class TransportGrid:
    """Finite-volume grid over one side of the vessel tree.

    Segments keep their tree (topological) order with the root first.
    Cells are stored flat; segment s owns cells start[s] .. start[s] +
    count[s] - 1, each of length dx[s] = L_s / ceil(L_s / dx_max) and
    cross-section area[s] = pi r_s^2.  Geometry per cell (center point,
    radius) is kept for downstream projection/rendering.
    """

    segment_ids: tuple[str, ...]
    start: np.ndarray  # (n_seg,) int, first flat cell index
    count: np.ndarray  # (n_seg,) int, cells per segment
    dx: np.ndarray  # (n_seg,) cell length [mm]
    area: np.ndarray  # (n_seg,) cross-section [mm^2]
    parent: np.ndarray  # (n_seg,) int, parent segment index or -1
    children_ptr: np.ndarray  # (n_seg + 1,) int CSR offsets
    children_idx: np.ndarray  # CSR child segment indices
    terminal: np.ndarray  # (n_seg,) bool, has a coronary outlet
    axis_unit: np.ndarray  # (n_seg, 3) segment direction, unit length
    cell_xyz: np.ndarray  # (n_cells, 3) cell centers [mm]
    cell_radius: np.ndarray  # (n_cells,) vessel radius [mm]
    cell_segment: np.ndarray  # (n_cells,) int owning segment
    side: str = "left"

    @property
    def n_segments(self) -> int:
        return len(self.segment_ids)

    @property
    def n_cells(self) -> int:
        return int(self.cell_xyz.shape[0])

    @property
    def cell_volume(self) -> np.ndarray:
        """Per-cell volume [mm^3], flat."""
        return np.repeat(self.area * self.dx, np.asarray(self.count))

    def index_of(self, segment_id: str) -> int:
        try:
            return self.segment_ids.index(segment_id)
        except ValueError:
            raise KeyError(f"segment {segment_id!r} not on the {self.side} grid") from None

    def cells_of(self, segment_id: str) -> slice:
        s = self.index_of(segment_id)
        return slice(int(self.start[s]), int(self.start[s] + self.count[s]))

    def total_mass(self, c: np.ndarray) -> float:
        """Contrast mass [mg] held in the tree for concentration field c."""
        return float(np.dot(np.asarray(c, dtype=float), self.cell_volume) / MM3_PER_ML)


def build_grid(tree: VesselTree, dx: float = DX_DEFAULT, side: str = "left") -> TransportGrid:
    """Discretize one side of the tree into ceil(L/dx) uniform cells per segment."""
    if dx <= 0.0:
        raise ConfigError(f"dx must be positive, got {dx}")
    segments = tree.side_segments(side)
    if not segments:
        raise ConfigError(f"tree has no segments on side {side!r}")
    shortest = min(s.length_mm for s in segments)
    if dx > shortest + 1e-12:
        worst = min(segments, key=lambda s: s.length_mm)
        raise ConfigError(
            f"dx={dx} mm exceeds the shortest segment on the {side} side "
            f"({worst.id}, {worst.length_mm} mm)"
        )

    ids = [s.id for s in segments]
    index = {sid: i for i, sid in enumerate(ids)}
    count = np.array([math.ceil(s.length_mm / dx) for s in segments], dtype=np.int64)
    start = np.concatenate(([0], np.cumsum(count)[:-1])).astype(np.int64)
    dx_seg = np.array([s.length_mm / n for s, n in zip(segments, count)])
    area = np.array([math.pi * s.radius_mm**2 for s in segments])
    parent = np.array(
        [-1 if s.parent is None else index[s.parent] for s in segments], dtype=np.int64
    )
    if int((parent < 0).sum()) != 1 or parent[0] != -1:
        raise ConfigError(f"{side} side must form a single tree rooted at its ostium")

    kids: list[list[int]] = [[] for _ in segments]
    for i, p in enumerate(parent):
        if p >= 0:
            kids[p].append(i)
    children_ptr = np.concatenate(([0], np.cumsum([len(k) for k in kids]))).astype(np.int64)
    children_idx = np.array([i for k in kids for i in k], dtype=np.int64)

    n_cells = int(count.sum())
    axis_unit = np.empty((len(segments), 3))
    cell_xyz = np.empty((n_cells, 3))
    cell_radius = np.empty(n_cells)
    cell_segment = np.empty(n_cells, dtype=np.int64)
    for i, s in enumerate(segments):
        lo, n = int(start[i]), int(count[i])
        frac = (np.arange(n) + 0.5) / n
        axis_unit[i] = s.axis_mm / s.length_mm
        cell_xyz[lo : lo + n] = s.proximal_xyz_mm + frac[:, None] * s.axis_mm
        cell_radius[lo : lo + n] = s.radius_mm
        cell_segment[lo : lo + n] = i

    return TransportGrid(
        segment_ids=tuple(ids),
        start=start,
        count=count,
        dx=dx_seg,
        area=area,
        parent=parent,
        children_ptr=children_ptr,
        children_idx=children_idx,
        terminal=np.array([s.terminal for s in segments]),
        axis_unit=axis_unit,
        cell_xyz=cell_xyz,
        cell_radius=cell_radius,
        cell_segment=cell_segment,
        side=side,
    )


def cfl_timestep(grid: TransportGrid, max_abs_flow: np.ndarray, diffusivity: float) -> float:
    """Largest stable explicit dt [s] for the given per-segment |Q| bound."""
    u = np.asarray(max_abs_flow, dtype=float) / grid.area
    rate = np.abs(u) / grid.dx + 2.0 * diffusivity / grid.dx**2
    peak = float(rate.max())
    return CFL_LIMIT / peak if peak > 0.0 else math.inf


def _flow_vector(grid: TransportGrid, branch_flows) -> np.ndarray:
    if isinstance(branch_flows, Mapping):
        missing = [sid for sid in grid.segment_ids if sid not in branch_flows]
        if missing:
            raise ConfigError(f"branch_flows missing segments: {missing}")
        return np.array([float(branch_flows[sid]) for sid in grid.segment_ids])
    flows = np.asarray(branch_flows, dtype=float)
    if flows.shape != (grid.n_segments,):
        raise ConfigError(
            f"branch_flows must have one entry per segment ({grid.n_segments}), "
            f"got shape {flows.shape}"
        )
    return flows


def advance(
    c: np.ndarray,
    grid: TransportGrid,
    branch_flows,
    dt_tr: float,
    *,
    c_in: float = 0.0,
    diffusivity: float = 0.0,
) -> tuple[np.ndarray, float, float]:
    """One explicit transport step; reference (numpy) implementation.

    branch_flows holds the instantaneous segment flows [mm^3/s], as a
    mapping by segment id or an array in grid order.  Returns the new
    concentration field plus the signed boundary masses [mg] that crossed
    the ostium (in) and the terminal outlets (out) during the step, so a
    caller can audit conservation step by step.
    """
    c = np.asarray(c, dtype=float)
    if c.shape != (grid.n_cells,):
        raise ConfigError(f"state must have {grid.n_cells} cells, got shape {c.shape}")
    flows = _flow_vector(grid, branch_flows)
    dt_max = cfl_timestep(grid, np.abs(flows), diffusivity)
    if dt_tr > dt_max:
        raise TransportError(
            f"CFL violation: dt_tr={dt_tr:.6g} s exceeds the stable limit; "
            f"use dt_tr <= {dt_max:.6g} s for these flows"
        )

    dm = np.zeros_like(c)
    # Residual outlet flow keeps each distal node exactly balanced in floats.
    own = flows.copy()
    for s in range(grid.n_segments):
        for ch in grid.children_idx[grid.children_ptr[s] : grid.children_ptr[s + 1]]:
            own[s] -= flows[ch]

    for s in range(grid.n_segments):
        lo, n = int(grid.start[s]), int(grid.count[s])
        cs = c[lo : lo + n]
        Q = flows[s]
        if n > 1:
            upwind = cs[:-1] if Q > 0.0 else cs[1:]
            F = Q * upwind - diffusivity * grid.area[s] / grid.dx[s] * np.diff(cs)
            dm[lo : lo + n - 1] -= F * dt_tr
            dm[lo + 1 : lo + n] += F * dt_tr

    first = int(grid.start[0])
    F_in = flows[0] * (c_in if flows[0] > 0.0 else c[first])
    dm[first] += F_in * dt_tr
    mass_out = 0.0

    for s in range(grid.n_segments):
        last = int(grid.start[s] + grid.count[s] - 1)
        q_par = flows[s]
        q_out = own[s]
        in_q = max(q_par, 0.0) + max(-q_out, 0.0)
        in_m = in_q * c[last]
        kids = grid.children_idx[grid.children_ptr[s] : grid.children_ptr[s + 1]]
        for ch in kids:
            q_ch = flows[ch]
            if q_ch < 0.0:
                in_q += -q_ch
                in_m += -q_ch * c[int(grid.start[ch])]
        c_J = in_m / in_q if in_q > 0.0 else 0.0
        dm[last] += (-max(q_par, 0.0) * c[last] + max(-q_par, 0.0) * c_J) * dt_tr
        for ch in kids:
            q_ch = flows[ch]
            fc = int(grid.start[ch])
            dm[fc] += (max(q_ch, 0.0) * c_J - max(-q_ch, 0.0) * c[fc]) * dt_tr
        mass_out += (max(q_out, 0.0) * c_J - max(-q_out, 0.0) * c[last]) * dt_tr

    c_new = c + dm / grid.cell_volume
    return c_new, F_in * dt_tr / MM3_PER_ML, mass_out / MM3_PER_ML


def segment_flow_series(grid: TransportGrid, hemo: HemoSeries) -> np.ndarray:
    """Per-segment flow histories Q_s(t) [mm^3/s], shape (n_seg, n_time).

    Built bottom-up: Q_s = own outlet flow (terminals) + sum of child
    segment flows, so the residual outlet flow of every internal node is
    exact in float arithmetic.
    """
    n_time = hemo.time.shape[0]
    Q = np.zeros((grid.n_segments, n_time))
    for s in reversed(range(grid.n_segments)):
        sid = grid.segment_ids[s]
        if grid.terminal[s]:
            if sid not in hemo.Q_cor:
                raise ConfigError(f"hemodynamic series has no outlet flow for terminal {sid!r}")
            Q[s] += hemo.Q_cor[sid]
        for ch in grid.children_idx[grid.children_ptr[s] : grid.children_ptr[s + 1]]:
            Q[s] += Q[ch]
    return Q


@dataclass(frozen=True)
class ConcentrationField:
    """Snapshots of the in-tree contrast field at requested frame times."""

    grid: TransportGrid
    time: np.ndarray  # (n_frames,) [s]
    frames: np.ndarray  # (n_frames, n_cells) concentration [mg/ml]
    c0: float  # injectate concentration [mg/ml]
    mass_total: np.ndarray = field(repr=False, default=None)  # (n_frames,) [mg]
    mass_in_cum: np.ndarray = field(repr=False, default=None)  # signed ostium mass [mg]
    mass_out_cum: np.ndarray = field(repr=False, default=None)  # signed outlet mass [mg]

    def __post_init__(self) -> None:
        if self.frames.shape != (self.time.shape[0], self.grid.n_cells):
            raise TransportError(
                f"frames shape {self.frames.shape} inconsistent with "
                f"{self.time.shape[0]} frame times and {self.grid.n_cells} cells"
            )
        if not np.all(np.isfinite(self.frames)):
            raise TransportError("concentration field contains non-finite values")
        slack = 1e-9 * self.c0
        lo, hi = float(self.frames.min()), float(self.frames.max())
        if lo < -slack or hi > self.c0 + slack:
            raise TransportError(
                f"concentration field leaves [0, c0]: min={lo:.6g}, max={hi:.6g}, c0={self.c0}"
            )

    @property
    def n_frames(self) -> int:
        return int(self.time.shape[0])

    def frame(self, i: int) -> np.ndarray:
        return self.frames[i]

    def to_csv(self, path: str | Path) -> None:
        """Debug dump: one row per (frame, segment, cell)."""
        seg_names = np.asarray(self.grid.segment_ids, dtype=object)[self.grid.cell_segment]
        cell_in_seg = np.concatenate([np.arange(int(n)) for n in self.grid.count])
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("frame,time_s,segment,cell,c_mg_per_ml\n")
            for i in range(self.n_frames):
                t = self.time[i]
                for name, j, cval in zip(seg_names, cell_in_seg, self.frames[i]):
                    fh.write(f"{i},{t:.10g},{name},{j},{cval:.10g}\n")


def simulate_transport(
    hemo: HemoSeries,
    grid: TransportGrid,
    protocol: InjectionProtocol,
    frame_times: Sequence[float],
    *,
    diffusivity: float | None = None,
    dt_tr: float = DT_TRANSPORT_DEFAULT,
) -> ConcentrationField:
    """Run contrast transport over a hemodynamics series; snapshot at frame_times.

    The explicit step is refined below dt_tr automatically so the CFL bound
    holds for the worst-case flows in the series.  Integration starts from
    a contrast-free tree at t = 0 of the hemodynamic series.
    """
    if dt_tr <= 0.0:
        raise ConfigError(f"dt_tr must be positive, got {dt_tr}")
    times = np.asarray(frame_times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ConfigError("frame_times must be a non-empty 1D sequence")
    if np.any(np.diff(times) <= 0.0):
        raise ConfigError("frame_times must be strictly increasing")
    t_end = float(hemo.time[-1])
    if times[0] < 0.0 or times[-1] > t_end + 1e-9:
        raise ConfigError(
            f"frame_times must lie within the hemodynamic series [0, {t_end:.6g}] s"
        )
    if protocol.end_time > t_end + 1e-9:
        raise ConfigError(
            f"injection ends at {protocol.end_time:.6g} s, beyond the "
            f"hemodynamic series ({t_end:.6g} s)"
        )
    D = FluidProperties().diffusivity if diffusivity is None else float(diffusivity)
    if D < 0.0:
        raise ConfigError(f"diffusivity must be non-negative, got {D}")

    Q = segment_flow_series(grid, hemo)
    dt_max = cfl_timestep(grid, np.abs(Q).max(axis=1), D)
    n_sub = max(1, math.ceil(dt_tr / dt_max))
    dt = dt_tr / n_sub

    c = np.zeros(grid.n_cells)
    ledger = np.zeros(2)
    frames = np.empty((times.size, grid.n_cells))
    mass_total = np.empty(times.size)
    mass_in = np.empty(times.size)
    mass_out = np.empty(times.size)

    t = 0.0
    for i, t_frame in enumerate(times):
        span = t_frame - t
        if span > 1e-12:
            n_steps = max(1, math.ceil(span / dt - 1e-9))
            transport_span(
                c,
                t,
                n_steps,
                span / n_steps,
                grid.start,
                grid.count,
                grid.dx,
                grid.area,
                grid.children_ptr,
                grid.children_idx,
                Q,
                hemo.dt,
                D,
                protocol.c0,
                protocol.rate,
                protocol.start_time,
                protocol.end_time,
                ledger,
            )
        t = float(t_frame)
        frames[i] = c
        mass_total[i] = grid.total_mass(c)
        mass_in[i] = ledger[0] / MM3_PER_ML
        mass_out[i] = ledger[1] / MM3_PER_ML

    return ConcentrationField(
        grid=grid,
        time=times,
        frames=frames,
        c0=protocol.c0,
        mass_total=mass_total,
        mass_in_cum=mass_in,
        mass_out_cum=mass_out,
    )
