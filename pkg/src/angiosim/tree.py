"""Coronary branch network geometry and derived hydraulic quantities.

The vasculature is modeled as a forest of straight cylindrical segments:
one rooted tree per coronary side (left ostium and right ostium).  Geometry
carries everything the rest of the package needs:

* per-segment Poiseuille resistance, used as the lumped surrogate for the
  image-domain pressure drop (R = 8 mu L / (pi r^4), in Pa*s/mm^3 when
  lengths are in mm and viscosity in Pa*s);
* Murray's-law flow targets at the terminals (Q_i proportional to r_i^3),
  used to pre-tune the coronary outlet resistances;
* 3D centerline coordinates, used only by the projection/rendering code.

Trees are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import io
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigError

# Key set of one segment entry in a tree config file.  These exact names are
# part of the CLI file-format contract.
_SEGMENT_KEYS = (
    "id",
    "name",
    "parent",
    "radius_mm",
    "length_mm",
    "proximal_xyz_mm",
    "distal_xyz_mm",
    "terminal",
    "side",
)

_SIDES = ("left", "right")


@dataclass(frozen=True)
class FluidProperties:
    """Blood/contrast working-fluid properties.

    viscosity   -- dynamic viscosity [Pa*s]
    density     -- mass density [kg/m^3]
    diffusivity -- scalar contrast diffusivity [mm^2/s]
    """

    viscosity: float = 0.004
    density: float = 1060.0
    diffusivity: float = 0.00203

    def __post_init__(self) -> None:
        for field in ("viscosity", "density", "diffusivity"):
            value = getattr(self, field)
            if not np.isfinite(value) or value <= 0.0:
                raise ConfigError(f"FluidProperties.{field} must be strictly positive, got {value!r}")


@dataclass(frozen=True)
class BranchSegment:
    """One straight vessel segment.

    ``parent is None`` marks a root (ostium).  ``terminal`` marks segments
    that carry a coronary outlet LPM; terminals may still have children
    (side branches peel off upstream of the outlet).
    """

    id: str
    name: str
    parent: str | None
    radius_mm: float
    length_mm: float
    proximal_xyz_mm: tuple[float, float, float]
    distal_xyz_mm: tuple[float, float, float]
    terminal: bool
    side: str

    def __post_init__(self) -> None:
        if not self.id:
            raise ConfigError("segment id must be a non-empty string")
        if self.radius_mm <= 0.0:
            raise ConfigError(f"segment {self.id!r}: radius_mm must be > 0, got {self.radius_mm!r}")
        if self.length_mm <= 0.0:
            raise ConfigError(f"segment {self.id!r}: length_mm must be > 0, got {self.length_mm!r}")
        if self.side not in _SIDES:
            raise ConfigError(f"segment {self.id!r}: side must be one of {_SIDES}, got {self.side!r}")
        for field in ("proximal_xyz_mm", "distal_xyz_mm"):
            point = getattr(self, field)
            if len(point) != 3:
                raise ConfigError(f"segment {self.id!r}: {field} must have 3 coordinates, got {point!r}")
            object.__setattr__(self, field, tuple(float(x) for x in point))

    @property
    def axis_mm(self) -> np.ndarray:
        """Centerline vector from proximal to distal point [mm]."""
        return np.asarray(self.distal_xyz_mm, dtype=float) - np.asarray(self.proximal_xyz_mm, dtype=float)


class VesselTree:
    """Validated forest of branch segments, one rooted tree per coronary side.

    Segments are kept in their input order, which is required to be
    topological (parents precede children).  The class precomputes the
    child map and exposes path/subtree helpers used by the LPM assembly
    and the transport grid.
    """

    def __init__(self, segments: list[BranchSegment] | tuple[BranchSegment, ...]):
        segments = tuple(segments)
        if not segments:
            raise ConfigError("vessel tree must contain at least one segment")

        by_id: dict[str, BranchSegment] = {}
        for seg in segments:
            if seg.id in by_id:
                raise ConfigError(f"duplicate segment id {seg.id!r}")
            by_id[seg.id] = seg

        # Topological input order: every parent must already be defined.
        # This simultaneously rules out orphan references and cycles.
        seen: set[str] = set()
        for seg in segments:
            if seg.parent is not None:
                if seg.parent not in by_id:
                    raise ConfigError(f"segment {seg.id!r}: unknown parent {seg.parent!r}")
                if seg.parent not in seen:
                    raise ConfigError(
                        f"segment {seg.id!r}: parent {seg.parent!r} must be defined before its children"
                    )
                if seg.parent == seg.id:
                    raise ConfigError(f"segment {seg.id!r}: segment cannot be its own parent")
            seen.add(seg.id)

        roots = [seg for seg in segments if seg.parent is None]
        ostia: dict[str, str] = {}
        for root in roots:
            if root.side in ostia:
                raise ConfigError(
                    f"side {root.side!r} has more than one root ({ostia[root.side]!r} and {root.id!r})"
                )
            ostia[root.side] = root.id

        self._segments = segments
        self._by_id = by_id
        self._ostia = ostia

        children: dict[str, list[str]] = {seg.id: [] for seg in segments}
        for seg in segments:
            if seg.parent is not None:
                children[seg.parent].append(seg.id)
        self._children = {sid: tuple(ids) for sid, ids in children.items()}

        self._root_of = {}
        for seg in segments:
            self._root_of[seg.id] = seg.id if seg.parent is None else self._root_of[seg.parent]

        for seg in segments:
            if seg.terminal and seg.side != by_id[self._root_of[seg.id]].side:
                raise ConfigError(
                    f"terminal segment {seg.id!r} has side {seg.side!r} but its root "
                    f"{self._root_of[seg.id]!r} is {by_id[self._root_of[seg.id]].side!r}"
                )

        terminals = tuple(seg for seg in segments if seg.terminal)
        if not terminals:
            raise ConfigError("vessel tree must contain at least one terminal segment")
        self._terminals = terminals

    @property
    def segments(self) -> tuple[BranchSegment, ...]:
        return self._segments

    @property
    def ostium_left(self) -> str | None:
        """Id of the left-tree root segment, or None if no left tree."""
        return self._ostia.get("left")

    @property
    def ostium_right(self) -> str | None:
        """Id of the right-tree root segment, or None if no right tree."""
        return self._ostia.get("right")

    @property
    def terminals(self) -> tuple[BranchSegment, ...]:
        """Terminal segments (outlet-LPM carriers) in input order."""
        return self._terminals

    @property
    def terminal_ids(self) -> tuple[str, ...]:
        return tuple(seg.id for seg in self._terminals)

    def __len__(self) -> int:
        return len(self._segments)

    def __getitem__(self, segment_id: str) -> BranchSegment:
        try:
            return self._by_id[segment_id]
        except KeyError:
            raise KeyError(f"no segment with id {segment_id!r}") from None

    def __contains__(self, segment_id: str) -> bool:
        return segment_id in self._by_id

    def children(self, segment_id: str) -> tuple[str, ...]:
        return self._children[self[segment_id].id]

    def root_of(self, segment_id: str) -> str:
        """Id of the ostium the given segment drains from."""
        return self._root_of[self[segment_id].id]

    def path_to_root(self, segment_id: str) -> tuple[str, ...]:
        """Segment ids from the ostium down to (and including) segment_id."""
        path = [self[segment_id].id]
        while (parent := self[path[-1]].parent) is not None:
            path.append(parent)
        return tuple(reversed(path))

    def subtree_ids(self, segment_id: str) -> tuple[str, ...]:
        """Ids of segment_id and all its descendants, in input order."""
        keep = {self[segment_id].id}
        for seg in self._segments:
            if seg.parent in keep:
                keep.add(seg.id)
        return tuple(seg.id for seg in self._segments if seg.id in keep)

    def side_segments(self, side: str) -> tuple[BranchSegment, ...]:
        """All segments of one coronary side, in input (topological) order."""
        if side not in _SIDES:
            raise ConfigError(f"side must be one of {_SIDES}, got {side!r}")
        return tuple(seg for seg in self._segments if self._by_id[self._root_of[seg.id]].side == side)

    def side_terminals(self, side: str) -> tuple[BranchSegment, ...]:
        ids = {seg.id for seg in self.side_segments(side)}
        return tuple(seg for seg in self._terminals if seg.id in ids)


def poiseuille_resistance(segment: BranchSegment, fluid: FluidProperties) -> float:
    """Steady laminar-tube resistance R = 8 mu L / (pi r^4) [Pa*s/mm^3].

    With radius/length in mm and viscosity in Pa*s the result is directly
    in Pa*s/mm^3 (1 Pa*s * mm / mm^4 = 1 Pa*s/mm^3), the unit the coronary
    LPM parameters use.
    """
    return 8.0 * fluid.viscosity * segment.length_mm / (np.pi * segment.radius_mm**4)


def path_resistance(tree: VesselTree, segment_id: str, fluid: FluidProperties) -> float:
    """Series Poiseuille resistance along the ostium->segment path [Pa*s/mm^3]."""
    return float(sum(poiseuille_resistance(tree[sid], fluid) for sid in tree.path_to_root(segment_id)))


def murray_targets(terminals: list[BranchSegment] | tuple[BranchSegment, ...], total_flow: float) -> dict[str, float]:
    """Murray's-law flow split: Q_i = total * r_i^3 / sum_j r_j^3 [mm^3/s].

    The last terminal absorbs floating-point rounding so the targets sum to
    total_flow exactly.  Returned mapping preserves the input terminal order.
    """
    terminals = tuple(terminals)
    if not terminals:
        raise ConfigError("murray_targets requires at least one terminal segment")
    if total_flow < 0.0:
        raise ConfigError(f"total_flow must be >= 0, got {total_flow!r}")
    cubes = np.array([seg.radius_mm**3 for seg in terminals])
    shares = total_flow * cubes / cubes.sum()
    shares[-1] = total_flow - shares[:-1].sum()
    return {seg.id: float(q) for seg, q in zip(terminals, shares)}


def _segment_from_mapping(entry: object, index: int) -> BranchSegment:
    if not isinstance(entry, dict):
        raise ConfigError(f"tree segment #{index} must be a mapping, got {type(entry).__name__}")
    missing = [key for key in _SEGMENT_KEYS if key not in entry]
    if missing:
        raise ConfigError(f"tree segment #{index} ({entry.get('id', '?')!r}) is missing keys: {missing}")
    extra = [key for key in entry if key not in _SEGMENT_KEYS]
    if extra:
        raise ConfigError(f"tree segment #{index} ({entry.get('id', '?')!r}) has unknown keys: {extra}")
    try:
        return BranchSegment(
            id=str(entry["id"]),
            name=str(entry["name"]),
            parent=None if entry["parent"] is None else str(entry["parent"]),
            radius_mm=float(entry["radius_mm"]),
            length_mm=float(entry["length_mm"]),
            proximal_xyz_mm=tuple(entry["proximal_xyz_mm"]),
            distal_xyz_mm=tuple(entry["distal_xyz_mm"]),
            terminal=bool(entry["terminal"]),
            side=str(entry["side"]),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"tree segment #{index} ({entry.get('id', '?')!r}): {exc}") from exc


def load_tree(source: str | Path) -> VesselTree:
    """Parse and validate a vessel-tree config.

    ``source`` may be a filesystem path or the config text itself.  The file
    is a YAML document with a top-level ``segments`` list; each entry uses
    the exact keys id, name, parent, radius_mm, length_mm, proximal_xyz_mm,
    distal_xyz_mm, terminal, side.
    """
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source and Path(source).is_file()):
        text = Path(source).read_text()
    else:
        text = str(source)
    try:
        doc = yaml.safe_load(io.StringIO(text))
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}" if mark is not None else ""
        raise ConfigError(f"tree config is not valid YAML{where}: {exc}") from exc
    if not isinstance(doc, dict) or "segments" not in doc:
        raise ConfigError("tree config must be a mapping with a 'segments' list")
    entries = doc["segments"]
    if not isinstance(entries, list):
        raise ConfigError("'segments' must be a list of segment mappings")
    return VesselTree([_segment_from_mapping(entry, i) for i, entry in enumerate(entries)])


def serialize_tree(tree: VesselTree) -> str:
    """Emit a tree config that load_tree parses back to an identical tree."""
    entries = []
    for seg in tree.segments:
        entry = asdict(seg)
        entry["proximal_xyz_mm"] = list(seg.proximal_xyz_mm)
        entry["distal_xyz_mm"] = list(seg.distal_xyz_mm)
        entries.append(entry)
    return yaml.safe_dump({"segments": entries}, sort_keys=False)
