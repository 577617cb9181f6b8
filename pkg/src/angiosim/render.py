"""Synthetic angiogram rendering of the contrast-laden vessel tree.

The tree is viewed the way a C-arm frames it: rotate about the patient's
longitudinal axis (z) by the RAO/LAO angle, then about the transverse axis
(x) by the CRA/CAU angle, and project orthographically along the depth
axis (y) onto the x-z image plane.  Each transport cell becomes a 2D
capsule of width 2r; pixel intensity maps concentration linearly from
white (c = 0) to black (c = c0), and overlapping vessels composite
darkest-wins.  Frames are segmented by a plain intensity threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import raster_capsules
from .errors import ConfigError
from .transport import TransportGrid
from .tree import VesselTree

I_THR_DEFAULT = 250


@dataclass(frozen=True)
class ViewAngles:
    """C-arm gantry angulation [deg]; RAO and CAU count positive."""

    rao_lao: float
    cra_cau: float

    def __post_init__(self) -> None:
        for name, value in (("rao_lao", self.rao_lao), ("cra_cau", self.cra_cau)):
            if not -90.0 <= value <= 90.0:
                raise ConfigError(f"view angle {name}={value} outside [-90, 90] deg")


@dataclass(frozen=True)
class RenderConfig:
    """Imaging chain geometry and segmentation threshold."""

    width: int = 512
    height: int = 512
    pixel_size: float = 0.368  # detector sampling [mm/pixel]
    I_thr: int = I_THR_DEFAULT  # segmentation threshold on 0-255 grayscale
    fps: float = 10.0  # acquisition frame rate [1/s]

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ConfigError(f"image size must be positive, got {self.width}x{self.height}")
        if self.pixel_size <= 0.0:
            raise ConfigError(f"pixel_size must be positive, got {self.pixel_size}")
        if not 0 < self.I_thr <= 255:
            raise ConfigError(f"I_thr must be in (0, 255], got {self.I_thr}")
        if self.fps <= 0.0:
            raise ConfigError(f"fps must be positive, got {self.fps}")


@dataclass(frozen=True)
class AngiogramFrame:
    """One grayscale frame (uint8, row-major) plus its acquisition time."""

    image: np.ndarray
    timestamp: float  # [s]

    def __post_init__(self) -> None:
        if self.image.ndim != 2 or self.image.dtype != np.uint8:
            raise ConfigError("frame image must be a 2D uint8 array")


def view_rotation(view: ViewAngles) -> np.ndarray:
    """World-to-view rotation: Rz(rao_lao) then Rx(cra_cau)."""
    a = math.radians(view.rao_lao)
    b = math.radians(view.cra_cau)
    Rz = np.array(
        [
            [math.cos(a), -math.sin(a), 0.0],
            [math.sin(a), math.cos(a), 0.0],
            [0.0, 0.0, 1.0],
        ]
    )
    Rx = np.array(
        [
            [1.0, 0.0, 0.0],
            [0.0, math.cos(b), -math.sin(b)],
            [0.0, math.sin(b), math.cos(b)],
        ]
    )
    return Rx @ Rz


def project_points(points: np.ndarray, view: ViewAngles) -> np.ndarray:
    """Orthographic image-plane coordinates (u, v) [mm] of 3D points.

    u is the rotated x (transverse), v the rotated z (longitudinal); the
    rotated y (depth toward the detector) is dropped.
    """
    rotated = np.asarray(points, dtype=float) @ view_rotation(view).T
    return rotated[..., [0, 2]]


@dataclass(frozen=True)
class ProjectedSegment:
    """One vessel segment in image-plane coordinates [mm]."""

    id: str
    p0: tuple[float, float]
    p1: tuple[float, float]
    radius: float


def project(tree: VesselTree, view: ViewAngles) -> list[ProjectedSegment]:
    """Project every segment's centerline to the image plane (radii unscaled)."""
    out = []
    for seg in tree.segments:
        ends = project_points(np.vstack([seg.proximal_xyz_mm, seg.distal_xyz_mm]), view)
        out.append(
            ProjectedSegment(
                id=seg.id,
                p0=(float(ends[0, 0]), float(ends[0, 1])),
                p1=(float(ends[1, 0]), float(ends[1, 1])),
                radius=seg.radius_mm,
            )
        )
    return out


@dataclass(frozen=True)
class CellProjection:
    """Transport cells as 2D capsules [mm], fixed for a (grid, view) pair.

    The image mapping centers the projected bounding box (capsule extents
    included) on the image center, so framing is constant across frames of
    a sequence.
    """

    u0: np.ndarray  # (n_cells,) proximal endpoint u [mm]
    v0: np.ndarray
    u1: np.ndarray  # (n_cells,) distal endpoint u [mm]
    v1: np.ndarray
    radius: np.ndarray  # (n_cells,) capsule radius [mm]

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        """(u_min, u_max, v_min, v_max) over all capsules, radii included."""
        u_min = float(np.minimum(self.u0, self.u1).min() - self.radius.max())
        u_max = float(np.maximum(self.u0, self.u1).max() + self.radius.max())
        v_min = float(np.minimum(self.v0, self.v1).min() - self.radius.max())
        v_max = float(np.maximum(self.v0, self.v1).max() + self.radius.max())
        return u_min, u_max, v_min, v_max


def project_grid(grid: TransportGrid, view: ViewAngles) -> CellProjection:
    """Project each transport cell to an image-plane capsule."""
    half = (0.5 * grid.dx * grid.axis_unit.T).T[grid.cell_segment]
    ends0 = project_points(grid.cell_xyz - half, view)
    ends1 = project_points(grid.cell_xyz + half, view)
    return CellProjection(
        u0=ends0[:, 0],
        v0=ends0[:, 1],
        u1=ends1[:, 0],
        v1=ends1[:, 1],
        radius=grid.cell_radius.copy(),
    )


def _pixel_transform(projection: CellProjection, cfg: RenderConfig):
    """Map image-plane mm to pixel coordinates; +u to columns, +v up."""
    u_min, u_max, v_min, v_max = projection.bbox
    cu = 0.5 * (u_min + u_max)
    cv = 0.5 * (v_min + v_max)

    def to_px(u: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        col = (u - cu) / cfg.pixel_size + (cfg.width - 1) / 2.0
        row = (cfg.height - 1) / 2.0 - (v - cv) / cfg.pixel_size
        return col, row

    return to_px


def render_frame(
    cell_c: np.ndarray,
    projection: CellProjection,
    cfg: RenderConfig,
    c0: float,
    timestamp: float = 0.0,
) -> AngiogramFrame:
    """Rasterize one concentration snapshot to a grayscale angiogram frame.

    Pixel intensity: I = round(255 * (1 - min(c, c0)/c0)), darkest wins
    where capsules overlap; background is white (255).
    """
    cell_c = np.asarray(cell_c, dtype=float)
    if cell_c.shape != projection.u0.shape:
        raise ConfigError(
            f"concentration vector length {cell_c.shape} does not match "
            f"projection ({projection.u0.shape})"
        )
    if c0 <= 0.0:
        raise ConfigError(f"c0 must be positive, got {c0}")
    to_px = _pixel_transform(projection, cfg)
    c0u, r0w = to_px(projection.u0, projection.v0)
    c1u, r1w = to_px(projection.u1, projection.v1)
    intensity = np.rint(255.0 * (1.0 - np.minimum(cell_c, c0) / c0)).astype(np.uint8)

    img = np.full((cfg.height, cfg.width), 255, dtype=np.uint8)
    raster_capsules(
        img,
        np.ascontiguousarray(c0u),
        np.ascontiguousarray(r0w),
        np.ascontiguousarray(c1u),
        np.ascontiguousarray(r1w),
        np.ascontiguousarray(projection.radius / cfg.pixel_size),
        intensity,
    )
    return AngiogramFrame(image=img, timestamp=timestamp)


def threshold_mask(frame: AngiogramFrame | np.ndarray, I_thr: int) -> tuple[np.ndarray, int]:
    """Binary segmentation: 255 where intensity < I_thr, else 0; plus count."""
    image = frame.image if isinstance(frame, AngiogramFrame) else np.asarray(frame)
    mask = np.where(image < I_thr, 255, 0).astype(np.uint8)
    return mask, int(np.count_nonzero(mask))
