"""Contrast intensity profiles (CIPs) and their scalar features.

A CIP is the per-frame count of segmented (contrast-dark) pixels,
normalized by the sequence maximum.  Its shape carries the three stages of
a bolus passage: filling, plateau, washout.  Features are extracted with
fixed conventions: slopes are least-squares fits between the 10% and 90%
level crossings, the plateau is the time spent above 0.9, and the AUC is
the plain trapezoidal integral of the normalized profile.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError, NumericalError
from .render import AngiogramFrame, threshold_mask

_trapezoid = getattr(np, "trapezoid", None) or np.trapz

# Level conventions for feature extraction (fractions of the peak).
SLOPE_BAND = (0.1, 0.9)
PLATEAU_LEVEL = 0.9
ALIGN_LEVEL = 0.05  # clinical time zero: first sample at 5% of max


@dataclass(frozen=True)
class Cip:
    """Normalized contrast intensity profile over frame times."""

    times: np.ndarray  # [s], strictly increasing
    values: np.ndarray  # normalized pixel counts in [0, 1]
    all_zero: bool = False  # no frame showed any contrast

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        if times.ndim != 1 or times.shape != values.shape or times.size < 2:
            raise ConfigError("a CIP needs matching 1D times/values with >= 2 samples")
        if np.any(np.diff(times) <= 0.0):
            raise ConfigError("CIP times must be strictly increasing")
        if not np.all(np.isfinite(values)) or values.min() < 0.0:
            raise ConfigError("CIP values must be finite and non-negative")
        if self.all_zero:
            if values.max() > 0.0:
                raise ConfigError("all_zero CIP carries nonzero values")
        elif not np.isclose(values.max(), 1.0, rtol=0.0, atol=1e-12):
            raise ConfigError("normalized CIP must attain 1 at its maximum")

    def shifted(self, t0: float) -> "Cip":
        return Cip(times=self.times - t0, values=self.values, all_zero=self.all_zero)

    def smoothed(self, width: int = 3) -> "Cip":
        """Centered moving average, renormalized to unit peak.

        Low frame rates alias cardiac pulsatility into ripple on the plateau
        and washout limb, which corrupts level-crossing detection.  A short
        centered average suppresses the ripple while keeping samples on the
        original time stamps (hence the odd width).  Slopes and durations
        extracted from the smoothed profile vary smoothly under parameter
        sweeps where the raw ones jitter.
        """
        if width < 1 or width % 2 == 0:
            raise ConfigError(f"smoothing width must be a positive odd int, got {width}")
        if width == 1 or self.all_zero:
            return self
        if self.times.size < width:
            raise ConfigError(f"cannot smooth a {self.times.size}-sample CIP with width {width}")
        half = width // 2
        values = np.convolve(self.values, np.ones(width) / width, mode="valid")
        peak = values.max()
        return Cip(
            times=self.times[half : self.times.size - half],
            values=values / peak if peak > 0.0 else values,
            all_zero=bool(peak == 0.0),
        )


@dataclass(frozen=True)
class CipFeatures:
    """Scalar descriptors of a bolus-passage profile."""

    rising_slope: float  # filling-stage slope [1/s], >= 0
    falling_slope: float  # washout-stage slope [1/s], <= 0
    plateau_duration: float  # time above the 0.9 level [s]
    auc: float  # trapezoidal area under the profile [s]

    def __post_init__(self) -> None:
        if self.rising_slope < 0.0 or self.falling_slope > 0.0 or self.auc < 0.0:
            raise NumericalError(
                f"ill-formed CIP features: rising={self.rising_slope}, "
                f"falling={self.falling_slope}, auc={self.auc}"
            )

    def to_dict(self) -> dict[str, float]:
        return {
            "rising_slope_per_s": self.rising_slope,
            "falling_slope_per_s": self.falling_slope,
            "plateau_duration_s": self.plateau_duration,
            "auc_s": self.auc,
        }


def compute_cip(frames: Sequence[AngiogramFrame], I_thr: int) -> Cip:
    """Count segmented pixels per frame and normalize by the sequence max."""
    if len(frames) < 2:
        raise ConfigError(f"a CIP needs at least 2 frames, got {len(frames)}")
    times = np.array([f.timestamp for f in frames], dtype=float)
    counts = np.array([threshold_mask(f, I_thr)[1] for f in frames], dtype=float)
    peak = counts.max()
    if peak == 0.0:
        return Cip(times=times, values=counts, all_zero=True)
    return Cip(times=times, values=counts / peak)


def _first_upward_crossing(t: np.ndarray, v: np.ndarray, level: float) -> float | None:
    """Interpolated time of the first rise through `level`."""
    if v[0] >= level:
        return float(t[0])
    idx = np.nonzero((v[:-1] < level) & (v[1:] >= level))[0]
    if idx.size == 0:
        return None
    i = int(idx[0])
    frac = (level - v[i]) / (v[i + 1] - v[i])
    return float(t[i] + frac * (t[i + 1] - t[i]))


def _last_downward_crossing(t: np.ndarray, v: np.ndarray, level: float) -> float | None:
    """Interpolated time of the last fall through `level`."""
    if v[-1] >= level:
        return float(t[-1])
    idx = np.nonzero((v[:-1] >= level) & (v[1:] < level))[0]
    if idx.size == 0:
        return None
    i = int(idx[-1])
    frac = (v[i] - level) / (v[i] - v[i + 1])
    return float(t[i] + frac * (t[i + 1] - t[i]))


def _window_slope(t: np.ndarray, v: np.ndarray, t0: float, t1: float, levels) -> float:
    """Least-squares slope over samples in [t0, t1]; secant if too few."""
    sel = (t >= t0 - 1e-12) & (t <= t1 + 1e-12)
    if int(sel.sum()) >= 2:
        return float(np.polyfit(t[sel], v[sel], 1)[0])
    lo, hi = levels
    return (hi - lo) / (t1 - t0) if t1 > t0 else 0.0


def _time_above(t: np.ndarray, v: np.ndarray, level: float) -> float:
    """Total time with v >= level, crossings linearly interpolated."""
    total = 0.0
    for i in range(t.size - 1):
        a, b = v[i], v[i + 1]
        dt = t[i + 1] - t[i]
        if a >= level and b >= level:
            total += dt
        elif a >= level and b < level:
            total += dt * (a - level) / (a - b)
        elif a < level and b >= level:
            total += dt * (b - level) / (b - a)
    return total


def extract_features(cip: Cip) -> CipFeatures | None:
    """Slope/plateau/area descriptors; None when the profile never reaches 0.9."""
    t, v = cip.times, cip.values
    lo, hi = SLOPE_BAND
    if cip.all_zero or v.max() < PLATEAU_LEVEL:
        return None

    t_lo_up = _first_upward_crossing(t, v, lo)
    t_hi_up = _first_upward_crossing(t, v, hi)
    t_hi_dn = _last_downward_crossing(t, v, hi)
    t_lo_dn = _last_downward_crossing(t, v, lo)
    if t_lo_up is None or t_hi_up is None or t_hi_dn is None or t_lo_dn is None:
        return None

    rising = _window_slope(t, v, t_lo_up, t_hi_up, (lo, hi))
    falling = _window_slope(t, v, t_hi_dn, t_lo_dn, (hi, lo))
    return CipFeatures(
        rising_slope=max(rising, 0.0),
        falling_slope=min(falling, 0.0),
        plateau_duration=_time_above(t, v, PLATEAU_LEVEL),
        auc=float(_trapezoid(v, t)),
    )


def align_time_zero(cip: Cip, level: float = ALIGN_LEVEL) -> Cip:
    """Shift a clinical CIP so t = 0 is its first sample at `level` of max.

    Computational CIPs are already anchored at injection start; clinical
    recordings carry an arbitrary acquisition offset, removed here.
    """
    if cip.all_zero:
        return cip
    idx = np.nonzero(cip.values >= level * cip.values.max())[0]
    if idx.size == 0:
        return cip
    return cip.shifted(float(cip.times[int(idx[0])]))


def cip_l2(a: Cip, b: Cip) -> float:
    """Root-mean-square difference between two CIPs on a common time grid.

    a is linearly resampled onto b's samples over the overlap of their time
    ranges; the result is ||a - b||_2 / sqrt(N), so its square is the mean
    squared error.
    """
    t_lo = max(float(a.times[0]), float(b.times[0]))
    t_hi = min(float(a.times[-1]), float(b.times[-1]))
    if t_hi <= t_lo:
        raise ConfigError(
            f"CIP time ranges do not overlap: [{a.times[0]:.6g}, {a.times[-1]:.6g}] "
            f"vs [{b.times[0]:.6g}, {b.times[-1]:.6g}]"
        )
    sel = (b.times >= t_lo) & (b.times <= t_hi)
    tb = b.times[sel]
    diff = np.interp(tb, a.times, a.values) - b.values[sel]
    return float(np.linalg.norm(diff) / np.sqrt(tb.size))
