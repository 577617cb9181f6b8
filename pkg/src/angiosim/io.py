"""Artifact I/O: PGM images, CSV tables, JSON summaries, run directories.

Every command writes plain-text CSV/JSON plus binary PGM (P5) images, all
in clinical units: pressures in mmHg, flows in L/min, volumes in ml, times
in seconds.  Run directories hold one run each — a lock file keeps writers
single-instance — and carry copies of their input files so a run archives
everything needed to repeat it.
"""

from __future__ import annotations

import csv
import json
import os
import re
import shutil
from contextlib import contextmanager
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .cip import Cip, CipFeatures
from .errors import ConfigError
from .render import AngiogramFrame, threshold_mask

LOCK_FILENAME = "angiosim.lock"

# All floats hit artifacts through this format; 10 significant digits keeps
# byte-identical outputs a matter of determinism, not precision luck.
FLOAT_FORMAT = "%.10g"


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT % value
    return str(value)


# --------------------------------------------------------------------------
# PGM images
# --------------------------------------------------------------------------


def write_pgm(path: str | Path, image: np.ndarray) -> None:
    """Write a grayscale image as binary PGM (P5, maxval 255)."""
    img = np.asarray(image)
    if img.ndim != 2 or img.dtype != np.uint8:
        raise ConfigError(
            f"PGM frames must be 2D uint8 images, got ndim={img.ndim}, dtype={img.dtype}"
        )
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def read_pgm(path: str | Path) -> np.ndarray:
    """Read a binary PGM (P5, maxval 255) written by :func:`write_pgm`."""
    raw = Path(path).read_bytes()
    match = re.match(rb"P5\s+(\d+)\s+(\d+)\s+(\d+)\s", raw)
    if match is None:
        raise ConfigError(f"{path} is not a binary (P5) PGM file")
    width, height, maxval = (int(g) for g in match.groups())
    if maxval != 255:
        raise ConfigError(f"{path}: only maxval 255 PGMs are supported, got {maxval}")
    pixels = np.frombuffer(raw[match.end() :], dtype=np.uint8)
    if pixels.size != width * height:
        raise ConfigError(
            f"{path}: payload holds {pixels.size} pixels, header says {width * height}"
        )
    return pixels.reshape(height, width)


def frame_filename(index: int) -> str:
    return f"frame_{index:04d}.pgm"


def mask_filename(index: int) -> str:
    return f"mask_{index:04d}.pgm"


def write_frames(
    directory: str | Path, frames: Sequence[AngiogramFrame], I_thr: int
) -> tuple[list[str], list[str]]:
    """Write every frame and its segmentation mask; returns the filenames.

    Masks are white (255) where the frame is contrast-dark (below I_thr),
    black elsewhere.
    """
    directory = Path(directory)
    frame_dir = directory / "frames"
    mask_dir = directory / "masks"
    frame_dir.mkdir(parents=True, exist_ok=True)
    mask_dir.mkdir(parents=True, exist_ok=True)
    frame_names: list[str] = []
    mask_names: list[str] = []
    for i, frame in enumerate(frames, start=1):
        mask, _ = threshold_mask(frame, I_thr)
        write_pgm(frame_dir / frame_filename(i), frame.image)
        write_pgm(mask_dir / mask_filename(i), np.where(mask, 255, 0).astype(np.uint8))
        frame_names.append(f"frames/{frame_filename(i)}")
        mask_names.append(f"masks/{mask_filename(i)}")
    return frame_names, mask_names


# --------------------------------------------------------------------------
# CSV tables
# --------------------------------------------------------------------------


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """Write a CSV with a mandatory header row and formatted floats."""
    if not header:
        raise ConfigError("CSV files need a non-empty header row")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_cip_csv(path: str | Path, cip: Cip) -> None:
    """Normalized contrast profile as the two-column (time_s, value) table."""
    write_csv(path, ("time_s", "value"), zip(cip.times, cip.values))


def read_cip_csv(path: str | Path) -> Cip:
    """Read a two-column (time_s, value) profile, e.g. a clinical recording.

    Values are renormalized by their maximum, so files rounded during export
    still satisfy the unit-peak convention.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"CIP file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigError(f"{path} is empty; expected a (time_s, value) CSV") from None
        if len(header) < 2 or header[0].strip() != "time_s":
            raise ConfigError(
                f"{path} must start with a 'time_s,value' header row, got {header!r}"
            )
        try:
            data = [(float(row[0]), float(row[1])) for row in reader if row]
        except (ValueError, IndexError) as exc:
            raise ConfigError(f"{path} has a malformed row: {exc}") from exc
    if len(data) < 2:
        raise ConfigError(f"{path} holds {len(data)} samples; a CIP needs at least 2")
    times = np.array([t for t, _ in data])
    values = np.array([v for _, v in data])
    peak = values.max()
    if peak <= 0.0:
        return Cip(times=times, values=np.zeros_like(values), all_zero=True)
    return Cip(times=times, values=values / peak)


def write_features_csv(path: str | Path, features: CipFeatures | None) -> None:
    """Feature table as (name, value) rows; header-only when absent."""
    rows = features.to_dict().items() if features is not None else ()
    write_csv(path, ("name", "value"), rows)


def write_history_csv(path: str | Path, history: np.ndarray) -> None:
    """Optimizer history as (generation, best_loss, mean_loss, std_loss)."""
    history = np.asarray(history, dtype=float)
    if history.ndim != 2 or history.shape[1] != 3:
        raise ConfigError(f"history must have shape (n, 3), got {history.shape}")
    write_csv(
        path,
        ("generation", "best_loss", "mean_loss", "std_loss"),
        ((g, *row) for g, row in enumerate(history)),
    )


def write_grid_csv(path: str | Path, levels: Sequence[float], losses: np.ndarray) -> None:
    """Grid-search surface as (delta_rest_pct, delta_hyper_pct, loss) rows."""
    losses = np.asarray(losses, dtype=float)
    n = len(levels)
    if losses.shape != (n, n):
        raise ConfigError(f"grid losses must be ({n}, {n}), got {losses.shape}")
    rows = (
        (100.0 * levels[i], 100.0 * levels[j], losses[i, j])
        for i in range(n)
        for j in range(n)
    )
    write_csv(path, ("delta_rest_pct", "delta_hyper_pct", "loss"), rows)


# --------------------------------------------------------------------------
# JSON summaries
# --------------------------------------------------------------------------


def _jsonable(value):
    if isinstance(value, Mapping):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    return value


def write_json(path: str | Path, payload: Mapping) -> None:
    """Write a JSON document with sorted keys and a trailing newline."""
    text = json.dumps(_jsonable(payload), indent=2, sort_keys=True)
    Path(path).write_text(text + "\n")


# --------------------------------------------------------------------------
# Run directories
# --------------------------------------------------------------------------


@contextmanager
def run_lock(run_dir: str | Path) -> Iterator[None]:
    """Hold the run directory's single-writer lock for the block's duration."""
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    lock = run_dir / LOCK_FILENAME
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise ConfigError(
            f"run directory {run_dir} is locked ({LOCK_FILENAME} exists); "
            "another run is active, or a crashed run left the file behind"
        ) from None
    try:
        os.write(fd, f"{os.getpid()}\n".encode("ascii"))
        os.close(fd)
        yield
    finally:
        lock.unlink(missing_ok=True)


def copy_inputs(run_dir: str | Path, inputs: Mapping[str, str | Path]) -> dict[str, str]:
    """Copy input files into <run_dir>/inputs, named by role, for provenance.

    Returns the run-dir-relative destination per role.  Roles keep the
    source suffix so copied files stay recognizable to the loaders.
    """
    dest_dir = Path(run_dir) / "inputs"
    dest_dir.mkdir(parents=True, exist_ok=True)
    copied: dict[str, str] = {}
    for role, src in inputs.items():
        src = Path(src)
        if not src.is_file():
            raise ConfigError(f"input file not found: {src} (role {role!r})")
        dest = dest_dir / f"{role}{src.suffix}"
        shutil.copyfile(src, dest)
        copied[role] = f"inputs/{dest.name}"
    return copied
