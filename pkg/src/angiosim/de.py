"""Differential evolution (rand/1/bin) with a deterministic evaluation order.

Small, self-contained optimizer tailored to the calibration stage: box
constraints by clipping, selection on <=, and a population-statistics stop
rule (std < tol * mean).  All random draws come from one generator in a
fixed order and candidate evaluation is order-preserving, so results are
bit-identical for a fixed seed no matter how many worker threads evaluate
the objective.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from .errors import ConfigError


@dataclass(frozen=True)
class DEConfig:
    """Optimizer settings; defaults follow the calibration protocol."""

    population: int = 49
    max_generations: int = 150
    F: float = 0.7  # differential weight
    CR: float = 0.9  # crossover rate
    seed: int = 0
    std_tol_fraction: float = 0.01  # stop when loss std < tol * loss mean

    def __post_init__(self) -> None:
        if self.population < 4:
            raise ConfigError(f"population must be >= 4, got {self.population}")
        if self.max_generations < 1:
            raise ConfigError(f"max_generations must be >= 1, got {self.max_generations}")
        if not 0.0 < self.F <= 2.0:
            raise ConfigError(f"F must be in (0, 2], got {self.F}")
        if not 0.0 <= self.CR <= 1.0:
            raise ConfigError(f"CR must be in [0, 1], got {self.CR}")
        if self.std_tol_fraction < 0.0:
            raise ConfigError(f"std_tol_fraction must be >= 0, got {self.std_tol_fraction}")


@dataclass(frozen=True)
class DEResult:
    """Optimum plus the generation-wise population-loss history."""

    x: np.ndarray
    loss: float
    history: np.ndarray  # (n_generations, 3): best, mean, std per generation
    generations: int  # evolution steps taken (history rows - 1)
    converged: bool  # stopped by the std rule rather than the budget

    @property
    def best_history(self) -> np.ndarray:
        return self.history[:, 0]


def _evaluate(
    objective: Callable[[np.ndarray], float],
    candidates: np.ndarray,
    workers: int,
) -> np.ndarray:
    """Objective values in candidate order; non-finite results become +inf."""

    def one(x: np.ndarray) -> float:
        value = float(objective(x))
        return value if np.isfinite(value) else np.inf

    if workers <= 1:
        values = [one(x) for x in candidates]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(one, candidates))
    return np.array(values)


def _stats(losses: np.ndarray) -> tuple[float, float, float]:
    best = float(losses.min())
    finite = losses[np.isfinite(losses)]
    if finite.size == 0:
        return best, np.inf, np.inf
    return best, float(finite.mean()), float(finite.std())


def _stopped(mean: float, std: float, tol: float) -> bool:
    if not np.isfinite(std):
        return False
    if std == 0.0:
        return True
    return np.isfinite(mean) and std < tol * mean


def differential_evolution(
    objective: Callable[[np.ndarray], float],
    bounds: Sequence[tuple[float, float]],
    cfg: DEConfig,
    workers: int = 1,
    polish: bool = True,
) -> DEResult:
    """Minimize `objective` over a box via rand/1/bin differential evolution.

    bounds is a sequence of (low, high) with low <= high; equal bounds pin
    a coordinate.  The returned history has one row per generation
    including the initial population (generation 0).

    Trials of a generation are drawn against a population snapshot
    (batch-synchronous), which is what makes evaluation order irrelevant;
    the mild convergence cost versus in-place selection is recovered by a
    deterministic Nelder-Mead polish of the final best point (kept only
    when it improves the loss).
    """
    box = np.asarray(bounds, dtype=float)
    if box.ndim != 2 or box.shape[1] != 2 or box.shape[0] == 0:
        raise ConfigError(f"bounds must be a (n, 2) array, got shape {box.shape}")
    lo, hi = box[:, 0], box[:, 1]
    if np.any(lo > hi):
        bad = int(np.nonzero(lo > hi)[0][0])
        raise ConfigError(f"bounds[{bad}] has low {lo[bad]} > high {hi[bad]}")
    n_dim = box.shape[0]
    NP = cfg.population

    rng = np.random.default_rng(cfg.seed)
    pop = lo + rng.random((NP, n_dim)) * (hi - lo)
    losses = _evaluate(objective, pop, workers)

    history = [_stats(losses)]
    converged = _stopped(history[0][1], history[0][2], cfg.std_tol_fraction)
    generations = 0

    while not converged and generations < cfg.max_generations:
        # Draw every trial first from the single RNG stream, then evaluate;
        # parallel evaluation cannot perturb the draw order.
        trials = np.empty_like(pop)
        for i in range(NP):
            r1, r2, r3 = _distinct_indices(rng, NP, i)
            mutant = pop[r1] + cfg.F * (pop[r2] - pop[r3])
            np.clip(mutant, lo, hi, out=mutant)
            cross = rng.random(n_dim) < cfg.CR
            cross[rng.integers(n_dim)] = True
            trials[i] = np.where(cross, mutant, pop[i])
        trial_losses = _evaluate(objective, trials, workers)

        improved = trial_losses <= losses
        pop[improved] = trials[improved]
        losses[improved] = trial_losses[improved]
        generations += 1

        history.append(_stats(losses))
        converged = _stopped(history[-1][1], history[-1][2], cfg.std_tol_fraction)

    best = int(np.argmin(losses))
    x_best, loss_best = pop[best].copy(), float(losses[best])
    if polish and np.isfinite(loss_best):
        x_best, loss_best = _polish(objective, x_best, loss_best, lo, hi)
    return DEResult(
        x=x_best,
        loss=loss_best,
        history=np.array(history),
        generations=generations,
        converged=converged,
    )


def _polish(
    objective: Callable[[np.ndarray], float],
    x: np.ndarray,
    loss: float,
    lo: np.ndarray,
    hi: np.ndarray,
) -> tuple[np.ndarray, float]:
    """Local Nelder-Mead refinement inside the box; never worsens the result."""

    def clipped(z: np.ndarray) -> float:
        value = float(objective(np.clip(z, lo, hi)))
        return value if np.isfinite(value) else np.inf

    free = hi > lo
    if not np.any(free):
        return x, loss
    res = minimize(
        clipped,
        x,
        method="Nelder-Mead",
        bounds=list(zip(lo, hi)),
        options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 400 * x.size},
    )
    if np.isfinite(res.fun) and res.fun < loss:
        return np.clip(res.x, lo, hi), float(res.fun)
    return x, loss


def _distinct_indices(rng: np.random.Generator, NP: int, i: int) -> tuple[int, int, int]:
    """Three distinct population indices, all different from i."""
    picks = rng.choice(NP - 1, size=3, replace=False)
    return tuple(int(p) if p < i else int(p) + 1 for p in picks)
