"""Coronary-parameter sensitivity studies on the contrast pipeline.

Two studies probe how the coronary outlet LPMs shape the contrast intensity
profile.  The per-parameter study multiplies one element (a resistance or a
compliance) across every branch while holding the rest at 1x, starting from
a healthy hyperemic baseline.  The uniform study scales all three
resistances of every branch together from a healthy resting baseline,
mimicking increasing degrees of microvascular disease.

Both studies run longer windows than the clinical acquisition protocol (14
cardiac cycles by default): at the extreme perturbations washout is slow
enough that the standard window would truncate the profile before its
falling limb is defined.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .calibrate import scale_total_resistance
from .cip import Cip, CipFeatures, extract_features
from .errors import ConfigError
from .lpm import LpmParameterSet
from .metrics import HemodynamicMetrics
from .pipeline import AngiogramScenario, load_scenario, run_angiogram
from .tree import VesselTree

RESISTANCE_FAMILIES = ("R_a", "R_ap", "R_ad")
COMPLIANCE_FAMILIES = ("C_a", "C_im")

# Each perturbation stiffens or drains the microcirculation: resistances up,
# compliances down.
RESISTANCE_FACTORS = (1.0, 3.0, 5.0, 7.0, 9.0)
COMPLIANCE_FACTORS = (1.0, 1.0 / 3.0, 1.0 / 5.0, 1.0 / 7.0, 1.0 / 9.0)
UNIFORM_FACTORS = (1.0, 2.0, 3.0)

STUDY_CYCLES = 14

# Study features come from a lightly smoothed CIP: at the stiffest
# perturbations the washout limb rides on frame-rate-aliased pulsatility,
# and raw level crossings jitter between factors.
FEATURE_SMOOTHING = 3


def study_scenario(state: str, **overrides) -> AngiogramScenario:
    """The acquisition protocol for ``state`` stretched to the study window."""
    overrides.setdefault("n_cycles", STUDY_CYCLES)
    return load_scenario(state, **overrides)


def scale_family(params: LpmParameterSet, family: str, factor: float) -> LpmParameterSet:
    """Multiply one coronary element by ``factor`` on every branch."""
    if family not in RESISTANCE_FAMILIES + COMPLIANCE_FAMILIES:
        raise ConfigError(f"unknown coronary parameter family {family!r}")
    if factor <= 0.0:
        raise ConfigError(f"perturbation factor must be positive, got {factor}")
    if factor == 1.0:
        return params
    return params.with_coronary(
        {tid: c.scaled(**{family: factor}) for tid, c in params.coronary.items()}
    )


def left_tree_flow(tree: VesselTree, metrics: HemodynamicMetrics) -> float:
    """Cycle-mean flow into the left coronary tree [L/min]."""
    return sum(
        metrics.terminal_mean_flow[seg.id] for seg in tree.terminals if seg.side == "left"
    )


@dataclass(frozen=True)
class PerturbationRun:
    """One pipeline run of a study: which knob, how far, and what came out."""

    family: str  # perturbed element ("R_ad", ...) or "all_R" for the uniform study
    factor: float  # multiplier applied to that element on every branch
    metrics: HemodynamicMetrics
    cip: Cip  # raw profile; `features` are extracted from cip.smoothed()
    features: CipFeatures | None
    Q_left: float  # [L/min]

    def row(self) -> dict[str, float | str]:
        """Flat record in clinical units (hemodynamics table shape)."""
        m = self.metrics
        out: dict[str, float | str] = {
            "family": self.family,
            "factor": self.factor,
            "Q_mean_L_per_min": m.Q_mean,
            "Q_max_L_per_min": m.Q_max,
            "P_sys_mmHg": m.P_sys,
            "P_dia_mmHg": m.P_dia,
            "EDV_ml": m.EDV,
            "ESV_ml": m.ESV,
            "SV_ml": m.SV,
            "EF_percent": 100.0 * m.EF,
            "Q_left_L_per_min": self.Q_left,
        }
        if self.features is not None:
            out.update(self.features.to_dict())
        return out


@dataclass(frozen=True)
class SensitivityReport:
    """All runs of one study, baseline first within each family sweep."""

    study: str  # "individual" | "uniform"
    runs: tuple[PerturbationRun, ...]

    def family_sweep(self, family: str) -> tuple[PerturbationRun, ...]:
        return tuple(r for r in self.runs if r.family == family)

    @property
    def baseline(self) -> PerturbationRun:
        return next(r for r in self.runs if r.factor == 1.0)

    def auc_ratios(self) -> dict[float, float]:
        """AUC of each run's CIP relative to the baseline run, keyed by factor."""
        factors = [r.factor for r in self.runs]
        if len(set(factors)) != len(factors):
            raise ConfigError(
                "auc_ratios keys runs by factor, which repeats across the "
                f"{self.study} study's families; it describes single-sweep reports"
            )
        base = self.baseline
        if base.features is None:
            raise ConfigError(f"baseline run of the {self.study} study has no CIP features")
        ratios: dict[float, float] = {}
        for r in self.runs:
            if r.features is None:
                raise ConfigError(
                    f"run {r.family} x{r.factor:g} has no CIP features; "
                    "widen the study window"
                )
            ratios[r.factor] = r.features.auc / base.features.auc
        return ratios


def _run_one(
    tree: VesselTree,
    params: LpmParameterSet,
    scenario: AngiogramScenario,
    family: str,
    factor: float,
) -> PerturbationRun:
    result = run_angiogram(tree, params, scenario)
    return PerturbationRun(
        family=family,
        factor=factor,
        metrics=result.metrics,
        cip=result.cip,
        features=extract_features(result.cip.smoothed(FEATURE_SMOOTHING)),
        Q_left=left_tree_flow(tree, result.metrics),
    )


def sensitivity_individual(
    tree: VesselTree,
    baseline: LpmParameterSet,
    scenario: AngiogramScenario,
    *,
    resistance_factors: tuple[float, ...] = RESISTANCE_FACTORS,
    compliance_factors: tuple[float, ...] = COMPLIANCE_FACTORS,
) -> SensitivityReport:
    """Perturb each coronary element in turn from a hyperemic baseline.

    Every family sweep starts at factor 1; the unperturbed run is shared so
    the 5 x 5 report costs 21 pipeline runs.  Rows appear family by family
    in sweep order, baseline row repeated at the head of each sweep.
    """
    for factors, kind in ((resistance_factors, "resistance"), (compliance_factors, "compliance")):
        if not factors or factors[0] != 1.0:
            raise ConfigError(f"{kind} factor sequence must start at 1, got {factors!r}")
    base_run = _run_one(tree, baseline, scenario, "baseline", 1.0)

    runs: list[PerturbationRun] = []
    for family in RESISTANCE_FAMILIES + COMPLIANCE_FAMILIES:
        factors = resistance_factors if family in RESISTANCE_FAMILIES else compliance_factors
        runs.append(replace(base_run, family=family))
        for factor in factors[1:]:
            runs.append(_run_one(tree, scale_family(baseline, family, factor), scenario, family, factor))
    return SensitivityReport(study="individual", runs=tuple(runs))


def sensitivity_uniform(
    tree: VesselTree,
    baseline: LpmParameterSet,
    scenario: AngiogramScenario,
    *,
    factors: tuple[float, ...] = UNIFORM_FACTORS,
) -> SensitivityReport:
    """Scale all three resistances of every branch together (resting baseline).

    Factors are total-resistance multipliers (1x healthy, 2x moderate, 3x
    severe); compliances stay fixed, so each step models microvascular
    narrowing at constant vessel wall properties.
    """
    if not factors or factors[0] != 1.0:
        raise ConfigError(f"uniform factor sequence must start at 1, got {factors!r}")
    if any(f <= 0.0 for f in factors):
        raise ConfigError(f"uniform factors must be positive, got {factors!r}")
    runs = [
        _run_one(tree, scale_total_resistance(baseline, factor - 1.0), scenario, "all_R", factor)
        for factor in factors
    ]
    return SensitivityReport(study="uniform", runs=tuple(runs))
