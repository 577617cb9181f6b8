"""Command-line surface: simulate, angiogram, calibrate, sensitivity, features.

Each command reads one hierarchical YAML run config (``--config``), writes
its artifacts into a locked run directory, and exits 0 on success, 2 on a
configuration/usage problem, 3 on a numerical failure.  Flags override
config fields; the thread count also honors the ANGIOSIM_THREADS variable
(flag wins).  With a fixed seed, repeated runs produce byte-identical
artifacts regardless of thread count, so nothing time- or host-dependent is
ever written into a run directory.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .calibrate import (
    GRID_LEVELS_DEFAULT,
    PretuneSettings,
    Stage2Config,
    calibrate_stage1,
    grid_search,
    hyperemia_bounds,
    load_cfr_hat,
    load_rest_bounds,
    load_stage1_targets,
    murray_flow_targets,
    pretune_coronary,
)
from .cip import extract_features
from .config import dump_lpm_parameters, load_lpm_parameters, preset_path, read_config_text
from .de import DEConfig
from .errors import AngiosimError, ConfigError
from .io import (
    copy_inputs,
    read_cip_csv,
    run_lock,
    write_cip_csv,
    write_csv,
    write_features_csv,
    write_frames,
    write_grid_csv,
    write_history_csv,
    write_json,
)
from .lpm import DT_MAX, simulate
from .metrics import compute_metrics
from .pipeline import AngiogramScenario, load_scenario, make_stage2_evaluator, run_angiogram
from .render import RenderConfig, ViewAngles
from .sensitivity import sensitivity_individual, sensitivity_uniform, study_scenario
from .tree import load_tree
from .units import lmin_to_mm3s

THREADS_ENV = "ANGIOSIM_THREADS"
STATES = ("rest", "hyperemia")

# Default baseline parameter presets per sensitivity study.
STUDY_BASELINES = {
    "individual": ("hyperemia", "params_healthy_hyperemia.yaml"),
    "uniform": ("rest", "params_healthy_baseline.yaml"),
}


# --------------------------------------------------------------------------
# Run configuration
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CalibrationConfig:
    """calibration: section of a run config (both stages)."""

    targets_path: Path  # Stage-1 targets + CFR + search ranges
    clinical_cips: dict[str, Path] = field(default_factory=dict)  # stage 2 input
    generations: int = 150
    population: int = 49
    levels: tuple[float, ...] = GRID_LEVELS_DEFAULT
    dx: float | None = None  # [mm] stage-2 evaluator grid spacing
    dt_tr: float | None = None  # [s] stage-2 evaluator transport step
    co_fraction: float = 0.04
    left_fraction: float = 0.6


@dataclass(frozen=True)
class SensitivityConfig:
    """sensitivity: section of a run config."""

    parameters_path: Path | None = None  # study baseline; None = shipped preset
    n_cycles: int | None = None  # None = study default window


@dataclass(frozen=True)
class RunConfig:
    """A fully resolved run: every referenced file checked, defaults applied."""

    config_path: Path
    state: str
    tree_path: Path
    parameter_paths: dict[str, Path]
    scenario: AngiogramScenario
    out: Path | None
    seed: int
    threads: int
    calibration: CalibrationConfig
    sensitivity: SensitivityConfig

    def parameters_for(self, state: str) -> Path:
        if state not in self.parameter_paths:
            raise ConfigError(
                f"the run config lists no parameter file for state {state!r} "
                f"(have: {sorted(self.parameter_paths) or 'none'})"
            )
        return self.parameter_paths[state]


def _resolve_file(value: str, base_dir: Path, role: str) -> Path:
    """A config-referenced file: relative to the config, else a shipped preset."""
    raw = Path(str(value))
    candidates = [raw] if raw.is_absolute() else [base_dir / raw, raw]
    for path in candidates:
        if path.is_file():
            return path.resolve()
    try:
        return preset_path(str(value))
    except ConfigError:
        raise ConfigError(f"file not found: {value} ({role})") from None


def _require_keys(section: dict, allowed: tuple[str, ...], where: str) -> None:
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")


def _scenario_from_config(state: str, section: dict, dt_flag: float | None) -> AngiogramScenario:
    """The state's acquisition preset with config/flag overrides applied."""
    _require_keys(
        section, ("n_cycles", "injection", "view", "render", "numerics"), "scenario:"
    )
    base = load_scenario(state)
    kw: dict = {}
    if "n_cycles" in section:
        kw["n_cycles"] = int(section["n_cycles"])
    injection = dict(section.get("injection", {}))
    _require_keys(
        injection,
        ("start_cycle", "rate_mm3_per_s", "duration_s", "c0_mg_per_ml"),
        "scenario.injection:",
    )
    if "start_cycle" in injection:
        kw["injection_start_cycle"] = int(injection["start_cycle"])
    if "rate_mm3_per_s" in injection:
        kw["injection_rate"] = float(injection["rate_mm3_per_s"])
    if "duration_s" in injection:
        kw["injection_duration"] = float(injection["duration_s"])
    if "c0_mg_per_ml" in injection:
        kw["c0"] = float(injection["c0_mg_per_ml"])
    view = dict(section.get("view", {}))
    _require_keys(view, ("rao_lao_deg", "cra_cau_deg"), "scenario.view:")
    if view:
        kw["view"] = ViewAngles(
            rao_lao=float(view.get("rao_lao_deg", base.view.rao_lao)),
            cra_cau=float(view.get("cra_cau_deg", base.view.cra_cau)),
        )
    render = dict(section.get("render", {}))
    _require_keys(
        render, ("width", "height", "pixel_size_mm", "fps", "I_thr"), "scenario.render:"
    )
    if render:
        kw["render"] = RenderConfig(
            width=int(render.get("width", base.render.width)),
            height=int(render.get("height", base.render.height)),
            pixel_size=float(render.get("pixel_size_mm", base.render.pixel_size)),
            fps=float(render.get("fps", base.render.fps)),
            I_thr=int(render.get("I_thr", base.render.I_thr)),
        )
    numerics = dict(section.get("numerics", {}))
    _require_keys(
        numerics,
        ("dt_s", "dx_mm", "dt_transport_s", "diffusivity_mm2_per_s"),
        "scenario.numerics:",
    )
    if "dt_s" in numerics:
        kw["dt"] = float(numerics["dt_s"])
    if "dx_mm" in numerics:
        kw["dx"] = float(numerics["dx_mm"])
    if "dt_transport_s" in numerics:
        kw["dt_tr"] = float(numerics["dt_transport_s"])
    if "diffusivity_mm2_per_s" in numerics:
        kw["diffusivity"] = float(numerics["diffusivity_mm2_per_s"])
    if dt_flag is not None:
        kw["dt"] = dt_flag
    return replace(base, **kw) if kw else base


def _calibration_from_config(section: dict, base_dir: Path) -> CalibrationConfig:
    _require_keys(
        section,
        (
            "targets",
            "clinical_cips",
            "generations",
            "population",
            "levels_pct",
            "dx_mm",
            "dt_transport_s",
            "co_fraction",
            "left_fraction",
        ),
        "calibration:",
    )
    targets = (
        _resolve_file(section["targets"], base_dir, "calibration targets")
        if "targets" in section
        else preset_path("calibration_targets.yaml")
    )
    cips_section = dict(section.get("clinical_cips", {}))
    _require_keys(cips_section, STATES, "calibration.clinical_cips:")
    cips = {
        state: _resolve_file(path, base_dir, f"clinical CIP ({state})")
        for state, path in cips_section.items()
    }
    levels = (
        tuple(float(p) / 100.0 for p in section["levels_pct"])
        if "levels_pct" in section
        else GRID_LEVELS_DEFAULT
    )
    return CalibrationConfig(
        targets_path=targets,
        clinical_cips=cips,
        generations=int(section.get("generations", 150)),
        population=int(section.get("population", 49)),
        levels=levels,
        dx=float(section["dx_mm"]) if "dx_mm" in section else None,
        dt_tr=float(section["dt_transport_s"]) if "dt_transport_s" in section else None,
        co_fraction=float(section.get("co_fraction", 0.04)),
        left_fraction=float(section.get("left_fraction", 0.6)),
    )


def _resolve_threads(flag: int | None, config_value) -> int:
    if flag is not None:
        threads = flag
    elif THREADS_ENV in os.environ:
        raw = os.environ[THREADS_ENV]
        try:
            threads = int(raw)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    elif config_value is not None:
        threads = int(config_value)
    else:
        threads = 1
    if threads < 1:
        raise ConfigError(f"thread count must be >= 1, got {threads}")
    return threads


def load_run_config(args: argparse.Namespace) -> RunConfig:
    """Parse and resolve the run config named by --config, applying flags."""
    if args.dt is not None and not 0.0 < args.dt <= DT_MAX:
        raise ConfigError(f"--dt must lie in (0, {DT_MAX:g}] s, got {args.dt:g}")
    config_path = _resolve_file(args.config, Path.cwd(), "run config")
    doc = read_config_text(config_path)
    _require_keys(
        doc,
        ("state", "tree", "parameters", "scenario", "out", "seed", "threads",
         "calibration", "sensitivity"),
        "run config",
    )
    base_dir = config_path.parent
    state = str(doc.get("state", "rest"))
    if state not in STATES:
        raise ConfigError(f"state must be one of {STATES}, got {state!r}")
    tree_path = _resolve_file(doc.get("tree", "reference_tree.yaml"), base_dir, "tree")
    params_section = dict(doc.get("parameters", {}))
    _require_keys(params_section, STATES, "parameters:")
    parameter_paths = {
        s: _resolve_file(p, base_dir, f"parameters ({s})") for s, p in params_section.items()
    }
    scenario = _scenario_from_config(state, dict(doc.get("scenario", {})), args.dt)
    out = args.out if args.out is not None else doc.get("out")
    sens_section = dict(doc.get("sensitivity", {}))
    _require_keys(sens_section, ("parameters", "n_cycles"), "sensitivity:")
    sensitivity = SensitivityConfig(
        parameters_path=(
            _resolve_file(sens_section["parameters"], base_dir, "sensitivity parameters")
            if "parameters" in sens_section
            else None
        ),
        n_cycles=int(sens_section["n_cycles"]) if "n_cycles" in sens_section else None,
    )
    return RunConfig(
        config_path=config_path,
        state=state,
        tree_path=tree_path,
        parameter_paths=parameter_paths,
        scenario=scenario,
        out=Path(out) if out is not None else None,
        seed=int(args.seed if args.seed is not None else doc.get("seed", 0)),
        threads=_resolve_threads(args.threads, doc.get("threads")),
        calibration=_calibration_from_config(dict(doc.get("calibration", {})), base_dir),
        sensitivity=sensitivity,
    )


def _run_dir(cfg: RunConfig) -> Path:
    if cfg.out is None:
        raise ConfigError("an output directory is required (--out or config key 'out')")
    cfg.out.mkdir(parents=True, exist_ok=True)
    return cfg.out


def _base_summary(cfg: RunConfig, command: str, inputs: dict[str, str]) -> dict:
    # No thread count, timings, or host details: artifacts must be
    # byte-identical across thread counts and repeated seeded runs.
    return {
        "command": command,
        "state": cfg.state,
        "seed": cfg.seed,
        "inputs": inputs,
    }


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = load_run_config(args)
    out = _run_dir(cfg)
    params_path = cfg.parameters_for(cfg.state)
    with run_lock(out):
        inputs = copy_inputs(
            out, {"config": cfg.config_path, "tree": cfg.tree_path, "parameters": params_path}
        )
        tree = load_tree(cfg.tree_path)
        params = load_lpm_parameters(params_path, tree)
        hemo = simulate(params, dt=cfg.scenario.dt, n_cycles=cfg.scenario.n_cycles)
        metrics = compute_metrics(hemo)
        hemo.to_csv(out / "hemodynamics.csv")
        write_json(out / "metrics.json", metrics.to_dict())
        summary = _base_summary(cfg, "simulate", inputs)
        summary.update(
            {
                "dt_s": cfg.scenario.dt,
                "n_cycles": cfg.scenario.n_cycles,
                "metrics": metrics.to_dict(),
                "outputs": {"hemodynamics": "hemodynamics.csv", "metrics": "metrics.json"},
            }
        )
        write_json(out / "summary.json", summary)
    print(f"simulate({cfg.state}): Q_mean {metrics.Q_mean:.3f} L/min -> {out}")
    return 0


def cmd_angiogram(args: argparse.Namespace) -> int:
    cfg = load_run_config(args)
    out = _run_dir(cfg)
    params_path = cfg.parameters_for(cfg.state)
    with run_lock(out):
        inputs = copy_inputs(
            out, {"config": cfg.config_path, "tree": cfg.tree_path, "parameters": params_path}
        )
        tree = load_tree(cfg.tree_path)
        params = load_lpm_parameters(params_path, tree)
        result = run_angiogram(tree, params, cfg.scenario)
        frame_names, mask_names = write_frames(out, result.frames, cfg.scenario.render.I_thr)
        write_cip_csv(out / "cip.csv", result.cip)
        write_features_csv(out / "features.csv", result.features)
        result.hemo.to_csv(out / "hemodynamics.csv")
        write_json(out / "metrics.json", result.metrics.to_dict())
        summary = _base_summary(cfg, "angiogram", inputs)
        summary.update(
            {
                "n_frames": len(result.frames),
                "fps": cfg.scenario.render.fps,
                "injection_start_s": result.protocol.start_time,
                "injected_volume_ml": result.protocol.total_volume_ml,
                "q_terminal_L_per_min": result.q_terminal,
                "features": None if result.features is None else result.features.to_dict(),
                "outputs": {
                    "frames": frame_names,
                    "masks": mask_names,
                    "cip": "cip.csv",
                    "features": "features.csv",
                    "hemodynamics": "hemodynamics.csv",
                    "metrics": "metrics.json",
                },
            }
        )
        write_json(out / "summary.json", summary)
    print(f"angiogram({cfg.state}): {len(result.frames)} frames -> {out}")
    return 0


def _calibrate_stage1(cfg: RunConfig, out: Path, inputs: dict[str, str]) -> None:
    tree = load_tree(cfg.tree_path)
    de_cfg = DEConfig(
        population=cfg.calibration.population,
        max_generations=cfg.calibration.generations,
        seed=cfg.seed,
    )
    summary = _base_summary(cfg, "calibrate", inputs)
    summary["stage"] = 1
    states_out: dict[str, dict] = {}
    rest_x: np.ndarray | None = None
    for state in STATES:
        params = load_lpm_parameters(cfg.parameters_for(state), tree)
        targets = load_stage1_targets(state, cfg.calibration.targets_path)
        bounds = (
            load_rest_bounds(cfg.calibration.targets_path)
            if state == "rest"
            else hyperemia_bounds(rest_x)
        )
        result = calibrate_stage1(targets, bounds, params, de_cfg, workers=cfg.threads)
        if state == "rest":
            rest_x = result.x
        state_dir = out / state
        state_dir.mkdir(exist_ok=True)
        write_history_csv(state_dir / "history.csv", result.de.history)
        (state_dir / "params.yaml").write_text(dump_lpm_parameters(result.params))
        states_out[state] = {
            "final_loss": result.loss_fast,
            "verified_loss": result.loss,
            "generations": result.de.generations,
            "converged": result.de.converged,
            "metrics": result.metrics.to_dict(),
            "outputs": {
                "history": f"{state}/history.csv",
                "parameters": f"{state}/params.yaml",
            },
        }
        print(
            f"stage 1 ({state}): loss {result.loss_fast:.4f} "
            f"in {result.de.generations} generations"
        )
    summary["states"] = states_out
    write_json(out / "summary.json", summary)


def _calibrate_stage2(cfg: RunConfig, out: Path, inputs: dict[str, str]) -> None:
    cal = cfg.calibration
    missing = [s for s in STATES if s not in cal.clinical_cips]
    if missing:
        raise ConfigError(
            "stage 2 needs a clinical CIP per state under calibration.clinical_cips:, "
            f"missing {missing}"
        )
    for state in STATES:
        inputs.update(
            copy_inputs(out, {f"clinical_cip_{state}": cal.clinical_cips[state]})
        )
    tree = load_tree(cfg.tree_path)
    clinical = {state: read_cip_csv(cal.clinical_cips[state]) for state in STATES}
    settings = PretuneSettings(
        co_fraction=cal.co_fraction, left_fraction=cal.left_fraction
    )
    # Diastolic dominance is a resting-waveform criterion; under hyperemia
    # the systolic share grows physiologically, so only the flow-split phase
    # runs there.
    by_state = {
        "rest": settings,
        "hyperemia": replace(settings, dominance_left=0.0, dominance_right=0.0),
    }

    pretuned: dict[str, object] = {}
    for state in STATES:
        params = load_lpm_parameters(cfg.parameters_for(state), tree)
        series = simulate(params, dt=settings.dt, n_cycles=settings.n_cycles)
        co = lmin_to_mm3s(compute_metrics(series).Q_mean)
        flow_targets = murray_flow_targets(
            tree, settings.co_fraction * co, settings.left_fraction
        )
        pretuned[state] = pretune_coronary(params, tree, flow_targets, by_state[state]).params
        print(f"stage 2 ({state}): coronary outlets pre-tuned")

    overrides: dict = {}
    if cal.dx is not None:
        overrides["dx"] = cal.dx
    if cal.dt_tr is not None:
        overrides["dt_tr"] = cal.dt_tr
    scenarios = {state: load_scenario(state, **overrides) for state in STATES}
    evaluate = make_stage2_evaluator(tree, scenarios)
    stage2 = Stage2Config(
        clinical_rest=clinical["rest"],
        clinical_hyper=clinical["hyperemia"],
        CFR_hat=load_cfr_hat(cal.targets_path),
        levels=cal.levels,
        pretune=settings,
    )
    grid = grid_search(pretuned["rest"], pretuned["hyperemia"], stage2, evaluate)

    write_grid_csv(out / "grid.csv", grid.levels, grid.losses)
    for state, best in (("rest", grid.best_rest), ("hyperemia", grid.best_hyper)):
        state_dir = out / state
        state_dir.mkdir(exist_ok=True)
        (state_dir / "params.yaml").write_text(dump_lpm_parameters(best))
    summary = _base_summary(cfg, "calibrate", inputs)
    summary.update(
        {
            "stage": 2,
            "levels_pct": [100.0 * level for level in grid.levels],
            "best_label": grid.best_label,
            "best_index": list(grid.best_index),
            "best_loss": grid.best_loss,
            "cfr_at_best": float(grid.cfr[grid.best_index]),
            "outputs": {
                "grid": "grid.csv",
                "parameters_rest": "rest/params.yaml",
                "parameters_hyperemia": "hyperemia/params.yaml",
            },
        }
    )
    write_json(out / "summary.json", summary)
    print(f"stage 2: best cell {grid.best_label} (loss {grid.best_loss:.4f})")


def cmd_calibrate(args: argparse.Namespace) -> int:
    cfg = load_run_config(args)
    out = _run_dir(cfg)
    with run_lock(out):
        inputs = copy_inputs(
            out,
            {
                "config": cfg.config_path,
                "tree": cfg.tree_path,
                "targets": cfg.calibration.targets_path,
                **{
                    f"parameters_{state}": path
                    for state, path in cfg.parameter_paths.items()
                },
            },
        )
        if args.stage == 1:
            _calibrate_stage1(cfg, out, inputs)
        else:
            _calibrate_stage2(cfg, out, inputs)
    return 0


def cmd_sensitivity(args: argparse.Namespace) -> int:
    cfg = load_run_config(args)
    out = _run_dir(cfg)
    study_state, default_preset = STUDY_BASELINES[args.study]
    params_path = cfg.sensitivity.parameters_path or preset_path(default_preset)
    with run_lock(out):
        inputs = copy_inputs(
            out, {"config": cfg.config_path, "tree": cfg.tree_path, "parameters": params_path}
        )
        tree = load_tree(cfg.tree_path)
        baseline = load_lpm_parameters(params_path, tree)
        overrides: dict = {}
        if cfg.sensitivity.n_cycles is not None:
            overrides["n_cycles"] = cfg.sensitivity.n_cycles
        if args.dt is not None:
            overrides["dt"] = args.dt
        scenario = study_scenario(study_state, **overrides)
        if args.study == "individual":
            report = sensitivity_individual(tree, baseline, scenario)
        else:
            report = sensitivity_uniform(tree, baseline, scenario)
        rows = [run.row() for run in report.runs]
        if args.study == "uniform":
            ratios = report.auc_ratios()
            for run, row in zip(report.runs, rows):
                row["auc_ratio"] = ratios[run.factor]
        header = list(rows[0])
        for row in rows:
            if list(row) != header:
                raise ConfigError(
                    "sensitivity rows have inconsistent columns; widen the study window "
                    "so every run yields CIP features"
                )
        write_csv(out / "report.csv", header, ([row[k] for k in header] for row in rows))
        summary = _base_summary(cfg, "sensitivity", inputs)
        summary.update(
            {
                "study": args.study,
                "state": study_state,
                "n_runs": len(report.runs),
                "baseline_Q_left_L_per_min": report.baseline.Q_left,
                "outputs": {"report": "report.csv"},
            }
        )
        if args.study == "uniform":
            summary["auc_ratios"] = {f"{f:g}": r for f, r in report.auc_ratios().items()}
        write_json(out / "summary.json", summary)
    print(f"sensitivity({args.study}): {len(report.runs)} runs -> {out}")
    return 0


def cmd_features(args: argparse.Namespace) -> int:
    cip_path = Path(args.cip)
    cip = read_cip_csv(cip_path)
    features = extract_features(cip)
    if args.out is None:
        raise ConfigError("an output directory is required (--out)")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with run_lock(out):
        inputs = copy_inputs(out, {"cip": cip_path})
        write_features_csv(out / "features.csv", features)
        write_json(
            out / "summary.json",
            {
                "command": "features",
                "inputs": inputs,
                "features": None if features is None else features.to_dict(),
                "outputs": {"features": "features.csv"},
            },
        )
    status = "none (profile never reaches 0.9)" if features is None else "written"
    print(f"features: {status} -> {out}")
    return 0


# --------------------------------------------------------------------------
# Parser / entry point
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="angiosim",
        description="Reduced-order coronary angiography simulation and calibration.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run config: a YAML path or a shipped preset name")
    common.add_argument("--out", type=Path, help="run directory (overrides config 'out')")
    common.add_argument("--seed", type=int, help="RNG seed (overrides config 'seed')")
    common.add_argument(
        "--threads",
        type=int,
        help=f"worker threads (overrides {THREADS_ENV} and config 'threads')",
    )
    common.add_argument(
        "--dt", type=float, help="hemodynamic timestep [s]; must be <= 1e-3"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="closed-loop hemodynamics")
    p.set_defaults(func=cmd_simulate)
    p = sub.add_parser("angiogram", parents=[common], help="contrast injection + rendering")
    p.set_defaults(func=cmd_angiogram)
    p = sub.add_parser("calibrate", parents=[common], help="two-stage patient calibration")
    p.add_argument("--stage", type=int, choices=(1, 2), required=True)
    p.set_defaults(func=cmd_calibrate)
    p = sub.add_parser("sensitivity", parents=[common], help="coronary parameter studies")
    p.add_argument("--study", choices=("individual", "uniform"), required=True)
    p.set_defaults(func=cmd_sensitivity)
    p = sub.add_parser("features", parents=[common], help="CIP feature extraction")
    p.add_argument("--cip", required=True, help="two-column (time_s, value) CSV")
    p.set_defaults(func=cmd_features)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command != "features" and not args.config:
        print("error: --config is required", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except AngiosimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
