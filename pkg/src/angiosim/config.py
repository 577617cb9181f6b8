"""Run configuration: YAML schemas, shipped presets, and state defaults.

A run config describes one simulated state (rest or hyperemia): the vessel
tree, the lumped-parameter values, the injection protocol, the view used
for rendering, and numerical settings.  Defaults that depend on the state
(cardiac period, frame rate) are applied here so every downstream module
sees fully resolved values.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

import yaml

from .errors import ConfigError
from .lpm import (
    ALPHA_BY_SIDE,
    AortaParams,
    CoronaryParams,
    ElastanceParams,
    HeartParams,
    LpmParameterSet,
    build_parameter_set,
)
from .tree import FluidProperties, VesselTree


def preset_path(name: str) -> Path:
    """Filesystem path of a shipped preset file (configs, parameter tables)."""
    path = Path(str(resources.files("angiosim").joinpath("presets", name)))
    if not path.is_file():
        raise ConfigError(f"no shipped preset named {name!r}")
    return path


def read_config_text(source: str | Path) -> dict:
    """Read a YAML mapping from a path or inline text, with parse context."""
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source and Path(source).is_file()):
        text = Path(source).read_text()
    else:
        text = str(source)
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}" if mark is not None else ""
        raise ConfigError(f"config is not valid YAML{where}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config must be a YAML mapping, got {type(doc).__name__}")
    return doc


def _section(doc: dict, name: str, required: tuple[str, ...], optional: tuple[str, ...] = ()) -> dict:
    if name not in doc or not isinstance(doc[name], dict):
        raise ConfigError(f"parameter file needs a {name!r} mapping section")
    sec = doc[name]
    missing = [key for key in required if key not in sec]
    if missing:
        raise ConfigError(f"section {name!r} is missing keys: {missing}")
    unknown = [key for key in sec if key not in required + optional]
    if unknown:
        raise ConfigError(f"section {name!r} has unknown keys: {unknown}")
    return sec


_CORONARY_KEYS = ("R_a", "R_ap", "R_ad", "C_a", "C_im")


def load_lpm_parameters(
    source: str | Path,
    tree: VesselTree,
    fluid: FluidProperties | None = None,
) -> LpmParameterSet:
    """Parse a lumped-parameter file and bind it to a vessel tree.

    Keys mirror the model symbols (heart.elastance.E_max, aorta.C_s,
    coronary.<terminal>.R_a, ...).  Coronary ``alpha`` defaults by tree
    side (0.5 left / 0.25 right) when omitted.
    """
    doc = read_config_text(source)
    unknown = [key for key in doc if key not in ("heart", "aorta", "coronary")]
    if unknown:
        raise ConfigError(f"parameter file has unknown sections: {unknown}")

    heart_sec = _section(doc, "heart", ("elastance", "R_MV", "L_MV", "R_AV", "L_AV", "P_LA"), ("V_0",))
    if not isinstance(heart_sec["elastance"], dict):
        raise ConfigError("heart.elastance must be a mapping")
    el = heart_sec["elastance"]
    el_missing = [key for key in ("E_max", "E_min", "t_max", "t_r", "T") if key not in el]
    if el_missing:
        raise ConfigError(f"heart.elastance is missing keys: {el_missing}")
    try:
        elastance = ElastanceParams(
            E_max=float(el["E_max"]),
            E_min=float(el["E_min"]),
            t_max=float(el["t_max"]),
            t_r=float(el["t_r"]),
            T=float(el["T"]),
        )
        heart = HeartParams(
            elastance=elastance,
            R_MV=float(heart_sec["R_MV"]),
            L_MV=float(heart_sec["L_MV"]),
            R_AV=float(heart_sec["R_AV"]),
            L_AV=float(heart_sec["L_AV"]),
            P_LA=float(heart_sec["P_LA"]),
            V_0=float(heart_sec.get("V_0", 10_000.0)),
        )
        aorta_sec = _section(doc, "aorta", ("C_s", "R_sp", "R_sd"))
        aorta = AortaParams(C_s=float(aorta_sec["C_s"]), R_sp=float(aorta_sec["R_sp"]), R_sd=float(aorta_sec["R_sd"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"non-numeric parameter value: {exc}") from exc

    if "coronary" not in doc or not isinstance(doc["coronary"], dict):
        raise ConfigError("parameter file needs a 'coronary' mapping section")
    coronary: dict[str, CoronaryParams] = {}
    for tid, entry in doc["coronary"].items():
        if not isinstance(entry, dict):
            raise ConfigError(f"coronary.{tid} must be a mapping of parameter values")
        missing = [key for key in _CORONARY_KEYS if key not in entry]
        if missing:
            raise ConfigError(f"coronary.{tid} is missing keys: {missing}")
        unknown = [key for key in entry if key not in _CORONARY_KEYS + ("alpha",)]
        if unknown:
            raise ConfigError(f"coronary.{tid} has unknown keys: {unknown}")
        if tid not in tree:
            raise ConfigError(f"coronary.{tid} does not name a segment of the tree")
        alpha = entry.get("alpha", ALPHA_BY_SIDE[tree[tid].side])
        try:
            coronary[tid] = CoronaryParams(
                R_a=float(entry["R_a"]),
                R_ap=float(entry["R_ap"]),
                R_ad=float(entry["R_ad"]),
                C_a=float(entry["C_a"]),
                C_im=float(entry["C_im"]),
                alpha=float(alpha),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"coronary.{tid}: non-numeric value: {exc}") from exc
    return build_parameter_set(tree, heart, aorta, coronary, fluid)


def dump_lpm_parameters(params: LpmParameterSet) -> str:
    """Emit a parameter file that load_lpm_parameters reads back identically.

    Values pass through float() so numpy scalars (e.g. from an optimizer's
    design vector) serialize as plain YAML numbers.
    """
    e = params.heart.elastance
    doc = {
        "heart": {
            "elastance": {"E_max": e.E_max, "E_min": e.E_min, "t_max": e.t_max, "t_r": e.t_r, "T": e.T},
            "R_MV": params.heart.R_MV,
            "L_MV": params.heart.L_MV,
            "R_AV": params.heart.R_AV,
            "L_AV": params.heart.L_AV,
            "P_LA": params.heart.P_LA,
            "V_0": params.heart.V_0,
        },
        "aorta": {"C_s": params.aorta.C_s, "R_sp": params.aorta.R_sp, "R_sd": params.aorta.R_sd},
        "coronary": {
            tid: {"R_a": c.R_a, "R_ap": c.R_ap, "R_ad": c.R_ad, "C_a": c.C_a, "C_im": c.C_im, "alpha": c.alpha}
            for tid, c in params.coronary.items()
        },
    }

    def as_floats(node):
        if isinstance(node, dict):
            return {key: as_floats(value) for key, value in node.items()}
        return float(node)

    return yaml.safe_dump(as_floats(doc), sort_keys=False)
