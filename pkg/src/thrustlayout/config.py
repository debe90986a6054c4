"""Run-configuration parsing: one strict JSON file per run.

Unknown keys are rejected with their field path; angles are written in degrees
and stored in radians. The resolved object bundles the placement problem, the
optimizer settings, the scenario suite and any explicit layouts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .optimizer import CodesignProblem, OptimizationConfig
from .payload import NAMED_SHAPES, PayloadSpec, payload_from_shape
from .simulate import CircleTrack, MassEvent, Scenario
from .synthesis import WeightConfig, default_input_weight, default_output_weight
from .vehicle import QuadSpec

_PAYLOAD_KEYS = {
    "shape", "vertices", "mass", "thickness", "inertia_zz", "side",
    "notch_width", "notch_depth", "name",
}
_QUAD_KEYS = {
    "frame_mass", "battery_mass", "motor_to_motor", "prop_diameter",
    "thrust_min", "thrust_max", "kappa",
}
_WEIGHT_KEYS = {"c", "bd", "bd_gain"}
_OPT_KEYS = {
    "n_restarts", "initial_simplex_scale_deg", "max_iters",
    "simplex_tol_deg", "cost_tol", "probe_budget",
}
_SCENARIO_KEYS = {
    "kind", "name", "duration", "dt", "control_rate", "seed",
    "noise_intensity", "wind_force", "step_offset", "mass_event", "circle",
}
_MASS_EVENT_KEYS = {"time", "mass", "attach_point", "mode"}
_CIRCLE_KEYS = {"diameter", "height", "speed"}
_LAYOUT_KEYS = {"name", "theta_deg"}
_CASE_KEYS = {"name", "payload", "quad", "n_quads", "rod_length", "min_separation", "weights"}
_TOP_KEYS = {
    "name", "seed", "output_dir", "n_quads", "rod_length", "min_separation",
    "payload", "quad", "weights", "optimization", "scenarios", "layouts", "sweep",
}


def _check_keys(data: dict, allowed: set, path: str) -> None:
    if not isinstance(data, dict):
        raise ConfigError(path, "expected an object")
    for key in data:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}" if path else key, "unknown key")


_REQUIRED = object()


def _number(data, key, path, default=_REQUIRED, minimum=None, maximum=None, integer=False):
    if key not in data:
        if default is _REQUIRED:
            raise ConfigError(f"{path}.{key}", "missing required value")
        return default
    value = data[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}.{key}", "expected a number")
    if integer and int(value) != value:
        raise ConfigError(f"{path}.{key}", "expected an integer")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{path}.{key}", f"must be >= {minimum}")
    if maximum is not None and value > maximum:
        raise ConfigError(f"{path}.{key}", f"must be <= {maximum}")
    return int(value) if integer else float(value)


def _vector(data, key, path, length, default=None):
    if key not in data:
        return default
    value = data[key]
    if not isinstance(value, list) or len(value) != length:
        raise ConfigError(f"{path}.{key}", f"expected a list of {length} numbers")
    for v in value:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{path}.{key}", "entries must be numbers")
    return tuple(float(v) for v in value)


def _parse_payload(data, path) -> PayloadSpec:
    _check_keys(data, _PAYLOAD_KEYS, path)
    kw = {"mass": _number(data, "mass", path, minimum=1e-9)}
    if "thickness" in data:
        kw["thickness"] = _number(data, "thickness", path, minimum=1e-9)
    if "inertia_zz" in data and data["inertia_zz"] is not None:
        kw["inertia_zz_override"] = _number(data, "inertia_zz", path, minimum=1e-12)
    if "name" in data:
        kw["name"] = str(data["name"])
    if "vertices" in data:
        if "shape" in data:
            raise ConfigError(path, "give either 'shape' or 'vertices', not both")
        verts = data["vertices"]
        if not isinstance(verts, list) or len(verts) < 3:
            raise ConfigError(f"{path}.vertices", "expected a list of >= 3 [x, y] pairs")
        arr = []
        for i, pt in enumerate(verts):
            if not isinstance(pt, list) or len(pt) != 2:
                raise ConfigError(f"{path}.vertices[{i}]", "expected an [x, y] pair")
            arr.append([float(pt[0]), float(pt[1])])
        try:
            return PayloadSpec(np.array(arr), **kw)
        except ValueError as exc:
            raise ConfigError(f"{path}.vertices", str(exc)) from exc
    shape = data.get("shape")
    if shape is None:
        raise ConfigError(path, "needs 'shape' or 'vertices'")
    if shape not in NAMED_SHAPES:
        raise ConfigError(f"{path}.shape", f"unknown shape; choose from {sorted(NAMED_SHAPES)}")
    if "side" in data:
        kw["side"] = _number(data, "side", path, minimum=1e-9)
    if shape == "concave_square":
        if "notch_width" in data:
            kw["notch_width"] = _number(data, "notch_width", path, minimum=1e-9)
        if "notch_depth" in data:
            kw["notch_depth"] = _number(data, "notch_depth", path, minimum=1e-9)
    elif "notch_width" in data or "notch_depth" in data:
        raise ConfigError(path, "notch parameters only apply to 'concave_square'")
    try:
        return payload_from_shape(shape, **kw)
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from exc


def _parse_quad(data, path) -> QuadSpec:
    _check_keys(data, _QUAD_KEYS, path)
    defaults = QuadSpec()
    kw = {}
    for key in _QUAD_KEYS:
        if key in data:
            kw[key] = _number(data, key, path, minimum=0.0)
    try:
        return QuadSpec(**{**{k: getattr(defaults, k) for k in _QUAD_KEYS}, **kw})
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from exc


def _parse_triplets(data, key, path, shape):
    entries = data.get(key)
    if entries is None:
        return None
    if not isinstance(entries, list):
        raise ConfigError(f"{path}.{key}", "expected a list of [row, col, value] triplets")
    out = []
    for i, entry in enumerate(entries):
        if not isinstance(entry, list) or len(entry) != 3:
            raise ConfigError(f"{path}.{key}[{i}]", "expected [row, col, value]")
        row, col, value = entry
        if not isinstance(row, int) or not isinstance(col, int):
            raise ConfigError(f"{path}.{key}[{i}]", "row/col must be integers")
        if not (0 <= row < shape[0] and 0 <= col < shape[1]):
            raise ConfigError(f"{path}.{key}[{i}]", f"index outside {shape}")
        out.append((row, col, float(value)))
    return out


def _parse_weights(data, path, n_quads) -> WeightConfig:
    _check_keys(data, _WEIGHT_KEYS, path)
    c = default_output_weight(n_quads)
    for row, col, value in _parse_triplets(data, "c", path, c.shape) or []:
        c[row, col] = value
    bd_gain = _vector(data, "bd_gain", path, 6)
    if bd_gain is not None and any(g <= 0.0 for g in bd_gain):
        raise ConfigError(f"{path}.bd_gain", "gains must be positive")
    bd_override = None
    bd_entries = _parse_triplets(data, "bd", path, (12, 6))
    if bd_entries is not None:
        bd_override = np.zeros((12, 6))
        for row, col, value in bd_entries:
            bd_override[row, col] = value
    try:
        return WeightConfig(
            c=c,
            d=default_input_weight(n_quads),
            bd_gain=bd_gain,
            bd_override=bd_override,
        )
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from exc


def _parse_optimization(data, path, seed) -> OptimizationConfig:
    _check_keys(data, _OPT_KEYS, path)
    kw = {"seed": seed}
    if "n_restarts" in data:
        kw["n_restarts"] = _number(data, "n_restarts", path, minimum=1, integer=True)
    if "max_iters" in data:
        kw["max_iters"] = _number(data, "max_iters", path, minimum=1, integer=True)
    if "probe_budget" in data:
        kw["probe_budget"] = _number(data, "probe_budget", path, minimum=1, integer=True)
    if "initial_simplex_scale_deg" in data:
        kw["initial_simplex_scale"] = np.deg2rad(
            _number(data, "initial_simplex_scale_deg", path, minimum=1e-6)
        )
    if "simplex_tol_deg" in data:
        kw["xatol"] = np.deg2rad(_number(data, "simplex_tol_deg", path, minimum=0.0))
    if "cost_tol" in data:
        kw["fatol"] = _number(data, "cost_tol", path, minimum=0.0)
    try:
        return OptimizationConfig(**kw)
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from exc


def _parse_scenario(data, path, index, default_seed) -> Scenario:
    _check_keys(data, _SCENARIO_KEYS, path)
    kind = data.get("kind")
    if kind is None:
        raise ConfigError(f"{path}.kind", "missing required value")
    kw = {
        "kind": kind,
        "seed": _number(data, "seed", path, default=default_seed + index, integer=True),
        "name": str(data.get("name", "")),
    }
    if "duration" in data:
        kw["duration"] = _number(data, "duration", path)
    if "dt" in data:
        kw["dt"] = _number(data, "dt", path)
    if "control_rate" in data:
        kw["control_rate"] = _number(data, "control_rate", path)
    for key, length in (("noise_intensity", 6), ("wind_force", 3), ("step_offset", 3)):
        vec = _vector(data, key, path, length)
        if vec is not None:
            kw[key] = vec
    if "mass_event" in data:
        me = data["mass_event"]
        _check_keys(me, _MASS_EVENT_KEYS, f"{path}.mass_event")
        mkw = {}
        if "time" in me:
            mkw["time"] = _number(me, "time", f"{path}.mass_event", minimum=0.0)
        if "mass" in me:
            mkw["mass"] = _number(me, "mass", f"{path}.mass_event", minimum=1e-9)
        if "attach_point" in me:
            mkw["attach_point"] = _vector(me, "attach_point", f"{path}.mass_event", 2)
        if "mode" in me:
            mkw["mode"] = str(me["mode"])
        try:
            kw["mass_event"] = MassEvent(**mkw)
        except ValueError as exc:
            raise ConfigError(f"{path}.mass_event", str(exc)) from exc
    if "circle" in data:
        ci = data["circle"]
        _check_keys(ci, _CIRCLE_KEYS, f"{path}.circle")
        ckw = {k: _number(ci, k, f"{path}.circle") for k in _CIRCLE_KEYS if k in ci}
        try:
            kw["circle"] = CircleTrack(**ckw)
        except ValueError as exc:
            raise ConfigError(f"{path}.circle", str(exc)) from exc
    try:
        return Scenario(**kw)
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from exc


@dataclass
class RunConfig:
    """Everything one command needs, resolved and validated."""

    name: str
    seed: int
    output_dir: str | None
    problem: CodesignProblem
    optimization: OptimizationConfig
    scenarios: list[Scenario] = field(default_factory=list)
    layouts: list[tuple[str, np.ndarray]] = field(default_factory=list)
    sweep_cases: list[tuple[str, CodesignProblem]] = field(default_factory=list)


def _build_problem(data, path, fallback=None) -> CodesignProblem:
    n_quads = _number(
        data, "n_quads", path,
        default=None if fallback is None else fallback.n_quads,
        integer=True,
    )
    if n_quads is None:
        raise ConfigError(f"{path}.n_quads" if path else "n_quads", "missing required value")
    if n_quads < 1:
        raise ConfigError(f"{path}.n_quads" if path else "n_quads", "N must be >= 1")
    if "payload" in data:
        payload = _parse_payload(data["payload"], f"{path}.payload" if path else "payload")
    elif fallback is not None:
        payload = fallback.payload
    else:
        raise ConfigError("payload", "missing required section")
    if "quad" in data:
        quad = _parse_quad(data["quad"], f"{path}.quad" if path else "quad")
    elif fallback is not None:
        quad = fallback.quad
    else:
        quad = QuadSpec()
    rod = _number(
        data, "rod_length", path, minimum=0.0,
        default=0.10 if fallback is None else fallback.rod_length,
    )
    sep = _number(
        data, "min_separation", path, minimum=0.0,
        default=-1.0 if fallback is None else fallback.min_separation,
    )
    weights = None
    if "weights" in data:
        weights = _parse_weights(
            data["weights"], f"{path}.weights" if path else "weights", n_quads
        )
    elif fallback is not None and fallback.n_quads == n_quads:
        weights = fallback.weights
    return CodesignProblem(
        payload=payload,
        quad=quad,
        n_quads=n_quads,
        rod_length=rod,
        min_separation=None if sep == -1.0 else sep,
        weights=weights,
    )


def parse_config(path: str) -> RunConfig:
    """Load and validate a run configuration; ConfigError carries field context."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError("", f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    _check_keys(data, _TOP_KEYS, "")

    seed = _number(data, "seed", "", default=0, integer=True)
    name = str(data.get("name", "run"))
    output_dir = data.get("output_dir")
    if output_dir is not None and not isinstance(output_dir, str):
        raise ConfigError("output_dir", "expected a string path")

    problem = _build_problem(data, "")
    optimization = _parse_optimization(data.get("optimization", {}), "optimization", seed)

    scenarios = []
    names = set()
    for i, entry in enumerate(data.get("scenarios", [])):
        scenario = _parse_scenario(entry, f"scenarios[{i}]", i, seed)
        if scenario.name in names:
            raise ConfigError(f"scenarios[{i}].name", f"duplicate name {scenario.name!r}")
        names.add(scenario.name)
        scenarios.append(scenario)

    layouts = []
    for i, entry in enumerate(data.get("layouts", [])):
        lpath = f"layouts[{i}]"
        _check_keys(entry, _LAYOUT_KEYS, lpath)
        lname = str(entry.get("name", f"layout{i}"))
        theta = entry.get("theta_deg")
        if not isinstance(theta, list) or len(theta) != problem.n_quads:
            raise ConfigError(
                f"{lpath}.theta_deg", f"expected {problem.n_quads} angles in degrees"
            )
        layouts.append((lname, np.deg2rad(np.array(theta, dtype=float))))
    if len({lname for lname, _ in layouts}) != len(layouts):
        raise ConfigError("layouts", "duplicate layout names")

    sweep_cases = []
    if "sweep" in data:
        if not isinstance(data["sweep"], list) or not data["sweep"]:
            raise ConfigError("sweep", "expected a non-empty list of cases")
        for i, case in enumerate(data["sweep"]):
            cpath = f"sweep[{i}]"
            _check_keys(case, _CASE_KEYS, cpath)
            cname = case.get("name")
            if not isinstance(cname, str) or not cname:
                raise ConfigError(f"{cpath}.name", "missing case name")
            sweep_cases.append((cname, _build_problem(case, cpath, fallback=problem)))
        dupes = len(sweep_cases) != len({n for n, _ in sweep_cases})
        if dupes:
            raise ConfigError("sweep", "duplicate case names collide")

    return RunConfig(
        name=name,
        seed=seed,
        output_dir=output_dir,
        problem=problem,
        optimization=optimization,
        scenarios=scenarios,
        layouts=layouts,
        sweep_cases=sweep_cases,
    )
