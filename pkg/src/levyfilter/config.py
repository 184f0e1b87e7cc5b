"""Scenario configuration: YAML files with nested sections and strict validation.

A config is merged onto :data:`DEFAULTS`; unknown keys are rejected with
their dotted path, every numeric constraint is checked before any compute,
and the fully resolved mapping (defaults included) is what gets echoed into
the run manifest.
"""
import copy
from importlib import resources
import math
import re

import yaml

from .filter_cd import DEFAULT_OBS_SPACING
from .fokker_planck import DEFAULT_GAUSSIAN_SIGMA, DEFAULT_STORE_STRIDE
from .orbit import DEFAULT_DEADBAND, DEFAULT_WELLS

DRIFTS = ("double_well", "zero", "polynomial")
SENSORS = ("identity", "polynomial")
INIT_KINDS = ("gaussian", "uniform", "point_mass")
MODES = ("discrete", "continuous", "none")

DEFAULTS = {
    "name": "scenario",
    "seed": 0,
    "model": {
        "drift": "double_well",
        "drift_scale": 4.0,
        "drift_coeffs": None,
        "alpha": 1.5,
        "epsilon": 1.0,
        "x0": -1.0,
    },
    "grid": {"x_min": -2.5, "x_max": 2.5, "dx": 0.05},
    "time": {"dt": 1e-3, "T": 10.0},
    "init": {
        "kind": "gaussian",
        "center": -1.0,
        "sigma": DEFAULT_GAUSSIAN_SIGMA,
        "a": None,
        "b": None,
        "x0": None,
    },
    "observation": {
        "mode": "none",
        "h": "identity",
        "h_coeffs": None,
        "R": 0.1,
        "spacing": DEFAULT_OBS_SPACING,
        "noise_scale": 1.0,
        "dt_obs": None,
    },
    "solver": {
        "drift_scheme": "hybrid",
        "inner_rule": "zeta",
        "store_stride": DEFAULT_STORE_STRIDE,
        "renormalize_every": 1,
        "whiten": True,
        "backend": None,
    },
    "analysis": {
        "wells": list(DEFAULT_WELLS),
        "deadband": DEFAULT_DEADBAND,
        "min_dwell": 0.0,
        "burn_in": 0.5,
        "lag_tol": 0.5,
    },
    "oracle": {
        "engine": "pde",
        "particles": 10000,
        "ensemble": 100000,
        "record_times": None,
    },
    "output": {"dir": None},
}


class ConfigError(ValueError):
    """Invalid scenario configuration; ``path`` is the dotted key."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


_SQRT = re.compile(r"^\s*sqrt\(\s*([0-9.eE+-]+)\s*\)\s*$")


def _number(value, path):
    """Float from a number or a 'sqrt(x)' string."""
    if isinstance(value, bool):
        raise ConfigError(path, "expected a number, got a boolean")
    if isinstance(value, str):
        m = _SQRT.match(value)
        if not m:
            raise ConfigError(path, f"cannot parse {value!r} as a number")
        return math.sqrt(float(m.group(1)))
    if not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {type(value).__name__}")
    return float(value)


def _merge(base, user, path=""):
    out = copy.deepcopy(base)
    for key, value in user.items():
        where = f"{path}.{key}" if path else str(key)
        if key not in base:
            raise ConfigError(where, "unknown key")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(where, "expected a section")
            out[key] = _merge(base[key], value, where)
        else:
            out[key] = value
    return out


def _positive(cfg, path):
    section, key = path.split(".")
    v = _number(cfg[section][key], path)
    if not v > 0:
        raise ConfigError(path, f"must be positive, got {v}")
    cfg[section][key] = v
    return v


def _choice(value, options, path):
    if value not in options:
        raise ConfigError(path, f"must be one of {', '.join(options)}, got {value!r}")


def _coeffs(value, path):
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigError(path, "expected a non-empty list of coefficients")
    return [_number(c, f"{path}[{i}]") for i, c in enumerate(value)]


def validate(cfg):
    """Check and normalize a merged config in place; returns it."""
    if not isinstance(cfg["seed"], int) or isinstance(cfg["seed"], bool) or cfg["seed"] < 0:
        raise ConfigError("seed", "must be a non-negative integer")
    if not isinstance(cfg["name"], str) or not cfg["name"]:
        raise ConfigError("name", "must be a non-empty string")

    model = cfg["model"]
    _choice(model["drift"], DRIFTS, "model.drift")
    if model["drift"] == "polynomial":
        model["drift_coeffs"] = _coeffs(model["drift_coeffs"], "model.drift_coeffs")
    model["drift_scale"] = _number(model["drift_scale"], "model.drift_scale")
    alpha = _number(model["alpha"], "model.alpha")
    if not 0.0 < alpha < 2.0:
        raise ConfigError("model.alpha", f"must lie in (0, 2), got {alpha}")
    model["alpha"] = alpha
    _positive(cfg, "model.epsilon")
    model["x0"] = _number(model["x0"], "model.x0")

    g = cfg["grid"]
    g["x_min"] = _number(g["x_min"], "grid.x_min")
    g["x_max"] = _number(g["x_max"], "grid.x_max")
    if not g["x_max"] > g["x_min"]:
        raise ConfigError("grid.x_max", "must exceed grid.x_min")
    dx = _positive(cfg, "grid.dx")
    cells = (g["x_max"] - g["x_min"]) / dx
    if abs(cells - round(cells)) > 1e-6 * max(1.0, cells) or round(cells) < 2:
        raise ConfigError("grid.dx", "must divide x_max - x_min into at least two cells")

    dt = _positive(cfg, "time.dt")
    T = _positive(cfg, "time.T")
    if T < dt:
        raise ConfigError("time.T", "must be at least one step dt")

    init = cfg["init"]
    _choice(init["kind"], INIT_KINDS, "init.kind")
    if init["kind"] == "gaussian":
        init["center"] = _number(init["center"], "init.center")
        _positive(cfg, "init.sigma")
    elif init["kind"] == "uniform":
        a = _number(init["a"], "init.a") if init["a"] is not None else None
        b = _number(init["b"], "init.b") if init["b"] is not None else None
        if a is None or b is None:
            raise ConfigError("init.a", "uniform init needs both a and b")
        if not b > a:
            raise ConfigError("init.b", "must exceed init.a")
        if b < g["x_min"] or a > g["x_max"]:
            raise ConfigError("init.a", "uniform support does not meet the grid")
        init["a"], init["b"] = a, b
    else:
        if init["x0"] is None:
            raise ConfigError("init.x0", "point_mass init needs x0")
        init["x0"] = _number(init["x0"], "init.x0")
        if not g["x_min"] <= init["x0"] <= g["x_max"]:
            raise ConfigError("init.x0", "must lie on the grid")

    obs = cfg["observation"]
    _choice(obs["mode"], MODES, "observation.mode")
    _choice(obs["h"], SENSORS, "observation.h")
    if obs["h"] == "polynomial":
        obs["h_coeffs"] = _coeffs(obs["h_coeffs"], "observation.h_coeffs")
    _positive(cfg, "observation.R")
    spacing = _positive(cfg, "observation.spacing")
    _positive(cfg, "observation.noise_scale")
    if obs["dt_obs"] is None:
        obs["dt_obs"] = dt
    dt_obs = _positive(cfg, "observation.dt_obs")
    for key, step in (("spacing", spacing), ("dt_obs", dt_obs)):
        ratio = step / dt
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio) or round(ratio) < 1:
            raise ConfigError(f"observation.{key}", "must be a whole multiple of time.dt")

    sol = cfg["solver"]
    _choice(sol["drift_scheme"], ("central", "upwind", "hybrid"), "solver.drift_scheme")
    _choice(sol["inner_rule"], ("zeta", "taylor"), "solver.inner_rule")
    for key in ("store_stride", "renormalize_every"):
        v = sol[key]
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            raise ConfigError(f"solver.{key}", "must be a positive integer")
    if not isinstance(sol["whiten"], bool):
        raise ConfigError("solver.whiten", "must be true or false")
    if sol["backend"] is not None:
        _choice(sol["backend"], ("cython", "python"), "solver.backend")

    an = cfg["analysis"]
    wells = an["wells"]
    if not isinstance(wells, (list, tuple)) or len(wells) < 2:
        raise ConfigError("analysis.wells", "expected at least two well centers")
    an["wells"] = sorted(_number(w, f"analysis.wells[{i}]") for i, w in enumerate(wells))
    _positive(cfg, "analysis.deadband")
    if not an["deadband"] < 0.5 * min(b - a for a, b in zip(an["wells"], an["wells"][1:])):
        raise ConfigError("analysis.deadband", "must be smaller than half the well separation")
    for key in ("min_dwell", "burn_in"):
        an[key] = _number(an[key], f"analysis.{key}")
        if an[key] < 0:
            raise ConfigError(f"analysis.{key}", "must be non-negative")
    _positive(cfg, "analysis.lag_tol")

    orc = cfg["oracle"]
    _choice(orc["engine"], ("pde", "particles"), "oracle.engine")
    for key, low in (("particles", 100), ("ensemble", 1)):
        v = orc[key]
        if not isinstance(v, int) or isinstance(v, bool) or v < low:
            raise ConfigError(f"oracle.{key}", f"must be an integer >= {low}")
    if orc["record_times"] is not None:
        orc["record_times"] = [_number(t, f"oracle.record_times[{i}]")
                               for i, t in enumerate(orc["record_times"])]
    if cfg["output"]["dir"] is not None and not isinstance(cfg["output"]["dir"], str):
        raise ConfigError("output.dir", "must be a string")
    return cfg


def resolve(user):
    """Merge a user mapping onto the defaults and validate it."""
    if user is None:
        user = {}
    if not isinstance(user, dict):
        raise ConfigError("<root>", "config must be a mapping")
    return validate(_merge(DEFAULTS, user))


def load_config(path):
    with open(path) as fh:
        try:
            data = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError("<root>", f"YAML parse error: {exc}") from None
    return resolve(data)


def preset_names():
    files = resources.files("levyfilter").joinpath("presets").iterdir()
    return sorted(f.name[:-5] for f in files if f.name.endswith(".yaml"))


def preset_text(name):
    path = resources.files("levyfilter").joinpath("presets", f"{name}.yaml")
    if not path.is_file():
        raise ConfigError("preset", f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return path.read_text()


def load_preset(name):
    return resolve(yaml.safe_load(preset_text(name)))


def override(cfg, **kw):
    """Apply dotted-key overrides (``{"time.T": 2.0}``) and revalidate."""
    user = copy.deepcopy(cfg)
    for key, value in kw.items():
        node = user
        *parents, leaf = key.split(".")
        for p in parents:
            if p not in node or not isinstance(node[p], dict):
                raise ConfigError(key, "unknown key")
            node = node[p]
        if leaf not in node:
            raise ConfigError(key, "unknown key")
        node[leaf] = value
    return resolve(user)
