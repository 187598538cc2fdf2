"""Run configuration files.

A run is described by one YAML document::

    params:      masses, inertias (3 principal moments or a 3x3 matrix),
                 wing COM offsets hbar_L / hbar_R, g, rho
    initial:     r_I, attitude, wing_L, wing_R, v, w_B, w_L, w_R, t
    gait:        amplitude, frequency, phase_L, phase_R, axis_L, axis_R
    forces:      provider (zero | linear_damping), c_lin, c_rot
    integrator:  dt, method (MK4 | RK4Project), record_every
    duration:    seconds
    output:      dir, csv, summary, figures

Attitudes are mappings with either ``axis_angle: [x, y, z]`` (preferred) or
``matrix: [[...], [...], [...]]``. A matrix that is not a rotation is
replaced by its nearest rotation, with a warning if that moves it by more
than 1e-6. Everything is SI.

:class:`RunConfig` keeps the document form with defaults filled in, so
``parse(serialize(c)) == c`` holds exactly. Domain objects are built on
demand and validated once at load time.
"""

from __future__ import annotations

import copy
import re
import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .dynamics import GaitSpec, ReducedState, builtin_force_providers
from .errors import ConfigError
from .integrator import IntegratorConfig, Method
from .model import InertialParams, ShapeConfig, VelocityZ
from .so3 import exp_so3, is_rotation, project_so3

PROJECTION_WARN = 1e-6

_REQUIRED = object()

_SCHEMA = {
    "params": {
        "m_B": _REQUIRED,
        "m_WL": _REQUIRED,
        "m_WR": _REQUIRED,
        "I_B": _REQUIRED,
        "I_WL": _REQUIRED,
        "I_WR": _REQUIRED,
        "hbar_L": [0.0, 0.0, 0.0],
        "hbar_R": [0.0, 0.0, 0.0],
        "g": 9.81,
        "rho": 1000.0,
    },
    "initial": {
        "r_I": [0.0, 0.0, 0.0],
        "attitude": {"axis_angle": [0.0, 0.0, 0.0]},
        "wing_L": {"axis_angle": [0.0, 0.0, 0.0]},
        "wing_R": {"axis_angle": [0.0, 0.0, 0.0]},
        "v": [0.0, 0.0, 0.0],
        "w_B": [0.0, 0.0, 0.0],
        "w_L": [0.0, 0.0, 0.0],
        "w_R": [0.0, 0.0, 0.0],
        "t": 0.0,
    },
    "gait": {
        "amplitude": 0.0,
        "frequency": 1.0,
        "phase_L": 0.0,
        "phase_R": 0.0,
        "axis_L": [1.0, 0.0, 0.0],
        "axis_R": [1.0, 0.0, 0.0],
    },
    "forces": {"provider": "zero", "c_lin": 0.0, "c_rot": 0.0},
    "integrator": {"dt": 1e-4, "method": "MK4", "record_every": 1},
    "duration": 1.0,
    "output": {"dir": "out", "csv": "trajectory.csv", "summary": "summary.json", "figures": True},
}

_VECTORS = {"hbar_L", "hbar_R", "r_I", "v", "w_B", "w_L", "w_R", "axis_L", "axis_R"}
_INERTIAS = {"I_B", "I_WL", "I_WR"}
_ATTITUDES = {"attitude", "wing_L", "wing_R"}
_STRINGS = {"provider", "method", "dir", "csv", "summary"}


def _line_map(text):
    """Dotted key path -> 1-based line number of the key."""
    lines = {}
    try:
        root = yaml.compose(text)
    except yaml.YAMLError:
        return lines

    def walk(node, prefix):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                path = f"{prefix}.{k.value}" if prefix else str(k.value)
                lines[path] = k.start_mark.line + 1
                walk(v, path)

    if root is not None:
        walk(root, "")
    return lines


class _Normalizer:
    def __init__(self, lines):
        self.lines = lines

    def fail(self, path, message):
        # fall back to the closest enclosing key that has a known line
        probe = path
        while probe and probe not in self.lines:
            probe = probe.rpartition(".")[0]
        raise ConfigError(message, path, self.lines.get(probe))

    def number(self, path, x):
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            self.fail(path, f"expected a number, got {x!r}")
        return float(x)

    def vector(self, path, x, n=3):
        if not isinstance(x, (list, tuple)) or len(x) != n:
            self.fail(path, f"expected a list of {n} numbers, got {x!r}")
        return [self.number(f"{path}[{i}]", v) for i, v in enumerate(x)]

    def matrix(self, path, x):
        if not isinstance(x, (list, tuple)) or len(x) != 3:
            self.fail(path, f"expected 3 rows of 3 numbers, got {x!r}")
        return [self.vector(f"{path}[{i}]", row) for i, row in enumerate(x)]

    def inertia(self, path, x):
        if isinstance(x, (list, tuple)) and x and isinstance(x[0], (list, tuple)):
            return self.matrix(path, x)
        return self.vector(path, x)

    def attitude(self, path, x):
        if not isinstance(x, dict) or len(x) != 1 or next(iter(x)) not in ("axis_angle", "matrix"):
            self.fail(path, "expected a mapping with exactly one of 'axis_angle' or 'matrix'")
        if "axis_angle" in x:
            return {"axis_angle": self.vector(f"{path}.axis_angle", x["axis_angle"])}
        M = np.array(self.matrix(f"{path}.matrix", x["matrix"]))
        if is_rotation(M, 1e-12):
            return {"matrix": M.tolist()}
        try:
            R = project_so3(M)
        except ValueError as exc:
            self.fail(f"{path}.matrix", str(exc))
        dist = float(np.linalg.norm(R - M))
        if dist > PROJECTION_WARN:
            warnings.warn(f"{path}.matrix is not a rotation; projected (distance {dist:.3g})", stacklevel=4)
        return {"matrix": R.tolist()}

    def value(self, path, key, x, default):
        if key in _VECTORS:
            return self.vector(path, x)
        if key in _INERTIAS:
            return self.inertia(path, x)
        if key in _ATTITUDES:
            return self.attitude(path, x)
        if key in _STRINGS:
            if not isinstance(x, str):
                self.fail(path, f"expected a string, got {x!r}")
            return x
        if key == "record_every":
            if isinstance(x, bool) or not isinstance(x, int) or x < 1:
                self.fail(path, f"expected a positive integer, got {x!r}")
            return x
        if key == "figures":
            if not isinstance(x, bool):
                self.fail(path, f"expected true or false, got {x!r}")
            return x
        return self.number(path, x)

    def section(self, name, data, schema):
        if data is None:
            data = {}
        if not isinstance(data, dict):
            self.fail(name, "expected a mapping")
        for key in data:
            if key not in schema:
                self.fail(f"{name}.{key}", "unknown key")
        out = {}
        for key, default in schema.items():
            path = f"{name}.{key}"
            if key in data:
                out[key] = self.value(path, key, data[key], default)
            elif default is _REQUIRED:
                self.fail(path, "missing required value")
            else:
                out[key] = copy.deepcopy(default)
        return out


def _attitude_matrix(spec):
    if "axis_angle" in spec:
        return exp_so3(spec["axis_angle"])
    return np.array(spec["matrix"])


@dataclass
class RunConfig:
    """One simulation run in document form (plain lists and floats)."""

    params: dict
    initial: dict
    gait: dict
    forces: dict
    integrator: dict
    duration: float
    output: dict
    source: str | None = None

    def __eq__(self, other):
        if not isinstance(other, RunConfig):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    # --- construction ---------------------------------------------------

    @classmethod
    def from_dict(cls, data, lines=None, source=None):
        norm = _Normalizer(lines or {})
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError("top level must be a mapping")
        for key in data:
            if key not in _SCHEMA:
                norm.fail(key, "unknown section")
        sections = {}
        for name, schema in _SCHEMA.items():
            if isinstance(schema, dict):
                sections[name] = norm.section(name, data.get(name), schema)
            else:
                sections[name] = norm.number(name, data.get(name, schema))
        cfg = cls(**sections, source=source)
        cfg._validate(norm)
        return cfg

    def _validate(self, norm):
        checks = (
            ("params", self.inertial_params),
            ("gait", self.gait_spec),
            ("forces", self.force_provider),
            ("integrator", self.integrator_config),
            ("initial", self.initial_state),
        )
        for section, build in checks:
            try:
                build()
            except ConfigError:
                raise
            except (ValueError, KeyError) as exc:
                msg = str(exc).strip("'\"")
                norm.fail(self._blame(section, msg), msg)
        if not self.duration >= 0.0:
            norm.fail("duration", f"must be non-negative, got {self.duration}")

    def _blame(self, section, message):
        """Best guess at which key of ``section`` an error message is about."""
        keys = sorted(getattr(self, section), key=len, reverse=True)
        for key in keys:
            if re.search(rf"\b{re.escape(key)}\b", message):
                return f"{section}.{key}"
        return section

    # --- domain objects -------------------------------------------------

    def inertial_params(self):
        return InertialParams(**self.params)

    def initial_state(self):
        i = self.initial
        shape = ShapeConfig(_attitude_matrix(i["wing_L"]), _attitude_matrix(i["wing_R"]))
        z = VelocityZ(i["v"], i["w_B"], i["w_L"], i["w_R"])
        return ReducedState.from_inertial(_attitude_matrix(i["attitude"]), i["r_I"], shape, z, i["t"])

    def gait_spec(self):
        return GaitSpec(**self.gait)

    def force_provider(self):
        name = self.forces["provider"]
        providers = builtin_force_providers()
        if name not in providers:
            raise ValueError(f"provider must be one of {sorted(providers)}, got {name!r}")
        if name == "zero":
            return providers[name]()
        return providers[name](self.forces["c_lin"], self.forces["c_rot"])

    def integrator_config(self):
        i = self.integrator
        try:
            method = Method(i["method"])
        except ValueError:
            raise ValueError(f"method must be one of {[m.value for m in Method]}, got {i['method']!r}") from None
        return IntegratorConfig(dt=i["dt"], method=method, record_every=i["record_every"])

    # --- output ---------------------------------------------------------

    def output_dir(self):
        return Path(self.output["dir"])

    def csv_path(self):
        return self.output_dir() / self.output["csv"]

    def summary_path(self):
        return self.output_dir() / self.output["summary"]

    # --- serialization --------------------------------------------------

    def to_dict(self):
        return {
            "params": copy.deepcopy(self.params),
            "initial": copy.deepcopy(self.initial),
            "gait": copy.deepcopy(self.gait),
            "forces": copy.deepcopy(self.forces),
            "integrator": copy.deepcopy(self.integrator),
            "duration": self.duration,
            "output": copy.deepcopy(self.output),
        }

    def with_overrides(self, dt=None, duration=None, out=None, figures=None):
        data = self.to_dict()
        if dt is not None:
            data["integrator"]["dt"] = float(dt)
        if duration is not None:
            data["duration"] = float(duration)
        if out is not None:
            data["output"]["dir"] = str(out)
        if figures is not None:
            data["output"]["figures"] = bool(figures)
        return RunConfig.from_dict(data, source=self.source)


def parse(text, source=None):
    """Parse YAML text into a validated :class:`RunConfig`."""
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigError(f"invalid YAML: {problem}", line=line) from None
    return RunConfig.from_dict(data, _line_map(text), source)


def serialize(cfg):
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False, default_flow_style=None)


def load(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from None
    return parse(text, source=str(path))


def builtin_configs():
    """Names of the configs shipped with the package."""
    root = resources.files("fwmav") / "configs"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def load_builtin(name="hover"):
    root = resources.files("fwmav") / "configs"
    f = root / f"{name}.yaml"
    if not f.is_file():
        raise ConfigError(f"no built-in config {name!r} (have {builtin_configs()})")
    return parse(f.read_text(), source=f"builtin:{name}")
