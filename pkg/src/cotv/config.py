"""Scenario configuration: strict schema, canonical echo, object builders.

Configs are JSON documents with explicit keys.  Unknown keys are rejected
with the offending field path, numbers may be decimal or scientific, and
units are labels only (times in abstract time units, money in abstract
money units).  ``canonical()`` materialises defaults so that the echoed
config re-parses to an equivalent scenario.
"""

from __future__ import annotations

import copy
import json
import math
import os
from dataclasses import dataclass
from typing import Any, Mapping

from .distributions import (
    Degenerate,
    DiscreteModel,
    Exponential,
    Gamma,
    LogNormal,
    ServiceTimeModel,
    ShiftedScaled,
    Uniform,
    build_dt_instance,
)
from .errors import ConfigError, GridTooLargeError
from .preferences import (
    AffineUtility,
    ConstantPrudenceUtility,
    IdentityWeighting,
    InverseSWeighting,
    PowerUtility,
    PowerWeighting,
    PureQuadraticUtility,
    QuadraticUtility,
    UtilityFunction,
    WeightingFunction,
)

__all__ = ["ScenarioConfig", "parse_config", "load_config", "MAX_GRID_POINTS"]

MAX_GRID_POINTS = 1_000_000

_FRAMEWORKS = ("eu", "dt", "rdu")
_METHODS = ("exact", "second_order", "both")
_FORMATS = ("json", "csv")

_TOP_KEYS = {"framework", "distribution", "preference", "weighting",
             "economics", "method", "seed", "sweep", "output"}


def _require(data: Mapping, key: str, path: str) -> Any:
    if key not in data:
        raise ConfigError(f"{path}.{key}" if path else key, "missing required key")
    return data[key]


def _check_keys(data: Mapping, allowed: set[str], path: str) -> None:
    if not isinstance(data, Mapping):
        raise ConfigError(path, f"expected an object, got {type(data).__name__}")
    unknown = set(data) - allowed
    if unknown:
        name = sorted(unknown)[0]
        raise ConfigError(f"{path}.{name}" if path else name, "unknown key")


def _number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    if not math.isfinite(float(value)):
        raise ConfigError(path, "number must be finite")
    return float(value)


def _string(value: Any, path: str, choices: tuple[str, ...] | None = None) -> str:
    if not isinstance(value, str):
        raise ConfigError(path, f"expected a string, got {value!r}")
    if choices and value not in choices:
        raise ConfigError(path, f"must be one of {choices}, got {value!r}")
    return value


def _number_list(value: Any, path: str) -> list[float]:
    if not isinstance(value, (list, tuple)):
        raise ConfigError(path, "expected an array of numbers")
    return [_number(v, f"{path}[{i}]") for i, v in enumerate(value)]


# ---------------------------------------------------------------- builders

_DIST_PARAMS = {
    "degenerate": {"value"},
    "exponential": {"rate"},
    "uniform": {"lo", "hi"},
    "lognormal": {"log_mean", "log_sd"},
    "gamma": {"shape", "rate"},
}


_DIST_KEYS = {
    "degenerate": {"family", "params"},
    "exponential": {"family", "params"},
    "uniform": {"family", "params"},
    "lognormal": {"family", "params"},
    "gamma": {"family", "params"},
    "shifted_scaled": {"family", "base", "loc", "scale"},
    "discrete": {"family", "outcomes", "probabilities", "dt"},
}


def build_model(spec: Mapping, path: str = "distribution") -> ServiceTimeModel:
    if not isinstance(spec, Mapping):
        raise ConfigError(path, f"expected an object, got {type(spec).__name__}")
    family = _string(_require(spec, "family", path), f"{path}.family")
    if family not in _DIST_KEYS:
        raise ConfigError(f"{path}.family", f"unknown distribution family {family!r}")
    _check_keys(spec, _DIST_KEYS[family], path)
    try:
        if family in _DIST_PARAMS:
            params = spec.get("params", {})
            _check_keys(params, _DIST_PARAMS[family], f"{path}.params")
            kwargs = {k: _number(v, f"{path}.params.{k}") for k, v in params.items()}
            cls = {"degenerate": Degenerate, "exponential": Exponential,
                   "uniform": Uniform, "lognormal": LogNormal,
                   "gamma": Gamma}[family]
            return cls(**kwargs)
        if family == "shifted_scaled":
            base = build_model(_require(spec, "base", path), f"{path}.base")
            return ShiftedScaled(
                base=base,
                loc=_number(spec.get("loc", 0.0), f"{path}.loc"),
                scale=_number(spec.get("scale", 1.0), f"{path}.scale"),
            )
        if family == "discrete":
            dt_spec = spec.get("dt")
            if dt_spec is not None:
                _check_keys(dt_spec, {"t0", "p0", "psi", "xi", "t_min", "t_max"},
                            f"{path}.dt")
                instance = build_dt_instance(
                    t0=_number(_require(dt_spec, "t0", f"{path}.dt"), f"{path}.dt.t0"),
                    xi=_number_list(_require(dt_spec, "xi", f"{path}.dt"),
                                    f"{path}.dt.xi"),
                    p0=_number(dt_spec.get("p0", 0.5), f"{path}.dt.p0"),
                    psi=_number(dt_spec.get("psi", 0.5), f"{path}.dt.psi"),
                    t_min=(None if "t_min" not in dt_spec
                           else _number(dt_spec["t_min"], f"{path}.dt.t_min")),
                    t_max=(None if "t_max" not in dt_spec
                           else _number(dt_spec["t_max"], f"{path}.dt.t_max")),
                )
                if "outcomes" in spec or "probabilities" in spec:
                    outs = _number_list(_require(spec, "outcomes", path),
                                        f"{path}.outcomes")
                    if list(instance.outcomes) != outs:
                        raise ConfigError(f"{path}.outcomes",
                                          "disagrees with the dt construction")
                return instance
            return DiscreteModel(
                _number_list(_require(spec, "outcomes", path), f"{path}.outcomes"),
                _number_list(_require(spec, "probabilities", path),
                             f"{path}.probabilities"),
            )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(path, str(exc)) from exc
    raise ConfigError(f"{path}.family", f"unhandled distribution family {family!r}")


_PREF_PARAMS = {
    "quadratic": {"a", "b", "c"},
    "pure_quadratic": {"a", "c"},
    "power": {"exponent"},
    "constant_prudence": {"prudence", "curvature", "slope_at_one"},
    "affine": {"slope", "intercept"},
}

_PREF_CLASSES = {
    "quadratic": QuadraticUtility,
    "pure_quadratic": PureQuadraticUtility,
    "power": PowerUtility,
    "constant_prudence": ConstantPrudenceUtility,
    "affine": AffineUtility,
}


def build_utility(spec: Mapping, path: str = "preference") -> UtilityFunction:
    _check_keys(spec, {"family", "params", "interval"}, path)
    family = _string(_require(spec, "family", path), f"{path}.family",
                     tuple(_PREF_CLASSES))
    params = spec.get("params", {})
    _check_keys(params, _PREF_PARAMS[family], f"{path}.params")
    kwargs = {k: _number(v, f"{path}.params.{k}") for k, v in params.items()}
    if "interval" in spec:
        interval = _number_list(spec["interval"], f"{path}.interval")
        if len(interval) != 2:
            raise ConfigError(f"{path}.interval", "expected [lo, hi]")
        kwargs["interval"] = (interval[0], interval[1])
    try:
        return _PREF_CLASSES[family](**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(path, str(exc)) from exc


_WEIGHT_PARAMS = {
    "identity": set(),
    "power": {"gamma"},
    "inverse_s": {"gamma"},
}

_WEIGHT_CLASSES = {
    "identity": IdentityWeighting,
    "power": PowerWeighting,
    "inverse_s": InverseSWeighting,
}


def build_weighting(spec: Mapping, path: str = "weighting") -> WeightingFunction:
    _check_keys(spec, {"family", "params", "p0", "psi", "tau_h"}, path)
    family = _string(_require(spec, "family", path), f"{path}.family",
                     tuple(_WEIGHT_CLASSES))
    params = spec.get("params", {})
    _check_keys(params, _WEIGHT_PARAMS[family], f"{path}.params")
    kwargs = {k: _number(v, f"{path}.params.{k}") for k, v in params.items()}
    try:
        return _WEIGHT_CLASSES[family](**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(path, str(exc)) from exc


# ---------------------------------------------------------------- scenario

@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario; ``data`` holds the canonical raw document."""

    data: dict

    @property
    def framework(self) -> str:
        return self.data["framework"]

    @property
    def method(self) -> str:
        return self.data["method"]

    @property
    def seed(self) -> int:
        return self.data["seed"]

    @property
    def phi(self) -> float:
        return self.data["economics"]["phi"]

    @property
    def sweep(self) -> dict | None:
        return self.data.get("sweep")

    @property
    def output_format(self) -> str:
        return self.data["output"]["format"]

    @property
    def output_path(self) -> str | None:
        return self.data["output"]["path"]

    def model(self) -> ServiceTimeModel:
        return build_model(self.data["distribution"])

    def utility(self) -> UtilityFunction:
        return build_utility(self.data["preference"])

    def weighting(self) -> WeightingFunction | None:
        spec = self.data.get("weighting")
        return None if spec is None else build_weighting(spec)

    def weighting_anchor(self) -> tuple[float, float, float | str]:
        spec = self.data.get("weighting") or {}
        p0 = spec.get("p0", 0.5)
        psi = spec.get("psi", 0.5)
        tau_h = spec.get("tau_h", "auto")
        return p0, psi, tau_h

    def canonical(self) -> dict:
        return copy.deepcopy(self.data)


def parse_config(raw: Mapping, seed_override: int | None = None,
                 method_override: str | None = None) -> ScenarioConfig:
    """Validate a raw mapping into a scenario with defaults materialised."""
    _check_keys(raw, _TOP_KEYS, "")
    framework = _string(_require(raw, "framework", ""), "framework", _FRAMEWORKS)

    distribution = _require(raw, "distribution", "")
    build_model(distribution)  # validation side only

    preference = raw.get("preference")
    if preference is None:
        raise ConfigError("preference", "missing required key")
    build_utility(preference)

    weighting = raw.get("weighting")
    if framework == "eu" and weighting is not None:
        raise ConfigError("weighting", "not allowed for the eu framework")
    if framework != "eu":
        if weighting is None:
            raise ConfigError("weighting", f"required for framework {framework!r}")
        build_weighting(weighting)
        p0 = _number(weighting.get("p0", 0.5), "weighting.p0")
        psi = _number(weighting.get("psi", 0.5), "weighting.psi")
        if not 0 < p0 < 1:
            raise ConfigError("weighting.p0", "must lie strictly inside (0, 1)")
        if not 0 < psi <= min(p0, 1 - p0) + 1e-15:
            raise ConfigError("weighting.psi",
                              "must satisfy 0 < psi <= min(p0, 1 - p0)")
        tau_h = weighting.get("tau_h", "auto")
        if not (tau_h == "auto" or isinstance(tau_h, (int, float))):
            raise ConfigError("weighting.tau_h", "must be a number or 'auto'")

    economics = raw.get("economics", {"phi": 1.0})
    _check_keys(economics, {"phi"}, "economics")
    phi = _number(economics.get("phi", 1.0), "economics.phi")
    if not phi > 0:
        raise ConfigError("economics.phi", "must be strictly positive")

    if method_override is not None:
        method = _string(method_override, "method", _METHODS)
    else:
        method = _string(raw.get("method", "both"), "method", _METHODS)

    if seed_override is not None:
        seed = seed_override
    elif "seed" in raw:
        seed = raw["seed"]
    else:
        env = os.environ.get("COTV_SEED")
        seed = int(env) if env is not None else 0
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError("seed", f"expected an integer, got {seed!r}")
    if not 0 <= seed < 2**64:
        raise ConfigError("seed", "must fit in an unsigned 64-bit integer")

    sweep = raw.get("sweep")
    if sweep is not None:
        _check_keys(sweep, {"axes"}, "sweep")
        axes = _require(sweep, "axes", "sweep")
        if not isinstance(axes, Mapping) or not axes:
            raise ConfigError("sweep.axes", "expected a non-empty object")
        total = 1
        for axis, values in axes.items():
            if not isinstance(values, list) or not values:
                raise ConfigError(f"sweep.axes.{axis}", "expected a non-empty array")
            total *= len(values)
        if total > MAX_GRID_POINTS:
            raise GridTooLargeError(
                "sweep.axes", f"{total} grid points exceed the {MAX_GRID_POINTS} cap")

    output = raw.get("output", {})
    _check_keys(output, {"format", "path"}, "output")
    out_format = _string(output.get("format", "json"), "output.format", _FORMATS)
    out_path = output.get("path")
    if out_path is not None and not isinstance(out_path, str):
        raise ConfigError("output.path", "expected a string path")

    data: dict = {
        "framework": framework,
        "distribution": copy.deepcopy(dict(distribution)),
        "preference": copy.deepcopy(dict(preference)),
        "economics": {"phi": phi},
        "method": method,
        "seed": seed,
        "output": {"format": out_format, "path": out_path},
    }
    if weighting is not None:
        weighting = dict(copy.deepcopy(dict(weighting)))
        weighting.setdefault("p0", 0.5)
        weighting.setdefault("psi", 0.5)
        if framework == "rdu":
            weighting.setdefault("tau_h", "auto")
        data["weighting"] = weighting
    if sweep is not None:
        data["sweep"] = copy.deepcopy(dict(sweep))
    return ScenarioConfig(data=data)


def load_config(path: str, seed_override: int | None = None,
                method_override: str | None = None) -> ScenarioConfig:
    """Parse a JSON scenario file; NaN/Infinity literals are rejected."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            raw = json.load(
                handle,
                parse_constant=lambda name: (_ for _ in ()).throw(
                    ConfigError("", f"non-finite literal {name!r} not allowed")),
            )
    except OSError as exc:
        raise ConfigError("", f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("", "top-level config must be an object")
    return parse_config(raw, seed_override, method_override)
