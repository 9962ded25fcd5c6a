"""Experiment configuration: a strict YAML document turned into an ExperimentSpec."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import yaml

from .distributions import KINDS, StrengthModel, make_model, moments

EXPERIMENTS = ("simulate", "schedule", "theorem1", "theorem2", "theorem3", "bounds", "oracle")
FORMATS = ("csv", "jsonl")
ENVIRONMENTS = ("resample", "fixed")

DEFAULT_REPLICATES = 1000
DEFAULT_SWEEP = (0.25, 0.5, 1.0, 1.5, 2.0)
DEFAULT_U_VALUES = (1.0, 2.0, 4.0)
DEFAULT_TOP_K_GAMMA = 0.25

_TOP_KEYS = {
    "experiment", "model", "n_grid", "replicates", "seed", "sweep", "workers", "output",
    "format", "v_tagged", "strengths", "environment", "u_values", "top_k_gamma", "exact",
}
_MODEL_PARAMS = {
    "exponential": {"rate"},
    "uniform01": set(),
    "beta": {"a", "b"},
    "arcsine": set(),
    "pointmass": {"value"},
    "finite_mixture": {"values", "weights"},
    "pareto": {"shape"},
    "exp_of_gaussian": {"mu", "sigma"},
    "half_gaussian": {"sigma"},
}


class ConfigError(ValueError):
    """Invalid experiment configuration; the message starts with the field path."""


@dataclass(frozen=True)
class ExperimentSpec:
    experiment: str
    seed: int
    model: StrengthModel | None = None
    model_config: dict = field(default_factory=dict)
    n_grid: tuple[int, ...] = ()
    replicates: int = DEFAULT_REPLICATES
    sweep: tuple[float, ...] | None = None
    workers: int | str = "auto"
    output: str | None = None
    format: str = "csv"
    v_tagged: float | None = None
    strengths: tuple[float, ...] | None = None
    environment: str = "resample"
    u_values: tuple[float, ...] = DEFAULT_U_VALUES
    top_k_gamma: float = DEFAULT_TOP_K_GAMMA
    exact: bool | None = None

    @property
    def alpha(self) -> float | None:
        return None if self.model is None else self.model.alpha

    @property
    def theta_u(self) -> float | None:
        return None if self.model is None else moments(self.model).theta_u

    def echo(self) -> dict:
        """Plain-data view of the spec for manifests."""
        d = asdict(self)
        d.pop("model")
        d["model"] = dict(self.model_config) if self.model is not None else None
        if self.model is not None:
            d["model_resolved"] = {"name": self.model.name, "alpha": self.model.alpha,
                                   "support_max": _json_float(self.model.support_max)}
        for key in ("n_grid", "sweep", "strengths", "u_values"):
            if d[key] is not None:
                d[key] = list(d[key])
        return d


def _json_float(x: float):
    return x if math.isfinite(x) else str(x)


def _err(path: str, msg: str) -> ConfigError:
    return ConfigError(f"{path}: {msg}")


def _number(path, value, *, positive=False, allow_int_only=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise _err(path, f"expected a number, got {value!r}")
    if allow_int_only and not isinstance(value, int):
        raise _err(path, f"expected an integer, got {value!r}")
    if positive and not value > 0:
        raise _err(path, f"must be positive, got {value!r}")
    return value


def parse_model(raw, path: str = "model") -> StrengthModel:
    if not isinstance(raw, dict):
        raise _err(path, "expected a mapping with a 'kind' key")
    raw = dict(raw)
    kind = raw.pop("kind", None)
    if kind not in KINDS:
        raise _err(f"{path}.kind", f"expected one of {', '.join(KINDS)}, got {kind!r}")
    alpha = raw.pop("alpha", None)
    unknown = set(raw) - _MODEL_PARAMS[kind]
    if unknown:
        raise _err(f"{path}.{sorted(unknown)[0]}", f"unknown parameter for {kind}")
    if alpha is not None:
        _number(f"{path}.alpha", alpha)
    try:
        return make_model(kind, alpha=alpha, **raw)
    except (TypeError, ValueError) as exc:
        field_name = "alpha" if alpha is not None and "alpha" in str(exc) else kind
        raise _err(f"{path}.{field_name}", str(exc)) from exc


def spec_from_dict(doc: dict) -> ExperimentSpec:
    if not isinstance(doc, dict):
        raise ConfigError("<root>: expected a mapping")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise _err(sorted(unknown)[0], "unknown key")
    exp = doc.get("experiment")
    if exp not in EXPERIMENTS:
        raise _err("experiment", f"expected one of {', '.join(EXPERIMENTS)}, got {exp!r}")
    if "seed" not in doc:
        raise _err("seed", "a seed is required; runs never draw entropy implicitly")
    seed = _number("seed", doc["seed"], allow_int_only=True)
    if not 0 <= seed < 2**64:
        raise _err("seed", "must be a 64-bit unsigned integer")

    model_config = doc.get("model")
    model = None
    if model_config is not None:
        model = parse_model(model_config)
    elif exp in ("simulate", "theorem1", "theorem2", "theorem3"):
        raise _err("model", f"required for {exp}")

    n_grid = doc.get("n_grid")
    if n_grid is None:
        if not (exp == "oracle" and doc.get("strengths") is not None):
            raise _err("n_grid", "required")
        n_grid = ()
    if isinstance(n_grid, int) and not isinstance(n_grid, bool):
        n_grid = [n_grid]
    if not isinstance(n_grid, (list, tuple)):
        raise _err("n_grid", "expected a list of counts")
    for i, n in enumerate(n_grid):
        _number(f"n_grid[{i}]", n, allow_int_only=True)
        if n < 2:
            raise _err(f"n_grid[{i}]", "a tournament needs N >= 2")
    if any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise _err("n_grid", "must be strictly ascending")
    if exp != "oracle" and not n_grid:
        raise _err("n_grid", "must be non-empty")

    replicates = doc.get("replicates", DEFAULT_REPLICATES)
    _number("replicates", replicates, allow_int_only=True)
    if replicates < 1:
        raise _err("replicates", "must be >= 1")

    if exp in ("theorem2", "theorem3") and (model is None or model.alpha is None):
        raise _err("model.alpha", f"{exp} needs a model with alpha metadata (support_max = 1)")

    sweep = doc.get("sweep")
    if sweep is not None:
        if not isinstance(sweep, (list, tuple)) or not sweep:
            raise _err("sweep", "expected a non-empty list of c values")
        for i, c in enumerate(sweep):
            _number(f"sweep[{i}]", c)
            if c < 0:
                raise _err(f"sweep[{i}]", "must be non-negative")
        if any(b <= a for a, b in zip(sweep, sweep[1:])):
            raise _err("sweep", "must be strictly ascending")
        sweep = tuple(float(c) for c in sweep)
    elif exp == "theorem3":
        sweep = DEFAULT_SWEEP

    workers = doc.get("workers", "auto")
    if workers != "auto":
        _number("workers", workers, allow_int_only=True)
        if workers < 1:
            raise _err("workers", "must be >= 1 or 'auto'")

    fmt = doc.get("format", "csv")
    if fmt not in FORMATS:
        raise _err("format", f"expected one of {', '.join(FORMATS)}")

    output = doc.get("output")
    if output is not None and not isinstance(output, str):
        raise _err("output", "expected a path string")

    v_tagged = doc.get("v_tagged")
    if v_tagged is not None:
        v_tagged = float(_number("v_tagged", v_tagged, positive=True))

    strengths = doc.get("strengths")
    if strengths is not None:
        if not isinstance(strengths, (list, tuple)) or len(strengths) < 2:
            raise _err("strengths", "expected a list of at least 2 positive numbers")
        for i, s in enumerate(strengths):
            _number(f"strengths[{i}]", s, positive=True)
        strengths = tuple(sorted(float(s) for s in strengths))

    environment = doc.get("environment", "resample")
    if environment not in ENVIRONMENTS:
        raise _err("environment", f"expected one of {', '.join(ENVIRONMENTS)}")

    u_values = doc.get("u_values", list(DEFAULT_U_VALUES))
    if not isinstance(u_values, (list, tuple)) or not u_values:
        raise _err("u_values", "expected a non-empty list")
    for i, u in enumerate(u_values):
        _number(f"u_values[{i}]", u, positive=True)

    gamma = doc.get("top_k_gamma", DEFAULT_TOP_K_GAMMA)
    _number("top_k_gamma", gamma)
    if not 0 <= gamma <= 1:
        raise _err("top_k_gamma", "must lie in [0, 1]")

    exact = doc.get("exact")
    if exact is not None and not isinstance(exact, bool):
        raise _err("exact", "expected true or false")

    return ExperimentSpec(
        experiment=exp, seed=int(seed), model=model,
        model_config=dict(model_config) if model_config is not None else {},
        n_grid=tuple(int(n) for n in n_grid), replicates=int(replicates), sweep=sweep,
        workers=workers, output=output, format=fmt, v_tagged=v_tagged, strengths=strengths,
        environment=environment, u_values=tuple(float(u) for u in u_values),
        top_k_gamma=float(gamma), exact=exact,
    )


def parse_config(text: str) -> ExperimentSpec:
    """Parse a YAML experiment document; unknown keys are errors."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"<document>: not valid YAML ({exc})") from exc
    return spec_from_dict(doc)
