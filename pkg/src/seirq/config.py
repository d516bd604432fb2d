"""JSON configuration files.

A scenario file is a JSON object; every key is optional::

    {
      "schema_version": 1,
      "model": "basic",                   # "seir" | "basic" | "extended"
      "params": {"beta": 0.5, "psi": 0.1},
      "population_size": 500000,
      "seed_exposed": 4e-06,              # [E_s, E_a] for "extended"
      "initial_quarantine": 0.0,          # [S_sQ, S_aQ] for "extended"
      "integrator": {"method": "adaptive-dp54", "rtol": 1e-08, "atol": 1e-12,
                     "dt": 0.1, "t_max": 600, "output_dt": 0.25}
    }

Omitted values take the defaults of the parameter records. For the extended
model an omitted ``gamma_s``/``gamma_a`` is derived from ``lambda_s``/``lambda_a``
and an optional ``delta`` (default ``1/5.5``) through
``1/delta = 1/lambda + 1/gamma``. Unknown keys are rejected.

A sweep file adds a ``"sweep"`` object, either a grid::

    "sweep": {"axis1": {"path": "params.beta_s", "values": [0.1, 0.2]},
              "axis2": {"path": "params.beta_a", "values": [0.1, 0.2]},
              "observable": "total_infected"}

or a latency sweep::

    "sweep": {"type": "latency", "lambda_values": [0.2, 0.5, 1.0],
              "delta": 0.18181818181818182, "observable": "reported_active"}
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigurationError, DomainError, ValidationError
from .integrator import IntegratorConfig
from .model import ModelKind, model_spec, observable_weights, split_infectious_period
from .scenarios import ScenarioConfig, apply_override

SCHEMA_VERSION = 1
DEFAULT_DELTA = 1 / 5.5

_TOP_KEYS = {"schema_version", "model", "params", "population_size", "seed_exposed",
             "initial_quarantine", "integrator", "sweep"}
_INTEGRATOR_KEYS = {"method", "dt", "rtol", "atol", "t_max", "output_dt"}


@dataclass(frozen=True)
class GridSweepSpec:
    scenario: ScenarioConfig
    axis1: tuple[str, tuple[float, ...]]
    axis2: tuple[str, tuple[float, ...]] | None
    observable: str
    workers: int | None = None


@dataclass(frozen=True)
class LatencySweepSpec:
    scenario: ScenarioConfig
    lambda_values: tuple[float, ...]
    delta: float
    observable: str = "reported_active"


def _reject_unknown(obj, allowed, where):
    if not isinstance(obj, dict):
        raise ConfigurationError(f"{where} must be a JSON object")
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ConfigurationError(
            f"{where}: unknown key(s) {', '.join(map(repr, unknown))}; "
            f"allowed: {', '.join(sorted(allowed))}"
        )


def _number(value, where):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError(f"{where}: must be a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigurationError(f"{where}: must be finite, got {value!r}")
    return float(value)


def _params_from_dict(kind: ModelKind, raw):
    spec = model_spec(kind)
    names = list(spec.params_cls.__dataclass_fields__)
    allowed = set(names) | ({"delta"} if kind is ModelKind.EXTENDED else set())
    raw = {} if raw is None else raw
    _reject_unknown(raw, allowed, "params")
    values = {}
    for key, value in raw.items():
        if key == "feedback_enabled":
            if not isinstance(value, bool):
                raise ConfigurationError(f"params.feedback_enabled: must be true or false, got {value!r}")
            values[key] = value
        else:
            values[key] = _number(value, f"params.{key}")
    if kind is ModelKind.EXTENDED:
        delta = values.pop("delta", DEFAULT_DELTA)
        defaults = spec.params_cls()
        for group in ("s", "a"):
            if f"gamma_{group}" not in values:
                lam = values.get(f"lambda_{group}", getattr(defaults, f"lambda_{group}"))
                try:
                    values[f"gamma_{group}"] = split_infectious_period(delta, lam)
                except DomainError as exc:
                    raise ConfigurationError(f"params.gamma_{group}: {exc}") from None
    try:
        return spec.params_cls(**values)
    except DomainError as exc:
        raise ConfigurationError(f"params.{exc}") from None


def _integrator_from_dict(raw):
    raw = {} if raw is None else raw
    _reject_unknown(raw, _INTEGRATOR_KEYS, "integrator")
    values = {}
    for key, value in raw.items():
        if key == "method":
            values[key] = value
        else:
            values[key] = _number(value, f"integrator.{key}")
    try:
        return IntegratorConfig(**values)
    except ConfigurationError as exc:
        raise ConfigurationError(f"integrator.{exc}") from None


def _slots(raw, where):
    if raw is None:
        return None
    if isinstance(raw, list):
        return tuple(_number(v, f"{where}[{i}]") for i, v in enumerate(raw))
    return _number(raw, where)


def scenario_from_dict(raw: dict) -> ScenarioConfig:
    """Validate a scenario mapping and fill defaults."""
    _reject_unknown(raw, _TOP_KEYS - {"sweep"}, "config")
    version = raw.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigurationError(f"schema_version: expected {SCHEMA_VERSION}, got {version!r}")
    model = raw.get("model", ModelKind.BASIC.value)
    try:
        kind = ModelKind(model)
    except ValueError:
        raise ConfigurationError(
            f"model: must be one of {[k.value for k in ModelKind]}, got {model!r}"
        ) from None
    params = _params_from_dict(kind, raw.get("params"))
    integrator = _integrator_from_dict(raw.get("integrator"))
    population = raw.get("population_size", 500_000)
    if isinstance(population, bool) or not isinstance(population, (int, float)) or not population > 0:
        raise ConfigurationError(f"population_size: must be a positive number, got {population!r}")
    return ScenarioConfig(
        kind, params, population,
        _slots(raw.get("seed_exposed"), "seed_exposed"),
        _slots(raw.get("initial_quarantine"), "initial_quarantine"),
        integrator,
    )


def scenario_to_dict(config: ScenarioConfig) -> dict:
    """Fully explicit mapping; ``scenario_from_dict`` inverts it exactly."""
    slots = (lambda v: v[0]) if len(config.seed_exposed) == 1 else list
    return {
        "schema_version": SCHEMA_VERSION,
        "model": config.model_kind.value,
        "params": config.params.as_dict(),
        "population_size": config.population_size,
        "seed_exposed": slots(config.seed_exposed),
        "initial_quarantine": slots(config.initial_quarantine),
        "integrator": {
            "method": config.integrator.method,
            "dt": config.integrator.dt,
            "rtol": config.integrator.rtol,
            "atol": config.integrator.atol,
            "t_max": config.integrator.t_max,
            "output_dt": config.integrator.output_dt,
        },
    }


def _check_observable(kind, name, where):
    if not isinstance(name, str):
        raise ConfigurationError(f"{where}: must be a string")
    try:
        observable_weights(kind, name)
    except ValidationError as exc:
        raise ConfigurationError(f"{where}: {exc}") from None
    return name


def _axis(raw, where, scenario):
    _reject_unknown(raw, {"path", "values"}, where)
    path = raw.get("path")
    values = raw.get("values")
    if not isinstance(path, str):
        raise ConfigurationError(f"{where}.path: must be a string")
    if not isinstance(values, list) or not values:
        raise ConfigurationError(f"{where}.values: must be a non-empty list")
    values = tuple(_number(v, f"{where}.values[{i}]") for i, v in enumerate(values))
    try:
        apply_override(scenario, path, values[0])
    except ValidationError as exc:
        raise ConfigurationError(f"{where}.path: {exc}") from None
    return path, values


def sweep_from_dict(raw: dict, scenario: ScenarioConfig):
    kind = scenario.model_kind
    if raw.get("type", "grid") == "latency":
        _reject_unknown(raw, {"type", "lambda_values", "delta", "observable"}, "sweep")
        lambdas = raw.get("lambda_values")
        if not isinstance(lambdas, list) or not lambdas:
            raise ConfigurationError("sweep.lambda_values: must be a non-empty list")
        lambdas = tuple(_number(v, f"sweep.lambda_values[{i}]") for i, v in enumerate(lambdas))
        delta = _number(raw.get("delta", DEFAULT_DELTA), "sweep.delta")
        if kind is not ModelKind.EXTENDED:
            raise ConfigurationError("sweep: latency sweeps need model 'extended'")
        observable = _check_observable(kind, raw.get("observable", "reported_active"),
                                       "sweep.observable")
        return LatencySweepSpec(scenario, lambdas, delta, observable)
    _reject_unknown(raw, {"type", "axis1", "axis2", "observable", "workers"}, "sweep")
    if raw.get("type", "grid") != "grid":
        raise ConfigurationError(f"sweep.type: must be 'grid' or 'latency', got {raw['type']!r}")
    if "axis1" not in raw:
        raise ConfigurationError("sweep.axis1: required")
    if "observable" not in raw:
        raise ConfigurationError("sweep.observable: required")
    axis1 = _axis(raw["axis1"], "sweep.axis1", scenario)
    axis2 = _axis(raw["axis2"], "sweep.axis2", scenario) if "axis2" in raw else None
    observable = _check_observable(kind, raw["observable"], "sweep.observable")
    workers = raw.get("workers")
    if workers is not None and (isinstance(workers, bool) or not isinstance(workers, int)
                                or workers < 1):
        raise ConfigurationError(f"sweep.workers: must be a positive integer, got {workers!r}")
    return GridSweepSpec(scenario, axis1, axis2, observable, workers)


def load_json(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"{path}: cannot read config ({exc.strerror})") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{path}: top level must be a JSON object")
    return raw


def parse_config(path):
    """Load a scenario (``ScenarioConfig``) or a sweep specification."""
    raw = load_json(path)
    sweep = raw.pop("sweep", None)
    scenario = scenario_from_dict(raw)
    if sweep is None:
        return scenario
    if not isinstance(sweep, dict):
        raise ConfigurationError("sweep: must be a JSON object")
    return sweep_from_dict(sweep, scenario)


def dump_config(config: ScenarioConfig, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(scenario_to_dict(config), indent=2) + "\n")
    return path
