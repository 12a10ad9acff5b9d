"""
Declarative experiment configuration.

An experiment file is a JSON object validated against CONFIG_SCHEMA; rho, snr
and zeta may be single values or lists, and every combination is run. Any
problem is reported as a ConfigError naming the offending key.
"""

import itertools
import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import aiofiles
from jsonschema import Draft202012Validator
from jsonschema.exceptions import ValidationError as SchemaValidationError
from jsonschema.exceptions import best_match
from pydantic import BaseModel, Field
from pydantic import ValidationError as ModelValidationError

from core.errors import ConfigError
from core.models import SolverSettings
from core.simulate import MethodConfig, ScenarioSpec

_NUMBER_OR_LIST = {
    "oneOf": [
        {"type": "number"},
        {"type": "array", "items": {"type": "number"}, "minItems": 1},
    ]
}

CONFIG_SCHEMA: Dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "SplitReg experiment",
    "type": "object",
    "additionalProperties": False,
    "required": ["scenario_id", "p", "n", "rho", "snr", "zeta", "replications", "methods"],
    "properties": {
        "name": {"type": "string"},
        "scenario_id": {"enum": [1, 2, 3]},
        "p": {"type": "integer", "minimum": 1},
        "n": {"type": "integer", "minimum": 2},
        "rho": _NUMBER_OR_LIST,
        "snr": _NUMBER_OR_LIST,
        "zeta": _NUMBER_OR_LIST,
        "replications": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer"},
        "timing_fit": {"type": "boolean"},
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "delta": {"type": "number", "exclusiveMinimum": 0},
                "max_cycles": {"type": "integer", "minimum": 1},
            },
        },
        "methods": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["label"],
                "properties": {
                    "label": {"type": "string", "minLength": 1},
                    "alpha": {"type": "number", "minimum": 0, "maximum": 1},
                    "num_models": {
                        "oneOf": [
                            {"type": "integer", "minimum": 1},
                            {"type": "array", "items": {"type": "integer", "minimum": 1},
                             "minItems": 1},
                        ]
                    },
                    "num_folds": {"type": "integer", "minimum": 2},
                    "warm_start": {"type": "boolean"},
                },
            },
        },
    },
}


class SolverConfig(BaseModel):
    delta: float = Field(1e-8, gt=0.0)
    max_cycles: int = Field(10000, ge=1)


class ExperimentConfig(BaseModel):
    """A validated experiment: a grid of settings, the methods and the replication count."""
    name: str = "experiment"
    scenario_id: Literal[1, 2, 3]
    p: int
    n: int
    rho: List[float]
    snr: List[float]
    zeta: List[float]
    replications: int = Field(..., ge=1)
    seed: int = 0
    timing_fit: bool = False
    solver: Optional[SolverConfig] = None
    methods: List[MethodConfig]

    def scenarios(self) -> List[ScenarioSpec]:
        """Every (rho, snr, zeta) combination, in file order."""
        return [
            ScenarioSpec(scenario_id=self.scenario_id, p=self.p, n=self.n, rho=rho, snr=snr,
                         zeta=zeta, seed=self.seed)
            for rho, snr, zeta in itertools.product(self.rho, self.snr, self.zeta)
        ]

    def solver_settings(self, defaults: SolverSettings) -> SolverSettings:
        if self.solver is None:
            return defaults
        return SolverSettings(delta=self.solver.delta, max_cycles=self.solver.max_cycles)


def _as_list(value: Union[float, List[float]]) -> List[float]:
    return value if isinstance(value, list) else [value]


def _error_key(error: SchemaValidationError) -> str:
    path = [str(part) for part in error.absolute_path]
    if error.validator == "additionalProperties" and isinstance(error.instance, dict):
        allowed = set(error.schema.get("properties", {}))
        path.append(sorted(set(error.instance) - allowed)[0])
    elif error.validator == "required" and isinstance(error.instance, dict):
        path.append(next(key for key in error.validator_value if key not in error.instance))
    return ".".join(path) or "<root>"


def parse_experiment_config(payload: Any) -> ExperimentConfig:
    """
    Validate a decoded experiment file.

    Raises:
        ConfigError: the first schema or value error, naming its key
    """
    error = best_match(Draft202012Validator(CONFIG_SCHEMA).iter_errors(payload))
    if error is not None:
        raise ConfigError(_error_key(error), error.message)

    data = dict(payload)
    for key in ("rho", "snr", "zeta"):
        data[key] = _as_list(data[key])
    try:
        config = ExperimentConfig(**data)
    except ModelValidationError as e:
        raise _config_error(e, "<root>") from e
    try:
        config.scenarios()
    except ModelValidationError as e:
        # the only cross-field rule is floor(p * zeta) >= 1
        raise _config_error(e, "zeta") from e
    return config


def _config_error(error: ModelValidationError, fallback: str) -> ConfigError:
    first = error.errors()[0]
    key = ".".join(str(part) for part in first["loc"]) or fallback
    return ConfigError(key, first["msg"])


async def load_experiment_config(path: Union[str, Path]) -> ExperimentConfig:
    """Read and validate an experiment file."""
    try:
        async with aiofiles.open(path, "r", encoding="utf-8") as f:
            content = await f.read()
    except OSError as e:
        raise ConfigError("<file>", f"cannot read {path}: {e}") from e
    try:
        payload = json.loads(content)
    except json.JSONDecodeError as e:
        raise ConfigError("<file>", f"invalid JSON: {e}") from e
    return parse_experiment_config(payload)
