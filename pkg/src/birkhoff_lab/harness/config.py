"""Experiment configuration: JSON schema, defaults, validation."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from typing import List, Optional

import jsonschema

EXPERIMENTS = (
    "sample",
    "marginal",
    "submatrix",
    "max_entry",
    "singular",
    "mixing",
    "moments",
    "vertex_mixture",
    "volume",
    "oracle_compare",
    "radon_ratio",
)

SAMPLERS = ("gibbs", "rejection", "vertex_mixture", "iid_exponential", "dirichlet_rows")

_pos_int = {"type": "integer", "minimum": 1}
_nonneg_int = {"type": "integer", "minimum": 0}
_opt = lambda schema: {"anyOf": [schema, {"type": "null"}]}  # noqa: E731

CONFIG_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "birkhoff-lab experiment config",
    "type": "object",
    "additionalProperties": False,
    "required": ["experiment"],
    "properties": {
        "experiment": {"enum": list(EXPERIMENTS)},
        "n": _opt(_pos_int),
        "n_list": _opt({"type": "array", "items": _pos_int, "minItems": 1}),
        "m": _opt(_pos_int),
        "samples": _opt(_pos_int),
        "chains": _opt(_pos_int),
        "burn_in": _opt(_nonneg_int),
        "spacing": _opt(_pos_int),
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "workers": _pos_int,
        "sampler": _opt({"enum": list(SAMPLERS)}),
        "epsilon": _opt({"type": "number", "exclusiveMinimum": 0}),
        "k": _opt(_pos_int),
        "t_max": _opt(_pos_int),
        "trials": _opt(_pos_int),
        "proposals": _opt(_pos_int),
        "bound_vectors": _opt(_pos_int),
        "r": _opt(_pos_int),
        "out_dir": _opt({"type": "string"}),
        "write_csv": {"type": "boolean"},
        "write_batch": {"type": "boolean"},
    },
}

# sizes of the acceptance runs
DEFAULTS = {
    "sample": {"n": 8, "samples": 100, "sampler": "gibbs", "chains": 1},
    "marginal": {"n_list": [8, 16, 32, 64], "samples": 20000, "chains": 4},
    "moments": {"n": 64, "samples": 20000, "chains": 4},
    "oracle_compare": {"n_list": [3, 4], "samples": 100000, "chains": 4},
    "max_entry": {"n": 200, "samples": 500, "chains": 4, "epsilon": 0.5},
    "singular": {"n": 256, "samples": 20, "chains": 4},
    "mixing": {"n": 128, "samples": 100, "chains": 4, "t_max": 4},
    "submatrix": {"n": 100, "samples": 10000, "chains": 4, "k": 2},
    "vertex_mixture": {"n": 3, "samples": 100000},
    "volume": {"n": 3, "m": 3, "samples": 100000, "trials": 20, "proposals": 1000000, "bound_vectors": 50},
    "radon_ratio": {"n": 32, "samples": 20000, "chains": 4, "r": 1},
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    experiment: str
    n: Optional[int] = None
    n_list: Optional[List[int]] = None
    m: Optional[int] = None
    samples: Optional[int] = None
    chains: Optional[int] = None
    burn_in: Optional[int] = None
    spacing: Optional[int] = None
    seed: int = 20240101
    workers: int = 1
    sampler: Optional[str] = None
    epsilon: Optional[float] = None
    k: Optional[int] = None
    t_max: Optional[int] = None
    trials: Optional[int] = None
    proposals: Optional[int] = None
    bound_vectors: Optional[int] = None
    r: Optional[int] = None
    out_dir: Optional[str] = None
    write_csv: bool = False
    write_batch: bool = False
    seed_source: str = field(default="config", compare=False)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        try:
            jsonschema.validate(data, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise ConfigError(f"invalid config: {exc.message}") from None
        return cls(**data).resolved()

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def resolved(self) -> "ExperimentConfig":
        """Fill experiment defaults for unset fields and validate."""
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        updates = {
            key: value
            for key, value in DEFAULTS[self.experiment].items()
            if getattr(self, key) is None
        }
        cfg = dataclasses.replace(self, **updates)
        if cfg.chains is None:
            cfg.chains = 1
        elif "chains" in updates and cfg.samples is not None:
            # a default chain count never exceeds the requested samples
            cfg.chains = min(cfg.chains, cfg.samples)
        cfg.validate()
        return cfg

    def sizes(self) -> List[int]:
        return list(self.n_list) if self.n_list else [self.n]

    def validate(self) -> None:
        e = self.experiment
        if self.n is None and not self.n_list:
            raise ConfigError(f"{e}: n or n_list is required")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        for name in ("samples", "chains", "spacing", "trials", "proposals", "k", "t_max", "r", "bound_vectors"):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.burn_in is not None and self.burn_in < 0:
            raise ConfigError("burn_in must be >= 0")
        if self.samples is not None and self.chains is not None and self.chains > self.samples:
            raise ConfigError("chains cannot exceed samples")
        sizes = self.sizes()
        if e == "oracle_compare" and any(s > 5 for s in sizes):
            raise ConfigError("oracle_compare relies on rejection sampling; n must be <= 5")
        if e in ("marginal", "moments", "max_entry") and any(s < 2 for s in sizes):
            raise ConfigError(f"{e} needs n >= 2")
        if e == "moments" and self.n < 4:
            raise ConfigError("moments uses entry (3, 4); n must be >= 4")
        if e == "submatrix" and self.k * self.k > self.n:
            raise ConfigError("submatrix needs k^2 <= n")
        if e == "vertex_mixture" and self.n > 8:
            raise ConfigError("vertex_mixture needs n <= 8")
        if e == "volume" and ((self.m - 1) * (self.n - 1) > 9 or self.m < 2 or self.n < 2):
            raise ConfigError("volume needs 2 <= m, n and (m-1)(n-1) <= 9")
        if e == "radon_ratio" and not 1 <= self.r < self.n:
            raise ConfigError("radon_ratio needs 1 <= r < n")
        if e == "sample" and self.sampler == "rejection" and self.n > 5:
            raise ConfigError("rejection sampler needs n <= 5")
        if e == "sample" and self.sampler == "vertex_mixture" and self.n > 8:
            raise ConfigError("vertex_mixture sampler needs n <= 8")
        if self.epsilon is not None and self.epsilon <= 0:
            raise ConfigError("epsilon must be positive")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def echo(self) -> dict:
        """Config as recorded in reports; enough to rerun the experiment."""
        d = self.to_dict()
        d.pop("workers")
        d.pop("seed_source")
        return d
