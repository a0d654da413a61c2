"""Experiment, sweep and comparison configurations (JSON)."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import jsonschema
import numpy as np
from referencing import Registry, Resource

from .errors import ConfigurationError
from .network_sim import NetworkConfig
from .point_process import Distribution
from .stability import ModelParams

MODELS = ("sigma", "wp", "gamma", "lbn")
SCHEMAS = ("config", "sweep", "compare")


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    text = resources.files("jsqstab.schema").joinpath(f"{name}.schema.json").read_text()
    return json.loads(text)


@lru_cache(maxsize=None)
def _registry() -> Registry:
    pairs = []
    for name in SCHEMAS:
        schema = load_schema(name)
        res = Resource.from_contents(schema)
        pairs.append((schema["$id"], res))
        pairs.append((f"{name}.schema.json", res))
    return Registry().with_resources(pairs)


def validate(data, schema: str) -> None:
    """Raise :class:`ConfigurationError` naming the first offending field."""
    validator = jsonschema.Draft202012Validator(load_schema(schema), registry=_registry())
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        where = ".".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigurationError(f"{where}: {err.message}")


def _dist(d, where: str) -> Distribution | None:
    if d is None:
        return None
    try:
        return Distribution.from_dict(d)
    except ValueError as exc:
        raise ConfigurationError(f"{where}: {exc}") from None


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    start: float
    stop: float
    steps: int
    replicas: int = 1

    def __post_init__(self):
        if self.steps < 2:
            raise ConfigurationError("sweep.steps: must be >= 2")
        if not self.start < self.stop:
            raise ConfigurationError("sweep.from: must be smaller than sweep.to")

    @property
    def values(self) -> np.ndarray:
        # rounding strips linspace noise such as 1.2000000000000002
        return np.array([float(f"{v:.12g}") for v in np.linspace(self.start, self.stop, self.steps)])

    @classmethod
    def from_dict(cls, d: dict) -> "SweepSpec":
        validate(d, "sweep")
        return cls(d["parameter"], float(d["from"]), float(d["to"]), int(d["steps"]), int(d.get("replicas", 1)))

    def to_dict(self) -> dict:
        return {
            "parameter": self.parameter,
            "from": self.start,
            "to": self.stop,
            "steps": self.steps,
            "replicas": self.replicas,
        }


@dataclass(frozen=True)
class ExperimentConfig:
    model: str
    m: int
    service: Distribution
    arrival: Distribution | None = None
    split: tuple | None = None
    arrivals: tuple | None = None
    opportunistic: Distribution | None = None
    routing: tuple | None = None
    jsq: tuple | None = None
    horizon: float = 2e5
    seed: int = 0
    K: int = 100
    window: float = 0.5
    replicas: int = 1
    output: dict = field(default_factory=dict, compare=True)
    sweep: SweepSpec | None = None

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        validate(data, "config")
        m = data["m"]
        ded = data["dedicated"]
        analysis = data.get("analysis", {})
        routing = data.get("routing")
        jsq = data.get("jsq")
        split = ded.get("split")
        arrivals = ded.get("arrivals")
        if split is not None and len(split) != m:
            raise ConfigurationError(f"dedicated.split: expected {m} entries, got {len(split)}")
        if split is not None and abs(sum(split) - 1.0) > 1e-12:
            raise ConfigurationError(f"dedicated.split: probabilities sum to {sum(split):.12g}, not 1")
        if arrivals is not None and len(arrivals) != m:
            raise ConfigurationError(f"dedicated.arrivals: expected {m} entries")
        if routing is not None and (len(routing) != m or any(len(r) != m for r in routing)):
            raise ConfigurationError(f"routing: must be a {m} x {m} matrix")
        if jsq is not None and len(jsq) != m:
            raise ConfigurationError(f"jsq: expected {m} entries")
        if routing is not None or jsq is not None:
            rows = np.zeros(m) if routing is None else np.sum(routing, axis=1)
            out = rows + (np.zeros(m) if jsq is None else np.asarray(jsq))
            bad = np.flatnonzero(out > 1.0 + 1e-12)
            if len(bad):
                raise ConfigurationError(f"routing[{bad[0]}]: row sum plus jsq exceeds 1")
        horizon = data.get("horizon", 2e5)
        if not horizon > 0:
            raise ConfigurationError("horizon: must be positive")
        model = data["model"]
        has_routing = bool(np.any(routing or 0) or np.any(jsq or 0))
        if model in ("sigma", "wp", "gamma") and has_routing:
            raise ConfigurationError(f"routing: model {model!r} takes no routing; use 'lbn'")
        if model == "gamma" and arrivals is None:
            raise ConfigurationError("dedicated.arrivals: model 'gamma' needs per-queue arrivals")
        if model in ("sigma", "wp") and arrivals is not None:
            raise ConfigurationError(f"dedicated.arrival: model {model!r} needs one dedicated stream")
        if model == "sigma" and split is not None and not np.allclose(split, 1.0 / m, atol=1e-12):
            raise ConfigurationError("dedicated.split: model 'sigma' needs a uniform split")
        sweep = data.get("sweep")
        return cls(
            model=model,
            m=m,
            service=_dist(data["service"], "service"),
            arrival=_dist(ded.get("arrival"), "dedicated.arrival"),
            split=None if split is None else tuple(float(v) for v in split),
            arrivals=None if arrivals is None else tuple(
                _dist(a, f"dedicated.arrivals.{k}") for k, a in enumerate(arrivals)
            ),
            opportunistic=_dist(data.get("opportunistic"), "opportunistic"),
            routing=None if routing is None else tuple(tuple(float(v) for v in r) for r in routing),
            jsq=None if jsq is None else tuple(float(v) for v in jsq),
            horizon=float(horizon),
            seed=int(data.get("seed", 0)),
            K=int(analysis.get("K", 100)),
            window=float(analysis.get("window", 0.5)),
            replicas=int(analysis.get("replicas", 1)),
            output=dict(data.get("output", {})),
            sweep=None if sweep is None else SweepSpec.from_dict(sweep),
        )

    def to_dict(self) -> dict:
        ded: dict = {}
        if self.arrival is not None:
            ded["arrival"] = self.arrival.to_dict()
            if self.split is not None:
                ded["split"] = list(self.split)
        else:
            ded["arrivals"] = [a.to_dict() for a in self.arrivals]
        out = {
            "model": self.model,
            "m": self.m,
            "dedicated": ded,
            "opportunistic": None if self.opportunistic is None else self.opportunistic.to_dict(),
            "service": self.service.to_dict(),
            "horizon": self.horizon,
            "seed": self.seed,
            "analysis": {"K": self.K, "window": self.window, "replicas": self.replicas},
        }
        if self.routing is not None:
            out["routing"] = [list(r) for r in self.routing]
        if self.jsq is not None:
            out["jsq"] = list(self.jsq)
        if self.output:
            out["output"] = dict(self.output)
        if self.sweep is not None:
            out["sweep"] = self.sweep.to_dict()
        return out

    def network(self, seed: int | None = None, horizon: float | None = None) -> NetworkConfig:
        return NetworkConfig(
            m=self.m,
            service=self.service,
            horizon=self.horizon if horizon is None else horizon,
            seed=self.seed if seed is None else seed,
            arrival=self.arrival,
            split=self.split,
            arrivals=self.arrivals,
            opportunistic=self.opportunistic,
            routing=self.routing,
            jsq=self.jsq,
        )

    def params(self) -> ModelParams:
        lam_prime = 0.0 if self.opportunistic is None else self.opportunistic.rate
        common = dict(lam_prime=lam_prime, mu=self.service.rate, routing=self.routing, p_sh=self.jsq)
        if self.arrivals is not None:
            per = tuple(a.rate for a in self.arrivals)
            return ModelParams(self.m, sum(per), lam_per_queue=per, **common)
        return ModelParams(self.m, self.arrival.rate, p=self.split, **common)

    def with_value(self, path: str, value: float) -> "ExperimentConfig":
        """Copy with the numeric field at dotted ``path`` replaced."""
        data = copy.deepcopy(self.to_dict())
        data.pop("sweep", None)
        node = data
        keys = path.split(".")
        try:
            for key in keys[:-1]:
                node = node[int(key)] if isinstance(node, list) else node[key]
            last = int(keys[-1]) if isinstance(node, list) else keys[-1]
            current = node[last]
        except (KeyError, IndexError, ValueError, TypeError):
            raise ConfigurationError(f"sweep.parameter: {path!r} does not exist in the config") from None
        if isinstance(current, bool) or not isinstance(current, (int, float)):
            raise ConfigurationError(f"sweep.parameter: {path!r} is not numeric")
        node[last] = int(round(value)) if isinstance(current, int) else float(value)
        return ExperimentConfig.from_dict(data)


@dataclass(frozen=True)
class CompareConfig:
    interarrival: Distribution | None = None
    service: Distribution | None = None
    interarrivals: tuple | None = None
    services: tuple | None = None
    n: int = 250
    instances: int = 1
    seed: int = 0

    @classmethod
    def from_dict(cls, data: dict) -> "CompareConfig":
        validate(data, "compare")
        return cls(
            interarrival=_dist(data.get("interarrival"), "interarrival"),
            service=_dist(data.get("service"), "service"),
            interarrivals=None if "interarrivals" not in data else tuple(map(float, data["interarrivals"])),
            services=None if "services" not in data else tuple(map(float, data["services"])),
            n=int(data.get("n", 250)),
            instances=int(data.get("instances", 1)),
            seed=int(data.get("seed", 0)),
        )


def read_json(path) -> dict:
    """Load a JSON file; decoding problems become configuration errors with
    the line and column."""
    with open(path) as fh:
        text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
