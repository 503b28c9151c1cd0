"""Run configuration: a single JSON document describing one pipeline run."""
from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass, field
from typing import Optional

from .cluster import ClusteringConfig
from .dataset import CIRCLE_PRESETS, CircleSpec, InvalidSpecError
from .gmm import GmmParams

MODES = ("standard", "soft-mode", "soft-sample")
FILTERS = ("x", "y", "mean_distance")


class ConfigError(ValueError):
    """A configuration that cannot describe a valid run."""


@dataclass
class RunConfig:
    dataset: dict = field(default_factory=lambda: {"preset": "two_circles"})
    filter: str = "x"
    K: int = 6
    overlap: float = 0.33
    clustering: dict = field(default_factory=dict)
    lambda1: float = 1.0
    lambda2: float = 1.0
    learning_rate: float = 0.005
    steps: int = 200
    gradient_mode: str = "analytic"
    seed: int = 0
    mode: str = "soft-mode"
    samples: int = 100
    truth: dict = field(default_factory=dict)
    checkpoint_every: int = 0
    init_params: Optional[dict] = None
    out: Optional[str] = None

    # fields present in the source document, so presets can be layered underneath
    explicit: dict = field(default_factory=dict, repr=False, compare=False)

    def validate(self) -> "RunConfig":
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.filter not in FILTERS and not str(self.filter).startswith("coordinate:"):
            raise ConfigError(f"filter must be one of {FILTERS} or 'coordinate:<axis>', got {self.filter!r}")
        if int(self.K) < 1:
            raise ConfigError("K must be at least 1")
        if not 0 <= self.overlap < 1:
            raise ConfigError("overlap must lie in [0, 1)")
        if self.mode == "soft-sample" and int(self.samples) < 1:
            raise ConfigError("soft-sample needs samples >= 1")
        if int(self.checkpoint_every) < 0:
            raise ConfigError("checkpoint_every must be nonnegative")
        if self.mode != "standard":
            if self.learning_rate < 0 or int(self.steps) < 1:
                raise ConfigError("soft modes need learning_rate >= 0 and steps >= 1")
            if self.lambda1 < 0 or self.lambda2 < 0 or self.lambda1 + self.lambda2 == 0:
                raise ConfigError("lambda1 and lambda2 must be nonnegative and not both zero")
        unknown = set(self.truth) - {"components", "loops"}
        if unknown:
            raise ConfigError(f"unknown truth fields {sorted(unknown)}")
        try:
            self.clustering_config()
            self.circle_spec()
            self.initial_params()
        except (KeyError, TypeError, ValueError) as err:
            raise ConfigError(f"{type(err).__name__}: {err}") from None
        return self

    def initial_params(self) -> Optional[GmmParams]:
        """Explicit starting mixture, or None to start from an EM fit."""
        if self.init_params is None:
            return None
        theta = GmmParams.from_dict(self.init_params)
        if theta.K != int(self.K):
            raise ConfigError(f"init_params has {theta.K} components but K is {self.K}")
        return theta

    def clustering_config(self) -> ClusteringConfig:
        return ClusteringConfig(**self.clustering)

    def circle_spec(self) -> Optional[CircleSpec]:
        """The circle layout described by ``dataset``, or None for other sources."""
        ds = self.dataset
        if "preset" in ds:
            if ds["preset"] not in CIRCLE_PRESETS:
                raise ConfigError(f"unknown dataset preset {ds['preset']!r}; known: {sorted(CIRCLE_PRESETS)}")
            spec = copy.deepcopy(CIRCLE_PRESETS[ds["preset"]])
            for key in ("points_per_circle", "noise_sd"):
                if key in ds:
                    setattr(spec, key, ds[key])
        elif "circles" in ds:
            spec = CircleSpec(**ds["circles"])
        elif "csv" in ds or "cross" in ds:
            return None
        else:
            raise ConfigError("dataset needs one of 'preset', 'circles', 'cross' or 'csv'")
        try:
            spec.validate()
        except InvalidSpecError as err:
            raise ConfigError(str(err)) from None
        return spec

    def to_dict(self) -> dict:
        data = asdict(self)
        data.pop("explicit")
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        names = set(cls.__dataclass_fields__) - {"explicit"}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config fields {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except OSError as err:
            raise ConfigError(f"cannot read config {path}: {err.strerror}") from None
        except json.JSONDecodeError as err:
            raise ConfigError(f"config {path} is not valid JSON: {err}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        cfg = cls.from_dict(data)
        cfg.explicit = data
        return cfg


def _row(preset, K, eps, lr, steps, truth):
    return {"dataset": {"preset": preset}, "filter": "x", "K": K,
            "clustering": {"method": "dbscan", "eps": eps, "min_pts": 5},
            "learning_rate": lr, "steps": steps, "truth": truth}


# Parameter settings of the synthetic experiments, keyed by short name.
RUN_PRESETS = {
    "tc": _row("two_circles", 6, 0.3, 0.005, 200, {"components": 2, "loops": 2}),
    "tic": _row("intersecting_circles", 5, 0.2, 0.01, 300, {"components": 1, "loops": 3}),
    "unequal_tc": _row("unequal_circles", 5, 0.35, 0.001, 300, {"components": 2, "loops": 2}),
    "unequal_tic": _row("unequal_intersecting_circles", 5, 0.2, 0.001, 400, {"components": 1, "loops": 3}),
    "small_noise": _row("small_noise", 6, 0.2, 0.002, 250, {"components": 1, "loops": 3}),
    "big_noise": _row("big_noise", 6, 0.2, 0.001, 300, {"components": 1, "loops": 3}),
}
