"""Run configuration: defaults, validation, hashing."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Sequence

from .ensemble import DEFAULT_CYCLE, EnsembleConfig


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    layers: Sequence[int] = (128,)
    embed_dim: int = 32
    pol_degree: int = 2
    views: int = 7
    eta: float = 0.1
    iterations: int = 300
    llu: bool = False
    augment: int = 0
    lr_schedule: str = "constant"
    strategy_cycle: Sequence[str] = DEFAULT_CYCLE
    lda_ratio: float = 0.5
    encoding: str = "projection"
    hidden_rule: str = "motion"
    target_top: float = 0.25
    log_every: int = 0
    knn_k: Sequence[int] = (1,)
    seed: int = 42
    simulations: int = 5
    test_fraction: float = 0.2

    def __post_init__(self):
        self.layers = tuple(int(n) for n in self.layers)
        self.strategy_cycle = tuple(self.strategy_cycle)
        self.knn_k = tuple(int(k) for k in ([self.knn_k] if isinstance(self.knn_k, int) else self.knn_k))
        if self.simulations < 1:
            raise ConfigError("simulations must be >= 1")
        if not self.knn_k or min(self.knn_k) < 1:
            raise ConfigError("knn_k entries must be >= 1")
        if not 0 < self.test_fraction < 1:
            raise ConfigError("test_fraction must be in (0, 1)")
        try:
            self.ensemble_config()
            self.ensemble_config().network_config(2)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def ensemble_config(self) -> EnsembleConfig:
        return EnsembleConfig(hidden_sizes=self.layers, embed_dim=self.embed_dim,
                              poly_degree=self.pol_degree, views=self.views, eta=self.eta,
                              iterations=self.iterations, llu=self.llu, augment=self.augment,
                              lr_schedule=self.lr_schedule, strategy_cycle=self.strategy_cycle,
                              lda_ratio=self.lda_ratio, encoding=self.encoding,
                              hidden_rule=self.hidden_rule, target_top=self.target_top,
                              log_every=self.log_every)

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            d = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(d)

    def replace(self, **changes) -> "RunConfig":
        d = self.to_dict()
        d.update(changes)
        return RunConfig.from_dict(d)

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


def simulation_seed(seed: int, s: int) -> int:
    """Seed of simulation ``s``; views then use ``simulation_seed ^ k``."""
    return seed + 1_000_003 * s
