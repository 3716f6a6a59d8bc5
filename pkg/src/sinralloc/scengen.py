"""Seeded random scenario generator.

Users are dropped uniformly in a square sized for the requested density;
each receiver sits at a Gaussian distance (resampled below 1 m) in a
uniform direction from its transmitter. Gains follow ``max(d, 1) ** -alpha``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .model import Scenario, User, db_to_linear

# Table of revenues per SINR target (dB) for the max-revenue objective.
MAX_REVENUE_TABLE = {0: 1.0, 3: 2.0, 6: 3.0, 9: 4.0, 12: 5.0}

CHANNEL_SET_MODES = ("equal", "uniform")
REVENUE_MODES = ("max_sat", "max_revenue")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GenConfig:
    user_count: int
    density: float = 1.0 / 800.0
    link_distance_mean: float = 10.0
    link_distance_variance: float = 5.0
    tx_power: float = 1.0
    noise: float = 1e-8
    pathloss_exponent: float = 4.0
    channel_universe: int = 10
    channel_set_mode: str = "uniform"
    sinr_targets_db: tuple = (0.0, 3.0, 6.0, 9.0, 12.0)
    revenue_mode: str = "max_sat"
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "sinr_targets_db", tuple(float(t) for t in self.sinr_targets_db))
        errors = self.errors()
        if errors:
            raise ConfigError("; ".join(errors))

    def errors(self) -> list[str]:
        e = []
        if self.user_count < 0:
            e.append(f"user_count: must be >= 0, got {self.user_count}")
        if not self.density > 0:
            e.append(f"density: must be > 0, got {self.density}")
        if self.link_distance_variance < 0:
            e.append(f"link_distance_variance: must be >= 0, got {self.link_distance_variance}")
        if not self.tx_power > 0:
            e.append(f"tx_power: must be > 0, got {self.tx_power}")
        if not self.noise > 0:
            e.append(f"noise: must be > 0, got {self.noise}")
        if self.pathloss_exponent < 0:
            e.append(f"pathloss_exponent: must be >= 0, got {self.pathloss_exponent}")
        if self.channel_set_mode not in CHANNEL_SET_MODES:
            e.append(f"channel_set_mode: must be one of {CHANNEL_SET_MODES}, got {self.channel_set_mode!r}")
        if self.channel_universe < 1:
            e.append(f"channel_universe: must be >= 1, got {self.channel_universe}")
        elif self.channel_set_mode == "uniform" and self.channel_universe < 2:
            e.append("channel_universe: must be >= 2 in uniform mode")
        if not self.sinr_targets_db:
            e.append("sinr_targets_db: must not be empty")
        if self.revenue_mode not in REVENUE_MODES:
            e.append(f"revenue_mode: must be one of {REVENUE_MODES}, got {self.revenue_mode!r}")
        elif self.revenue_mode == "max_revenue":
            missing = [t for t in self.sinr_targets_db if _table_key(t) not in MAX_REVENUE_TABLE]
            if missing:
                e.append(f"sinr_targets_db: no max_revenue value for {missing}")
        if self.link_distance_mean + 10 * math.sqrt(self.link_distance_variance) < 1:
            e.append("link_distance_mean: distribution puts no mass at >= 1 m")
        return e

    @property
    def square_side(self) -> float:
        return math.sqrt(self.user_count / self.density)

    def replace(self, **changes) -> "GenConfig":
        return GenConfig(**{**asdict(self), **changes})

    @classmethod
    def from_dict(cls, doc: dict) -> "GenConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ConfigError(f"unknown config fields: {unknown}")
        return cls(**doc)

    @classmethod
    def load(cls, path) -> "GenConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _table_key(target_db: float):
    return int(target_db) if float(target_db).is_integer() else target_db


def draw_channel_sets(config: GenConfig, rng: np.random.Generator) -> list[tuple[int, ...]]:
    k = config.channel_universe
    universe = np.arange(1, k + 1)
    if config.channel_set_mode == "equal":
        return [tuple(universe.tolist()) for _ in range(config.user_count)]
    sets = []
    for _ in range(config.user_count):
        size = int(rng.integers(2, k + 1))
        chosen = np.sort(rng.choice(universe, size=size, replace=False))
        sets.append(tuple(int(c) for c in chosen))
    return sets


def _link_lengths(config: GenConfig, rng: np.random.Generator, n: int) -> np.ndarray:
    std = math.sqrt(config.link_distance_variance)
    out = rng.normal(config.link_distance_mean, std, size=n)
    bad = out < 1.0
    while bad.any():
        out[bad] = rng.normal(config.link_distance_mean, std, size=int(bad.sum()))
        bad = out < 1.0
    return out


def geometric_gain(tx: np.ndarray, rx: np.ndarray, alpha: float) -> np.ndarray:
    """``[j, i] -> max(|tx_j - rx_i|, 1) ** -alpha``."""
    d = np.linalg.norm(tx[:, None, :] - rx[None, :, :], axis=-1)
    return np.maximum(d, 1.0) ** (-alpha)


def generate(config: GenConfig) -> Scenario:
    """Draw a scenario; identical configs give identical scenarios."""
    rng = np.random.default_rng(config.seed)
    n = config.user_count
    side = config.square_side
    tx = rng.uniform(0.0, side, size=(n, 2))
    length = _link_lengths(config, rng, n)
    theta = rng.uniform(0.0, 2.0 * math.pi, size=n)
    rx = tx + length[:, None] * np.column_stack([np.cos(theta), np.sin(theta)])
    gain = geometric_gain(tx, rx, config.pathloss_exponent)
    targets_db = np.asarray(config.sinr_targets_db)[rng.integers(0, len(config.sinr_targets_db), size=n)]
    channel_sets = draw_channel_sets(config, rng)
    if config.revenue_mode == "max_sat":
        revenue = np.ones(n)
    else:
        revenue = np.array([MAX_REVENUE_TABLE[_table_key(t)] for t in targets_db])
    targets = db_to_linear(targets_db)
    users = tuple(
        User(i, (float(tx[i, 0]), float(tx[i, 1])), (float(rx[i, 0]), float(rx[i, 1])),
             config.tx_power, float(targets[i]), float(revenue[i]), channel_sets[i])
        for i in range(n)
    )
    return Scenario(users, gain, config.noise, config.channel_universe)


def symmetrize(scenario: Scenario) -> Scenario:
    """Reciprocal copy: off-diagonal gains replaced by ``(g + g.T) / 2``."""
    g = scenario.gain
    sym = (g + g.T) / 2.0
    np.fill_diagonal(sym, np.diag(g))
    return scenario.with_gain(sym)


def common_target(scenario: Scenario, target_db: float) -> Scenario:
    """Copy of ``scenario`` with every SINR target set to ``target_db``."""
    beta = float(db_to_linear(target_db))
    users = tuple(User(u.id, u.tx_position, u.rx_position, u.power, beta, u.revenue, u.channel_set)
                  for u in scenario.users)
    return Scenario(users, scenario.gain, scenario.noise, scenario.channel_count)
