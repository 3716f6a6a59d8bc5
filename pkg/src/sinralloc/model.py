"""Physical system model: users, gains, SINR and allocation success.

All arithmetic is linear scale. dB only appears when reading or writing
scenario files (``sinr_target_db``).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np


class ScenarioError(ValueError):
    """Raised for malformed scenarios or allocations."""


def db_to_linear(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class User:
    id: int
    tx_position: tuple[float, float]
    rx_position: tuple[float, float]
    power: float
    sinr_target: float
    revenue: float
    channel_set: tuple[int, ...]

    def __post_init__(self):
        if not self.power > 0:
            raise ScenarioError(f"user {self.id}: power must be > 0, got {self.power}")
        if not self.sinr_target > 0:
            raise ScenarioError(f"user {self.id}: sinr_target must be > 0, got {self.sinr_target}")
        if self.revenue < 0:
            raise ScenarioError(f"user {self.id}: revenue must be >= 0, got {self.revenue}")
        if not self.channel_set:
            raise ScenarioError(f"user {self.id}: empty channel set")
        if len(set(self.channel_set)) != len(self.channel_set):
            raise ScenarioError(f"user {self.id}: duplicate channels {self.channel_set}")

    @property
    def capacity(self) -> int:
        return len(self.channel_set)


@dataclass(frozen=True, eq=False)
class Scenario:
    """A physical instance.

    ``gain[j, i]`` is the gain from transmitter ``j`` to receiver ``i``; the
    diagonal holds the desired-link gains. Channels are numbered ``1..channel_count``.
    """

    users: tuple[User, ...]
    gain: np.ndarray
    noise: float
    channel_count: int

    def __post_init__(self):
        users = tuple(self.users)
        object.__setattr__(self, "users", users)
        gain = np.array(self.gain, dtype=float)
        n = len(users)
        if gain.shape != (n, n):
            raise ScenarioError(f"gain matrix shape {gain.shape} does not match {n} users")
        if n and not np.all(gain > 0):
            raise ScenarioError("all channel gains must be > 0")
        if not self.noise > 0:
            raise ScenarioError(f"noise must be > 0, got {self.noise}")
        if self.channel_count < 1:
            raise ScenarioError(f"channel_count must be >= 1, got {self.channel_count}")
        for u in users:
            bad = [k for k in u.channel_set if not 1 <= k <= self.channel_count]
            if bad:
                raise ScenarioError(
                    f"user {u.id}: channels {bad} outside 1..{self.channel_count}")
        gain.setflags(write=False)
        object.__setattr__(self, "gain", gain)

    @property
    def n(self) -> int:
        return len(self.users)

    @property
    def power(self) -> np.ndarray:
        return np.array([u.power for u in self.users], dtype=float)

    @property
    def sinr_target(self) -> np.ndarray:
        return np.array([u.sinr_target for u in self.users], dtype=float)

    @property
    def revenue(self) -> np.ndarray:
        return np.array([u.revenue for u in self.users], dtype=float)

    @property
    def capacity(self) -> np.ndarray:
        return np.array([u.capacity for u in self.users], dtype=int)

    def tx_positions(self) -> np.ndarray:
        return np.array([u.tx_position for u in self.users], dtype=float).reshape(-1, 2)

    def rx_positions(self) -> np.ndarray:
        return np.array([u.rx_position for u in self.users], dtype=float).reshape(-1, 2)

    def with_gain(self, gain) -> "Scenario":
        return Scenario(self.users, gain, self.noise, self.channel_count)

    def to_dict(self) -> dict:
        return {
            "users": [
                {
                    "tx_position": list(u.tx_position),
                    "rx_position": list(u.rx_position),
                    "power_watts": u.power,
                    "sinr_target_db": float(linear_to_db(u.sinr_target)),
                    "revenue": u.revenue,
                    "channels": list(u.channel_set),
                }
                for u in self.users
            ],
            "gain": self.gain.tolist(),
            "noise_watts": self.noise,
            "channel_count": self.channel_count,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Scenario":
        try:
            users = tuple(
                User(
                    id=i,
                    tx_position=tuple(float(v) for v in u["tx_position"]),
                    rx_position=tuple(float(v) for v in u["rx_position"]),
                    power=float(u["power_watts"]),
                    sinr_target=float(db_to_linear(u["sinr_target_db"])),
                    revenue=float(u["revenue"]),
                    channel_set=tuple(int(k) for k in u["channels"]),
                )
                for i, u in enumerate(doc["users"])
            )
            return cls(users, np.array(doc["gain"], dtype=float).reshape(len(users), len(users)),
                       float(doc["noise_watts"]), int(doc["channel_count"]))
        except KeyError as exc:
            raise ScenarioError(f"missing field {exc.args[0]!r} in scenario document") from None

    def to_json(self, indent: Optional[int] = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_json(cls, text: str) -> "Scenario":
        return cls.from_dict(json.loads(text))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path) -> "Scenario":
        return cls.from_json(Path(path).read_text())


@dataclass(frozen=True)
class Allocation:
    """One optional channel per user (``None`` means silent)."""

    assignment: tuple[Optional[int], ...]

    @classmethod
    def empty(cls, n: int) -> "Allocation":
        return cls((None,) * n)

    def channel_vector(self) -> np.ndarray:
        """Assigned channels as ints, 0 for silent users."""
        return np.array([0 if k is None else k for k in self.assignment], dtype=int)

    def transmitting(self) -> np.ndarray:
        return np.array([k is not None for k in self.assignment], dtype=bool)

    def moved(self, i: int, k: Optional[int]) -> "Allocation":
        a = list(self.assignment)
        a[i] = k
        return Allocation(tuple(a))

    def validate(self, scenario: Scenario) -> None:
        if len(self.assignment) != scenario.n:
            raise ScenarioError(
                f"allocation has {len(self.assignment)} entries for {scenario.n} users")
        for u, k in zip(scenario.users, self.assignment):
            if k is not None and k not in u.channel_set:
                raise ScenarioError(f"user {u.id}: channel {k} not in {u.channel_set}")


@dataclass(frozen=True, eq=False)
class DerivedLink:
    """Per-link quantities derived from a scenario.

    ``cross[j, i] = g[j, i] * P[j]`` (diagonal zeroed). ``i_max[i] = S_i / beta_i - noise``
    can be non-positive for users that miss their target even alone.
    """

    signal: np.ndarray
    i_max: np.ndarray
    cross: np.ndarray
    infeasible_alone: np.ndarray = field(repr=False)

    def i_plus(self, j: int, i: int) -> float:
        return min(self.i_max[i], self.cross[j, i])

    def i_plus_matrix(self) -> np.ndarray:
        """``[j, i] -> min(i_max[i], cross[j, i])`` with zero diagonal."""
        m = np.minimum(self.cross, self.i_max[None, :])
        np.fill_diagonal(m, 0.0)
        return m


def derive_links(scenario: Scenario) -> DerivedLink:
    power = scenario.power
    signal = np.diag(scenario.gain) * power
    i_max = signal / scenario.sinr_target - scenario.noise
    cross = scenario.gain * power[:, None]
    np.fill_diagonal(cross, 0.0)
    return DerivedLink(signal=signal, i_max=i_max, cross=cross, infeasible_alone=i_max <= 0)


def interference_omega(scenario: Scenario, allocation: Allocation, i: int, k: int) -> float:
    """Accumulated interference at receiver ``i`` from users transmitting on ``k``."""
    if not 1 <= k <= scenario.channel_count:
        raise ScenarioError(f"channel {k} outside 1..{scenario.channel_count}")
    ch = allocation.channel_vector()
    on_k = ch == k
    on_k[i] = False
    return float(np.dot(scenario.gain[on_k, i], scenario.power[on_k]))


def compute_sinr(scenario: Scenario, allocation: Allocation, i: int) -> Optional[float]:
    """SINR of user ``i`` on its assigned channel, or ``None`` if it is silent."""
    k = allocation.assignment[i]
    if k is None:
        return None
    signal = scenario.gain[i, i] * scenario.users[i].power
    return signal / (scenario.noise + interference_omega(scenario, allocation, i, k))


def all_sinr(scenario: Scenario, allocation: Allocation) -> np.ndarray:
    """Vectorised SINR for every user; NaN for silent users."""
    ch = allocation.channel_vector()
    power = scenario.power
    same = (ch[:, None] == ch[None, :]) & (ch[:, None] > 0)
    np.fill_diagonal(same, False)
    omega = (same * (scenario.gain * power[:, None])).sum(axis=0)
    sinr = np.diag(scenario.gain) * power / (scenario.noise + omega)
    sinr[ch == 0] = np.nan
    return sinr


@dataclass(frozen=True)
class Success:
    successful: bool
    satisfied: tuple[bool, ...]
    revenue: float

    @property
    def satisfied_count(self) -> int:
        return sum(self.satisfied)


def is_successful(scenario: Scenario, allocation: Allocation) -> Success:
    """Check that every transmitting user meets its SINR target.

    ``satisfied[i]`` is true only for transmitting users at or above target;
    ``revenue`` sums over those users.
    """
    allocation.validate(scenario)
    sinr = all_sinr(scenario, allocation)
    tx = allocation.transmitting()
    ok = tx & (np.nan_to_num(sinr, nan=-math.inf) >= scenario.sinr_target)
    revenue = float(scenario.revenue[ok].sum())
    return Success(bool(np.all(ok[tx])), tuple(bool(v) for v in ok), revenue)


def satisfied_by_omega(scenario: Scenario, allocation: Allocation) -> np.ndarray:
    """Satisfaction via the equivalent test ``omega_i <= i_max_i`` (transmitting users)."""
    links = derive_links(scenario)
    ch = allocation.channel_vector()
    omega = np.array([
        interference_omega(scenario, allocation, i, int(k)) if k else 0.0
        for i, k in enumerate(ch)
    ])
    return (ch > 0) & (omega <= links.i_max)


def scenario_from_arrays(gain, power, sinr_target, noise: float, channel_sets: Sequence[Sequence[int]],
                         channel_count: Optional[int] = None, revenue=None,
                         tx_positions=None, rx_positions=None) -> Scenario:
    """Build a scenario from plain arrays (targets in linear scale)."""
    gain = np.asarray(gain, dtype=float)
    n = gain.shape[0]
    power = np.broadcast_to(np.asarray(power, dtype=float), (n,))
    sinr_target = np.broadcast_to(np.asarray(sinr_target, dtype=float), (n,))
    revenue = np.ones(n) if revenue is None else np.broadcast_to(np.asarray(revenue, dtype=float), (n,))
    if channel_count is None:
        channel_count = max((max(s) for s in channel_sets), default=1)
    tx = np.zeros((n, 2)) if tx_positions is None else np.asarray(tx_positions, dtype=float)
    rx = np.zeros((n, 2)) if rx_positions is None else np.asarray(rx_positions, dtype=float)
    users = tuple(
        User(i, tuple(map(float, tx[i])), tuple(map(float, rx[i])), float(power[i]),
             float(sinr_target[i]), float(revenue[i]), tuple(int(k) for k in channel_sets[i]))
        for i in range(n)
    )
    return Scenario(users, gain, float(noise), int(channel_count))


def blocked_channels(scenario: Scenario, allocation: Allocation, i: int) -> list[int]:
    """Channels of the universe whose accumulated interference at ``i`` exceeds ``i_max``."""
    links = derive_links(scenario)
    return [k for k in range(1, scenario.channel_count + 1)
            if interference_omega(scenario, allocation, i, k) > links.i_max[i]]


def blocking_budget(scenario: Scenario, allocation: Allocation, i: int) -> float:
    """``sum_{j != i transmitting} I+_{j,i} / i_max_i``; bounds the blocked-channel count."""
    links = derive_links(scenario)
    tx = allocation.transmitting().copy()
    tx[i] = False
    return float(links.i_plus_matrix()[tx, i].sum() / links.i_max[i])
