"""Binary quadratic constraint (BQC) admission problems built from a scenario.

Constraint for user ``i``::

    x_i * (1 + sum_{j != i} coeff[i, j] * x_j) <= capacity[i]

``coeff[i, j]`` is the (clamped) interference of ``j`` at ``i`` relative to
what ``i`` can tolerate, optionally weighted by channel-set overlap.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .model import Scenario, derive_links

# Relative slack on capacities, absorbs float drift only.
FEAS_TOL = 1e-9

DEFAULT_DENSITY = 1.0 / 800.0


@dataclass(frozen=True, eq=False)
class BqcProblem:
    coeff: np.ndarray
    capacity: np.ndarray
    revenue: np.ndarray
    forced_zero: frozenset = frozenset()

    def __post_init__(self):
        coeff = np.array(self.coeff, dtype=float)
        n = coeff.shape[0] if coeff.ndim == 2 else -1
        if coeff.shape != (n, n):
            raise ValueError(f"coefficient matrix must be square, got {coeff.shape}")
        if np.any(coeff < 0):
            raise ValueError("coefficients must be nonnegative")
        capacity = np.array(self.capacity, dtype=int)
        revenue = np.array(self.revenue, dtype=float)
        if capacity.shape != (n,) or revenue.shape != (n,):
            raise ValueError("capacity and revenue must have one entry per user")
        if np.any(capacity < 1):
            raise ValueError("capacities must be >= 1")
        if np.any(revenue < 0):
            raise ValueError("revenues must be >= 0")
        np.fill_diagonal(coeff, 0.0)
        for arr in (coeff, capacity, revenue):
            arr.setflags(write=False)
        object.__setattr__(self, "coeff", coeff)
        object.__setattr__(self, "capacity", capacity)
        object.__setattr__(self, "revenue", revenue)
        object.__setattr__(self, "forced_zero", frozenset(int(i) for i in self.forced_zero))

    @property
    def n(self) -> int:
        return len(self.capacity)

    def load(self, x) -> np.ndarray:
        """``x_i * (1 + sum_j coeff[i, j] x_j)`` for every row."""
        x = np.asarray(x, dtype=float)
        return x * (1.0 + self.coeff @ x)

    def slack(self, x) -> np.ndarray:
        return self.capacity - self.load(x)

    def objective(self, x) -> float:
        return float(np.dot(self.revenue, np.asarray(x, dtype=float)))

    def to_dict(self) -> dict:
        return {
            "coeff": self.coeff.tolist(),
            "capacity": self.capacity.tolist(),
            "revenue": self.revenue.tolist(),
            "forced_zero": sorted(self.forced_zero),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "BqcProblem":
        n = len(doc["capacity"])
        return cls(np.array(doc["coeff"], dtype=float).reshape(n, n), doc["capacity"],
                   doc["revenue"], frozenset(doc.get("forced_zero", ())))

    def to_json(self, indent=None) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_json(cls, text: str) -> "BqcProblem":
        return cls.from_dict(json.loads(text))


def _ratio_matrix(scenario: Scenario):
    links = derive_links(scenario)
    forced = np.flatnonzero(links.infeasible_alone)
    iplus = links.i_plus_matrix()  # [j, i]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = (iplus / links.i_max[None, :]).T  # [i, j]
    # Users that fail alone: I+ clamps to i_max, so every interferer counts fully.
    ratio[forced, :] = 1.0
    np.fill_diagonal(ratio, 0.0)
    return ratio, frozenset(int(i) for i in forced)


def overlap_fraction(scenario: Scenario) -> np.ndarray:
    """``[i, j] -> |K_j & K_i| / K_j``."""
    n = scenario.n
    sets = [set(u.channel_set) for u in scenario.users]
    frac = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                frac[i, j] = len(sets[i] & sets[j]) / len(sets[j])
    return frac


def build_equal(scenario: Scenario) -> BqcProblem:
    """Sufficient-condition problem: ``coeff[i, j] = I+_{j,i} / I_max_i``."""
    ratio, forced = _ratio_matrix(scenario)
    return BqcProblem(ratio, scenario.capacity, scenario.revenue, forced)


def build_unequal(scenario: Scenario) -> BqcProblem:
    """Overlap-weighted problem for users with different channel sets."""
    ratio, forced = _ratio_matrix(scenario)
    return BqcProblem(ratio * overlap_fraction(scenario), scenario.capacity,
                      scenario.revenue, forced)


def neighbor_radius(neighbor_count: float, density: float = DEFAULT_DENSITY) -> float:
    """Radius holding ``neighbor_count`` users on average at ``density`` users/m^2."""
    if neighbor_count < 0:
        raise ValueError("neighbor_count must be >= 0")
    if density <= 0:
        raise ValueError("density must be > 0")
    return math.sqrt(neighbor_count / (density * math.pi))


def link_distances(scenario: Scenario) -> np.ndarray:
    """``[j, i] -> |tx_j - rx_i|``."""
    tx = scenario.tx_positions()
    rx = scenario.rx_positions()
    return np.linalg.norm(tx[:, None, :] - rx[None, :, :], axis=-1)


def build_neighbor_limited(scenario: Scenario, neighbor_count: float,
                           density: float = DEFAULT_DENSITY) -> BqcProblem:
    """``build_unequal`` keeping only interferers whose transmitter lies within
    the radius expected to hold ``neighbor_count`` users of receiver ``i``."""
    base = build_unequal(scenario)
    if math.isinf(neighbor_count):
        return base
    radius = neighbor_radius(neighbor_count, density)
    keep = link_distances(scenario).T <= radius  # [i, j]
    if radius == 0:
        keep[:] = False
    return BqcProblem(base.coeff * keep, base.capacity, base.revenue, base.forced_zero)


def build(scenario: Scenario, mode: str, density: float = DEFAULT_DENSITY) -> BqcProblem:
    """Dispatch on ``equal``, ``unequal`` or ``neighbor:<x>``."""
    if mode == "equal":
        return build_equal(scenario)
    if mode == "unequal":
        return build_unequal(scenario)
    if mode.startswith("neighbor:"):
        return build_neighbor_limited(scenario, float(mode.split(":", 1)[1]), density)
    raise ValueError(f"unknown transform {mode!r}; expected equal, unequal or neighbor:<x>")


def check_bqc_feasible(problem: BqcProblem, x) -> bool:
    x = np.asarray(x)
    if x.shape != (problem.n,):
        raise ValueError(f"x must have length {problem.n}")
    if any(x[i] for i in problem.forced_zero):
        return False
    load = problem.load(x)
    return bool(np.all(load <= problem.capacity * (1.0 + FEAS_TOL)))
