"""Best-response channel selection for admitted users.

Each admitted user in turn moves to the channel of its set with the least
accumulated interference, staying put on ties. Under reciprocal gains the
total co-channel interference energy (``potential``) drops with every move,
so the sweep terminates.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .model import Allocation, Scenario


@dataclass(frozen=True, eq=False)
class SelectionState:
    scenario: Scenario
    x: tuple[int, ...]
    allocation: Allocation
    potential: float
    round: int = 0
    converged: bool = False
    moves: int = 0
    trace: list = field(default_factory=list, repr=False)


def potential(scenario: Scenario, allocation: Allocation) -> float:
    """``sum_i sum_{j != i co-channel} g[j, i] P_j P_i``."""
    ch = allocation.channel_vector()
    p = scenario.power
    same = (ch[:, None] == ch[None, :]) & (ch[:, None] > 0)
    np.fill_diagonal(same, False)
    return float((same * scenario.gain * np.outer(p, p)).sum())


def _omegas(scenario: Scenario, ch: np.ndarray, i: int) -> np.ndarray:
    """Interference at receiver ``i`` on every channel (index 0 unused)."""
    mask = ch > 0
    mask[i] = False
    weights = scenario.gain[mask, i] * scenario.power[mask]
    return np.bincount(ch[mask], weights=weights, minlength=scenario.channel_count + 1)


def best_channel(scenario: Scenario, ch: np.ndarray, i: int):
    """Return ``(k_star, omega_current, omega_star)`` for user ``i``, keeping ties."""
    om = _omegas(scenario, ch, i)
    current = int(ch[i])
    k_star = current
    best = om[current] if current else np.inf
    for k in scenario.users[i].channel_set:
        if om[k] < best:
            k_star, best = k, om[k]
    return k_star, (float(om[current]) if current else np.inf), float(best)


def init_random(scenario: Scenario, x, seed) -> SelectionState:
    """Give every admitted user a uniformly random channel from its set."""
    rng = np.random.default_rng(seed)
    x = tuple(int(v) for v in x)
    if len(x) != scenario.n:
        raise ValueError(f"x has {len(x)} entries for {scenario.n} users")
    assignment = []
    for u, xi in zip(scenario.users, x):
        if xi:
            assignment.append(int(u.channel_set[rng.integers(len(u.channel_set))]))
        else:
            assignment.append(None)
    alloc = Allocation(tuple(assignment))
    return SelectionState(scenario, x, alloc, potential(scenario, alloc))


def best_response_step(state: SelectionState, i: int) -> tuple[SelectionState, bool]:
    if not state.x[i]:
        raise ValueError(f"user {i} is not admitted")
    ch = state.allocation.channel_vector()
    k_star, _, _ = best_channel(state.scenario, ch, i)
    if k_star == ch[i]:
        return state, False
    alloc = state.allocation.moved(i, k_star)
    return replace(state, allocation=alloc, potential=potential(state.scenario, alloc),
                   moves=state.moves + 1), True


def default_max_rounds(scenario: Scenario) -> int:
    kmax = max((u.capacity for u in scenario.users), default=1)
    return max(1, 10 * scenario.n * kmax)


def run(state: SelectionState, max_rounds: Optional[int] = None, trace: bool = False) -> SelectionState:
    """Sweep admitted users in index order until a sweep makes no move.

    Each trace entry records one move with the mover's interference before and
    after and the resulting potential.
    """
    sc = state.scenario
    if max_rounds is None:
        max_rounds = default_max_rounds(sc)
    ch = state.allocation.channel_vector()
    admitted = [i for i, v in enumerate(state.x) if v]
    events = list(state.trace)
    rounds = 0
    moves = state.moves
    converged = False
    while rounds < max_rounds:
        rounds += 1
        moved_any = False
        for i in admitted:
            k_star, om_old, om_new = best_channel(sc, ch, i)
            if k_star == ch[i]:
                continue
            k_old = int(ch[i])
            ch[i] = k_star
            moves += 1
            moved_any = True
            if trace:
                alloc = _to_allocation(ch)
                events.append({"round": state.round + rounds, "mover": i, "from": k_old,
                               "to": int(k_star), "omega_before": om_old, "omega_after": om_new,
                               "potential": potential(sc, alloc)})
        if not moved_any:
            converged = True
            break
    alloc = _to_allocation(ch)
    return SelectionState(sc, state.x, alloc, potential(sc, alloc), state.round + rounds,
                          converged, moves, events)


def _to_allocation(ch: np.ndarray) -> Allocation:
    return Allocation(tuple(int(k) if k else None for k in ch))


def trace_lines(state: SelectionState) -> str:
    return "".join(json.dumps(ev) + "\n" for ev in state.trace)
