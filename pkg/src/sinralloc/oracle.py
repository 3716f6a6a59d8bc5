"""Exact exhaustive solvers used as ground truth for the heuristics.

Both searches are depth-first in user order with two cuts: a prefix that
already violates some constraint stays violated (interference only grows as
users are added), and a branch whose optimistic revenue cannot beat the
incumbent is skipped. Among optima the lexicographically smallest vector is
reported (channel vector with 0 for silence, or the binary admit vector).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import Allocation, Scenario, derive_links
from .transform import FEAS_TOL, BqcProblem

DEFAULT_ORIGINAL_BUDGET = 10**8
DEFAULT_BQC_BUDGET = 2**24


class BudgetExceeded(RuntimeError):
    def __init__(self, candidates: int, budget: int):
        super().__init__(f"{candidates} candidates exceed enumeration budget {budget}")
        self.candidates = candidates
        self.budget = budget


@dataclass(frozen=True)
class ExactResult:
    objective: float
    argmax: tuple
    explored: int

    def to_dict(self) -> dict:
        return {"objective": self.objective, "argmax": list(self.argmax), "explored": self.explored}


def original_candidate_count(scenario: Scenario) -> int:
    return math.prod(u.capacity + 1 for u in scenario.users)


def _all_sets_equal(scenario: Scenario) -> bool:
    sets = {u.channel_set for u in scenario.users}
    return len(sets) <= 1 and all(
        sorted(u.channel_set) == list(range(1, len(u.channel_set) + 1)) for u in scenario.users)


class _Assigner:
    """Incremental co-channel interference bookkeeping for the DFS."""

    def __init__(self, scenario: Scenario):
        links = derive_links(scenario)
        n = scenario.n
        self.n = n
        self.cross = links.cross.tolist()  # [j][i]
        self.i_max = links.i_max.tolist()
        self.sets = [list(u.channel_set) for u in scenario.users]
        self.revenue = scenario.revenue.tolist()
        self.on_channel: dict[int, list[int]] = {}
        self.omega = [0.0] * n
        self.symmetric = _all_sets_equal(scenario)
        self.explored = 0

    def try_add(self, j: int, k: int) -> bool:
        """Put ``j`` on ``k`` if everyone on ``k`` (and ``j``) stays within budget."""
        cross = self.cross
        users = self.on_channel.get(k, ())
        own = 0.0
        for i in users:
            if self.omega[i] + cross[j][i] > self.i_max[i]:
                return False
            own += cross[i][j]
        if own > self.i_max[j]:
            return False
        for i in users:
            self.omega[i] += cross[j][i]
        self.omega[j] = own
        self.on_channel.setdefault(k, []).append(j)
        return True

    def remove(self, j: int, k: int) -> None:
        users = self.on_channel[k]
        users.pop()
        for i in users:
            self.omega[i] -= self.cross[j][i]
        self.omega[j] = 0.0

    def options(self, j: int, used: int) -> list[int]:
        chans = self.sets[j]
        if self.symmetric:
            # channels are interchangeable: only open one new channel at a time
            return [k for k in chans if k <= used + 1]
        return chans


def solve_original_exact(scenario: Scenario, budget: int = DEFAULT_ORIGINAL_BUDGET) -> ExactResult:
    """Maximum revenue over all successful single-channel allocations."""
    candidates = original_candidate_count(scenario)
    if candidates > budget:
        raise BudgetExceeded(candidates, budget)
    n = scenario.n
    st = _Assigner(scenario)
    links_ok = [m > 0 for m in st.i_max]
    rev = st.revenue
    suffix = [0.0] * (n + 1)
    for j in range(n - 1, -1, -1):
        suffix[j] = suffix[j + 1] + (rev[j] if links_ok[j] else 0.0)

    best = [-1.0]
    choice = [0] * n

    # Pass 1: optimum value, transmit-first for early incumbents.
    def dfs(j: int, value: float, used: int) -> None:
        st.explored += 1
        if j == n:
            if value > best[0]:
                best[0] = value
            return
        if value + suffix[j] <= best[0]:
            return
        if links_ok[j]:
            for k in st.options(j, used):
                if st.try_add(j, k):
                    dfs(j + 1, value + rev[j], max(used, k))
                    st.remove(j, k)
        dfs(j + 1, value, used)

    dfs(0, 0.0, 0)
    target = best[0]

    # Pass 2: lexicographically smallest vector reaching the optimum.
    found: list[Optional[tuple]] = [None]

    def lex(j: int, value: float, used: int) -> bool:
        st.explored += 1
        if j == n:
            if value >= target - 1e-12 * max(1.0, abs(target)):
                found[0] = tuple(choice)
                return True
            return False
        if value + suffix[j] < target - 1e-12 * max(1.0, abs(target)):
            return False
        choice[j] = 0
        if lex(j + 1, value, used):
            return True
        if links_ok[j]:
            for k in st.options(j, used):
                if st.try_add(j, k):
                    choice[j] = k
                    hit = lex(j + 1, value + rev[j], max(used, k))
                    st.remove(j, k)
                    if hit:
                        return True
            choice[j] = 0
        return False

    lex(0, 0.0, 0)
    return ExactResult(float(target), found[0], st.explored)


def as_allocation(result: ExactResult) -> Allocation:
    return Allocation(tuple(int(k) if k else None for k in result.argmax))


def find_assignment(scenario: Scenario, x) -> Optional[Allocation]:
    """Exhaustive search for channels that satisfy every user with ``x_i = 1``.

    Returns ``None`` when no such assignment exists.
    """
    x = [int(v) for v in x]
    st = _Assigner(scenario)
    admitted = [i for i, v in enumerate(x) if v]
    if any(st.i_max[i] <= 0 for i in admitted):
        return None
    choice: dict[int, int] = {}

    def dfs(pos: int, used: int) -> bool:
        st.explored += 1
        if pos == len(admitted):
            return True
        j = admitted[pos]
        for k in st.options(j, used):
            if st.try_add(j, k):
                choice[j] = k
                if dfs(pos + 1, max(used, k)):
                    return True
                st.remove(j, k)
        return False

    if not dfs(0, 0):
        return None
    return Allocation(tuple(choice.get(i) for i in range(scenario.n)))


def solve_bqc_exact(problem: BqcProblem, budget: int = DEFAULT_BQC_BUDGET) -> ExactResult:
    """Best admit vector satisfying every BQC constraint."""
    candidates = 2**problem.n
    if candidates > budget:
        raise BudgetExceeded(candidates, budget)
    allowed = [i not in problem.forced_zero for i in range(problem.n)]
    return max_weight_subset(problem.coeff, problem.capacity * (1.0 + FEAS_TOL),
                             problem.revenue, allowed)


def max_weight_subset(coeff, rhs, weight, allowed=None, forced=()) -> ExactResult:
    """Maximum-weight binary ``x`` with ``x_i (1 + sum_j coeff[i, j] x_j) <= rhs[i]``.

    ``forced`` users are fixed to 1 (the result objective is then -1 if that
    is infeasible). Lexicographically smallest optimum is returned.
    """
    coeff = np.asarray(coeff, dtype=float).tolist()
    cap = [float(c) for c in rhs]
    rev = [float(w) for w in weight]
    n = len(rev)
    if allowed is None:
        allowed = [True] * n
    must = [False] * n
    for i in forced:
        must[i] = True
    suffix = [0.0] * (n + 1)
    for j in range(n - 1, -1, -1):
        suffix[j] = suffix[j + 1] + (rev[j] if allowed[j] else 0.0)
    load = [0.0] * n
    ones: list[int] = []
    x = [0] * n
    explored = [0]

    def add(j: int) -> bool:
        own = 1.0
        row = coeff[j]
        for i in ones:
            if load[i] + coeff[i][j] > cap[i]:
                return False
            own += row[i]
        if own > cap[j]:
            return False
        for i in ones:
            load[i] += coeff[i][j]
        load[j] = own
        ones.append(j)
        x[j] = 1
        return True

    def drop(j: int) -> None:
        ones.pop()
        x[j] = 0
        load[j] = 0.0
        for i in ones:
            load[i] -= coeff[i][j]

    best = [-1.0]

    def dfs(j: int, value: float) -> None:
        explored[0] += 1
        if j == n:
            best[0] = max(best[0], value)
            return
        if value + suffix[j] <= best[0]:
            return
        if allowed[j] and add(j):
            dfs(j + 1, value + rev[j])
            drop(j)
        if not must[j]:
            dfs(j + 1, value)

    dfs(0, 0.0)
    target = best[0]
    if target < 0:
        return ExactResult(-1.0, None, explored[0])
    tol = 1e-12 * max(1.0, abs(target))
    found: list[Optional[tuple]] = [None]

    def lex(j: int, value: float) -> bool:
        explored[0] += 1
        if j == n:
            if value >= target - tol:
                found[0] = tuple(x)
                return True
            return False
        if value + suffix[j] < target - tol:
            return False
        if not must[j] and lex(j + 1, value):
            return True
        if allowed[j] and add(j):
            hit = lex(j + 1, value + rev[j])
            drop(j)
            return hit
        return False

    lex(0, 0.0)
    return ExactResult(float(target), found[0], explored[0])


def bqc_feasible_vectors(problem: BqcProblem):
    """Yield every BQC-feasible admit vector (as a numpy array)."""
    n = problem.n
    coeff = problem.coeff.tolist()
    cap = [c * (1.0 + FEAS_TOL) for c in problem.capacity.tolist()]
    allowed = [i not in problem.forced_zero for i in range(n)]
    load = [0.0] * n
    ones: list[int] = []
    x = np.zeros(n, dtype=int)

    def rec(j: int):
        if j == n:
            yield x.copy()
            return
        yield from rec(j + 1)
        if not allowed[j]:
            return
        own = 1.0 + sum(coeff[j][i] for i in ones)
        if own > cap[j] or any(load[i] + coeff[i][j] > cap[i] for i in ones):
            return
        for i in ones:
            load[i] += coeff[i][j]
        load[j] = own
        ones.append(j)
        x[j] = 1
        yield from rec(j + 1)
        ones.pop()
        x[j] = 0
        load[j] = 0.0
        for i in ones:
            load[i] -= coeff[i][j]

    yield from rec(0)
