"""Lagrange-relaxation admission heuristic for BQC problems.

The iteration works on rows normalised by their capacity (so every
right-hand side is 1, with ``1/K_i`` on the diagonal), drops the most
expensive variable of the most violated row until all rows fit, then
greedily re-admits dropped users by descending revenue.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .transform import FEAS_TOL, BqcProblem, check_bqc_feasible


@dataclass(frozen=True, eq=False)
class AdmissionResult:
    x: np.ndarray
    lam: np.ndarray  # multipliers accumulated on normalised rows
    objective: float
    upper_bound: float
    slack: np.ndarray
    iterations: int
    trace: list = field(default_factory=list, repr=False)

    @property
    def admitted(self) -> int:
        return int(self.x.sum())

    def to_dict(self) -> dict:
        return {
            "x": self.x.astype(int).tolist(),
            "lambda": self.lam.tolist(),
            "objective": self.objective,
            "upper_bound": self.upper_bound,
            "slack": self.slack.tolist(),
            "iterations": self.iterations,
        }


def bound_multipliers(problem: BqcProblem, lam) -> np.ndarray:
    """Rescale normalised-row multipliers to the units of the raw constraints."""
    return np.asarray(lam, dtype=float) * problem.capacity


def relaxation_value(problem: BqcProblem, x, lam) -> float:
    """Lagrangian objective ``sum r x + sum lam (K - x (1 + sum a x))`` in raw units."""
    x = np.asarray(x, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise ValueError("multipliers must be nonnegative")
    return problem.objective(x) + float(np.dot(lam, problem.slack(x)))


def upper_bound(problem: BqcProblem, result: AdmissionResult) -> float:
    return relaxation_value(problem, result.x, bound_multipliers(problem, result.lam))


def trivial_choice(problem: BqcProblem, i: int, x, lam) -> int:
    """Maximiser of the relaxed objective in ``x_i`` with everything else fixed."""
    x = np.asarray(x, dtype=float)
    others = float(np.dot(problem.coeff[i], x)) - problem.coeff[i, i] * x[i]
    return int(problem.revenue[i] - lam[i] * (1.0 + others) > 0)


def solve(problem: BqcProblem, trace: bool = False, snapshot: bool = False,
          on_event: Optional[Callable[[dict], None]] = None) -> AdmissionResult:
    """Run the heuristic.

    With ``trace`` each drop/re-admit is recorded as a dict (``snapshot`` adds
    the current ``y`` vector); ``on_event`` receives the same dicts as they happen.
    """
    n = problem.n
    cap = problem.capacity.tolist()
    rev = problem.revenue.tolist()
    coeff = problem.coeff.tolist()
    events: list = []

    def emit(ev):
        if trace:
            events.append(ev)
        if on_event is not None:
            on_event(ev)

    # Step 0
    x = [0 if i in problem.forced_zero else 1 for i in range(n)]
    lam = [0.0] * n
    norm = [[a / cap[i] for a in row] for i, row in enumerate(coeff)]
    for i in range(n):
        norm[i][i] = 1.0 / cap[i]
    y = [0.0] * n
    for i in range(n):
        if x[i]:
            row = norm[i]
            y[i] = sum(row[j] for j in range(n) if x[j])

    limit = 1.0 + FEAS_TOL
    iterations = 0
    dropped = []
    while True:
        # Step 1
        i_star, y_max = -1, limit
        for i in range(n):
            if y[i] > y_max:
                i_star, y_max = i, y[i]
        if i_star < 0:
            break
        # Step 2
        row = norm[i_star]
        j_star, best = -1, -1.0
        for j in range(n):
            if not x[j]:
                continue
            a = row[j]
            r = rev[j]
            ratio = a / r if r > 0 else (math.inf if a > 0 else 0.0)
            if ratio > best:
                j_star, best = j, ratio
        # Step 3
        inc = row[j_star]
        lam[j_star] += inc
        x[j_star] = 0
        y[j_star] = 0.0
        for i in range(n):
            if x[i]:
                y[i] -= norm[i][j_star]
        dropped.append(j_star)
        iterations += 1
        ev = {"event": "drop", "iteration": iterations, "i_star": i_star, "j_star": j_star,
              "lambda_increment": inc, "lambda": lam[j_star]}
        if snapshot:
            ev["y"] = list(y)
        emit(ev)

    # Step 4: greedy re-admission, incremental form of check_bqc_feasible
    load = [0.0] * n
    for i in range(n):
        if x[i]:
            row = coeff[i]
            load[i] = 1.0 + sum(row[j] for j in range(n) if x[j] and j != i)
    for j in sorted(dropped, key=lambda j: (-rev[j], j)):
        row_j = coeff[j]
        own = 1.0 + sum(row_j[k] for k in range(n) if x[k] and k != j)
        if own > cap[j] * limit:
            continue
        if any(x[i] and load[i] + coeff[i][j] > cap[i] * limit for i in range(n)):
            continue
        x[j] = 1
        load[j] = own
        for i in range(n):
            if x[i] and i != j:
                load[i] += coeff[i][j]
        emit({"event": "readmit", "user": j})

    xa = np.array(x, dtype=int)
    la = np.array(lam, dtype=float)
    slack = problem.slack(xa)
    objective = problem.objective(xa)
    ub = relaxation_value(problem, xa, bound_multipliers(problem, la))
    return AdmissionResult(xa, la, objective, ub, slack, iterations, events)


def trace_lines(result: AdmissionResult) -> str:
    """The recorded trace as JSON lines."""
    return "".join(json.dumps(ev) + "\n" for ev in result.trace)


def verify_result(problem: BqcProblem, result: AdmissionResult) -> list[str]:
    """Return a list of violated result invariants (empty when all hold)."""
    problems = []
    if not check_bqc_feasible(problem, result.x):
        problems.append("x is not BQC-feasible")
    if result.objective > result.upper_bound + 1e-9 * max(1.0, abs(result.upper_bound)):
        problems.append("objective exceeds upper bound")
    if np.any(result.lam < 0):
        problems.append("negative multiplier")
    if np.any(result.slack[result.x == 1] < -FEAS_TOL * problem.capacity[result.x == 1]):
        problems.append("negative slack on admitted user")
    if result.iterations > problem.n:
        problems.append("more iterations than users")
    return problems
