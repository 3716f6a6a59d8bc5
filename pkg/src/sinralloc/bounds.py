"""Necessary-condition check and the constant-factor approximation check.

For equal channel sets, a common SINR target and distance-based gains, any
successful allocation obeys the sufficient-style constraint with capacity
inflated by ``C = min(2**alpha + 1, 10)``. Comparing the sufficient and the
necessary constraint bounds the loss from admitting with the former.

Two constants are in circulation for the approximation statement:
``min(2**alpha - 1, 10)`` and ``min(2**alpha + 1, 10)``. Both are evaluated.
They coincide for ``alpha >= 4``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .model import Scenario, derive_links
from .oracle import DEFAULT_ORIGINAL_BUDGET, max_weight_subset, solve_bqc_exact, solve_original_exact
from .transform import FEAS_TOL, build_equal, link_distances

DEFAULT_ALPHA = 4.0


class PreconditionError(ValueError):
    """The scenario is outside the regime the bound is stated for."""


def necessary_constant(alpha: float) -> float:
    return min(2.0**alpha + 1.0, 10.0)


def approximation_constant(alpha: float) -> float:
    return min(2.0**alpha - 1.0, 10.0)


def check_preconditions(scenario: Scenario, alpha: float = DEFAULT_ALPHA,
                        geometric: bool = True, rtol: float = 1e-9) -> None:
    users = scenario.users
    if len({u.channel_set for u in users}) > 1:
        raise PreconditionError("channel sets differ between users")
    targets = scenario.sinr_target
    if len(targets) and not np.allclose(targets, targets[0], rtol=1e-12, atol=0):
        raise PreconditionError("SINR targets differ between users")
    if geometric and scenario.n:
        expected = np.maximum(link_distances(scenario), 1.0) ** (-alpha)
        if not np.allclose(scenario.gain, expected, rtol=rtol, atol=0):
            raise PreconditionError(
                f"gains are not max(d, 1)**-{alpha} of the user positions")


def necessary_loads(scenario: Scenario, x) -> np.ndarray:
    coeff = build_equal(scenario).coeff
    x = np.asarray(x, dtype=float)
    return x * (1.0 + coeff @ x)


def necessary_check(scenario: Scenario, x, alpha: float = DEFAULT_ALPHA,
                    geometric: bool = True) -> bool:
    """True iff every admitted user satisfies the relaxed (necessary) constraint."""
    check_preconditions(scenario, alpha, geometric)
    x = np.asarray(x, dtype=int)
    links = derive_links(scenario)
    if np.any(x.astype(bool) & links.infeasible_alone):
        return False
    rhs = necessary_constant(alpha) * scenario.capacity
    return bool(np.all(necessary_loads(scenario, x) <= rhs * (1.0 + FEAS_TOL)))


def sufficient_and_necessary_sets(scenario: Scenario, alpha: float = DEFAULT_ALPHA):
    """Largest user set meeting the sufficient constraints among its own members,
    and the largest superset of it meeting the necessary constraints.

    Returns ``(L_s, L_n)`` as sorted tuples of user indices.
    """
    problem = build_equal(scenario)
    n = scenario.n
    ones = np.ones(n)
    allowed = [i not in problem.forced_zero for i in range(n)]
    suff = max_weight_subset(problem.coeff, problem.capacity * (1.0 + FEAS_TOL), ones, allowed)
    l_s = tuple(i for i in range(n) if suff.argmax and suff.argmax[i])
    c = necessary_constant(alpha)
    nec = max_weight_subset(problem.coeff, c * problem.capacity * (1.0 + FEAS_TOL), ones,
                            allowed, forced=l_s)
    l_n = tuple(i for i in range(n) if nec.argmax and nec.argmax[i])
    return l_s, l_n


@dataclass(frozen=True)
class BoundReport:
    sufficient_count: int
    necessary_count: int
    constant_c: float
    constant_approx: float
    prop4_lhs: float
    prop4_lhs_necessary_constant: float
    opt_exact: float
    opt_bqc: float
    holds_approx_constant: bool
    holds_necessary_constant: bool
    holds_set_bound: bool

    @property
    def holds(self) -> bool:
        return self.holds_approx_constant or self.holds_necessary_constant

    def to_row(self) -> dict:
        return asdict(self)


def approx_gap_check(scenario: Scenario, alpha: float = DEFAULT_ALPHA, geometric: bool = True,
                     budget: int = DEFAULT_ORIGINAL_BUDGET) -> BoundReport:
    """Compare the exact optimum with the sufficient-constraint optimum."""
    check_preconditions(scenario, alpha, geometric)
    opt = solve_original_exact(scenario, budget).objective
    opt_bqc = solve_bqc_exact(build_equal(scenario)).objective
    c_nec = necessary_constant(alpha)
    c_apx = approximation_constant(alpha)
    lhs_apx = opt / c_apx - 1.0
    lhs_nec = opt / c_nec - 1.0
    l_s, l_n = sufficient_and_necessary_sets(scenario, alpha)
    tol = 1e-12
    return BoundReport(
        sufficient_count=len(l_s),
        necessary_count=len(l_n),
        constant_c=c_nec,
        constant_approx=c_apx,
        prop4_lhs=lhs_apx,
        prop4_lhs_necessary_constant=lhs_nec,
        opt_exact=opt,
        opt_bqc=opt_bqc,
        holds_approx_constant=lhs_apx <= opt_bqc + tol,
        holds_necessary_constant=lhs_nec <= opt_bqc + tol,
        holds_set_bound=len(l_n) <= c_nec * (len(l_s) + 1),
    )
