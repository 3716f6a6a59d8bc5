import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sinralloc import admission, oracle
from sinralloc.transform import BqcProblem, build_equal, build_unequal, check_bqc_feasible

from conftest import random_scenario

# Worked by hand: row 1 (capacity 1) starts at y = 2.1; its cheapest column per
# unit revenue is user 0 (0.6/1), then user 2 (0.5/1). Neither fits back in.
HAND = BqcProblem([[0, .9, .8], [.6, 0, .5], [.3, .2, 0]], [2, 1, 1], [1, 3, 1])
HAND_TRACE = [
    {"event": "drop", "iteration": 1, "i_star": 1, "j_star": 0, "lambda_increment": 0.6, "lambda": 0.6},
    {"event": "drop", "iteration": 2, "i_star": 1, "j_star": 2, "lambda_increment": 0.5, "lambda": 0.5},
]


def random_problem(seed, n_max=9):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, n_max + 1))
    coeff = rng.uniform(0, 1, (n, n)) * (rng.uniform(size=(n, n)) < rng.uniform(0.1, 1))
    return BqcProblem(coeff, rng.integers(1, 5, n), rng.integers(1, 6, n))


def test_hand_example():
    r = admission.solve(HAND, trace=True)
    assert r.x.tolist() == [0, 1, 0]
    assert r.objective == 3.0
    assert r.lam.tolist() == pytest.approx([0.6, 0.0, 0.5])
    assert r.upper_bound == pytest.approx(3 + 1.2 * 2 + 0.5 * 1)
    assert r.iterations == 2
    assert len(r.trace) == len(HAND_TRACE)
    for got, want in zip(r.trace, HAND_TRACE):
        assert got.keys() == want.keys()
        for k, v in want.items():
            assert got[k] == pytest.approx(v)


def test_trace_lines_are_json():
    r = admission.solve(HAND, trace=True)
    lines = admission.trace_lines(r).splitlines()
    assert [json.loads(l)["j_star"] for l in lines] == [0, 2]


def test_snapshot_and_callback():
    seen = []
    r = admission.solve(HAND, snapshot=True, on_event=seen.append)
    assert r.trace == []
    assert seen[0]["y"] == pytest.approx([0.0, 1.5, 1.2])


def test_zero_coefficients_admit_everyone():
    p = BqcProblem(np.zeros((5, 5)), [1] * 5, [1] * 5)
    r = admission.solve(p)
    assert r.x.tolist() == [1] * 5
    assert r.iterations == 0
    assert r.upper_bound == r.objective == 5


def test_two_users_two_channels_both_admitted():
    p = BqcProblem([[0, 1.0], [1.0, 0]], [2, 2], [1, 1])
    assert admission.solve(p).x.tolist() == [1, 1]


def test_forced_zero_never_admitted():
    p = BqcProblem(np.zeros((3, 3)), [1, 1, 1], [1, 1, 1], forced_zero=frozenset({1}))
    assert admission.solve(p).x.tolist() == [1, 0, 1]


def test_readmission_by_revenue():
    # both 1 and 2 are dropped; only one fits back and the richer one goes first
    p = BqcProblem([[0, 1, 1], [1, 0, 1], [1, 1, 0]], [2, 1, 1], [10, 1, 2])
    r = admission.solve(p, trace=True)
    readmits = [e["user"] for e in r.trace if e["event"] == "readmit"]
    assert check_bqc_feasible(p, r.x)
    assert readmits == sorted(readmits, key=lambda j: -p.revenue[j])


def test_trivial_choice():
    p = HAND
    x = [1, 1, 1]
    # r_i - lam_i (1 + sum a_ij x_j) for i=0: 1 - 0.2 * 2.7 > 0
    assert admission.trivial_choice(p, 0, x, [0.2, 0, 0]) == 1
    assert admission.trivial_choice(p, 0, x, [0.5, 0, 0]) == 0
    # exactly zero is not strictly positive
    assert admission.trivial_choice(p, 2, [0, 0, 0], [0, 0, 1.0]) == 0


def test_relaxation_value_loop():
    rng = np.random.default_rng(5)
    for _ in range(30):
        p = random_problem(int(rng.integers(1 << 30)))
        x = rng.integers(0, 2, p.n)
        lam = rng.uniform(0, 2, p.n)
        want = 0.0
        for i in range(p.n):
            inner = 1.0 + sum(p.coeff[i][j] * x[j] for j in range(p.n) if j != i)
            want += p.revenue[i] * x[i] + lam[i] * (p.capacity[i] - x[i] * inner)
        assert admission.relaxation_value(p, x, lam) == pytest.approx(want, rel=1e-12)
    with pytest.raises(ValueError):
        admission.relaxation_value(HAND, [0, 0, 0], [-1, 0, 0])


def test_bound_multipliers_scale_by_capacity():
    assert admission.bound_multipliers(HAND, [1, 1, 1]).tolist() == [2, 1, 1]


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_result_invariants(seed):
    p = random_problem(seed)
    r = admission.solve(p)
    assert admission.verify_result(p, r) == []
    assert r.iterations <= p.n
    assert np.all(r.lam >= 0)
    ex = oracle.solve_bqc_exact(p)
    assert r.objective <= ex.objective + 1e-9


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_step4_leaves_no_room(seed):
    # after re-admission no single dropped user can be added back
    p = random_problem(seed)
    r = admission.solve(p)
    for j in np.flatnonzero(r.x == 0):
        if j in p.forced_zero:
            continue
        y = r.x.copy()
        y[j] = 1
        assert not check_bqc_feasible(p, y)


def test_deterministic():
    p = build_unequal(random_scenario(7, n=8, alpha=2.0, k=2))
    a, b = admission.solve(p, trace=True), admission.solve(p, trace=True)
    assert a.x.tolist() == b.x.tolist() and a.trace == b.trace


def test_scenario_problems_feasible():
    for seed in range(40):
        sc = random_scenario(seed, alpha=2.0, k=2)
        for p in (build_equal(sc), build_unequal(sc)):
            assert check_bqc_feasible(p, admission.solve(p).x)


def test_upper_bound_can_undershoot_optimum():
    # User 0 saturates rows 1 and 2, which each drop themselves (1/4 > 1/5).
    # The accumulated multipliers then price the pair {1, 2} at 7 while it earns 8.
    p = BqcProblem([[0, 0, 0], [1, 0, 0], [1, 0, 0]], [1, 1, 1], [5, 4, 4])
    r = admission.solve(p)
    assert r.x.tolist() == [1, 0, 0]
    assert r.objective == 5.0
    assert r.upper_bound == pytest.approx(7.0)
    assert oracle.solve_bqc_exact(p).objective == 8.0
    best = max(sum(p.revenue[i] for i in range(3) if x[i])
               for x in itertools.product([0, 1], repeat=3) if check_bqc_feasible(p, x))
    assert best == 8.0
