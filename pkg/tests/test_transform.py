import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sinralloc import model, transform
from sinralloc.transform import (BqcProblem, build_equal, build_neighbor_limited, build_unequal,
                                 check_bqc_feasible)

from conftest import random_gain_scenario, random_scenario


def pair(cross_ratio, sets=([1, 2], [1, 2]), beta=1.0):
    """Two users where interference from 1 at 0 is ``cross_ratio * i_max_0``."""
    S, noise = 1e-6, 1e-8
    i_max = S / beta - noise
    g = [[S, 1e-12], [cross_ratio * i_max, S]]
    return model.scenario_from_arrays(g, 1.0, beta, noise, sets)


def test_clamped_coefficient_is_one():
    assert build_equal(pair(2.0)).coeff[0, 1] == pytest.approx(1.0)
    assert build_equal(pair(1.0)).coeff[0, 1] == pytest.approx(1.0)


def test_half_ratio():
    assert build_equal(pair(0.5)).coeff[0, 1] == pytest.approx(0.5, rel=1e-12)


def test_not_symmetric():
    p = build_equal(pair(0.5))
    assert p.coeff[1, 0] != p.coeff[0, 1]


def _entry_oracle(sc, i, j, overlap):
    S = sc.gain[i][i] * sc.users[i].power
    i_max = S / sc.users[i].sinr_target - sc.noise
    i_ji = sc.gain[j][i] * sc.users[j].power
    a = min(i_max, i_ji) / i_max
    if overlap:
        ki, kj = set(sc.users[i].channel_set), set(sc.users[j].channel_set)
        a *= len(ki & kj) / len(kj)
    return a


@pytest.mark.parametrize("seed", range(8))
def test_equal_matches_entrywise(seed):
    sc = random_gain_scenario(seed, 4, 4)
    p = build_equal(sc)
    for i in range(4):
        for j in range(4):
            if i != j:
                assert p.coeff[i, j] == pytest.approx(_entry_oracle(sc, i, j, False), rel=1e-12)
    assert list(p.capacity) == [u.capacity for u in sc.users]


@pytest.mark.parametrize("seed", range(8))
def test_unequal_matches_entrywise(seed):
    sc = random_gain_scenario(seed, 5, 4)
    p = build_unequal(sc)
    for i in range(5):
        for j in range(5):
            if i != j:
                assert p.coeff[i, j] == pytest.approx(_entry_oracle(sc, i, j, True), rel=1e-12)


def test_disjoint_sets_cannot_block():
    assert build_unequal(pair(0.7, sets=([1, 2], [3, 4]))).coeff[0, 1] == 0.0


def test_identical_sets_reduce_to_equal():
    sc = pair(0.7, sets=([1, 2, 3], [1, 2, 3]))
    np.testing.assert_array_equal(build_unequal(sc).coeff, build_equal(sc).coeff)


def test_overlap_fraction_two_of_four():
    # K_j = {1,2,3,4}, K_i = {3,4}: half of j's channels can hit i
    sc = pair(1.0, sets=([3, 4], [1, 2, 3, 4]))
    assert build_unequal(sc).coeff[0, 1] == pytest.approx(0.5, rel=1e-12)


def test_forced_zero_users():
    g = [[1e-9, 1e-7], [1e-7, 1e-6]]
    sc = model.scenario_from_arrays(g, 1.0, 1.0, 1e-8, [[1], [1]])
    p = build_equal(sc)
    assert p.forced_zero == frozenset({0})
    assert not check_bqc_feasible(p, [1, 0])
    assert check_bqc_feasible(p, [0, 1])


def test_neighbor_radius():
    assert transform.neighbor_radius(4, 1 / 800) == pytest.approx(31.915382432114615, rel=1e-12)
    # inverse: expected count within R recovers x
    r = transform.neighbor_radius(4, 1 / 800)
    assert (1 / 800) * math.pi * r * r == pytest.approx(4.0)


def test_neighbor_large_count_is_unequal():
    sc = random_scenario(3, n=8, mode="uniform", k=4)
    side_diag = math.sqrt(2) * math.sqrt(8 * 800) * 3
    x = (1 / 800) * math.pi * side_diag**2
    np.testing.assert_array_equal(build_neighbor_limited(sc, x).coeff, build_unequal(sc).coeff)
    np.testing.assert_array_equal(build_neighbor_limited(sc, math.inf).coeff, build_unequal(sc).coeff)


def test_neighbor_zero_count_drops_everything():
    sc = random_scenario(3, n=8, mode="uniform", k=4)
    assert np.count_nonzero(build_neighbor_limited(sc, 0).coeff) == 0


def test_neighbor_mask_uses_tx_to_rx_distance():
    sc = random_scenario(11, n=10, mode="uniform", k=4)
    r = transform.neighbor_radius(2)
    p = build_neighbor_limited(sc, 2)
    base = build_unequal(sc)
    for i, ui in enumerate(sc.users):
        for j, uj in enumerate(sc.users):
            if i == j:
                continue
            d = math.dist(uj.tx_position, ui.rx_position)
            assert p.coeff[i, j] == (base.coeff[i, j] if d <= r else 0.0)


def test_build_dispatch():
    sc = random_scenario(2, n=4)
    assert np.array_equal(transform.build(sc, "neighbor:3").coeff, build_neighbor_limited(sc, 3).coeff)
    with pytest.raises(ValueError):
        transform.build(sc, "bogus")


def test_all_zero_vector_feasible():
    sc = random_scenario(9, n=6, alpha=2.0)
    assert check_bqc_feasible(build_equal(sc), np.zeros(6, dtype=int))


def test_two_users_with_two_channels_always_fit():
    p = BqcProblem([[0, 1.0], [1.0, 0]], [2, 2], [1, 1])
    assert check_bqc_feasible(p, [1, 1])


def _feasible_loop(p, x):
    for i in range(p.n):
        if x[i] and i in p.forced_zero:
            return False
        if x[i]:
            total = 1.0
            for j in range(p.n):
                if j != i:
                    total += p.coeff[i][j] * x[j]
            if total > p.capacity[i]:
                return False
    return True


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**6))
def test_feasibility_matches_loop(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 8))
    p = BqcProblem(rng.uniform(0, 1, (n, n)), rng.integers(1, 4, n), np.ones(n))
    x = rng.integers(0, 2, n)
    lhs = p.load(x)
    # skip draws sitting on the boundary, where FEAS_TOL decides
    if np.any(np.abs(lhs - p.capacity) < 1e-8):
        return
    assert check_bqc_feasible(p, x) == _feasible_loop(p, x)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6))
def test_unequal_dominated_by_equal(seed):
    sc = random_scenario(seed)
    assert np.all(build_unequal(sc).coeff <= build_equal(sc).coeff + 1e-15)


def test_coefficients_within_range():
    for seed in range(20):
        sc = random_scenario(seed)
        eq, un = build_equal(sc), build_unequal(sc)
        assert np.all((eq.coeff >= 0) & (eq.coeff <= 1))
        frac = transform.overlap_fraction(sc)
        assert np.all(un.coeff <= frac + 1e-15)


def test_problem_json_round_trip():
    p = build_unequal(random_scenario(4, n=5))
    q = BqcProblem.from_json(p.to_json())
    assert np.array_equal(p.coeff, q.coeff)
    assert np.array_equal(p.capacity, q.capacity)
    assert p.forced_zero == q.forced_zero
    assert set(p.to_dict()) == {"coeff", "capacity", "revenue", "forced_zero"}


def test_problem_validation():
    with pytest.raises(ValueError):
        BqcProblem([[0, -1], [0, 0]], [1, 1], [1, 1])
    with pytest.raises(ValueError):
        BqcProblem([[0, 1], [0, 0]], [0, 1], [1, 1])
