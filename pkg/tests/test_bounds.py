import numpy as np
import pytest

from sinralloc import bounds, model, oracle, scengen
from sinralloc.transform import build_equal, check_bqc_feasible

from conftest import random_scenario


def equal_common(seed, n, alpha, k=3, target=6.0):
    cfg = scengen.GenConfig(user_count=n, seed=seed, channel_universe=k, channel_set_mode="equal",
                            pathloss_exponent=alpha)
    return scengen.common_target(scengen.generate(cfg), target)


@pytest.mark.parametrize("alpha,c_nec,c_apx", [(1, 3, 1), (2, 5, 3), (3, 9, 7), (4, 10, 10), (6, 10, 10)])
def test_constants(alpha, c_nec, c_apx):
    assert bounds.necessary_constant(alpha) == c_nec
    assert bounds.approximation_constant(alpha) == c_apx


def test_preconditions():
    sc = random_scenario(1, n=5, mode="uniform", k=4)
    with pytest.raises(bounds.PreconditionError, match="channel sets"):
        bounds.check_preconditions(sc)
    sc = scengen.generate(scengen.GenConfig(user_count=20, channel_set_mode="equal", seed=2))
    with pytest.raises(bounds.PreconditionError, match="targets"):
        bounds.check_preconditions(sc)
    sc = equal_common(2, 5, 4.0)
    bounds.check_preconditions(sc, 4.0)
    with pytest.raises(bounds.PreconditionError, match="gains"):
        bounds.check_preconditions(sc, 3.0)
    bounds.check_preconditions(sc.with_gain(sc.gain * 2), 4.0, geometric=False)


def test_necessary_check_accepts_every_successful_allocation():
    rng = np.random.default_rng(0)
    for seed in range(60):
        alpha = float(rng.choice([2.0, 3.0, 4.0]))
        sc = equal_common(seed, int(rng.integers(2, 8)), alpha, k=2, target=float(rng.choice([0, 6, 12])))
        res = oracle.solve_original_exact(sc)
        x = [int(k > 0) for k in res.argmax]
        assert bounds.necessary_check(sc, x, alpha)


def test_necessary_loads_match_equal_transform():
    sc = equal_common(4, 6, 4.0)
    x = np.array([1, 0, 1, 1, 0, 1])
    coeff = build_equal(sc).coeff
    want = [x[i] * (1 + sum(coeff[i, j] * x[j] for j in range(6))) for i in range(6)]
    assert np.allclose(bounds.necessary_loads(sc, x), want)


def test_sets_nested_and_feasible():
    for seed in range(30):
        sc = equal_common(seed, 7, 2.0, k=2, target=12.0)
        l_s, l_n = bounds.sufficient_and_necessary_sets(sc, 2.0)
        assert set(l_s) <= set(l_n)
        p = build_equal(sc)
        xs = np.zeros(7, dtype=int)
        xs[list(l_s)] = 1
        assert check_bqc_feasible(p, xs)
        assert len(l_s) == oracle.solve_bqc_exact(p.__class__(p.coeff, p.capacity, np.ones(7),
                                                              p.forced_zero)).objective
        assert len(l_n) <= bounds.necessary_constant(2.0) * (len(l_s) + 1)


def test_report():
    sc = equal_common(3, 6, 4.0, k=2)
    rep = bounds.approx_gap_check(sc, 4.0)
    assert rep.constant_c == rep.constant_approx == 10
    assert rep.prop4_lhs == pytest.approx(rep.opt_exact / 10 - 1)
    assert rep.holds and rep.holds_set_bound
    assert rep.opt_bqc <= rep.opt_exact
    assert set(rep.to_row()) >= {"sufficient_count", "necessary_count", "opt_exact", "opt_bqc"}
