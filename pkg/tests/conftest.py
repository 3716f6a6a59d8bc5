import numpy as np
import pytest

from sinralloc import model, scengen


def random_scenario(seed, n=None, k=None, mode=None, alpha=None, revenue="max_sat"):
    """Small generated scenario with parameters drawn from ``seed`` when not given."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 9)) if n is None else n
    k = int(rng.integers(2, 5)) if k is None else k
    mode = ("equal", "uniform")[int(rng.integers(2))] if mode is None else mode
    alpha = float(rng.choice([2.0, 3.0, 4.0])) if alpha is None else alpha
    cfg = scengen.GenConfig(user_count=n, seed=seed, channel_universe=k, channel_set_mode=mode,
                            pathloss_exponent=alpha, revenue_mode=revenue)
    return scengen.generate(cfg)


def random_gain_scenario(seed, n, k, reciprocal=False, spread=3.0):
    """Scenario with log-uniform random gains (no geometry)."""
    rng = np.random.default_rng(seed)
    gain = 10.0 ** rng.uniform(-6 - spread, -6, size=(n, n))
    np.fill_diagonal(gain, 10.0 ** rng.uniform(-5, -4, size=n))
    if reciprocal:
        off = (gain + gain.T) / 2
        np.fill_diagonal(off, np.diag(gain))
        gain = off
    sets = []
    for _ in range(n):
        size = int(rng.integers(1, k + 1))
        sets.append(sorted(rng.choice(np.arange(1, k + 1), size=size, replace=False).tolist()))
    targets = model.db_to_linear(rng.choice([0.0, 3.0, 6.0, 9.0, 12.0], size=n))
    return model.scenario_from_arrays(gain, 1.0, targets, 1e-8, sets, channel_count=k,
                                      revenue=rng.integers(1, 6, size=n))


@pytest.fixture
def three_users():
    g = [[1e-3, 2e-5, 5e-6], [4e-6, 2e-3, 1e-5], [3e-5, 7e-6, 5e-4]]
    return model.scenario_from_arrays(g, [1.0, 0.5, 2.0], 1.0, 1e-8, [[1, 2]] * 3)


ACCEPTANCE_LINES: list = []


def report_criterion(number: int, name: str, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d} {name}: {'PASS' if ok else 'FAIL'} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
