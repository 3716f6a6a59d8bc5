"""Invariant suite for a single scenario, as run by ``sinralloc verify``."""

from __future__ import annotations

import numpy as np

from . import admission, model, oracle, selection, transform
from .scengen import symmetrize


def _random_allocation(scenario: model.Scenario, rng: np.random.Generator,
                       p_silent: float = 0.2) -> model.Allocation:
    out = []
    for u in scenario.users:
        if rng.random() < p_silent:
            out.append(None)
        else:
            out.append(int(u.channel_set[rng.integers(len(u.channel_set))]))
    return model.Allocation(tuple(out))


def potential_moves_consistent(state: selection.SelectionState, start_potential: float,
                               rtol: float = 1e-9) -> bool:
    """Each traced move lowers the potential by exactly ``2 P_i (omega_old - omega_new)``."""
    prev = start_potential
    power = state.scenario.power
    for ev in state.trace:
        expected = 2.0 * power[ev["mover"]] * (ev["omega_before"] - ev["omega_after"])
        drop = prev - ev["potential"]
        if expected <= 0 or abs(drop - expected) > rtol * max(abs(expected), abs(prev)):
            return False
        prev = ev["potential"]
    return True


def verify_scenario(scenario: model.Scenario, seed: int = 0, samples: int = 50,
                    oracle_budget: int = oracle.DEFAULT_ORIGINAL_BUDGET,
                    bqc_budget: int = oracle.DEFAULT_BQC_BUDGET) -> list[dict]:
    rng = np.random.default_rng(seed)
    checks = []

    def record(name, ok, detail=""):
        status = "skipped" if ok is None else ("pass" if ok else "fail")
        checks.append({"check": name, "status": status, "detail": detail})

    links = model.derive_links(scenario)
    feasible_alone = ~links.infeasible_alone
    equiv = blocked = True
    for _ in range(samples):
        alloc = _random_allocation(scenario, rng)
        succ = model.is_successful(scenario, alloc)
        if tuple(bool(v) for v in model.satisfied_by_omega(scenario, alloc)) != succ.satisfied:
            equiv = False
        for i in np.flatnonzero(feasible_alone):
            if len(model.blocked_channels(scenario, alloc, i)) >= model.blocking_budget(scenario, alloc, i) + 1:
                blocked = False
    record("sinr_omega_equivalence", equiv)
    record("blocked_channel_bound", blocked)

    results = {}
    for mode in ("equal", "unequal"):
        problem = transform.build(scenario, mode)
        res = admission.solve(problem)
        results[mode] = (problem, res)
        issues = admission.verify_result(problem, res)
        record(f"admission_{mode}", not issues, "; ".join(issues))
        if 2**problem.n <= bqc_budget:
            ex = oracle.solve_bqc_exact(problem, bqc_budget)
            tol = 1e-9 * max(1.0, ex.objective)
            ok = res.objective <= ex.objective + tol and ex.objective <= res.upper_bound + tol
            record(f"sandwich_{mode}", ok,
                   f"heuristic={res.objective} exact={ex.objective} upper_bound={res.upper_bound}")
        else:
            record(f"sandwich_{mode}", None, "over BQC budget")

    within = oracle.original_candidate_count(scenario) <= oracle_budget
    x_equal = results["equal"][1].x
    if within:
        found = oracle.find_assignment(scenario, x_equal)
        record("sufficiency_equal_admission", found is not None)
    else:
        record("sufficiency_equal_admission", None, "over oracle budget")

    sym = symmetrize(scenario)
    ones = np.ones(scenario.n, dtype=int)
    start = selection.init_random(sym, ones, seed)
    end = selection.run(start, trace=True)
    record("selection_converges_reciprocal", end.converged, f"rounds={end.round} moves={end.moves}")
    record("potential_decrease_per_move", potential_moves_consistent(end, start.potential))

    if within:
        opt = oracle.solve_original_exact(scenario, oracle_budget)
        prob_u, res_u = results["unequal"]
        state = selection.run(selection.init_random(scenario, res_u.x, seed))
        realized = model.is_successful(scenario, state.allocation).revenue
        record("pipeline_below_optimum", realized <= opt.objective + 1e-9,
               f"realized={realized} optimum={opt.objective}")
        if 2**scenario.n <= bqc_budget:
            ex_eq = oracle.solve_bqc_exact(results["equal"][0], bqc_budget)
            record("equal_bqc_below_optimum", ex_eq.objective <= opt.objective + 1e-9,
                   f"bqc={ex_eq.objective} optimum={opt.objective}")
    else:
        record("pipeline_below_optimum", None, "over oracle budget")
    return checks
