"""Seeded Monte Carlo studies producing plot-ready CSV files.

Studies (each one CSV of per-run rows):

``equal_sets``    equal channel sets (K=5), both transforms, max-sat
``unequal_sets``  random channel subsets (K=10), overlap-weighted transform, max-sat
``reciprocal``    as ``unequal_sets`` with original and reciprocal gains
``revenue``       as ``unequal_sets`` with the max-revenue objective
``neighbor``      neighbor-limited admission against the full-knowledge baseline
``timing``        per-stage wall times only (summarised in ``timing_summary.csv``)

Wall times are kept out of the study CSVs (they go to ``timing.csv``) so that
re-running a config reproduces the study files byte for byte.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import admission, model, oracle, selection, transform
from .scengen import GenConfig, generate, symmetrize

log = logging.getLogger(__name__)

STUDIES = ("equal_sets", "unequal_sets", "reciprocal", "revenue", "neighbor", "timing")

STUDY_SETUP = {
    "equal_sets": dict(channel_set_mode="equal", channel_universe=5, revenue_mode="max_sat"),
    "unequal_sets": dict(channel_set_mode="uniform", channel_universe=10, revenue_mode="max_sat"),
    "reciprocal": dict(channel_set_mode="uniform", channel_universe=10, revenue_mode="max_sat"),
    "revenue": dict(channel_set_mode="uniform", channel_universe=10, revenue_mode="max_revenue"),
    "neighbor": dict(channel_set_mode="uniform", channel_universe=10, revenue_mode="max_sat"),
    "timing": dict(channel_set_mode="uniform", channel_universe=10, revenue_mode="max_sat"),
}

ROW_FIELDS = (
    "study", "seed", "n", "transform", "gains",
    "objective_exact_original", "objective_exact_bqc", "objective_heuristic", "upper_bound",
    "admitted", "satisfied_after_selection", "revenue_realized", "satisfaction_gap",
    "converged", "selection_rounds", "realizable", "oracle_status", "invariants_ok",
)
# Columns that may be empty (oracle skipped or over budget).
NULLABLE = {"objective_exact_original", "objective_exact_bqc", "realizable"}

TIMING_FIELDS = ("study", "seed", "n", "transform", "gains", "t_transform", "t_admission",
                 "t_selection", "t_exact_bqc", "t_exact_original")

AGG_COLUMNS = ("objective_exact_original", "objective_exact_bqc", "objective_heuristic",
               "upper_bound", "admitted", "satisfied_after_selection", "revenue_realized",
               "satisfaction_gap")


class ExperimentError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    studies: tuple = STUDIES
    user_counts: tuple = (2, 6, 12, 18)
    trials: int = 50
    seed: int = 0
    neighbor_counts: tuple = (1, 2, 4)
    density: float = 1.0 / 800.0
    oracle_budget: int = 10**8
    bqc_budget: int = 2**24
    realizable_budget: int = 10**8
    gen: dict = field(default_factory=dict)
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "studies", tuple(self.studies))
        object.__setattr__(self, "user_counts", tuple(int(n) for n in self.user_counts))
        object.__setattr__(self, "neighbor_counts", tuple(float(x) for x in self.neighbor_counts))
        bad = [s for s in self.studies if s not in STUDIES]
        if bad:
            raise ExperimentError(f"studies: unknown {bad}; choose from {STUDIES}")
        if self.trials < 1:
            raise ExperimentError("trials: must be >= 1")
        if any(n < 1 for n in self.user_counts):
            raise ExperimentError("user_counts: must all be >= 1")
        reserved = {"user_count", "seed"}
        known = {f.name for f in fields(GenConfig)} - reserved
        unknown = set(self.gen) - known
        if unknown:
            raise ExperimentError(f"gen: unknown or reserved fields {sorted(unknown)}")

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ExperimentError(f"unknown experiment fields: {unknown}")
        return cls(**doc)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


def trial_seed(base: int, n: int, trial: int) -> int:
    return base * 1_000_000 + n * 1_000 + trial


def gen_config(cfg: ExperimentConfig, study: str, n: int, seed: int) -> GenConfig:
    params = {**STUDY_SETUP[study], "density": cfg.density, **cfg.gen}
    return GenConfig(user_count=n, seed=seed, **params)


@dataclass
class _Run:
    row: dict
    timing: dict


def run_pipeline(scenario: model.Scenario, mode: str, seed: int, density: float,
                 max_rounds: Optional[int] = None):
    """transform -> admission -> channel selection -> success check, with stage timings."""
    t0 = time.perf_counter()
    problem = transform.build(scenario, mode, density)
    t1 = time.perf_counter()
    result = admission.solve(problem)
    t2 = time.perf_counter()
    state = selection.run(selection.init_random(scenario, result.x, seed), max_rounds)
    t3 = time.perf_counter()
    success = model.is_successful(scenario, state.allocation)
    times = {"t_transform": t1 - t0, "t_admission": t2 - t1, "t_selection": t3 - t2}
    return problem, result, state, success, times


def _trial(cfg: ExperimentConfig, study: str, n: int, trial: int) -> list[_Run]:
    seed = trial_seed(cfg.seed, n, trial)
    base = generate(gen_config(cfg, study, n, seed))
    variants = []
    if study == "equal_sets":
        variants = [("equal", "original", base), ("unequal", "original", base)]
    elif study == "reciprocal":
        variants = [("unequal", "original", base), ("unequal", "reciprocal", symmetrize(base))]
    elif study == "neighbor":
        variants = [("unequal", "original", base)] + [
            (f"neighbor:{_fmt_count(x)}", "original", base) for x in cfg.neighbor_counts]
    else:
        variants = [("unequal", "original", base)]

    exact_original = None
    t_orig = None
    status = "ok"
    if study in ("equal_sets", "unequal_sets", "revenue", "timing"):
        try:
            t = time.perf_counter()
            exact_original = oracle.solve_original_exact(base, cfg.oracle_budget).objective
            t_orig = time.perf_counter() - t
        except oracle.BudgetExceeded:
            status = "budget"

    runs = []
    for mode, gains, sc in variants:
        problem, result, state, success, times = run_pipeline(sc, mode, seed, cfg.density)
        exact_bqc = None
        t_bqc = None
        if study != "neighbor":
            try:
                t = time.perf_counter()
                exact_bqc = oracle.solve_bqc_exact(problem, cfg.bqc_budget).objective
                t_bqc = time.perf_counter() - t
            except oracle.BudgetExceeded:
                status = "budget"
        realizable = None
        if study == "equal_sets" and oracle.original_candidate_count(sc) <= cfg.realizable_budget:
            realizable = oracle.find_assignment(sc, result.x) is not None
        admitted = result.admitted
        satisfied = success.satisfied_count
        gap = (admitted - satisfied) / admitted if admitted else 0.0
        ok = satisfied <= admitted and result.objective <= result.upper_bound + 1e-9
        if exact_bqc is not None:
            tol = 1e-9 * max(1.0, exact_bqc)
            ok = ok and result.objective <= exact_bqc + tol <= result.upper_bound + 2 * tol
        row = {
            "study": study, "seed": seed, "n": n, "transform": mode, "gains": gains,
            "objective_exact_original": exact_original if gains == "original" else None,
            "objective_exact_bqc": exact_bqc,
            "objective_heuristic": result.objective,
            "upper_bound": result.upper_bound,
            "admitted": admitted,
            "satisfied_after_selection": satisfied,
            "revenue_realized": success.revenue,
            "satisfaction_gap": gap,
            "converged": state.converged,
            "selection_rounds": state.round,
            "realizable": realizable,
            "oracle_status": status,
            "invariants_ok": ok,
        }
        timing = {"study": study, "seed": seed, "n": n, "transform": mode, "gains": gains,
                  **times, "t_exact_bqc": t_bqc, "t_exact_original": t_orig}
        runs.append(_Run(row, timing))
    return runs


def _fmt_count(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(x)


def _job(args):
    return _trial(*args)


@dataclass
class ExperimentReport:
    rows: list
    timings: list
    config: ExperimentConfig

    def study_rows(self, study: str) -> list[dict]:
        return [r for r in self.rows if r["study"] == study]

    def violations(self) -> list[dict]:
        return [r for r in self.rows if not r["invariants_ok"]]

    def aggregate(self) -> list[dict]:
        groups: dict = {}
        for r in self.rows:
            groups.setdefault((r["study"], r["n"], r["transform"], r["gains"]), []).append(r)
        out = []
        for (study, n, mode, gains), rows in groups.items():
            agg = {"study": study, "n": n, "transform": mode, "gains": gains, "trials": len(rows)}
            for col in AGG_COLUMNS:
                vals = np.array([r[col] for r in rows if r[col] is not None], dtype=float)
                agg[f"{col}_mean"] = float(vals.mean()) if len(vals) else None
                agg[f"{col}_stderr"] = (float(vals.std(ddof=1) / math.sqrt(len(vals)))
                                        if len(vals) > 1 else (0.0 if len(vals) else None))
            out.append(agg)
        return out

    def neighbor_ratios(self) -> list[dict]:
        """Mean satisfied users with limited knowledge over the full-knowledge mean."""
        rows = self.study_rows("neighbor")
        out = []
        for n in sorted({r["n"] for r in rows}):
            at_n = [r for r in rows if r["n"] == n]
            base = np.mean([r["satisfied_after_selection"] for r in at_n if r["transform"] == "unequal"])
            for mode in dict.fromkeys(r["transform"] for r in at_n if r["transform"] != "unequal"):
                lim = np.mean([r["satisfied_after_selection"] for r in at_n if r["transform"] == mode])
                out.append({"n": n, "neighbors": mode.split(":", 1)[1],
                            "satisfied_full_mean": float(base), "satisfied_limited_mean": float(lim),
                            "percent_of_full": float(100.0 * lim / base) if base else None})
        return out

    def timing_summary(self) -> list[dict]:
        groups: dict = {}
        for t in self.timings:
            if t["gains"] == "original" and t["transform"] == "unequal":
                groups.setdefault((t["study"], t["n"]), []).append(t)
        out = []
        for (study, n), ts in sorted(groups.items()):
            row = {"study": study, "n": n, "trials": len(ts)}
            for col in TIMING_FIELDS[5:]:
                vals = [t[col] for t in ts if t[col] is not None]
                row[f"{col}_mean"] = float(np.mean(vals)) if vals else None
            out.append(row)
        return out

    def write(self, out_dir) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = []
        for study in self.config.studies:
            if study == "timing":
                continue
            paths.append(_write_csv(out / f"{study}.csv", ROW_FIELDS, self.study_rows(study)))
        agg = self.aggregate()
        if agg:
            paths.append(_write_csv(out / "aggregate.csv", list(agg[0]), agg))
        if "neighbor" in self.config.studies:
            ratios = self.neighbor_ratios()
            paths.append(_write_csv(out / "neighbor_ratio.csv",
                                    ("n", "neighbors", "satisfied_full_mean",
                                     "satisfied_limited_mean", "percent_of_full"), ratios))
        paths.append(_write_csv(out / "timing.csv", TIMING_FIELDS, self.timings))
        summary = self.timing_summary()
        if summary:
            paths.append(_write_csv(out / "timing_summary.csv", list(summary[0]), summary))
        return paths


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path: Path, columns, rows) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_cell(r.get(c)) for c in columns])
    return path


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    jobs = [(cfg, study, n, t) for study in cfg.studies for n in cfg.user_counts
            for t in range(cfg.trials)]
    log.info("running %d trials", len(jobs))
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(_job, jobs, chunksize=8))
    else:
        results = [_job(j) for j in jobs]
    runs = [r for rs in results for r in rs]
    # deterministic order independent of scheduling
    order = {s: i for i, s in enumerate(cfg.studies)}
    runs.sort(key=lambda r: (order[r.row["study"]], r.row["n"], r.row["seed"]))
    return ExperimentReport([r.row for r in runs], [r.timing for r in runs], cfg)


def config_dict(cfg: ExperimentConfig) -> dict:
    d = asdict(cfg)
    d["studies"] = list(cfg.studies)
    return d
