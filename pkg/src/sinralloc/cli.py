"""Command line entry point.

    sinralloc gen --users 12 --seed 3 -o scenario.json
    sinralloc solve scenario.json --transform unequal --seed 1
    sinralloc verify scenario.json
    sinralloc experiment config.json --out results/

Exit codes: 0 success, 1 usage/input error, 2 invariant violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__, admission, model, oracle, selection, transform
from .experiment import ExperimentConfig, ExperimentError, run_experiment
from .scengen import MAX_REVENUE_TABLE, ConfigError, GenConfig, generate
from .verify import verify_scenario

log = logging.getLogger("sinralloc")

EXIT_OK, EXIT_USAGE, EXIT_VIOLATION = 0, 1, 2

OBJECTIVES = {"maxsat": "max_sat", "maxrev": "max_revenue"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _transform_arg(value: str) -> str:
    if value in ("equal", "unequal"):
        return value
    if value.startswith("neighbor:"):
        try:
            x = float(value.split(":", 1)[1])
        except ValueError:
            x = -1.0
        if x >= 0:
            return value
    raise argparse.ArgumentTypeError("expected equal, unequal or neighbor:<x> with x >= 0")


def _apply_objective(scenario: model.Scenario, objective) -> model.Scenario:
    if objective is None:
        return scenario
    users = []
    for u in scenario.users:
        if objective == "maxsat":
            r = 1.0
        else:
            db = round(float(model.linear_to_db(u.sinr_target)), 6)
            key = int(db) if db.is_integer() else db
            if key not in MAX_REVENUE_TABLE:
                raise UsageError(f"user {u.id}: no max-revenue value for a {db} dB target")
            r = MAX_REVENUE_TABLE[key]
        users.append(model.User(u.id, u.tx_position, u.rx_position, u.power, u.sinr_target, r,
                                u.channel_set))
    return model.Scenario(tuple(users), scenario.gain, scenario.noise, scenario.channel_count)


def _load_scenario(path) -> model.Scenario:
    try:
        return model.Scenario.load(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except (json.JSONDecodeError, model.ScenarioError, ValueError, TypeError) as exc:
        raise UsageError(f"{path}: {exc}") from None


def _sufficiency_report(scenario: model.Scenario, problem, x, budget: int) -> dict:
    """Exhaustive channel search for every BQC-feasible vector (or just ``x`` if too many)."""
    if oracle.original_candidate_count(scenario) > budget:
        return {"status": "skipped", "reason": "over oracle budget"}
    if 2**scenario.n <= oracle.DEFAULT_BQC_BUDGET:
        vectors = oracle.bqc_feasible_vectors(problem)
    else:
        vectors = [np.asarray(x)]
    checked = 0
    for v in vectors:
        checked += 1
        if oracle.find_assignment(scenario, v) is None:
            return {"status": "fails", "checked": checked, "counterexample": v.astype(int).tolist()}
    return {"status": "holds", "checked": checked}


def cmd_solve(args) -> int:
    scenario = _apply_objective(_load_scenario(args.scenario), args.objective)
    problem = transform.build(scenario, args.transform, args.density)
    for i in sorted(problem.forced_zero):
        log.warning("user %d cannot reach its SINR target even without interference", i)
    events = []
    result = admission.solve(problem, trace=args.trace)
    state = selection.run(selection.init_random(scenario, result.x, args.seed), args.max_rounds,
                          trace=args.trace)
    success = model.is_successful(scenario, state.allocation)
    sinr = model.all_sinr(scenario, state.allocation)
    out = {
        "transform": args.transform,
        "seed": args.seed,
        "admission": result.to_dict(),
        "allocation": list(state.allocation.assignment),
        "selection": {"rounds": state.round, "moves": state.moves, "converged": state.converged,
                      "potential": state.potential},
        "satisfaction": {
            "successful": success.successful,
            "admitted": result.admitted,
            "satisfied": success.satisfied_count,
            "satisfied_users": [i for i, s in enumerate(success.satisfied) if s],
            "revenue": success.revenue,
            "sinr_db": [None if np.isnan(s) else float(model.linear_to_db(s)) for s in sinr],
        },
    }
    if args.check_sufficiency:
        if args.transform != "equal":
            raise UsageError("--check-sufficiency needs --transform equal")
        out["sufficiency"] = _sufficiency_report(scenario, problem, result.x, args.oracle_budget)
    if args.trace:
        for ev in result.trace:
            events.append({"stage": "admission", **ev})
        for ev in state.trace:
            events.append({"stage": "selection", **ev})
        stream = sys.stderr if args.trace_file is None else open(args.trace_file, "w")
        try:
            for ev in events:
                stream.write(json.dumps(ev) + "\n")
        finally:
            if stream is not sys.stderr:
                stream.close()
    print(json.dumps(out, indent=2))
    issues = admission.verify_result(problem, result)
    if out.get("sufficiency", {}).get("status") == "fails":
        issues.append("sufficiency check failed")
    for msg in issues:
        log.error("invariant violated: %s", msg)
    return EXIT_VIOLATION if issues else EXIT_OK


def cmd_gen(args) -> int:
    try:
        doc = json.loads(Path(args.config).read_text()) if args.config else {}
    except OSError as exc:
        raise UsageError(f"cannot read {args.config}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{args.config}: {exc}") from None
    overrides = {"user_count": args.users, "seed": args.seed, "channel_universe": args.channels,
                 "channel_set_mode": args.channel_sets, "pathloss_exponent": args.alpha,
                 "revenue_mode": OBJECTIVES.get(args.objective)}
    doc.update({k: v for k, v in overrides.items() if v is not None})
    if "user_count" not in doc:
        raise UsageError("number of users required (--users or user_count in --config)")
    try:
        cfg = GenConfig.from_dict(doc)
    except (ConfigError, TypeError) as exc:
        raise UsageError(f"invalid generator config: {exc}") from None
    text = generate(cfg).to_json() + "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_verify(args) -> int:
    scenario = _apply_objective(_load_scenario(args.scenario), args.objective)
    checks = verify_scenario(scenario, seed=args.seed, oracle_budget=args.oracle_budget)
    print(json.dumps(checks, indent=2))
    return EXIT_VIOLATION if any(c["status"] == "fail" for c in checks) else EXIT_OK


def cmd_experiment(args) -> int:
    try:
        doc = json.loads(Path(args.config).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read {args.config}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{args.config}: {exc}") from None
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.oracle_budget is not None:
        doc["oracle_budget"] = args.oracle_budget
    if args.workers is not None:
        doc["workers"] = args.workers
    try:
        cfg = ExperimentConfig.from_dict(doc)
    except (ExperimentError, ConfigError, TypeError) as exc:
        raise UsageError(f"invalid experiment config: {exc}") from None
    report = run_experiment(cfg)
    for path in report.write(args.out):
        print(path)
    bad = report.violations()
    for r in bad:
        log.error("invariant violated: study=%s n=%s seed=%s transform=%s",
                  r["study"], r["n"], r["seed"], r["transform"])
    return EXIT_VIOLATION if bad else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sinralloc", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="admit users and pick channels for one scenario")
    s.add_argument("scenario")
    s.add_argument("--transform", type=_transform_arg, default="unequal")
    s.add_argument("--objective", choices=sorted(OBJECTIVES))
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--density", type=float, default=transform.DEFAULT_DENSITY,
                   help="users/m^2 for neighbor:<x> radius")
    s.add_argument("--max-rounds", type=int)
    s.add_argument("--oracle-budget", type=int, default=oracle.DEFAULT_ORIGINAL_BUDGET)
    s.add_argument("--check-sufficiency", action="store_true")
    s.add_argument("--trace", action="store_true", help="JSON-lines trace on stderr")
    s.add_argument("--trace-file", help="write the trace here instead of stderr")
    s.set_defaults(func=cmd_solve)

    g = sub.add_parser("gen", help="emit a random scenario")
    g.add_argument("--config", help="generator config JSON")
    g.add_argument("--users", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--channels", type=int)
    g.add_argument("--channel-sets", choices=["equal", "uniform"])
    g.add_argument("--alpha", type=float)
    g.add_argument("--objective", choices=sorted(OBJECTIVES))
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_gen)

    v = sub.add_parser("verify", help="run the invariant suite on a scenario")
    v.add_argument("scenario")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--objective", choices=sorted(OBJECTIVES))
    v.add_argument("--oracle-budget", type=int, default=oracle.DEFAULT_ORIGINAL_BUDGET)
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("experiment", help="run simulation studies and write CSV files")
    e.add_argument("config")
    e.add_argument("--out", default="results")
    e.add_argument("--seed", type=int)
    e.add_argument("--oracle-budget", type=int)
    e.add_argument("--workers", type=int)
    e.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"sinralloc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
