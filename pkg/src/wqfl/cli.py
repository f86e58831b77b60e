"""Command line entry point: ``wqfl run | sweep | bound | oracle``.

Exit codes: 0 success, 1 oracle mismatch, 2 infeasible round, 3 bad configuration.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys

import numpy as np

from .bound import BoundConstants, bound_terms
from .errors import ConfigError, Infeasible
from .experiment import load_config, run_experiment, run_sweep

EXIT_OK, EXIT_MISMATCH, EXIT_INFEASIBLE, EXIT_CONFIG = 0, 1, 2, 3


def _add_config_args(ap: argparse.ArgumentParser) -> None:
    ap.add_argument("--config", help="YAML config file")
    ap.add_argument("--preset", choices=["table1"], help="start from the standard simulation defaults")
    ap.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                    help="override a config value, e.g. --set trainer.learning_rate=0.005")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--rounds", type=int)
    ap.add_argument("--scheme")
    ap.add_argument("--out-csv", help="per-round metrics CSV")


def _config(args):
    extra = []
    for key in ("seed", "rounds", "scheme"):
        if getattr(args, key, None) is not None:
            extra.append(f"{key}={getattr(args, key)}")
    if getattr(args, "out_csv", None):
        extra.append(f"csv_path={args.out_csv}")
    if getattr(args, "diagnostics", None):
        extra.append(f"diagnostics_path={args.diagnostics}")
    return load_config(args.config, list(args.overrides) + extra, preset=args.preset)


def _summary(res) -> dict:
    return {"rounds": len(res.metrics), "sim_time": res.metrics[-1].sim_time,
            "avg_latency": res.avg_latency, "avg_bits": res.avg_bits,
            "final_accuracy": res.final_accuracy}


def cmd_run(args) -> int:
    res = run_experiment(_config(args))
    print(json.dumps(_summary(res)))
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _config(args)
    results = run_sweep(cfg, args.axis, args.values, csv_path=args.out_csv)
    print(json.dumps({leg: _summary(r) for leg, r in results.items()}))
    return EXIT_OK


def cmd_bound(args) -> int:
    k = BoundConstants(L=args.L, mu=args.mu, G2=args.G2, sigma2=tuple(args.sigma2),
                       Gamma=args.Gamma, tau=args.tau, gamma=args.gamma, Delta0=args.delta0)
    p = np.full(len(args.sigma2), 1.0 / len(args.sigma2))
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(out)
        writer.writerow(["T", "first_term", "gap_term", "total"])
        for T in range(1, args.T + 1):
            t = bound_terms(T, k, args.J2, p)
            writer.writerow([T, repr(t.first), repr(t.gap), repr(t.total)])
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_oracle(args) -> int:
    from .roundopt import grid_oracle, integer_oracle, solve_round
    from .scenario import random_problem
    problem = random_problem(args.users, args.seed, epsilon=args.epsilon)
    alloc, cont, _ = solve_round(problem)
    grid = grid_oracle(problem)
    ints = integer_oracle(problem, b_max=args.b_max)
    cont_gap = (cont.round_latency - grid.latency) / grid.latency
    int_gap = (alloc.round_latency - ints.latency) / ints.latency
    ok = abs(cont_gap) <= args.rtol and int_gap <= args.rtol
    print(json.dumps({"seed": args.seed, "solver": cont.round_latency, "grid_oracle": grid.latency,
                      "solver_integer": alloc.round_latency, "integer_oracle": ints.latency,
                      "continuous_gap": cont_gap, "integer_gap": int_gap, "ok": bool(ok)}))
    return EXIT_OK if ok else EXIT_MISMATCH


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wqfl", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one simulation")
    _add_config_args(run)
    run.add_argument("--diagnostics", help="JSON-lines file of per-round allocator diagnostics")
    run.set_defaults(func=cmd_run)

    sw = sub.add_parser("sweep", help="paired runs along one axis")
    _add_config_args(sw)
    sw.add_argument("--axis", required=True, choices=["epsilon", "scheme", "partition"])
    sw.add_argument("--values", required=True, nargs="+",
                    help="leg values; for epsilon, 'A->B' gives a geometric decay from A to B")
    sw.set_defaults(func=cmd_sweep)

    bd = sub.add_parser("bound", help="tabulate the convergence bound for T = 1..T")
    bd.add_argument("--L", type=float, required=True)
    bd.add_argument("--mu", type=float, required=True)
    bd.add_argument("--G2", type=float, required=True)
    bd.add_argument("--sigma2", type=float, nargs="+", required=True, help="one value per user")
    bd.add_argument("--Gamma", type=float, default=0.0)
    bd.add_argument("--tau", type=int, default=2)
    bd.add_argument("--gamma", type=float, required=True)
    bd.add_argument("--delta0", type=float, required=True)
    bd.add_argument("--J2", type=float, default=0.0, help="per-round quantization error, all users")
    bd.add_argument("--T", type=int, required=True)
    bd.add_argument("--out")
    bd.set_defaults(func=cmd_bound)

    orc = sub.add_parser("oracle", help="check the round solver against brute-force oracles")
    orc.add_argument("--seed", type=int, default=0)
    orc.add_argument("--users", type=int, default=2)
    orc.add_argument("--epsilon", type=float, default=0.01)
    orc.add_argument("--b-max", type=int, default=40)
    orc.add_argument("--rtol", type=float, default=5e-3)
    orc.set_defaults(func=cmd_oracle)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except Infeasible as exc:
        print(f"infeasible round: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ConfigError, FileNotFoundError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        if args.command == "bound":
            print(f"configuration error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        raise


if __name__ == "__main__":
    sys.exit(main())
