"""Command-line interface: solve, simulate, verify-reduction, bench, make-instance."""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .errors import CapacityError, ValidationError
from .instance import load_instance, random_instance, save_instance, weighted_sum_rate
from .reduction import (DEFAULT_EPS, DEFAULT_N, Gadget, brute_force_mis, parse_edge_list,
                        random_degree3_graph, rate_maximizers, small_graph_corpus, verify_reduction)
from .sim import SimConfig, run_simulation
from .solvers import ALGORITHMS, run_algorithm


class UsageError(Exception):
    pass


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _parse_options(pairs) -> dict:
    """key=value pairs; values are parsed as JSON when possible."""
    out = {}
    for item in pairs or []:
        if "=" not in item:
            raise UsageError(f"--option expects key=value, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    return out


def cmd_solve(args) -> int:
    inst = load_instance(args.instance)
    options = _parse_options(args.option)
    if args.algorithm == "lig":
        if args.s_t is not None:
            options["s_t"] = args.s_t
        if args.i_th is not None:
            options["i_th"] = args.i_th
    sel = run_algorithm(inst, args.algorithm, options, args.seed)
    _emit({
        "algorithm": args.algorithm,
        "seed": args.seed,
        "weighted_sum_rate": weighted_sum_rate(inst, sel),
        "selection": [None if e is None else {"ap": a, "beam": e[0], "ue": e[1]}
                      for a, e in enumerate(sel.entries)],
    })
    return 0


def cmd_simulate(args) -> int:
    try:
        raw = json.loads(Path(args.config).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{args.config}: not valid JSON ({exc})") from None
    if not isinstance(raw, dict):
        raise ValidationError("config must be an object")
    raw["seed"] = args.seed
    for key in ("slots", "runs"):
        if getattr(args, key) is not None:
            raw[key] = getattr(args, key)
    config = SimConfig.from_dict(raw)
    report = run_simulation(config)
    if args.out:
        report.write(args.out)
    _emit(report.summary())
    print(f"wall-clock {report.wall_clock_s:.3f} s ({config.algorithm})", file=sys.stderr)
    return 0


def cmd_verify(args) -> int:
    results = []
    if args.corpus:
        graphs = [(f"atlas-{i}", g) for i, g in enumerate(small_graph_corpus(args.max_nodes))]
        rng = np.random.default_rng(args.seed)
        for i in range(args.random_graphs):
            k = int(rng.integers(1, args.random_max_nodes + 1))
            graphs.append((f"random-{i}", random_degree3_graph(rng, k)))
    else:
        if args.edges is None:
            raise UsageError("give an edge-list file or --corpus")
        graphs = [(str(args.edges), parse_edge_list(Path(args.edges).read_text(), args.nodes))]
    for name, g in graphs:
        gadget = Gadget(g, args.n, args.eps)
        ok = verify_reduction(gadget)
        entry = {"graph": name, "nodes": g.number_of_nodes(), "edges": g.number_of_edges(), "verified": ok}
        if not args.corpus:
            size, sets = brute_force_mis(g)
            top, _ = rate_maximizers(gadget)
            entry.update({"mis_size": size, "mis_sets": [sorted(s) for s in sets], "max_sum_rate": top})
        results.append(entry)
    all_ok = all(r["verified"] for r in results)
    _emit({"n": args.n, "eps": args.eps, "graphs": len(results), "all_verified": all_ok,
           "results": results if not args.corpus else [r for r in results if not r["verified"]]})
    return 0 if all_ok else 1


def cmd_bench(args) -> int:
    algos = args.algorithms.split(",") if args.algorithms else list(ALGORITHMS)
    for a in algos:
        if a not in ALGORITHMS:
            raise UsageError(f"unknown algorithm {a!r}")
    rng = np.random.default_rng(args.seed)
    insts = [random_instance(rng, args.n_aps, args.n_ues, args.n_beams) for _ in range(args.instances)]
    rows = []
    for a in algos:
        rates, secs = [], []
        for k, inst in enumerate(insts):
            t0 = time.perf_counter()
            sel = run_algorithm(inst, a, None, args.seed + k)
            secs.append(time.perf_counter() - t0)
            rates.append(weighted_sum_rate(inst, sel))
        row = {"algorithm": a, "mean_rate": float(np.mean(rates))}
        if not args.no_timing:
            row["mean_seconds"] = float(np.mean(secs))
        rows.append(row)
    cols = ["algorithm", "mean_rate"] + ([] if args.no_timing else ["mean_seconds"])
    print("\t".join(cols))
    for r in rows:
        print("\t".join(r["algorithm"] if c == "algorithm" else f"{r[c]:.10g}" for c in cols))
    return 0


def cmd_make_instance(args) -> int:
    rng = np.random.default_rng(args.seed)
    inst = random_instance(rng, args.n_aps, args.n_ues, args.n_beams)
    save_instance(inst, args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mmwsched", description="Joint UE and beam selection for mmWave APs.")
    p.add_argument("--json", action="store_true", help="report errors as JSON on stdout")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="select UEs and beams for one instance file")
    s.add_argument("instance")
    s.add_argument("--algorithm", "-a", choices=ALGORITHMS, default="ngub1")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--option", "-o", action="append", metavar="KEY=VALUE",
                   help="algorithm option, e.g. max_iters=2000 (repeatable)")
    s.add_argument("--s-t", type=float, help="LIG player RSS threshold, watts")
    s.add_argument("--i-th", type=float, help="LIG interference threshold, watts")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("simulate", help="run the slot/schedule simulation from a JSON config")
    s.add_argument("config")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out", help="directory for summary.csv and per_ue.csv")
    s.add_argument("--slots", type=int)
    s.add_argument("--runs", type=int)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("verify-reduction", help="check that max-rate subsets are the maximum independent sets")
    s.add_argument("edges", nargs="?", help="edge list file, one 'u v' pair per line")
    s.add_argument("--nodes", type=int, help="node count (adds isolated nodes)")
    s.add_argument("--n", type=float, default=DEFAULT_N)
    s.add_argument("--eps", type=float, default=DEFAULT_EPS)
    s.add_argument("--corpus", action="store_true", help="all small connected graphs plus random ones")
    s.add_argument("--max-nodes", type=int, default=7)
    s.add_argument("--random-graphs", type=int, default=200)
    s.add_argument("--random-max-nodes", type=int, default=14)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("bench", help="mean rate (and time) of each algorithm on random instances")
    s.add_argument("--n-aps", type=int, default=3)
    s.add_argument("--n-ues", type=int, default=4)
    s.add_argument("--n-beams", type=int, default=3)
    s.add_argument("--instances", type=int, default=5)
    s.add_argument("--algorithms", help="comma-separated subset")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--no-timing", action="store_true", help="omit wall-clock columns")
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("make-instance", help="write a random instance file")
    s.add_argument("output")
    s.add_argument("--n-aps", type=int, default=3)
    s.add_argument("--n-ues", type=int, default=4)
    s.add_argument("--n-beams", type=int, default=3)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_make_instance)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ValidationError, CapacityError, RuntimeError, OSError) as exc:
        code = 2 if isinstance(exc, (UsageError, ValidationError)) else 1
        if args.json:
            _emit({"error": type(exc).__name__, "message": str(exc), "exit_code": code})
        else:
            print(f"mmwsched: error: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
