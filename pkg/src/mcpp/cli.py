"""Command-line front end.

Every subcommand prints ``key=value`` lines separated by ``;`` on stdout.  Exit
codes: 0 ok, 2 parse or usage error, 3 verification failure, 4 timeout,
5 infeasible.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from typing import List, Optional

EXIT_OK, EXIT_PARSE, EXIT_VERIFY, EXIT_TIMEOUT, EXIT_INFEASIBLE = 0, 2, 3, 4, 5


class CliError(Exception):
    def __init__(self, msg: str, code: int):
        super().__init__(msg)
        self.code = code


def _seconds(text: str) -> float:
    try:
        return float(text[:-1] if text.endswith("s") else text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a duration: {text!r}") from None


def _int_range(text: str) -> List[int]:
    """``3``, ``0-11`` or ``0,3,6``."""
    out = []
    try:
        for part in text.split(","):
            if "-" in part:
                lo, hi = part.split("-")
                out.extend(range(int(lo), int(hi) + 1))
            else:
                out.append(int(part))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer range: {text!r}") from None
    return out


def _line(**fields) -> str:
    return ";".join(f"{k}={v}" for k, v in fields.items())


def _instance(args):
    from .io import read_instance, read_instance_prefix
    if args.instance:
        return read_instance_prefix(args.instance)
    if not (args.map and args.scen):
        raise CliError("need --instance PREFIX or both --map and --scen", EXIT_PARSE)
    return read_instance(args.map, args.scen, args.weights)


def _time_limit(args) -> Optional[float]:
    from .bench import time_limit_from_env
    return time_limit_from_env(getattr(args, "time_limit", None))


def _turn_cost(args) -> Optional[float]:
    c = getattr(args, "turn_cost", None)
    return c if c else None


# -- subcommands -------------------------------------------------------------------
def cmd_generate(args) -> int:
    from .bench import BASES, base_map
    from .grid import load_map
    from .io import read_text, write_instance, write_manifest
    from .mutation import generate_mutation
    if args.base in BASES:
        base = base_map(args.base, args.size)
        stem = args.base
    else:
        base = load_map(read_text(args.base))
        stem = os.path.splitext(os.path.basename(args.base))[0]
    entries = []
    for rho in args.rho:
        for s in args.seeds:
            name = f"{stem}-k{args.k}-r{rho}-s{s}"
            inst = generate_mutation(base, args.k, rho, s)
            write_instance(os.path.join(args.out, name), inst)
            entries.append({"name": name, "prefix": name, "rho": rho, "seed": s, "k": args.k})
            print(_line(instance=name, vertices=len(inst.graph), roots=len(inst.roots)))
    write_manifest(os.path.join(args.out, "manifest.json"), entries)
    print(_line(generated=len(entries), manifest=os.path.join(args.out, "manifest.json")))
    return EXIT_OK


def cmd_solve(args) -> int:
    from .bench import solve
    from .grid import verify_solution
    from .io import write_solution, write_text
    from .render import render_solution
    inst = _instance(args)
    if args.dump_hypergraph:
        from .hypergraph import build_hypergraph
        write_text(args.dump_hypergraph, build_hypergraph(inst.graph).dump())
    seed = args.seed if args.seed is not None else (inst.seed or 0)
    trace = None
    if args.trace:
        os.makedirs(os.path.dirname(os.path.abspath(args.trace)), exist_ok=True)
        trace_file = open(args.trace, "w", encoding="utf-8")
        trace = lambda rec: trace_file.write(json.dumps(rec, sort_keys=True) + "\n")  # noqa: E731
    try:
        sol, finished = solve(inst, args.algo, seed=seed, iters_scale=args.iters_scale,
                              time_limit=_time_limit(args), trace=trace)
    finally:
        if trace is not None:
            trace_file.close()
    sol.metadata.update({"algorithm": args.algo})
    report = verify_solution(inst, sol)
    write_solution(args.out, inst, sol)
    if args.svg:
        render_solution(inst, sol.paths, args.svg, title=f"{args.algo}: makespan {report.makespan:.3f}")
    print(_line(algo=args.algo, makespan=f"{report.makespan:.6f}", valid=int(report.ok),
                finished=int(finished), out=args.out))
    if not report.ok:
        print(report.summary(), file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK if finished else EXIT_TIMEOUT


def cmd_deconflict(args) -> int:
    from .deconflict import DeconflictFailure, DeconflictTimeout, pbs_deconflict, verify_trajectories
    from .io import read_solution, write_trajectories
    from .render import render_trajectories
    inst = _instance(args)
    sol = read_solution(args.inp)
    tc = _turn_cost(args)
    try:
        res = pbs_deconflict(inst, sol.paths, planner=args.low_level, b_max=args.bmax, turn_cost=tc,
                             time_limit=_time_limit(args))
    except DeconflictTimeout as exc:
        print(_line(planner=args.low_level, status="timeout", **exc.stats))
        return EXIT_TIMEOUT
    except DeconflictFailure as exc:
        print(_line(planner=args.low_level, status="infeasible", **exc.stats))
        return EXIT_INFEASIBLE
    report = verify_trajectories(inst, sol.paths, res.trajectories, tc)
    meta = {"planner": args.low_level, "bmax": args.bmax, "turn_cost": tc}
    write_trajectories(args.out, res.trajectories, res.makespan, res.stats, meta)
    if args.svg:
        render_trajectories(inst, res.trajectories, args.svg,
                            title=f"{args.low_level}: makespan {res.makespan:.3f}")
    print(_line(planner=args.low_level, status="ok", makespan=f"{res.makespan:.6f}",
                valid=int(report.ok), out=args.out, **res.stats))
    return EXIT_OK if report.ok else EXIT_VERIFY


def cmd_verify(args) -> int:
    from .deconflict import verify_trajectories
    from .grid import verify_solution
    from .io import read_solution, read_trajectories
    inst = _instance(args)
    sol = read_solution(args.solution)
    report = verify_solution(inst, sol, _turn_cost(args))
    print("solution: " + report.summary())
    ok = report.ok
    if args.trajectories:
        trajs, data = read_trajectories(args.trajectories)
        tc = _turn_cost(args)
        if tc is None:
            tc = data.get("metadata", {}).get("turn_cost")
        treport = verify_trajectories(inst, sol.paths, trajs, tc)
        print("trajectories: " + treport.summary())
        ok = ok and treport.ok
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_render(args) -> int:
    from .io import read_solution, read_trajectories
    from .render import render_solution, render_trajectories
    inst = _instance(args)
    if args.trajectories:
        trajs, _ = read_trajectories(args.trajectories)
        render_trajectories(inst, trajs, args.out)
    elif args.solution:
        render_solution(inst, read_solution(args.solution).paths, args.out)
    else:
        raise CliError("need --solution or --trajectories", EXIT_PARSE)
    print(_line(out=args.out))
    return EXIT_OK


def cmd_bench(args) -> int:
    from .bench import format_summary, reductions_vs, rows_to_csv, run_batch, summarize
    from .io import read_instance_prefix, read_manifest, write_text
    from .render import render_reductions
    entries = read_manifest(args.manifest)
    instances = ((e.get("name", os.path.basename(e["prefix"])), read_instance_prefix(e["prefix"]))
                 for e in entries)
    algos = [a for a in args.algos.split(",") if a]

    def progress(row):
        print(_line(instance=row.instance, algo=row.algo, makespan=f"{row.makespan:.6f}",
                    runtime=f"{row.runtime:.3f}", success=int(row.success)), flush=True)

    rows = run_batch(instances, algos, iters_scale=args.iters_scale, time_limit=_time_limit(args),
                     progress=progress)
    os.makedirs(args.out, exist_ok=True)
    write_text(os.path.join(args.out, "results.csv"), rows_to_csv(rows))
    write_text(os.path.join(args.out, "summary.csv"), format_summary(summarize(rows)))
    if "vor" in algos:
        render_reductions(reductions_vs(rows, "vor"), os.path.join(args.out, "reductions.svg"))
    print(_line(rows=len(rows), out=args.out))
    return EXIT_OK


# -- parser --------------------------------------------------------------------------
def _instance_args(p):
    p.add_argument("--instance", help="prefix of PREFIX.map, PREFIX.weights and PREFIX.scen")
    p.add_argument("--map")
    p.add_argument("--weights")
    p.add_argument("--scen")


def build_parser() -> argparse.ArgumentParser:
    from .bench import ALGORITHMS
    ap = argparse.ArgumentParser(prog="mcpp", description="Multi-robot coverage path planning on grids.")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write mutated instances and a manifest")
    g.add_argument("--base", required=True, help="map file or built-in base: empty, rooms, pillars")
    g.add_argument("--size", type=int, default=32, help="side of a built-in base")
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--rho", type=_int_range, default=[0])
    g.add_argument("--seeds", type=_int_range, default=[0])
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="plan coverage paths")
    _instance_args(s)
    s.add_argument("--algo", choices=ALGORITHMS, default="ls")
    s.add_argument("--seed", type=int)
    s.add_argument("--iters-scale", type=float, default=1000.0)
    s.add_argument("--time-limit", type=_seconds)
    s.add_argument("--out", required=True)
    s.add_argument("--svg", help="also render the solution to this SVG file")
    s.add_argument("--trace", help="write one JSON line per local-search iteration to this file")
    s.add_argument("--dump-hypergraph", help="write the hypervertex and hyperedge tables to this file")
    s.set_defaults(func=cmd_solve)

    d = sub.add_parser("deconflict", help="turn coverage paths into conflict-free trajectories")
    _instance_args(d)
    d.add_argument("--in", dest="inp", required=True)
    d.add_argument("--low-level", choices=("cha", "mla", "ada"), default="ada")
    d.add_argument("--bmax", type=int, default=5)
    d.add_argument("--turn-cost", type=float, default=0.0)
    d.add_argument("--time-limit", type=_seconds)
    d.add_argument("--out", required=True)
    d.add_argument("--svg")
    d.set_defaults(func=cmd_deconflict)

    v = sub.add_parser("verify", help="check a solution and optionally its trajectories")
    _instance_args(v)
    v.add_argument("--solution", required=True)
    v.add_argument("--trajectories")
    v.add_argument("--turn-cost", type=float)
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("render", help="draw a solution or trajectories as SVG")
    _instance_args(r)
    r.add_argument("--solution")
    r.add_argument("--trajectories")
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_render)

    b = sub.add_parser("bench", help="run planners over a manifest")
    b.add_argument("--manifest", required=True)
    b.add_argument("--algos", default="vor,mstc,ls")
    b.add_argument("--iters-scale", type=float, default=1000.0)
    b.add_argument("--time-limit", type=_seconds)
    b.add_argument("--out", required=True, help="directory for results.csv, summary.csv and reductions.svg")
    b.set_defaults(func=cmd_bench)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    from .grid import GridError
    from .mutation import GenerationError
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except GridError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except GenerationError as exc:
        print(f"error: generation failed: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
