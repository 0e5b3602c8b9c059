"""Base maps, batch generation and the benchmark runner."""
from __future__ import annotations

import csv
import io
import math
import os
import time
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .baselines import single_tree_split, vor
from .estc import EstcOptions, estc
from .grid import GridGraph, Instance, Solution, full_grid, verify_solution
from .local_search import LsParams, ls_mcpp

ALGORITHMS = ("estc", "vor", "mstc", "ls")
BASES = ("empty", "rooms", "pillars")

# the multi-robot solvers all run ESTC with turn reduction and parallel rewiring
SOLVER_OPTIONS = EstcOptions("horizontal", True)


def base_map(name: str, size: int = 32) -> GridGraph:
    """One of the built-in square base maps.

    ``rooms`` splits the square into four rooms by one-cell walls with two-cell
    doorways; ``pillars`` scatters 2x2 pillars on a six-cell lattice.
    """
    if name == "empty":
        return full_grid(size, size)
    cells = set((x, y) for x in range(size) for y in range(size))
    if name == "rooms":
        mid = size // 2
        q1, q3 = size // 4, (3 * size) // 4
        for t in range(size):
            cells.discard((mid, t))
            cells.discard((t, mid))
        for door in (q1, q1 + 1, q3, q3 + 1):
            cells.add((mid, door))
            cells.add((door, mid))
    elif name == "pillars":
        cells = {(x, y) for x, y in cells if not (x % 6 in (2, 3) and y % 6 in (2, 3))}
    else:
        raise ValueError(f"unknown base map {name!r}; choose from {', '.join(BASES)}")
    return GridGraph(size, size, cells)


def time_limit_from_env(default: Optional[float]) -> Optional[float]:
    raw = os.environ.get("MCPP_TIME_LIMIT")
    if not raw:
        return default
    return float(raw.rstrip("s"))


def solve(inst: Instance, algo: str, seed: int = 0, iters_scale: float = 1000.0,
          time_limit: Optional[float] = None, init: Optional[Solution] = None,
          trace=None) -> Tuple[Solution, bool]:
    """Run one planner; returns the solution and whether it finished in time.

    ``trace`` receives one record per local-search iteration.
    """
    if algo == "estc":
        if inst.k != 1:
            raise ValueError("estc plans a single robot; use vor, mstc or ls for k > 1")
        return Solution([estc(inst.graph, inst.roots[0], SOLVER_OPTIONS)], {"algorithm": "estc"}), True
    if algo == "vor":
        return vor(inst, SOLVER_OPTIONS), True
    if algo == "mstc":
        return single_tree_split(inst, SOLVER_OPTIONS), True
    if algo == "ls":
        sol0 = init if init is not None else vor(inst, SOLVER_OPTIONS)
        params = LsParams(seed=seed, iters_scale=iters_scale, time_limit=time_limit)
        res = ls_mcpp(inst, sol0, params, SOLVER_OPTIONS, trace=trace)
        sol = res.solution
        sol.metadata.update({"iterations": res.iterations, "initial_makespan": res.initial_makespan,
                             "iters_scale": iters_scale, "ls_seed": seed})
        return sol, not res.timed_out
    raise ValueError(f"unknown algorithm {algo!r}; choose from {', '.join(ALGORITHMS)}")


@dataclass
class BenchRow:
    instance: str
    rho: Optional[int]
    seed: Optional[int]
    algo: str
    makespan: float
    runtime: float
    success: bool

    FIELDS = ("instance", "rho", "seed", "algo", "makespan", "runtime", "success")

    def as_list(self):
        return [self.instance, self.rho, self.seed, self.algo, f"{self.makespan:.6f}",
                f"{self.runtime:.3f}", int(self.success)]


def run_batch(instances: Iterable[Tuple[str, Instance]], algos: Sequence[str] = ("vor", "mstc", "ls"),
              iters_scale: float = 1000.0, time_limit: Optional[float] = None,
              progress=None) -> List[BenchRow]:
    """Every algorithm on every instance; ls starts from the vor solution."""
    rows = []
    for name, inst in instances:
        cache: Dict[str, Solution] = {}
        for algo in algos:
            t0 = time.perf_counter()
            try:
                init = cache.get("vor") if algo == "ls" else None
                sol, ok = solve(inst, algo, seed=inst.seed or 0, iters_scale=iters_scale,
                                time_limit=time_limit, init=init)
                ok = ok and verify_solution(inst, sol).ok
                cache[algo] = sol
                ms = max(sol.costs(inst.graph))
            except ValueError:
                ok, ms = False, math.nan
            row = BenchRow(name, inst.rho, inst.seed, algo, ms, time.perf_counter() - t0, ok)
            rows.append(row)
            if progress is not None:
                progress(row)
    return rows


def rows_to_csv(rows: Sequence[BenchRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BenchRow.FIELDS)
    for r in rows:
        w.writerow(r.as_list())
    return buf.getvalue()


def summarize(rows: Sequence[BenchRow]) -> Dict[Tuple[Optional[int], str], Tuple[float, float, int]]:
    """(mean, sample std, count) of successful makespans per (rho, algo)."""
    groups: Dict[Tuple[Optional[int], str], List[float]] = {}
    for r in rows:
        if r.success:
            groups.setdefault((r.rho, r.algo), []).append(r.makespan)
    out = {}
    for key in sorted(groups, key=lambda k: (-1 if k[0] is None else k[0], k[1])):
        vals = groups[key]
        mean = sum(vals) / len(vals)
        var = sum((v - mean) ** 2 for v in vals) / (len(vals) - 1) if len(vals) > 1 else 0.0
        out[key] = (mean, math.sqrt(var), len(vals))
    return out


def format_summary(summary) -> str:
    lines = ["rho,algo,mean,std,n"]
    for (rho, algo), (mean, std, n) in summary.items():
        lines.append(f"{'' if rho is None else rho},{algo},{mean:.4f},{std:.4f},{n}")
    return "\n".join(lines) + "\n"


def reductions_vs(rows: Sequence[BenchRow], reference: str = "vor") -> Dict[Tuple[Optional[int], str], List[float]]:
    """Per-instance makespan reduction relative to ``reference``, grouped by (rho, algo)."""
    ref = {r.instance: r.makespan for r in rows if r.algo == reference and r.success}
    out: Dict[Tuple[Optional[int], str], List[float]] = {}
    for r in rows:
        if r.algo == reference or not r.success or r.instance not in ref:
            continue
        out.setdefault((r.rho, r.algo), []).append(ref[r.instance] - r.makespan)
    return out
