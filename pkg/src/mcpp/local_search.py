"""Local search over per-robot subgraphs with grow, deduplicate and exchange operators.

Each robot owns a connected vertex set V_i containing its root; its path is the
ESTC path of the induced subgraph.  Operators move boundary vertices between the
sets while keeping the union equal to V, and a simulated-annealing loop decides
which candidate solutions to keep.
"""
from __future__ import annotations

import math
import time
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .estc import EstcOptions, estc
from .grid import GridGraph, Instance, Solution, Vertex, bfs_component, cut_vertices, path_cost
from .hypergraph import block_of, build_hypergraph
from .mutation import rng_for

GROW, DEDUP, EXCHANGE = "grow", "dedup", "exchange"
EDGE, VERTEX = "edge", "vertex"
POOLS = (GROW, DEDUP, EXCHANGE)
POOL_FLOOR = 1e-6


@dataclass(frozen=True)
class Operator:
    kind: str
    flavor: str
    i: int
    verts: Tuple[Vertex, ...]
    j: int = -1  # donor for exchange operators

    @property
    def key(self):
        return (self.kind, self.flavor, self.i, self.j, self.verts)


@dataclass
class LsParams:
    max_iterations: Optional[int] = None
    dedup_step: Optional[int] = None
    temperature_decay: Optional[float] = None
    pool_weight_decay: float = 1e-2
    seed: int = 0
    iters_scale: float = 1000.0
    debug: bool = False
    time_limit: Optional[float] = None  # seconds; the search stops early and keeps its incumbent

    def resolved(self, n_vertices: int, k: int) -> "LsParams":
        M = self.max_iterations
        if M is None:
            M = int(self.iters_scale * math.sqrt(n_vertices / k))
        S = self.dedup_step if self.dedup_step is not None else max(1, M // 20)
        alpha = self.temperature_decay
        if alpha is None:
            alpha = math.exp(math.log(0.2) / M) if M > 0 else 1.0
        return LsParams(M, S, alpha, self.pool_weight_decay, self.seed, self.iters_scale, self.debug,
                        self.time_limit)


class PathOracle:
    """Memoized ESTC on vertex subsets of one graph."""

    def __init__(self, G: GridGraph, opts: Optional[EstcOptions] = None, capacity: int = 50_000):
        self.G = G
        self.opts = opts or EstcOptions()
        self.turn_cost = self.opts.turn_cost
        self.capacity = capacity
        self._cache: "OrderedDict[Tuple[FrozenSet[Vertex], Vertex], Tuple[Tuple[Vertex, ...], float]]" = OrderedDict()
        self.calls = 0

    def __call__(self, verts: FrozenSet[Vertex], root: Vertex):
        key = (verts, root)
        hit = self._cache.get(key)
        if hit is not None:
            self._cache.move_to_end(key)
            return hit
        self.calls += 1
        sub = self.G.subgraph(verts, check_connected=False)
        p = estc(sub, root, self.opts)
        res = (p, path_cost(p, self.G, self.turn_cost))
        self._cache[key] = res
        if len(self._cache) > self.capacity:
            self._cache.popitem(last=False)
        return res


class SubgraphSet:
    def __init__(self, inst: Instance, sets: Sequence[Iterable[Vertex]], oracle: PathOracle):
        self.inst = inst
        self.G = inst.graph
        self.k = inst.k
        self.roots = inst.roots
        self.oracle = oracle
        self.V: List[set] = [set(s) for s in sets]
        self.n: Dict[Vertex, int] = {v: 0 for v in self.G.vertices}
        for s in self.V:
            for v in s:
                self.n[v] += 1
        self.paths: List[Tuple[Vertex, ...]] = []
        self.costs: List[float] = []
        for i, s in enumerate(self.V):
            p, c = oracle(frozenset(s), self.roots[i])
            self.paths.append(p)
            self.costs.append(c)
        H = build_hypergraph(self.G)
        self.owner = H.owner
        self.hv_size = {h.id: h.size for h in H.hypervertices}
        self.blocks: Dict[Tuple[int, int], Tuple[Vertex, ...]] = {}
        for v in sorted(self.G.vertices):
            self.blocks.setdefault(block_of(v), ())
            self.blocks[block_of(v)] += (v,)
        self._cuts: Dict[int, Tuple[FrozenSet[Vertex], set]] = {}

    # -- bookkeeping -------------------------------------------------------------
    @property
    def makespan(self) -> float:
        return max(self.costs)

    @property
    def mean_cost(self) -> float:
        return sum(self.costs) / self.k

    def light(self, i) -> bool:
        return self.costs[i] <= self.mean_cost

    def duplicated(self, v) -> bool:
        return self.n[v] > 1

    def solution(self) -> Solution:
        return Solution(list(self.paths))

    def check(self):
        counts = {v: 0 for v in self.G.vertices}
        for i, s in enumerate(self.V):
            assert self.roots[i] in s, f"robot {i} lost its root"
            assert self.G.is_connected(s), f"subgraph {i} disconnected"
            assert set(self.paths[i]) == s, f"path {i} does not cover its subgraph"
            for v in s:
                counts[v] += 1
        assert counts == self.n, "duplication counts out of sync"
        assert all(c > 0 for c in counts.values()), "coverage lost"

    def cut_set(self, i) -> set:
        fs = frozenset(self.V[i])
        hit = self._cuts.get(i)
        if hit is None or hit[0] != fs:
            hit = (fs, cut_vertices(self.G, fs))
            self._cuts[i] = hit
        return hit[1]

    # -- operator validity -------------------------------------------------------
    def boundary(self, i) -> set:
        Vi = self.V[i]
        return {n for v in Vi for n in self.G.neighbors(v) if n not in Vi}

    def in_boundary(self, i, v) -> bool:
        return v not in self.V[i] and any(n in self.V[i] for n in self.G.neighbors(v))

    def intra(self, u, v) -> bool:
        return self.owner[u] == self.owner[v] and self.G.has_edge(u, v)

    def grow_valid(self, i, verts) -> bool:
        if len(verts) == 1:
            return self.in_boundary(i, verts[0])
        u, v = verts
        if not (self.intra(u, v) and self.in_boundary(i, u) and self.in_boundary(i, v)):
            return False
        Vi = self.V[i]
        for d in ((1, 0), (0, 1), (-1, 0), (0, -1)):
            p = (u[0] + d[0], u[1] + d[1])
            q = (v[0] + d[0], v[1] + d[1])
            if p in Vi and q in Vi:
                return True
        return False

    def _remains_connected(self, i, verts) -> bool:
        rest = self.V[i] - set(verts)
        if not rest:
            return False
        if len(verts) == 1:
            return verts[0] not in self.cut_set(i)
        return len(bfs_component(self.G, self.roots[i], rest)) == len(rest)

    def _block_cells(self, blk):
        return self.blocks.get(blk, ())

    def _block_full_in(self, blk, Vi) -> bool:
        cells = self._block_cells(blk)
        return len(cells) == 4 and all(c in Vi for c in cells)

    def _edge_dedup_geometry(self, i, u, v) -> bool:
        if self.hv_size[self.owner[u]] == 2:
            return True
        Vi = self.V[i]
        bx, by = block_of(u)
        if u[1] == v[1]:
            # horizontal edge on the bottom or top row of the block
            outward = (0, -1) if u[1] == 2 * by else (0, 1)
            lateral = ((-1, 0), (1, 0))
        else:
            outward = (-1, 0) if u[0] == 2 * bx else (1, 0)
            lateral = ((0, -1), (0, 1))
        top = (bx + outward[0], by + outward[1])
        bottom = (bx - outward[0], by - outward[1])
        if any(c in Vi for c in self._block_cells(top)):
            return False
        if not self._block_full_in(bottom, Vi):
            return False
        for d in lateral:
            side = (bx + d[0], by + d[1])
            if any(c in Vi for c in self._block_cells(side)):
                corner = (side[0] - outward[0], side[1] - outward[1])
                if not (self._block_full_in(side, Vi) and self._block_full_in(corner, Vi)):
                    return False
        return True

    def dedup_valid(self, i, verts, require_dup: bool = True) -> bool:
        Vi = self.V[i]
        root = self.roots[i]
        for v in verts:
            if v not in Vi or v == root:
                return False
            if require_dup and self.n[v] < 2:
                return False
        if len(verts) == 2:
            u, v = verts
            if not self.intra(u, v) or not self._edge_dedup_geometry(i, u, v):
                return False
        return self._remains_connected(i, verts)

    def valid(self, o: Operator) -> bool:
        if o.kind == GROW:
            return self.grow_valid(o.i, o.verts)
        if o.kind == DEDUP:
            return self.dedup_valid(o.i, o.verts)
        return o.i != o.j and self.grow_valid(o.i, o.verts) and self.dedup_valid(o.j, o.verts, require_dup=False)

    # -- operator application ----------------------------------------------------
    def changes(self, o: Operator) -> Dict[int, set]:
        """New vertex sets of the subgraphs touched by ``o``."""
        out = {}
        if o.kind in (GROW, EXCHANGE):
            out[o.i] = self.V[o.i] | set(o.verts)
        if o.kind == DEDUP:
            out[o.i] = self.V[o.i] - set(o.verts)
        if o.kind == EXCHANGE:
            out[o.j] = self.V[o.j] - set(o.verts)
        return out

    def evaluate(self, new_sets: Dict[int, set]):
        """Paths and costs for tentative vertex sets, plus the resulting makespan."""
        res = {i: self.oracle(frozenset(s), self.roots[i]) for i, s in new_sets.items()}
        ms = max(res[i][1] if i in res else c for i, c in enumerate(self.costs))
        return res, ms

    def commit(self, new_sets: Dict[int, set], res=None):
        for i, s in new_sets.items():
            for v in self.V[i] - s:
                self.n[v] -= 1
            for v in s - self.V[i]:
                self.n[v] += 1
            self.V[i] = set(s)
            p, c = res[i] if res is not None else self.oracle(frozenset(s), self.roots[i])
            self.paths[i] = p
            self.costs[i] = c

    def set_path(self, i, path):
        s = set(path)
        for v in self.V[i] - s:
            self.n[v] -= 1
        self.V[i] = s
        self.paths[i] = tuple(path)
        self.costs[i] = path_cost(path, self.G, self.oracle.turn_cost)


def subgraphs_from_solution(inst: Instance, sol, opts: Optional[EstcOptions] = None,
                            oracle: Optional[PathOracle] = None) -> SubgraphSet:
    from .grid import verify_solution
    paths = sol.paths if isinstance(sol, Solution) else sol
    report = verify_solution(inst, paths)
    if not report.ok:
        raise ValueError(f"initial solution invalid: {report.violation}")
    oracle = oracle or PathOracle(inst.graph, opts)
    return SubgraphSet(inst, [set(p) for p in paths], oracle)


# -- heuristics and pools --------------------------------------------------------
def heuristic(o: Operator, S: SubgraphSet) -> float:
    if o.kind == EXCHANGE:
        return S.costs[o.j] - S.costs[o.i]
    mean_n = sum(S.n[v] for v in o.verts) / len(o.verts)
    if o.kind == GROW:
        return -S.k * S.costs[o.i] - mean_n
    return S.k * S.costs[o.i] + mean_n


def enumerate_operator(kind: str, S: SubgraphSet, v: Vertex, i: int, j: Optional[int] = None) -> Optional[Operator]:
    """Valid operator of ``kind`` touching ``v``; edge-wise if one exists, else vertex-wise."""
    for u in S.G.neighbors(v):
        if not S.intra(u, v):
            continue
        verts = tuple(sorted((u, v)))
        if kind == GROW and S.grow_valid(i, verts):
            return Operator(GROW, EDGE, i, verts)
        if kind == DEDUP and S.dedup_valid(i, verts):
            return Operator(DEDUP, EDGE, i, verts)
        if kind == EXCHANGE and S.grow_valid(i, verts) and S.dedup_valid(j, verts, require_dup=False):
            return Operator(EXCHANGE, EDGE, i, verts, j)
    verts = (v,)
    if kind == GROW and S.grow_valid(i, verts):
        return Operator(GROW, VERTEX, i, verts)
    if kind == DEDUP and S.dedup_valid(i, verts):
        return Operator(DEDUP, VERTEX, i, verts)
    if kind == EXCHANGE and S.grow_valid(i, verts) and S.dedup_valid(j, verts, require_dup=False):
        return Operator(EXCHANGE, VERTEX, i, verts, j)
    return None


@dataclass
class Pools:
    ops: Dict[str, Dict] = field(default_factory=lambda: {p: {} for p in POOLS})
    weights: Dict[str, float] = field(default_factory=lambda: {p: 1.0 for p in POOLS})

    def __len__(self):
        return sum(len(d) for d in self.ops.values())

    def add(self, o: Operator) -> bool:
        d = self.ops[o.kind]
        if o.key in d:
            return False
        d[o.key] = o
        return True

    def discard(self, o: Operator):
        self.ops[o.kind].pop(o.key, None)


def update_pools(S: SubgraphSet, pools: Pools, o: Optional[Operator] = None) -> Pools:
    G = S.G
    if o is None:
        dirty = set(G.vertices)
        for d in pools.ops.values():
            d.clear()
    else:
        dirty = set(o.verts)
        for v in o.verts:
            dirty.update(G.neighbors(v))
        for d in pools.ops.values():
            for key in [key for key, op in d.items() if any(v in dirty for v in op.verts)]:
                del d[key]
    light = [i for i in range(S.k) if S.light(i)]
    heavy = [i for i in range(S.k) if not S.light(i)]
    # grow needs v on the boundary and dedup needs v duplicated inside, so skip the rest early
    boundary = {i: S.boundary(i) for i in light}
    new_grow, new_dedup = [], []
    for v in sorted(dirty):
        for i in light:
            if v not in boundary[i]:
                continue
            op = enumerate_operator(GROW, S, v, i)
            if op is not None and pools.add(op):
                new_grow.append(op)
        if S.n[v] < 2:
            continue
        for i in heavy:
            if v not in S.V[i]:
                continue
            op = enumerate_operator(DEDUP, S, v, i)
            if op is not None and pools.add(op):
                new_dedup.append(op)
    # exchanges pair a light receiver with a heavy donor over the same vertices
    for op in new_grow:
        for j in heavy:
            if all(v in S.V[j] for v in op.verts) and S.dedup_valid(j, op.verts, require_dup=False):
                pools.add(Operator(EXCHANGE, op.flavor, op.i, op.verts, j))
    for op in new_dedup:
        for i in light:
            if S.grow_valid(i, op.verts):
                pools.add(Operator(EXCHANGE, op.flavor, i, op.verts, op.i))
    return pools


def _u_turn(S: SubgraphSet, i: int, path) -> Optional[int]:
    G = S.G
    for j in range(1, len(path) - 2):
        u, v = path[j], path[j + 1]
        if u == v or not (S.duplicated(u) and S.duplicated(v)):
            continue
        p, q = path[j - 1], path[j + 2]
        if p != q and G.has_edge(p, q):
            return j
    return None


def forced_deduplication(S: SubgraphSet, pools: Pools) -> None:
    order = sorted(range(S.k), key=lambda i: (-S.costs[i], i))
    for i in order:
        path = list(S.paths[i])
        while True:
            j = _u_turn(S, i, path)
            if j is None:
                break
            path = path[:j] + path[j + 2:]
            # vertices that left the path leave the subgraph, so duplication shrinks as we go
            S.set_path(i, path)
    order = sorted(range(S.k), key=lambda i: (-S.costs[i], i))
    for i in order:
        mine = [op for op in pools.ops[DEDUP].values() if op.i == i]
        mine.sort(key=lambda op: (-heuristic(op, S), op.key))
        for op in mine:
            if not S.valid(op):
                continue
            S.commit(S.changes(op))
    update_pools(S, pools)


def _softmax_choice(rng, values) -> int:
    arr = np.asarray(values, dtype=float)
    arr = np.exp(arr - arr.max())
    arr /= arr.sum()
    return int(rng.choice(len(arr), p=arr))


@dataclass
class LsResult:
    solution: Solution
    makespan: float
    initial_makespan: float
    iterations: int
    accepted: int
    estc_calls: int
    timed_out: bool = False


def ls_mcpp(inst: Instance, sol0: Solution, params: Optional[LsParams] = None,
            opts: Optional[EstcOptions] = None, trace: Optional[Callable[[Dict], None]] = None) -> LsResult:
    params = (params or LsParams()).resolved(len(inst.graph), inst.k)
    G = inst.graph
    oracle = PathOracle(G, opts)
    turn_cost = oracle.turn_cost
    best_paths = [tuple(p) for p in sol0.paths]
    theta0 = max(path_cost(p, G, turn_cost) for p in best_paths)
    best = theta0
    M = params.max_iterations
    if M <= 0:
        return LsResult(Solution(best_paths, {"algorithm": "ls"}), best, theta0, 0, 0, 0)
    S = subgraphs_from_solution(inst, sol0, oracle=oracle)
    if S.makespan < best:
        best, best_paths = S.makespan, list(S.paths)
    pools = update_pools(S, Pools())
    rng = rng_for(params.seed, "local_search")
    t = 1.0
    accepted = 0
    deadline = None if params.time_limit is None else time.monotonic() + params.time_limit
    it = 0
    timed_out = False
    while it < M:
        it += 1
        if deadline is not None and time.monotonic() > deadline:
            timed_out = True
            it -= 1
            break
        names = [p for p in POOLS if pools.ops[p]]
        if not names:
            update_pools(S, pools)
            names = [p for p in POOLS if pools.ops[p]]
        dtheta = 0.0
        took = False
        op = None
        if names:
            name = names[_softmax_choice(rng, [pools.weights[p] for p in names])]
            pool = pools.ops[name]
            while pool:
                cands = list(pool.values())
                o = cands[_softmax_choice(rng, [heuristic(c, S) for c in cands])]
                if S.valid(o):
                    op = o
                    break
                pool.pop(o.key)
            if op is not None:
                new_sets = S.changes(op)
                res, ms = S.evaluate(new_sets)
                dtheta = ms - S.makespan
                w = (1 - params.pool_weight_decay) * pools.weights[name] + params.pool_weight_decay * max(-dtheta, 0.0)
                pools.weights[name] = max(POOL_FLOOR, w)
                if dtheta < 0 or rng.random() < math.exp(-dtheta / t):
                    S.commit(new_sets, res)
                    update_pools(S, pools, op)
                    took = True
                    accepted += 1
        if it % params.dedup_step == 0 or dtheta < 0:
            forced_deduplication(S, pools)
        if params.debug:
            S.check()
        if S.makespan < best:
            best, best_paths = S.makespan, list(S.paths)
        if trace is not None:
            rec = {"iteration": it, "makespan": S.makespan, "best": best, "temperature": t,
                   "accepted": took, "operator": None if op is None else [op.kind, op.flavor, op.i, op.j]}
            trace(rec)
        t *= params.temperature_decay
    return LsResult(Solution(best_paths, {"algorithm": "ls"}), best, theta0, it, accepted, oracle.calls, timed_out)
