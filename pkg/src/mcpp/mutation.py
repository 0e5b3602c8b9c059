"""Seeded instance generator: sample roots, remove vertices, draw edge weights."""
from __future__ import annotations

import zlib
import numpy as np

from .grid import GridGraph, Instance, bfs_component, cut_vertices

MAX_ROOT_DRAWS = 10_000
MAX_REMOVAL_RESAMPLES = 20


class GenerationError(RuntimeError):
    pass


def rng_for(seed: int, tag: str) -> np.random.Generator:
    """Independent PCG64 stream for one purpose, derived from (seed, tag)."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(zlib.crc32(tag.encode()),))
    return np.random.Generator(np.random.PCG64(ss))


def removal_quota(rho: int, n: int) -> int:
    # x = (100/12 * rho) percent of |V|, floored; integer arithmetic avoids rounding drift
    return (rho * n) // 12


def sample_roots(G: GridGraph, k: int, seed: int):
    rng = rng_for(seed, "roots")
    order = sorted(G.vertices)
    if k > len(order):
        raise GenerationError(f"cannot place {k} roots on {len(order)} vertices")
    cuts = cut_vertices(G)
    for _ in range(MAX_ROOT_DRAWS):
        idx = rng.choice(len(order), size=k, replace=False)
        roots = tuple(order[i] for i in idx)
        if any(r in cuts for r in roots):
            continue
        rest = G.vertices - set(roots)
        if rest and not G.is_connected(rest):
            continue
        if len(G) > k and any(all(n in roots for n in G.neighbors(r)) for r in roots):
            continue
        return roots
    raise GenerationError(f"could not sample {k} roots that keep the graph connected")


RING = ((1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1))


def _ring_connected(alive: set, c) -> bool:
    """True when all live 4-neighbors of ``c`` are joined through its live 8-ring."""
    x, y = c
    live = [(x + dx, y + dy) in alive for dx, dy in RING]
    if all(live):
        return True
    start = live.index(False)
    side_runs = 0
    in_run = has_side = False
    for i in range(1, 9):
        j = (start + i) % 8
        if live[j]:
            if not in_run:
                in_run, has_side = True, False
            has_side = has_side or j % 2 == 0
        elif in_run:
            side_runs += has_side
            in_run = False
    if in_run:
        side_runs += has_side
    return side_runs <= 1


def _still_connected(G: GridGraph, alive: set, c) -> bool:
    """Whether ``alive`` minus ``c`` stays connected; BFS from one neighbor of ``c``."""
    nbrs = [n for n in G.neighbors(c) if n in alive]
    if not nbrs:
        return len(alive) == 1
    if len(nbrs) == 1:
        return True
    if _ring_connected(alive, c):
        return True
    # grow one search per neighbor in lockstep; a search that runs dry before meeting
    # the others has found a component cut off by c
    alive.discard(c)
    try:
        group = list(range(len(nbrs)))

        def find(g):
            while group[g] != g:
                group[g] = group[group[g]]
                g = group[g]
            return g

        owner = {n: i for i, n in enumerate(nbrs)}
        frontiers = [[n] for n in nbrs]
        merged = 1
        while True:
            for i in range(len(nbrs)):
                if find(i) != i:
                    continue
                fr = frontiers[i]
                if not fr:
                    return False
                nxt = []
                for v in fr:
                    for n in G.neighbors(v):
                        if n not in alive:
                            continue
                        o = owner.get(n)
                        if o is None:
                            owner[n] = i
                            nxt.append(n)
                        else:
                            ro = find(o)
                            if ro != i:
                                group[ro] = i
                                nxt.extend(frontiers[ro])
                                frontiers[ro] = []
                                merged += 1
                                if merged == len(nbrs):
                                    return True
                frontiers[i] = nxt
    finally:
        alive.add(c)


def _remove_vertices(base, roots, protected, quota, rng):
    # connectivity is maintained on G minus the roots, which keeps G itself connected
    # because every root keeps a protected non-root neighbor
    alive = set(base.vertices) - set(roots)
    candidates = sorted(v for v in base.vertices if v not in protected)
    removed = 0
    attempts = 0
    # the verdict for a candidate can only change after a successful removal, so cache
    # rejections until then; once every candidate is rejected no draw can succeed
    rejected = set()
    while removed < quota and candidates and attempts < 50 * quota:
        attempts += 1
        j = int(rng.integers(len(candidates)))
        c = candidates[j]
        if c in rejected:
            continue
        if _still_connected(base, alive, c):
            alive.discard(c)
            candidates[j] = candidates[-1]
            candidates.pop()
            removed += 1
            rejected.clear()
        else:
            rejected.add(c)
            if len(rejected) == len(candidates):
                break
    return alive, removed


def generate_mutation(base: GridGraph, k: int, rho: int, seed: int, weighted: bool = True) -> Instance:
    if not 0 <= rho <= 11:
        raise ValueError("removal index must be in 0..11")
    if k < 1:
        raise ValueError("need at least one robot")
    roots = sample_roots(base, k, seed)
    protected = set(roots)
    for r in roots:
        protected.update(base.neighbors(r))
    quota = removal_quota(rho, len(base))
    best = 0
    for attempt in range(MAX_REMOVAL_RESAMPLES):
        tag = "removal" if attempt == 0 else f"removal/{attempt}"
        alive, removed = _remove_vertices(base, roots, protected, quota, rng_for(seed, tag))
        if removed == quota:
            break
        best = max(best, removed)
    else:
        raise GenerationError(
            f"removed at most {best}/{quota} vertices (ratio {best / len(base):.3f}, "
            f"target {quota / len(base):.3f}) after {MAX_REMOVAL_RESAMPLES} resamples")
    G = base.subgraph(alive | set(roots), check_connected=False)
    if weighted:
        wrng = rng_for(seed, "weights")
        edges = G.edges()
        vals = wrng.uniform(1.0, 3.0, size=len(edges))
        G = G.with_weights({e: float(w) for e, w in zip(edges, vals)})
    assert len(bfs_component(G, roots[0], G.vertices)) == len(G)
    return Instance(G, roots, seed=seed, rho=rho)
