"""Baseline multi-robot planners: Voronoi partition and single-loop splitting."""
from __future__ import annotations

import heapq
from typing import Dict, List, Optional, Sequence

from .estc import EstcOptions, estc
from .grid import GridGraph, Instance, Solution, Vertex, bfs_component, path_cost


def dijkstra(G: GridGraph, sources: Sequence[Vertex], within=None):
    """Multi-source shortest paths; ties in distance go to the lowest source index.

    Returns (dist, label, pred) dictionaries.
    """
    dist: Dict[Vertex, float] = {}
    label: Dict[Vertex, int] = {}
    pred: Dict[Vertex, Optional[Vertex]] = {}
    heap = [(0.0, i, s, None) for i, s in enumerate(sources)]
    heapq.heapify(heap)
    while heap:
        d, i, v, p = heapq.heappop(heap)
        if v in dist:
            continue
        dist[v], label[v], pred[v] = d, i, p
        for n in G.neighbors(v):
            if n in dist or (within is not None and n not in within):
                continue
            heapq.heappush(heap, (d + G.weight(v, n), i, n, v))
    return dist, label, pred


def shortest_path(pred, target) -> List[Vertex]:
    out = [target]
    while pred[out[-1]] is not None:
        out.append(pred[out[-1]])
    out.reverse()
    return out


def _repair_cells(G: GridGraph, roots, label) -> List[set]:
    cells = [set() for _ in roots]
    for v, i in label.items():
        cells[i].add(v)
    dist_from = [dijkstra(G, [r])[0] for r in roots] if len(roots) > 1 else None
    for i, r in enumerate(roots):
        comp = bfs_component(G, r, cells[i])
        stranded = cells[i] - comp
        cells[i] = comp
        while stranded:
            part = bfs_component(G, min(stranded), stranded)
            stranded -= part
            touching = {j for j in range(len(roots)) if j != i and any(
                n in cells[j] for v in part for n in G.neighbors(v))}
            best = min(touching, key=lambda j: (min(dist_from[j][v] for v in part), j))
            cells[best] |= part
    return cells


def vor(inst: Instance, opts: Optional[EstcOptions] = None) -> Solution:
    G = inst.graph
    _, label, _ = dijkstra(G, inst.roots)
    cells = _repair_cells(G, inst.roots, label)
    paths = [estc(G.subgraph(c), r, opts) for c, r in zip(cells, inst.roots)]
    return Solution(paths, {"algorithm": "vor"})


# -- single loop split ----------------------------------------------------------------
def _split_for(T, order, loop, pos, prefix, dist, n):
    """Greedy: each robot in ``order`` takes the longest loop segment it can afford under T."""
    segs = []
    a = pos[order[0]]
    end = a + n  # positions are taken modulo n over the doubled loop
    for idx, i in enumerate(order):
        di = dist[i]
        if a >= end:
            segs.append(None)
            continue
        best = None
        b = a
        to_start = di[loop[a % n]]
        while b <= end:
            seg = prefix[b] - prefix[a]
            if to_start + seg > T:
                break
            if to_start + seg + di[loop[b % n]] <= T:
                best = b
            b += 1
        if best is None:
            segs.append(None)
            continue
        segs.append((a, best))
        a = best + 1
    return segs, a >= end


def _robot_path(G, root, pred_from_root, loop, n, seg):
    if seg is None:
        return (root,)
    a, b = seg
    body = [loop[p % n] for p in range(a, b + 1)]
    go = shortest_path(pred_from_root, body[0])
    back = shortest_path(pred_from_root, body[-1])[::-1]
    walk = go + body[1:] + back[1:]
    return tuple(walk)


def single_tree_split(inst: Instance, opts: Optional[EstcOptions] = None) -> Solution:
    G = inst.graph
    roots = inst.roots
    loop = list(estc(G, roots[0], opts))
    if len(loop) == 1:
        return Solution([(r,) for r in roots], {"algorithm": "mstc"})
    n = len(loop) - 1
    doubled = loop[:-1] * 2 + [loop[0]]
    prefix = [0.0]
    for p in range(2 * n):
        prefix.append(prefix[-1] + G.weight(doubled[p], doubled[p + 1]))
    first = {}
    for p, v in enumerate(loop[:-1]):
        first.setdefault(v, p)
    pos = {i: first[r] for i, r in enumerate(roots)}
    trees = [dijkstra(G, [r]) for r in roots]
    dist = [t[0] for t in trees]
    by_pos = sorted(range(len(roots)), key=lambda i: pos[i])
    turn_cost = opts.turn_cost if opts else None

    best = None
    for s in range(len(by_pos)):
        order = by_pos[s:] + by_pos[:s]
        lo, hi = 0.0, prefix[n] + 2 * max(max(d.values()) for d in dist)
        segs, ok = _split_for(hi, order, doubled, pos, prefix, dist, n)
        assert ok
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            trial, ok = _split_for(mid, order, doubled, pos, prefix, dist, n)
            if ok:
                hi, segs = mid, trial
            else:
                lo = mid
            if hi - lo <= 1e-9 * max(1.0, hi):
                break
        paths = [None] * len(roots)
        for i, seg in zip(order, segs):
            paths[i] = _robot_path(G, roots[i], trees[i][2], doubled, n, seg)
        ms = max(path_cost(p, G, turn_cost) for p in paths)
        if best is None or ms < best[0] - 1e-12:
            best = (ms, paths)
    return Solution(best[1], {"algorithm": "mstc"})
