"""Extended spanning tree coverage on arbitrary connected grid graphs.

The tree is found with Kruskal's algorithm over signed hyperedge weights.  The
coverage walk is the Euler circuit of the edge multiset obtained by applying the
rerouting rule of every tree hyperedge to the local paths, which is the same
multiset that pairwise splicing with :func:`connect_via_rerouting` produces.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .grid import Edge, GridGraph, Vertex, edge_key, heading_of, path_cost
from .hypergraph import (Hyperedge, Hypergraph, build_hypergraph, init_local_paths,
                         local_edge_counts, local_path, local_path_cost)


class ReroutingError(RuntimeError):
    """An edge that the rerouting rule must remove is missing from the walk."""


@dataclass(frozen=True)
class EstcOptions:
    turn_reduction: Optional[str] = None  # None, "horizontal" or "vertical"
    parallel_rewiring: bool = False
    turn_cost: Optional[float] = None


class UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))
        self.rank = [0] * n

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        return True


@dataclass
class SpanningTree:
    hypergraph: Hypergraph
    edges: Tuple[int, ...]

    @property
    def weight(self) -> float:
        return sum(self.hypergraph.hyperedges[e].weight for e in self.edges)


def kruskal_mst(H: Hypergraph, opts: Optional[EstcOptions] = None) -> SpanningTree:
    target = opts.turn_reduction if opts else None

    def key(e: Hyperedge):
        if target is None:
            return (e.weight, e.id)
        mismatch = 0 if H.orientation(e) == target else 1
        return (e.weight, mismatch, H.degree(e.a) + H.degree(e.b), e.id)

    uf = UnionFind(len(H.hypervertices))
    chosen = []
    for e in sorted(H.hyperedges, key=key):
        if uf.union(e.a, e.b):
            chosen.append(e.id)
    if len(chosen) != len(H.hypervertices) - 1:
        raise ValueError("hypergraph is disconnected")
    return SpanningTree(H, tuple(sorted(chosen)))


def tree_edge_multiset(H: Hypergraph, tree_edges: Iterable[int]) -> Counter:
    counts = Counter(local_edge_counts(H))
    for eid in tree_edges:
        e = H.hyperedges[eid]
        for u, v in e.plus:
            counts[edge_key(u, v)] += 1
        for u, v in e.minus:
            k = edge_key(u, v)
            if counts[k] <= 0:
                raise ReroutingError(f"edge {k} removed twice")
            counts[k] -= 1
    return +counts


def tree_cost(H: Hypergraph, tree_edges: Iterable[int]) -> float:
    """Cost of the rerouted walk of a spanning tree, from local costs and hyperedge weights."""
    G = H.graph
    total = sum(local_path_cost(G, local_path(hv)) for hv in H.hypervertices)
    return total + sum(H.hyperedges[e].weight for e in tree_edges)


# -- walk construction ----------------------------------------------------------
_STEP = ((1, 0), (0, 1), (-1, 0), (0, -1))
# headings are E,N,W,S counterclockwise, so h-1 is a right turn
_PREFER = tuple(((h - 1) % 4, h, (h + 1) % 4, (h + 2) % 4) for h in range(4))
_FIRST = (2, 3, 1, 0)  # neighbors of a vertex in coordinate order: W, S, N, E


def euler_circuit(counts: Dict[Edge, int], start: Vertex) -> List[Vertex]:
    """Hierholzer's algorithm; at each vertex prefer right turn, straight, left, reverse.

    The first step leaves ``start`` toward its smallest neighbor.
    """
    if not counts:
        return [start]
    remaining: Dict[Vertex, List[int]] = {}
    for (a, b), c in counts.items():
        h = heading_of(a, b)
        ra = remaining.get(a)
        if ra is None:
            ra = remaining[a] = [0, 0, 0, 0]
        rb = remaining.get(b)
        if rb is None:
            rb = remaining[b] = [0, 0, 0, 0]
        ra[h] += c
        rb[(h + 2) % 4] += c
    for v, r in remaining.items():
        if sum(r) % 2:
            raise ReroutingError(f"vertex {v} has odd degree")
    if start not in remaining:
        raise ReroutingError(f"start {start} is not on the edge multiset")

    stack = [start]
    heads = [-1]
    circuit: List[Vertex] = []
    while stack:
        v = stack[-1]
        r = remaining[v]
        h = heads[-1]
        for d in (_FIRST if h < 0 else _PREFER[h]):
            if r[d]:
                break
        else:
            circuit.append(stack.pop())
            heads.pop()
            continue
        r[d] -= 1
        dx, dy = _STEP[d]
        n = (v[0] + dx, v[1] + dy)
        remaining[n][(d + 2) % 4] -= 1
        stack.append(n)
        heads.append(d)
    circuit.reverse()
    if any(any(r) for r in remaining.values()):
        raise ReroutingError("edge multiset is not connected")
    return circuit


def rotate_to(walk: Sequence[Vertex], root: Vertex) -> Tuple[Vertex, ...]:
    """Rotate a closed walk to start at ``root``, choosing the smallest successor."""
    walk = list(walk)
    if len(walk) == 1:
        if walk[0] != root:
            raise ValueError(f"root {root} not on walk")
        return tuple(walk)
    body = walk[:-1]
    n = len(body)
    idx = [i for i, v in enumerate(body) if v == root]
    if not idx:
        raise ValueError(f"root {root} not on walk")
    best = min(idx, key=lambda i: body[(i + 1) % n])
    rot = body[best:] + body[:best]
    return tuple(rot + [root])


def connect_via_rerouting(path_a: Sequence[Vertex], path_b: Sequence[Vertex], e: Hyperedge) -> Tuple[Vertex, ...]:
    """Splice two closed walks along a hyperedge by adding its plus set and removing its minus set.

    ``path_a`` must contain the endpoints owned by one side of ``e`` and ``path_b``
    the other side; the sides are detected automatically.
    """
    A, B = list(path_a), list(path_b)
    cross = list(e.crossing)
    if cross[0][0] not in A:
        cross = [(v, u) for u, v in cross]
    if e.x == 1:
        (u, v), = cross
        if u not in A or v not in B:
            raise ReroutingError(f"crossing edge {(u, v)} does not join the two walks")
        i = A.index(u)
        return tuple(A[:i + 1] + list(rotate_to(B, v)) + A[i:])

    (u1, v1), (u2, v2) = cross

    def open_at(W, p, q):
        # remove one traversal of edge {p,q}; return the open walk running p .. q
        for i in range(len(W) - 1):
            if {W[i], W[i + 1]} == {p, q}:
                opened = W[i + 1:] + W[1:i + 1]
                return opened if opened[0] == p else opened[::-1]
        raise ReroutingError(f"edge {(p, q)} not traversed by walk")

    oa = open_at(A, u2, u1)  # u2 ... u1
    ob = open_at(B, v1, v2)  # v1 ... v2
    return tuple(oa + ob + [u2])


def estc_by_splicing(H: Hypergraph, tree_edges: Iterable[int], root: Vertex) -> Tuple[Vertex, ...]:
    """Build the coverage walk by splicing local paths one tree hyperedge at a time."""
    local = init_local_paths(H)
    tree_edges = list(tree_edges)
    start = H.owner[root]
    walk = list(local[start])
    done = {start}
    adj: Dict[int, List[int]] = {}
    for eid in tree_edges:
        e = H.hyperedges[eid]
        adj.setdefault(e.a, []).append(eid)
        adj.setdefault(e.b, []).append(eid)
    frontier = [start]
    while frontier:
        hv = frontier.pop(0)
        for eid in sorted(adj.get(hv, [])):
            e = H.hyperedges[eid]
            nxt = e.other(hv)
            if nxt in done:
                continue
            walk = list(connect_via_rerouting(walk, local[nxt], e))
            done.add(nxt)
            frontier.append(nxt)
    if len(done) != len(H.hypervertices):
        raise ValueError("tree does not span the hypergraph")
    return rotate_to(walk, root)


def estc(G: GridGraph, root: Vertex, opts: Optional[EstcOptions] = None,
         H: Optional[Hypergraph] = None) -> Tuple[Vertex, ...]:
    opts = opts or EstcOptions()
    if root not in G:
        raise ValueError(f"root {root} not in graph")
    H = H or build_hypergraph(G)
    tree = kruskal_mst(H, opts)
    counts = tree_edge_multiset(H, tree.edges)
    walk = rotate_to(euler_circuit(counts, root), root)
    if opts.parallel_rewiring:
        walk = parallel_rewiring(walk, G, opts.turn_cost)
    return walk


# -- parallel rewiring -------------------------------------------------------------
def _is_square(a, b, c, d) -> bool:
    """(a, b, c, d) walks three sides of a unit square, so a and d are adjacent."""
    dx, dy = b[0] - a[0], b[1] - a[1]
    return (c[0] - d[0], c[1] - d[1]) == (dx, dy) and abs(a[0] - d[0]) + abs(a[1] - d[1]) == 1 \
        and (d[0] - a[0]) * dx + (d[1] - a[1]) * dy == 0


def _window_cost(walk, lo, hi, G, turn_cost):
    return path_cost(walk[max(lo, 0):hi], G, turn_cost)


def _pass_type_a(walk: List[Vertex], G: GridGraph, turn_cost) -> Tuple[List[Vertex], bool]:
    counts = Counter(walk[:-1])
    fired = False
    i = 0
    while i < len(walk) - 3:
        a, d = walk[i], walk[i + 3]
        if abs(a[0] - d[0]) + abs(a[1] - d[1]) != 1:
            i += 1
            continue
        b, c = walk[i + 1], walk[i + 2]
        if counts[b] > 1 and counts[c] > 1 and _is_square(a, b, c, d):
            new = walk[:i + 1] + walk[i + 3:]
            if turn_cost:
                diff = _window_cost(new, i - 1, i + 3, G, turn_cost) - _window_cost(walk, i - 1, i + 5, G, turn_cost)
            else:
                diff = G.weight(a, d) - (G.weight(a, b) + G.weight(b, c) + G.weight(c, d))
            if diff < 0:
                walk = new
                counts[b] -= 1
                counts[c] -= 1
                fired = True
                continue
        i += 1
    return walk, fired


def _pass_type_b(walk: List[Vertex], G: GridGraph, turn_cost) -> Tuple[List[Vertex], bool]:
    fired = False
    used = Counter(map(edge_key, walk, walk[1:]))
    i = 0
    while i < len(walk) - 3:
        a, d = walk[i], walk[i + 3]
        if abs(a[0] - d[0]) + abs(a[1] - d[1]) != 1:
            i += 1
            continue
        b, c = walk[i + 1], walk[i + 2]
        new = None
        if _is_square(a, b, c, d):
            s1 = (2 * a[0] - b[0], 2 * a[1] - b[1])
            s2 = (2 * d[0] - c[0], 2 * d[1] - c[1])
            p = (2 * b[0] - a[0], 2 * b[1] - a[1])
            q = (2 * c[0] - d[0], 2 * c[1] - d[1])
            pq = edge_key(p, q)
            if used[pq] and used[edge_key(s1, a)] and used[edge_key(d, s2)]:
                if turn_cost:
                    ok = True
                else:
                    ok = (G.weight(a, d) + G.weight(p, b) + G.weight(c, q)) - (
                        G.weight(a, b) + G.weight(c, d) + G.weight(p, q)) < 0
                if ok:
                    base = path_cost(walk, G, turn_cost) if turn_cost else None
                    for j in range(len(walk) - 1):
                        if i <= j <= i + 2 or edge_key(walk[j], walk[j + 1]) != pq:
                            continue
                        pp, qq = walk[j], walk[j + 1]
                        detour = [pp, b, c, qq] if pp == p else [pp, c, b, qq]
                        if j < i:
                            cand = walk[:j] + detour + walk[j + 2:i + 1] + walk[i + 3:]
                        else:
                            cand = walk[:i + 1] + walk[i + 3:j] + detour + walk[j + 2:]
                        if turn_cost and not path_cost(cand, G, turn_cost) < base:
                            continue
                        new = cand
                        for u, w in ((a, b), (b, c), (c, d), (pp, qq)):
                            used[edge_key(u, w)] -= 1
                        for u, w in zip([a] + detour, [d] + detour[1:]):
                            used[edge_key(u, w)] += 1
                        break
        if new is not None:
            walk = new
            fired = True
            continue
        i += 1
    return walk, fired


def parallel_rewiring(walk: Sequence[Vertex], G: GridGraph, turn_cost: Optional[float] = None) -> Tuple[Vertex, ...]:
    """Left-to-right passes of Type-A collapses then Type-B rewires until neither lowers the cost."""
    walk = list(walk)
    while len(walk) >= 5:
        walk, fa = _pass_type_a(walk, G, turn_cost)
        walk, fb = _pass_type_b(walk, G, turn_cost)
        if not (fa or fb):
            break
    return tuple(walk)
