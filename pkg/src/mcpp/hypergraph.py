"""Contraction of a grid graph into 2x2-block hypervertices joined by hyperedges."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Tuple

from .grid import Edge, GridGraph, Vertex, edge_key


class Hypervertex(NamedTuple):
    id: int
    block: Tuple[int, int]
    members: Tuple[Vertex, ...]

    @property
    def anchor(self) -> Vertex:
        return (2 * self.block[0], 2 * self.block[1])

    @property
    def complete(self) -> bool:
        return len(self.members) == 4

    @property
    def size(self) -> int:
        return len(self.members)


class Hyperedge(NamedTuple):
    id: int
    a: int
    b: int
    crossing: Tuple[Edge, ...]  # (u, v) with u in hypervertex a, v in hypervertex b
    plus: Tuple[Edge, ...]
    minus: Tuple[Edge, ...]
    weight: float

    @property
    def x(self) -> int:
        return len(self.crossing)

    def other(self, hv: int) -> int:
        return self.b if hv == self.a else self.a


@dataclass
class Hypergraph:
    graph: GridGraph
    hypervertices: List[Hypervertex]
    hyperedges: List[Hyperedge]
    owner: Dict[Vertex, int]
    incident: Dict[int, List[int]]

    @property
    def num_complete(self) -> int:
        return sum(1 for h in self.hypervertices if h.complete)

    def degree(self, hv: int) -> int:
        return len(self.incident[hv])

    def orientation(self, e: Hyperedge) -> str:
        ba = self.hypervertices[e.a].block
        bb = self.hypervertices[e.b].block
        return "horizontal" if ba[1] == bb[1] else "vertical"

    def dump(self) -> str:
        out = ["# hypervertices: id block complete members"]
        for h in self.hypervertices:
            out.append(f"{h.id} {h.block[0]},{h.block[1]} {int(h.complete)} "
                       + " ".join(f"{x},{y}" for x, y in h.members))
        out.append("# hyperedges: id a b x weight crossing")
        for e in self.hyperedges:
            cross = " ".join(f"{u[0]},{u[1]}-{v[0]},{v[1]}" for u, v in e.crossing)
            out.append(f"{e.id} {e.a} {e.b} {e.x} {e.weight!r} {cross}")
        return "\n".join(out) + "\n"


def block_of(v: Vertex) -> Tuple[int, int]:
    return (v[0] // 2, v[1] // 2)


def _split_block(members: List[Vertex]) -> List[Tuple[Vertex, ...]]:
    if len(members) == 2:
        (x1, y1), (x2, y2) = members
        if x1 != x2 and y1 != y2:
            return [(members[0],), (members[1],)]
    return [tuple(members)]


def rerouting_sets(G: GridGraph, crossing: List[Edge]) -> Tuple[Tuple[Edge, ...], Tuple[Edge, ...]]:
    """Edges added and removed when a hyperedge with these crossing edges joins a tree."""
    if len(crossing) == 2:
        (u1, v1), (u2, v2) = crossing
        return ((u1, v1), (u2, v2)), ((u1, u2), (v1, v2))
    if len(crossing) == 1:
        (u1, v1), = crossing
        return ((u1, v1), (v1, u1)), ()
    raise ValueError("a hyperedge needs one or two crossing edges")


def hyperedge_weight(G: GridGraph, plus, minus) -> float:
    return sum(G.weight(u, v) for u, v in plus) - sum(G.weight(u, v) for u, v in minus)


def build_hypergraph(G: GridGraph) -> Hypergraph:
    blocks: Dict[Tuple[int, int], List[Vertex]] = {}
    for v in G.vertices:
        blk = (v[0] >> 1, v[1] >> 1)
        got = blocks.get(blk)
        if got is None:
            blocks[blk] = [v]
        else:
            got.append(v)
    hvs: List[Hypervertex] = []
    owner: Dict[Vertex, int] = {}
    # block scan: left to right within a block row, rows bottom to top
    for blk in sorted(blocks, key=lambda b: (b[1], b[0])):
        for group in _split_block(sorted(blocks[blk])):
            hv = Hypervertex(len(hvs), blk, group)
            hvs.append(hv)
            for v in group:
                owner[v] = hv.id

    w = G._w
    crossings: Dict[Tuple[int, int], List[Edge]] = {}
    for u, v in w:  # edge order is irrelevant, crossings are sorted per pair below
        a, b = owner[u], owner[v]
        if a == b:
            continue
        if a > b:
            a, b, u, v = b, a, v, u
        got = crossings.get((a, b))
        if got is None:
            crossings[(a, b)] = [(u, v)]
        else:
            got.append((u, v))

    hes: List[Hyperedge] = []
    incident: Dict[int, List[int]] = {h.id: [] for h in hvs}
    for (a, b) in sorted(crossings):
        cross = crossings[(a, b)]
        if len(cross) == 2:
            if cross[1] < cross[0]:
                cross.reverse()
            (u1, v1), (u2, v2) = cross
            plus, minus = ((u1, v1), (u2, v2)), ((u1, u2), (v1, v2))
            weight = (w[edge_key(u1, v1)] + w[edge_key(u2, v2)]) - (w[edge_key(u1, u2)] + w[edge_key(v1, v2)])
        else:
            plus, minus = rerouting_sets(G, cross)
            weight = hyperedge_weight(G, plus, minus)
        e = Hyperedge(len(hes), a, b, tuple(cross), plus, minus, weight)
        hes.append(e)
        incident[a].append(e.id)
        incident[b].append(e.id)
    return Hypergraph(G, hvs, hes, owner, incident)


def local_path(hv: Hypervertex) -> Tuple[Vertex, ...]:
    """Self-connecting closed walk covering the members of one hypervertex."""
    m = hv.members
    if len(m) == 1:
        return (m[0],)
    if len(m) == 2:
        return (m[0], m[1], m[0])
    if len(m) == 3:
        # the corner is the member adjacent to both others
        corner = next(c for c in m if all(abs(c[0] - o[0]) + abs(c[1] - o[1]) == 1 for o in m if o != c))
        a, b = sorted(o for o in m if o != corner)
        return (corner, a, corner, b, corner)
    x, y = hv.anchor
    return ((x, y), (x + 1, y), (x + 1, y + 1), (x, y + 1), (x, y))


def init_local_paths(H: Hypergraph) -> Dict[int, Tuple[Vertex, ...]]:
    return {hv.id: local_path(hv) for hv in H.hypervertices}


def local_path_cost(G: GridGraph, path) -> float:
    return sum(G.weight(a, b) for a, b in zip(path, path[1:]))


def local_edge_counts(H: Hypergraph) -> Dict[Edge, int]:
    counts: Dict[Edge, int] = {}
    for hv in H.hypervertices:
        p = local_path(hv)
        for a, b in zip(p, p[1:]):
            k = edge_key(a, b)
            counts[k] = counts.get(k, 0) + 1
    return counts
