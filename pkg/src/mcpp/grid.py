"""Grid graph data model, instances, solutions and their plain-text file formats.

Coordinates are ``(x, y)`` integer pairs with ``x`` the column and ``y`` the row
counted from the *bottom* of the map, so that "north" is ``+y``.  Map files list
rows top to bottom, as in the common pathfinding benchmark format.
"""
from __future__ import annotations

import math
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

Vertex = Tuple[int, int]
Edge = Tuple[Vertex, Vertex]
Path = Tuple[Vertex, ...]

FREE_CHARS = frozenset(".G")
BLOCKED_CHARS = frozenset("@OTWS")

# E, N, W, S as unit moves; index order matters for turn counting.
HEADINGS = ((1, 0), (0, 1), (-1, 0), (0, -1))
HEADING_NAMES = "ENWS"


class GridError(ValueError):
    """Malformed input or a grid graph that violates its invariants."""


class PathError(ValueError):
    """A path that does not walk along edges of the graph."""


def edge_key(u: Vertex, v: Vertex) -> Edge:
    return (u, v) if u <= v else (v, u)


def heading_of(u: Vertex, v: Vertex) -> int:
    return HEADINGS.index((v[0] - u[0], v[1] - u[1]))


def quarter_turns(h1: int, h2: int) -> int:
    """Number of 90 degree rotations between two headings (0, 1 or 2)."""
    d = abs(h1 - h2) % 4
    return min(d, 4 - d)


class GridGraph:
    """A connected 4-neighbor grid graph with positive edge weights.

    The graph is vertex-induced: every pair of present 4-neighbors is joined by
    an edge.  Instances are treated as immutable once built.
    """

    def __init__(self, width: int, height: int, vertices: Iterable[Vertex],
                 weights: Optional[Dict[Edge, float]] = None, check_connected: bool = True):
        self.width = int(width)
        self.height = int(height)
        vs = frozenset((int(x), int(y)) for x, y in vertices)
        for x, y in vs:
            if not (0 <= x < self.width and 0 <= y < self.height):
                raise GridError(f"vertex {(x, y)} outside {self.width}x{self.height} grid")
        self.vertices: FrozenSet[Vertex] = vs
        adj: Dict[Vertex, Tuple[Vertex, ...]] = {}
        for v in sorted(vs):
            x, y = v
            adj[v] = tuple(n for n in ((x + 1, y), (x, y + 1), (x - 1, y), (x, y - 1)) if n in vs)
        self._adj = adj
        w: Dict[Edge, float] = {}
        for v, nbrs in adj.items():
            for n in nbrs:
                if v < n:
                    w[(v, n)] = 1.0
        if weights:
            for (a, b), val in weights.items():
                key = edge_key(tuple(a), tuple(b))
                if key not in w:
                    raise GridError(f"weight given for non-edge {key}")
                if not val > 0:
                    raise GridError(f"edge {key} has non-positive weight {val}")
                w[key] = float(val)
        self._w = w
        if check_connected and not self.is_connected():
            raise GridError("grid graph is disconnected")

    # -- basic queries -------------------------------------------------------
    def __contains__(self, v) -> bool:
        return v in self.vertices

    def __len__(self) -> int:
        return len(self.vertices)

    def __eq__(self, other) -> bool:
        if not isinstance(other, GridGraph):
            return NotImplemented
        return (self.width, self.height, self.vertices, self._w) == (
            other.width, other.height, other.vertices, other._w)

    def __repr__(self) -> str:
        return f"GridGraph({self.width}x{self.height}, |V|={len(self.vertices)}, |E|={len(self._w)})"

    def neighbors(self, v: Vertex) -> Tuple[Vertex, ...]:
        return self._adj[v]

    def has_edge(self, u: Vertex, v: Vertex) -> bool:
        return edge_key(u, v) in self._w

    def weight(self, u: Vertex, v: Vertex) -> float:
        try:
            return self._w[edge_key(u, v)]
        except KeyError:
            raise PathError(f"no edge between {u} and {v}") from None

    def edges(self) -> List[Edge]:
        return sorted(self._w)

    @property
    def weights(self) -> Dict[Edge, float]:
        return dict(self._w)

    @property
    def num_edges(self) -> int:
        return len(self._w)

    @property
    def is_unweighted(self) -> bool:
        return all(w == 1.0 for w in self._w.values())

    def weight_range(self) -> Tuple[float, float]:
        if not self._w:
            return (1.0, 1.0)
        vals = self._w.values()
        return (min(vals), max(vals))

    # -- derived graphs ------------------------------------------------------
    def subgraph(self, vertices: Iterable[Vertex], check_connected: bool = True) -> "GridGraph":
        vs = frozenset(vertices)
        if not vs <= self.vertices:
            raise GridError("subgraph vertices must belong to the graph")
        # filter the parent's adjacency directly; going through __init__ would re-derive it
        sub = GridGraph.__new__(GridGraph)
        sub.width, sub.height, sub.vertices = self.width, self.height, vs
        adj = {}
        w = {}
        pw = self._w
        for v in sorted(vs):
            nb = tuple(n for n in self._adj[v] if n in vs)
            adj[v] = nb
            for n in nb:
                if v < n:
                    w[(v, n)] = pw[(v, n)]
        sub._adj, sub._w = adj, w
        if check_connected and not sub.is_connected():
            raise GridError("grid graph is disconnected")
        return sub

    def with_weights(self, weights: Dict[Edge, float]) -> "GridGraph":
        return GridGraph(self.width, self.height, self.vertices, weights, check_connected=False)

    def is_connected(self, within: Optional[Iterable[Vertex]] = None) -> bool:
        vs = self.vertices if within is None else frozenset(within)
        if not vs:
            return True
        return len(bfs_component(self, next(iter(vs)), vs)) == len(vs)


def bfs_component(G: GridGraph, src: Vertex, allowed) -> set:
    seen = {src}
    queue = deque([src])
    while queue:
        v = queue.popleft()
        for n in G.neighbors(v):
            if n in allowed and n not in seen:
                seen.add(n)
                queue.append(n)
    return seen


def cut_vertices(G: GridGraph, within: Optional[Iterable[Vertex]] = None) -> set:
    """Articulation points of the subgraph induced by ``within`` (iterative Tarjan)."""
    vs = G.vertices if within is None else frozenset(within)
    disc: Dict[Vertex, int] = {}
    low: Dict[Vertex, int] = {}
    cuts = set()
    counter = 0
    for root in sorted(vs):
        if root in disc:
            continue
        disc[root] = low[root] = counter
        counter += 1
        children = 0
        stack = [(root, None, iter(G.neighbors(root)))]
        while stack:
            v, parent, it = stack[-1]
            advanced = False
            for n in it:
                if n not in vs:
                    continue
                if n not in disc:
                    disc[n] = low[n] = counter
                    counter += 1
                    if v == root:
                        children += 1
                    stack.append((n, v, iter(G.neighbors(n))))
                    advanced = True
                    break
                elif n != parent:
                    low[v] = min(low[v], disc[n])
            if advanced:
                continue
            stack.pop()
            if parent is not None:
                low[parent] = min(low[parent], low[v])
                if parent != root and low[v] >= disc[parent]:
                    cuts.add(parent)
        if children > 1:
            cuts.add(root)
    return cuts


@dataclass(frozen=True)
class Instance:
    graph: GridGraph
    roots: Tuple[Vertex, ...]
    seed: Optional[int] = None
    rho: Optional[int] = None

    def __post_init__(self):
        roots = tuple(tuple(r) for r in self.roots)
        object.__setattr__(self, "roots", roots)
        if len(set(roots)) != len(roots):
            raise GridError("roots must be pairwise distinct")
        for r in roots:
            if r not in self.graph:
                raise GridError(f"root {r} is not a vertex of the graph")
        if not roots:
            raise GridError("an instance needs at least one root")

    @property
    def k(self) -> int:
        return len(self.roots)


@dataclass
class Solution:
    """k closed coverage paths, index-aligned with the instance roots."""
    paths: List[Path]
    metadata: Dict = field(default_factory=dict)

    def __post_init__(self):
        self.paths = [tuple(tuple(v) for v in p) for p in self.paths]

    def costs(self, G: GridGraph, turn_cost: Optional[float] = None) -> List[float]:
        return [path_cost(p, G, turn_cost) for p in self.paths]


# -- costs ---------------------------------------------------------------------
def turn_count(path: Sequence[Vertex]) -> int:
    """Quarter turns along ``path``; heading starts aligned with the first move."""
    total = 0
    prev = None
    for a, b in zip(path, path[1:]):
        h = heading_of(a, b)
        if prev is not None:
            total += quarter_turns(prev, h)
        prev = h
    return total


def path_cost(path: Sequence[Vertex], G: GridGraph, turn_cost: Optional[float] = None) -> float:
    if len(path) == 0:
        raise PathError("empty path")
    cost = 0.0
    w = G._w
    for j in range(len(path) - 1):
        a, b = path[j], path[j + 1]
        val = w.get((a, b) if a < b else (b, a))
        if val is None:
            raise PathError(f"nonadjacent step at index {j + 1}: {a} -> {b}")
        cost += val
    if turn_cost:
        cost += turn_cost * turn_count(path)
    return cost


def makespan(paths: Sequence[Sequence[Vertex]], G: GridGraph, turn_cost: Optional[float] = None) -> float:
    if isinstance(paths, Solution):
        paths = paths.paths
    return max(path_cost(p, G, turn_cost) for p in paths)


@dataclass
class SolutionReport:
    ok: bool
    violation: Optional[str]
    costs: List[float]
    makespan: float
    coverage: float
    duplication: Dict[int, int]

    def summary(self) -> str:
        head = "PASS" if self.ok else f"FAIL {self.violation}"
        return (f"{head}; makespan={self.makespan:.6g}; coverage={100 * self.coverage:.2f}%; "
                f"costs={[round(c, 6) for c in self.costs]}; n_v histogram={dict(sorted(self.duplication.items()))}")


def verify_solution(inst: Instance, paths, turn_cost: Optional[float] = None) -> SolutionReport:
    """Check validity, root anchoring and full coverage of a multi-robot solution."""
    if isinstance(paths, Solution):
        paths = paths.paths
    G = inst.graph
    violation = None
    costs: List[float] = []
    if len(paths) != inst.k:
        violation = f"expected {inst.k} paths, got {len(paths)}"
    for i, p in enumerate(paths):
        p = [tuple(v) for v in p]
        if not p:
            violation = violation or f"robot {i}: empty path"
            costs.append(math.inf)
            continue
        bad = next((v for v in p if v not in G), None)
        if bad is not None:
            violation = violation or f"robot {i}: vertex {bad} not in graph"
            costs.append(math.inf)
            continue
        try:
            costs.append(path_cost(p, G, turn_cost))
        except PathError as exc:
            violation = violation or f"robot {i}: {exc}"
            costs.append(math.inf)
        if i < inst.k and (p[0] != inst.roots[i] or p[-1] != inst.roots[i]):
            violation = violation or f"robot {i}: path not anchored at root {inst.roots[i]}"
    counts: Counter = Counter()
    for p in paths:
        counts.update({tuple(v) for v in p})
    uncovered = sorted(v for v in G.vertices if counts[v] == 0)
    if uncovered and violation is None:
        violation = f"uncovered vertex {uncovered[0]}"
    covered = len(G.vertices) - len(uncovered)
    hist = Counter(counts[v] for v in G.vertices)
    return SolutionReport(
        ok=violation is None,
        violation=violation,
        costs=costs,
        makespan=max(costs) if costs else 0.0,
        coverage=covered / len(G.vertices),
        duplication=dict(hist),
    )


# -- file formats ----------------------------------------------------------------
def load_map(text: str) -> GridGraph:
    lines = [ln.rstrip("\r") for ln in text.splitlines()]
    while lines and not lines[-1].strip():
        lines.pop()
    header: Dict[str, str] = {}
    i = 0
    while i < len(lines) and lines[i].strip() != "map":
        parts = lines[i].split()
        if len(parts) != 2:
            raise GridError(f"malformed header line {i + 1}: {lines[i]!r}")
        header[parts[0]] = parts[1]
        i += 1
    if i == len(lines):
        raise GridError("malformed header: missing 'map' line")
    try:
        height, width = int(header["height"]), int(header["width"])
    except (KeyError, ValueError):
        raise GridError("malformed header: need integer 'height' and 'width'") from None
    rows = lines[i + 1:]
    if len(rows) != height:
        raise GridError(f"expected {height} map rows, found {len(rows)}")
    vertices = []
    for r, row in enumerate(rows):
        if len(row) != width:
            raise GridError(f"ragged row {r + 1}: length {len(row)} != width {width}")
        for x, ch in enumerate(row):
            if ch in FREE_CHARS:
                vertices.append((x, height - 1 - r))
            elif ch not in BLOCKED_CHARS:
                raise GridError(f"unknown map character {ch!r} in row {r + 1}")
    if not vertices:
        raise GridError("map has no traversable cells")
    return GridGraph(width, height, vertices)


def save_map(G: GridGraph) -> str:
    out = ["type octile", f"height {G.height}", f"width {G.width}", "map"]
    for r in range(G.height):
        y = G.height - 1 - r
        out.append("".join("." if (x, y) in G.vertices else "@" for x in range(G.width)))
    return "\n".join(out) + "\n"


def load_weights(text: str, G: GridGraph) -> GridGraph:
    weights = {}
    for n, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 5:
            raise GridError(f"weights line {n}: expected 'x1 y1 x2 y2 w'")
        x1, y1, x2, y2 = (int(p) for p in parts[:4])
        key = edge_key((x1, y1), (x2, y2))
        if key in weights:
            raise GridError(f"weights line {n}: edge {key} listed twice")
        weights[key] = float(parts[4])
    return GridGraph(G.width, G.height, G.vertices, weights)


def save_weights(G: GridGraph) -> str:
    return "".join(f"{u[0]} {u[1]} {v[0]} {v[1]} {G.weight(u, v)!r}\n" for u, v in G.edges())


def load_scenario(text: str) -> Tuple[Vertex, ...]:
    roots = []
    for n, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GridError(f"scenario line {n}: expected 'x y'")
        roots.append((int(parts[0]), int(parts[1])))
    return tuple(roots)


def save_scenario(roots: Sequence[Vertex]) -> str:
    return "".join(f"{x} {y}\n" for x, y in roots)


def grid_from_rows(rows: Sequence[str], weights: Optional[Dict[Edge, float]] = None) -> GridGraph:
    """Build a graph from map rows given top to bottom (handy for tests)."""
    h, w = len(rows), max(len(r) for r in rows)
    vs = [(x, h - 1 - r) for r, row in enumerate(rows) for x, ch in enumerate(row) if ch in FREE_CHARS]
    return GridGraph(w, h, vs, weights)


def full_grid(width: int, height: int) -> GridGraph:
    return GridGraph(width, height, [(x, y) for x in range(width) for y in range(height)])
