"""Safe-interval search through an ordered goal sequence.

Because a state occupies its vertex from the *previous* state's time, waiting at
``v`` before moving to ``u`` also occupies ``u``.  A robot that must let ``u``
clear therefore has to arrive at ``v`` later, which means waiting further back.
Search nodes carry, besides ``<v, safe interval, label[, heading]>``, the latest
arrival time ``U`` at ``v`` that the parent's safe interval still allows; the
earliest arrival ``g`` can be postponed anywhere up to ``U``.
"""
from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

from ..grid import HEADINGS, GridGraph, Vertex, quarter_turns
from .trajectory import INF, ReservationTable, State, collapse_repeats


class PlannerTimeout(RuntimeError):
    pass


POSTPONE = "postpone"


@dataclass(eq=False)
class SippNode:
    vertex: Vertex
    interval: int           # index into the safe intervals of vertex
    lb: float
    ub: float
    label: int              # index of the next goal to visit
    g: float                # earliest arrival time
    latest: float           # latest arrival time the parent's interval allows
    heading: Optional[int] = None
    parent: Optional["SippNode"] = None
    parent_time: float = 0.0  # time the parent's state takes on the path through this node

    def key(self):
        return (self.vertex, self.interval, self.label, self.latest, self.heading)


@dataclass
class PlannerContext:
    """Graph, turn model, shared distance tables, statistics and deadline."""
    graph: GridGraph
    turn_cost: Optional[float] = None
    deadline: Optional[float] = None
    expanded: int = 0
    searches: int = 0
    _dist: Dict[Vertex, Dict[Vertex, float]] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.turn_cost:
            self.turn_cost = None  # a zero turn cost is the holonomic model

    def dist_to(self, goal: Vertex, avoid: FrozenSet[Vertex] = frozenset()) -> Dict[Vertex, float]:
        d = self._dist.get((goal, avoid))
        if d is None:
            d = {goal: 0.0}
            heap = [(0.0, goal)]
            G = self.graph
            while heap:
                dv, v = heapq.heappop(heap)
                if dv > d[v]:
                    continue
                for n in G.neighbors(v):
                    if n in avoid:
                        continue
                    nd = dv + G.weight(v, n)
                    if nd < d.get(n, INF):
                        d[n] = nd
                        heapq.heappush(heap, (nd, n))
            self._dist[(goal, avoid)] = d
        return d

    def check_time(self):
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise PlannerTimeout("time limit reached")


def sipp_expand(node: SippNode, G: GridGraph, rt: ReservationTable,
                turn_cost: Optional[float] = None, goals: Sequence[Vertex] = (),
                avoid: FrozenSet[Vertex] = frozenset()) -> List[SippNode]:
    """Children of ``node``: one per neighbor and reachable safe interval."""
    out = []
    v = node.vertex
    for d, (dx, dy) in enumerate(HEADINGS):
        u = (v[0] + dx, v[1] + dy)
        if u not in G or u in avoid:
            continue
        move = G.weight(v, u)
        if turn_cost and node.heading is not None:
            move += turn_cost * quarter_turns(node.heading, d)
        label = node.label
        if label < len(goals) and goals[label] == u:
            label += 1
        for k, (lb, ub) in enumerate(rt.safe_intervals(u)):
            # u is occupied from our arrival at v, so that arrival may not precede lb
            a = node.g if node.g >= lb else lb
            if a > node.latest:
                break
            arrive = a + move
            if arrive > node.ub or not arrive < ub:
                continue
            out.append(SippNode(u, k, lb, ub, label, arrive, node.ub,
                                d if turn_cost else None, node, a))
    return out


def start_node(rt: ReservationTable, v: Vertex) -> Optional[SippNode]:
    """The state (v, 0); its vertex must be free from time 0."""
    ivs = rt.safe_intervals(v)
    if not ivs or ivs[0][0] > 0:
        return None
    lb, ub = ivs[0]
    return SippNode(v, 0, lb, ub, 0, 0.0, 0.0)


def ml_sipp(ctx: PlannerContext, rt: ReservationTable, seed: SippNode, goals: Sequence[Vertex],
            final: bool, avoid: FrozenSet[Vertex] = frozenset()) -> Optional[SippNode]:
    """A* over labelled safe-interval nodes visiting ``goals`` in order from ``seed``.

    Returns the goal node reached first or None.  With ``final`` the last goal must
    be held forever, so the terminal interval has to be unbounded.
    """
    G = ctx.graph
    goals = list(goals)
    m = len(goals)
    ctx.searches += 1
    seed = SippNode(seed.vertex, seed.interval, seed.lb, seed.ub, 0, seed.g, seed.latest,
                    seed.heading, seed.parent, seed.parent_time)
    while seed.label < m and goals[seed.label] == seed.vertex:
        seed.label += 1
    tables = [ctx.dist_to(g, avoid) for g in goals]
    tail = [0.0] * (m + 1)
    for q in range(m - 2, -1, -1):
        tail[q] = tail[q + 1] + tables[q + 1][goals[q]]

    def h(n: SippNode) -> float:
        if n.label >= m:
            # every goal is done, but a robot that wandered off must come back to the last one
            return tables[m - 1].get(n.vertex, INF) if m else 0.0
        return tables[n.label].get(n.vertex, INF) + tail[n.label]

    best: Dict[tuple, float] = {seed.key(): seed.g}
    heap = [(seed.g + h(seed), -seed.label, 0, seed)]
    counter = 1
    closed = set()
    while heap:
        _, _, _, n = heapq.heappop(heap)
        k = n.key()
        if k in closed:
            continue
        closed.add(k)
        ctx.expanded += 1
        if ctx.expanded % 512 == 0:
            ctx.check_time()
        if n.label >= m and (m == 0 or n.vertex == goals[-1]) and (not final or n.ub == INF):
            return n
        for c in sipp_expand(n, G, rt, ctx.turn_cost, goals, avoid):
            ck = c.key()
            if ck in closed or c.g >= best.get(ck, INF):
                continue
            hc = h(c)
            if hc == INF:
                continue
            best[ck] = c.g
            heapq.heappush(heap, (c.g + hc, -c.label, counter, c))
            counter += 1
    return None


def unwind(node: SippNode) -> List[Tuple[SippNode, float]]:
    """(node, state time) pairs from the search root to ``node``."""
    out = []
    t = node.g
    n = node
    while n is not None:
        out.append((n, t))
        t = n.parent_time
        n = n.parent
    out.reverse()
    return out


def _states(nodes: Sequence[Tuple[SippNode, float]], turn_model: bool) -> List[State]:
    states = []
    for j, (n, t) in enumerate(nodes):
        h = n.heading
        if turn_model and h is None:
            # free initial heading: report the first move's direction
            h = nodes[j + 1][0].heading if j + 1 < len(nodes) else 0
        states.append(State(n.vertex, t, h if turn_model else None))
    return states


@dataclass
class _Step:
    """One state of a partial trajectory together with its search node."""
    node: SippNode
    t: float


def _as_seed(step: _Step) -> SippNode:
    n = step.node
    return SippNode(n.vertex, n.interval, n.lb, n.ub, 0, step.t, n.latest, n.heading)


def _extend(steps: List[_Step], goal_node: SippNode):
    """Append the search path ending at ``goal_node``; its root may retime the last step."""
    path = unwind(goal_node)
    steps[-1] = _Step(steps[-1].node, path[0][1])
    for n, t in path[1:]:
        steps.append(_Step(n, t))


def _finish(steps: List[_Step], ctx: PlannerContext) -> List[State]:
    return _states([(s.node, s.t) for s in steps], ctx.turn_cost is not None)


def mla_plan(pi: Sequence[Vertex], rt: ReservationTable, ctx: PlannerContext,
             avoid: FrozenSet[Vertex] = frozenset()) -> Optional[List[State]]:
    """Time-optimal trajectory through all goals of ``pi`` in one labelled search."""
    pi = collapse_repeats(pi)
    s = start_node(rt, pi[0])
    if s is None:
        return None
    goal = ml_sipp(ctx, rt, s, pi[1:], final=True, avoid=avoid)
    if goal is None:
        return None
    return _states(unwind(goal), ctx.turn_cost is not None)


def cha_plan(pi: Sequence[Vertex], rt: ReservationTable, ctx: PlannerContext,
             avoid: FrozenSet[Vertex] = frozenset()) -> Optional[List[State]]:
    """Goal-by-goal search, each segment seeded from where the previous one ended."""
    pi = collapse_repeats(pi)
    s = start_node(rt, pi[0])
    if s is None:
        return None
    steps = [_Step(s, 0.0)]
    if len(pi) == 1:
        return _finish(steps, ctx) if s.ub == INF else None
    for j in range(1, len(pi)):
        goal = ml_sipp(ctx, rt, _as_seed(steps[-1]), [pi[j]], final=(j == len(pi) - 1), avoid=avoid)
        if goal is None:
            return None
        _extend(steps, goal)
    return _finish(steps, ctx)


def ada_plan(pi: Sequence[Vertex], rt: ReservationTable, ctx: PlannerContext, b_max: int = 5,
             avoid: FrozenSet[Vertex] = frozenset()):
    """Goal-by-goal search that widens its goal window backward on failure.

    Returns a trajectory, None when the goals are provably unreachable, or
    ``POSTPONE`` when the window would have to grow past ``b_max``.
    """
    pi = collapse_repeats(pi)
    s = start_node(rt, pi[0])
    if s is None:
        return None
    steps = [_Step(s, 0.0)]
    if len(pi) == 1:
        return _finish(steps, ctx) if s.ub == INF else None
    n = len(pi)
    j = 1          # index of the next goal (0-based)
    b = 1
    window = [pi[j]]
    while j < n:
        goal = ml_sipp(ctx, rt, _as_seed(steps[-1]), window, final=(j == n - 1), avoid=avoid)
        if goal is not None:
            _extend(steps, goal)
            j += 1
            b = 1
            if j < n:
                window = [pi[j]]
            continue
        if b <= b_max and j - b >= 1:
            back = pi[j - b]
            # pop through the most recent state at the goal being reopened
            while len(steps) > 1:
                popped = steps.pop()
                if popped.node.vertex == back:
                    break
            window = [back] + window
            b += 1
        elif len(steps) == 1:
            return None  # the window already starts at the trajectory head
        else:
            return POSTPONE
    return _finish(steps, ctx)
