"""Time-embedded trajectories, the occupancy conflict rule, and reservation tables.

A state ``(v, t)`` of a trajectory occupies ``v`` over the open interval from the
previous state's time to the next state's time, with the convention that the
first state's predecessor time is 0 and the last state's successor time is
infinite.  Two states of different robots conflict when they share a vertex and
their open intervals intersect.
"""
from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from ..grid import GridGraph, Instance, PathError, Vertex, heading_of, quarter_turns

INF = math.inf


@dataclass(frozen=True)
class State:
    vertex: Vertex
    t: float
    heading: Optional[int] = None


Trajectory = List[State]


def occupancy(tau: Sequence[State]) -> List[Tuple[Vertex, float, float]]:
    """(vertex, start, end) of every state, with the dummy bounds at both ends."""
    out = []
    n = len(tau)
    for j, s in enumerate(tau):
        lo = tau[j - 1].t if j > 0 else 0.0
        hi = tau[j + 1].t if j + 1 < n else INF
        out.append((s.vertex, lo, hi))
    return out


@dataclass(frozen=True)
class Conflict:
    i: int
    i2: int
    j: int
    j2: int
    vertex: Vertex
    interval: Tuple[float, float]
    interval2: Tuple[float, float]

    @property
    def start(self) -> float:
        return max(self.interval[0], self.interval2[0])

    def __str__(self):
        return (f"robots {self.i},{self.i2} at {self.vertex}: "
                f"({self.interval[0]:g},{self.interval[1]:g}) vs ({self.interval2[0]:g},{self.interval2[1]:g})")


def _overlap(a, b, c, d) -> bool:
    return a < d and c < b


def check_conflicts(trajs: Sequence[Sequence[State]], first_only: bool = False) -> List[Conflict]:
    """All conflicting state pairs, ordered by robot pair then by overlap start."""
    by_vertex: Dict[Vertex, List[Tuple[float, float, int, int]]] = {}
    for i, tau in enumerate(trajs):
        for j, (v, lo, hi) in enumerate(occupancy(tau)):
            by_vertex.setdefault(v, []).append((lo, hi, i, j))
    found = []
    for v, occ in by_vertex.items():
        occ.sort()
        # sweep by start time; an earlier interval can only meet later ones it outlasts
        active: List[Tuple[float, float, int, int]] = []
        for lo, hi, i, j in occ:
            active = [a for a in active if a[1] > lo]
            for alo, ahi, ai, aj in active:
                if ai != i and _overlap(alo, ahi, lo, hi):
                    if ai < i:
                        found.append(Conflict(ai, i, aj, j, v, (alo, ahi), (lo, hi)))
                    else:
                        found.append(Conflict(i, ai, j, aj, v, (lo, hi), (alo, ahi)))
            active.append((lo, hi, i, j))
    found.sort(key=lambda c: (c.i, c.i2, c.start, c.j, c.j2))
    return found[:1] if first_only else found


class ReservationError(RuntimeError):
    pass


@dataclass
class ReservationTable:
    """Per-vertex sorted, disjoint reserved intervals ``[t_p, t_s)``."""
    reserved: Dict[Vertex, List[Tuple[float, float]]] = field(default_factory=dict)
    _safe: Dict[Vertex, List[Tuple[float, float]]] = field(default_factory=dict, repr=False)

    def add_interval(self, v: Vertex, lo: float, hi: float):
        self.reserved.setdefault(v, []).append((lo, hi))
        self._safe.pop(v, None)

    def finalize(self, strict: bool = True):
        for v, ivs in self.reserved.items():
            ivs.sort()
            merged = []
            for lo, hi in ivs:
                if merged and lo < merged[-1][1]:
                    if strict:
                        raise ReservationError(f"overlapping reservations at {v}: {merged[-1]} and {(lo, hi)}")
                    merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
                elif merged and lo == merged[-1][1]:
                    merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
                else:
                    merged.append((lo, hi))
            self.reserved[v] = merged
        self._safe.clear()
        return self

    def safe_intervals(self, v: Vertex) -> List[Tuple[float, float]]:
        got = self._safe.get(v)
        if got is None:
            got = []
            t = 0.0
            for lo, hi in self.reserved.get(v, ()):
                if lo > t:
                    got.append((t, lo))
                t = max(t, hi)
            if t < INF:
                got.append((t, INF))
            self._safe[v] = got
        return got

    def interval_index(self, v: Vertex, t: float) -> Optional[int]:
        """Index of the safe interval of ``v`` with lb <= t < ub, if any."""
        ivs = self.safe_intervals(v)
        k = bisect_right(ivs, (t, INF)) - 1
        if k >= 0 and ivs[k][0] <= t < ivs[k][1]:
            return k
        return None


def build_reservation_table(trajs: Sequence[Sequence[State]], strict: bool = True) -> ReservationTable:
    rt = ReservationTable()
    for tau in trajs:
        for v, lo, hi in occupancy(tau):
            rt.add_interval(v, lo, hi)
    return rt.finalize(strict)


# -- preprocessing -----------------------------------------------------------------
def collapse_repeats(path: Sequence[Vertex]) -> Tuple[Vertex, ...]:
    out = []
    for v in path:
        if not out or out[-1] != v:
            out.append(v)
    return tuple(out)


def preprocess_well_formed(paths: Sequence[Sequence[Vertex]], roots: Sequence[Vertex]) -> List[Tuple[Vertex, ...]]:
    """Drop every foreign root from each path, then merge repeated consecutive goals."""
    roots = list(roots)
    out = []
    for i, p in enumerate(paths):
        foreign = set(roots[:i] + roots[i + 1:]) - {roots[i]}
        out.append(collapse_repeats([v for v in p if v not in foreign]))
    return out


# -- verification --------------------------------------------------------------------
@dataclass
class TrajectoryReport:
    ok: bool
    violation: Optional[str]
    completion: List[float]
    makespan: float
    conflicts: List[Conflict]
    waits: List[List[float]]

    def summary(self) -> str:
        head = "PASS" if self.ok else f"FAIL {self.violation}"
        return f"{head}; makespan={self.makespan:.6g}; conflicts={len(self.conflicts)}"


def transition_time(G: GridGraph, a: State, b: State, prev_heading: Optional[int], turn_cost) -> float:
    """Minimum duration of the turn-wait-move from ``a`` to ``b``."""
    w = G.weight(a.vertex, b.vertex)
    if turn_cost and prev_heading is not None:
        w += turn_cost * quarter_turns(prev_heading, heading_of(a.vertex, b.vertex))
    return w


def verify_trajectories(inst: Instance, paths, trajs: Sequence[Sequence[State]],
                        turn_cost: Optional[float] = None, tol: float = 1e-9) -> TrajectoryReport:
    G = inst.graph
    goals = preprocess_well_formed(paths, inst.roots)
    completion, waits = [], []

    def fail(msg, conflicts=()):
        ms = max(completion) if completion else 0.0
        return TrajectoryReport(False, msg, completion, ms, list(conflicts), waits)

    if len(trajs) != len(goals):
        return fail(f"expected {len(goals)} trajectories, got {len(trajs)}")
    for i, (pi, tau) in enumerate(zip(goals, trajs)):
        if not tau:
            return fail(f"robot {i}: empty trajectory")
        if tau[0].vertex != pi[0] or tau[0].t != 0:
            return fail(f"robot {i}: must start at {pi[0]} at time 0")
        if tau[-1].vertex != pi[-1]:
            return fail(f"robot {i}: must end at {pi[-1]}")
        w_i = []
        heading = None
        for j in range(1, len(tau)):
            a, b = tau[j - 1], tau[j]
            if not b.t > a.t:
                return fail(f"robot {i}: time not increasing at state {j}")
            try:
                need = transition_time(G, a, b, heading, turn_cost)
            except (PathError, ValueError):
                return fail(f"robot {i}: nonadjacent step at state {j}: {a.vertex} -> {b.vertex}")
            wait = (b.t - a.t) - need
            if wait < -tol:
                return fail(f"robot {i}: transition {j} too fast by {-wait:g}")
            w_i.append(wait)
            heading = heading_of(a.vertex, b.vertex)
        waits.append(w_i)
        # order embedding: greedy earliest match is optimal for subsequence tests
        k = 0
        for s in tau:
            if k < len(pi) and s.vertex == pi[k]:
                k += 1
        if k < len(pi):
            return fail(f"robot {i}: order embedding broken at index {k}")
        completion.append(tau[-1].t)
    covered = set()
    for tau in trajs:
        covered.update(s.vertex for s in tau)
    missing = G.vertices - covered
    if missing:
        return fail(f"uncovered vertex {min(missing)}")
    conflicts = check_conflicts(trajs)
    if conflicts:
        return fail(f"conflict {conflicts[0]}", conflicts)
    return TrajectoryReport(True, None, completion, max(completion), [], waits)
