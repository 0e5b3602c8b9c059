"""Priority-based search over pairwise robot orderings."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Set, Tuple

from ..grid import Instance
from .sipp import POSTPONE, PlannerContext, PlannerTimeout, ada_plan, cha_plan, mla_plan
from .trajectory import State, build_reservation_table, check_conflicts, preprocess_well_formed

PLANNERS = ("cha", "mla", "ada")


class DeconflictFailure(RuntimeError):
    def __init__(self, reason: str, stats: dict):
        super().__init__(reason)
        self.reason = reason
        self.stats = stats


class DeconflictTimeout(DeconflictFailure):
    pass


@dataclass
class PbsNode:
    priorities: FrozenSet[Tuple[int, int]]  # (higher, lower)
    trajs: List[Optional[List[State]]]
    pending: Tuple[int, ...] = ()   # robots still to replan after a postponement
    postponed: bool = False

    @property
    def makespan(self) -> float:
        return max(tau[-1].t for tau in self.trajs)


@dataclass
class DeconflictResult:
    trajectories: List[List[State]]
    makespan: float
    stats: Dict[str, int] = field(default_factory=dict)


def _closure_above(pairs, r) -> Set[int]:
    above = {}
    for hi, lo in pairs:
        above.setdefault(lo, set()).add(hi)
    out, stack = set(), [r]
    while stack:
        x = stack.pop()
        for y in above.get(x, ()):
            if y not in out:
                out.add(y)
                stack.append(y)
    return out


def _closure_below(pairs, r) -> Set[int]:
    below = {}
    for hi, lo in pairs:
        below.setdefault(hi, set()).add(lo)
    out, stack = set(), [r]
    while stack:
        x = stack.pop()
        for y in below.get(x, ()):
            if y not in out:
                out.add(y)
                stack.append(y)
    return out


def _topological(pairs, robots: Set[int]) -> List[int]:
    indeg = {r: 0 for r in robots}
    for hi, lo in pairs:
        if hi in robots and lo in robots:
            indeg[lo] += 1
    order = []
    ready = sorted(r for r, d in indeg.items() if d == 0)
    while ready:
        r = ready.pop(0)
        order.append(r)
        for hi, lo in sorted(pairs):
            if hi == r and lo in robots:
                indeg[lo] -= 1
                if indeg[lo] == 0:
                    ready.append(lo)
                    ready.sort()
    return order


def pbs_deconflict(inst: Instance, paths: Sequence[Sequence], planner: str = "ada", b_max: int = 5,
                   turn_cost: Optional[float] = None, time_limit: Optional[float] = None,
                   max_nodes: Optional[int] = None) -> DeconflictResult:
    """Conflict-free trajectories following ``paths`` in order, or DeconflictFailure."""
    if planner not in PLANNERS:
        raise ValueError(f"unknown low-level planner {planner!r}")
    goals = preprocess_well_formed(paths, inst.roots)
    k = len(goals)
    ctx = PlannerContext(inst.graph, turn_cost,
                         None if time_limit is None else time.monotonic() + time_limit)
    # foreign roots are never entered, so every robot can rest at its root
    avoids = [frozenset(inst.roots) - {r} for r in inst.roots]
    stats = {"pbs_nodes": 0, "low_level_calls": 0, "postponements": 0}

    def report():
        out = dict(stats)
        out["expanded"] = ctx.expanded
        out["searches"] = ctx.searches
        return out

    def plan(r, trajs, pairs, mode):
        higher = sorted(_closure_above(pairs, r))
        rt = build_reservation_table([trajs[h] for h in higher], strict=False)
        stats["low_level_calls"] += 1
        avoid = avoids[r]
        if mode == "cha":
            return cha_plan(goals[r], rt, ctx, avoid)
        if mode == "mla":
            return mla_plan(goals[r], rt, ctx, avoid)
        return ada_plan(goals[r], rt, ctx, b_max, avoid)

    def replan(node: PbsNode, order: Sequence[int], first_mode: Optional[str] = None) -> Optional[PbsNode]:
        """Plan ``order`` in sequence; a postponement parks the node for later."""
        trajs = list(node.trajs)
        for idx, r in enumerate(order):
            mode = first_mode if (idx == 0 and first_mode) else planner
            tau = plan(r, trajs, node.priorities, mode)
            if tau is POSTPONE:
                stats["postponements"] += 1
                return PbsNode(node.priorities, trajs, tuple(order[idx:]), True)
            if tau is None:
                return None
            trajs[r] = tau
        return PbsNode(node.priorities, trajs)

    try:
        root = replan(PbsNode(frozenset(), [None] * k), list(range(k)))
        stack: List[PbsNode] = []
        parked: List[PbsNode] = []
        if root is not None:
            (parked if root.postponed else stack).append(root)
        while True:
            if not stack:
                if not parked:
                    raise DeconflictFailure("infeasible: priority tree exhausted", report())
                node = parked.pop()
                resumed = replan(node, node.pending, first_mode="mla")
                if resumed is None:
                    continue
                (parked if resumed.postponed else stack).append(resumed)
                continue
            node = stack.pop()
            stats["pbs_nodes"] += 1
            if max_nodes is not None and stats["pbs_nodes"] > max_nodes:
                raise DeconflictFailure("node limit reached", report())
            ctx.check_time()
            found = check_conflicts(node.trajs, first_only=True)
            if not found:
                trajs = node.trajs
                return DeconflictResult(trajs, node.makespan, report())
            c = found[0]
            children = []
            for hi, lo in ((c.i, c.i2), (c.i2, c.i)):
                if hi in _closure_below(node.priorities, lo) | {lo}:
                    continue  # would close a priority cycle
                pairs = node.priorities | {(hi, lo)}
                affected = _closure_below(pairs, lo) | {lo}
                child = replan(PbsNode(pairs, node.trajs), _topological(pairs, affected))
                if child is not None:
                    children.append(child)
            ready = [ch for ch in children if not ch.postponed]
            parked.extend(ch for ch in children if ch.postponed)
            # depth first, lower makespan on top; earlier-generated child wins ties
            ready.sort(key=lambda ch: ch.makespan, reverse=True)
            if len(ready) == 2 and ready[0].makespan == ready[1].makespan:
                ready.reverse()
            stack.extend(ready)
    except PlannerTimeout:
        raise DeconflictTimeout("timeout", report()) from None
