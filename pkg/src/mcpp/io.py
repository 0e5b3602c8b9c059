"""Instance bundles, manifests, and the JSON solution and trajectory files.

JSON is written with sorted keys and a fixed layout so equal inputs give equal
bytes.  Run times never go into these files.
"""
from __future__ import annotations

import json
import os
from typing import Dict, List, Optional, Sequence, Tuple

from .deconflict import State
from .grid import (GridError, Instance, Solution, load_map, load_scenario, load_weights, path_cost,
                   save_map, save_scenario, save_weights)


class FormatError(GridError):
    """A file that does not parse; the message names the file."""


def read_text(path: str) -> str:
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise FormatError(f"{path}: {exc.strerror or exc}") from None


def write_text(path: str, text: str):
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


def _load_json(path: str):
    try:
        return json.loads(read_text(path))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None


# -- instances -------------------------------------------------------------------
def instance_files(prefix: str) -> Tuple[str, str, str]:
    return prefix + ".map", prefix + ".weights", prefix + ".scen"


def write_instance(prefix: str, inst: Instance):
    m, w, s = instance_files(prefix)
    write_text(m, save_map(inst.graph))
    write_text(w, save_weights(inst.graph))
    head = ""
    if inst.rho is not None or inst.seed is not None:
        head = f"# rho {inst.rho} seed {inst.seed}\n"
    write_text(s, head + save_scenario(inst.roots))


def read_instance(map_path: str, scen_path: str, weights_path: Optional[str] = None) -> Instance:
    text = read_text(map_path)
    try:
        G = load_map(text)
    except GridError as exc:
        raise FormatError(f"{map_path}: {exc}") from None
    if weights_path is not None and os.path.exists(weights_path):
        text = read_text(weights_path)
        try:
            G = load_weights(text, G)
        except (GridError, ValueError) as exc:
            raise FormatError(f"{weights_path}: {exc}") from None
    text = read_text(scen_path)
    rho = seed = None
    for line in text.splitlines():
        parts = line.split()
        if len(parts) == 5 and parts[0] == "#" and parts[1] == "rho" and parts[3] == "seed":
            rho = None if parts[2] == "None" else int(parts[2])
            seed = None if parts[4] == "None" else int(parts[4])
    try:
        return Instance(G, load_scenario(text), seed=seed, rho=rho)
    except (GridError, ValueError) as exc:
        raise FormatError(f"{scen_path}: {exc}") from None


def read_instance_prefix(prefix: str) -> Instance:
    m, w, s = instance_files(prefix)
    return read_instance(m, s, w)


def write_manifest(path: str, entries: Sequence[Dict]):
    write_text(path, _dump({"instances": list(entries)}))


def read_manifest(path: str) -> List[Dict]:
    data = _load_json(path)
    try:
        entries = data["instances"]
    except (KeyError, TypeError):
        raise FormatError(f"{path}: manifest needs an 'instances' list") from None
    base = os.path.dirname(path)
    out = []
    for e in entries:
        e = dict(e)
        if not os.path.isabs(e["prefix"]):
            e["prefix"] = os.path.join(base, e["prefix"])
        out.append(e)
    return out


# -- solutions -------------------------------------------------------------------
def solution_to_json(inst: Instance, sol: Solution, turn_cost: Optional[float] = None) -> str:
    costs = [path_cost(p, inst.graph, turn_cost) for p in sol.paths]
    meta = dict(sol.metadata)
    meta.setdefault("rho", inst.rho)
    meta.setdefault("seed", inst.seed)
    return _dump({
        "paths": [[list(v) for v in p] for p in sol.paths],
        "costs": costs,
        "makespan": max(costs),
        "metadata": meta,
    })


def write_solution(path: str, inst: Instance, sol: Solution, turn_cost: Optional[float] = None):
    write_text(path, solution_to_json(inst, sol, turn_cost))


def read_solution(path: str) -> Solution:
    data = _load_json(path)
    try:
        paths = [[(int(x), int(y)) for x, y in p] for p in data["paths"]]
    except (KeyError, TypeError, ValueError):
        raise FormatError(f"{path}: solution needs 'paths' as lists of [x, y]") from None
    return Solution(paths, dict(data.get("metadata", {})))


# -- trajectories ----------------------------------------------------------------
def trajectories_to_json(trajs: Sequence[Sequence[State]], makespan: float, stats: Dict,
                         meta: Optional[Dict] = None) -> str:
    rows = []
    for tau in trajs:
        rows.append([[s.vertex[0], s.vertex[1], s.t] + ([] if s.heading is None else [s.heading])
                     for s in tau])
    return _dump({"trajectories": rows, "makespan": makespan, "stats": dict(stats),
                  "metadata": dict(meta or {})})


def write_trajectories(path: str, trajs, makespan: float, stats: Dict, meta: Optional[Dict] = None):
    write_text(path, trajectories_to_json(trajs, makespan, stats, meta))


def read_trajectories(path: str) -> Tuple[List[List[State]], Dict]:
    data = _load_json(path)
    try:
        trajs = []
        for tau in data["trajectories"]:
            states = []
            for rec in tau:
                h = int(rec[3]) if len(rec) > 3 else None
                states.append(State((int(rec[0]), int(rec[1])), float(rec[2]), h))
            trajs.append(states)
    except (KeyError, TypeError, ValueError, IndexError):
        raise FormatError(f"{path}: trajectories need lists of [x, y, t] or [x, y, t, heading]") from None
    return trajs, data
