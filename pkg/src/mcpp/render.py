"""Static SVG figures of maps, coverage paths, trajectories and benchmark summaries.

Figures come out byte-stable: a fixed hash salt for element ids, no date in the
metadata, and text kept as text rather than glyph paths.
"""
from __future__ import annotations

from typing import Dict, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .grid import Instance  # noqa: E402

STABLE_RC = {"svg.hashsalt": "mcpp", "svg.fonttype": "none", "path.simplify": False}


def robot_colors(k: int):
    cmap = plt.get_cmap("tab10" if k <= 10 else "turbo")
    return [cmap(i if k <= 10 else i / max(1, k - 1)) for i in range(k)]


def _save(fig, out: str):
    fig.savefig(out, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)


def _draw_map(ax, inst: Instance):
    G = inst.graph
    img = np.ones((G.height, G.width))
    for x in range(G.width):
        for y in range(G.height):
            if (x, y) not in G:
                img[y, x] = 0.0
    ax.imshow(img, cmap="gray", vmin=0, vmax=1, origin="lower",
              extent=(-0.5, G.width - 0.5, -0.5, G.height - 0.5), interpolation="nearest")
    ax.set_xticks(np.arange(-0.5, G.width, 1), minor=True)
    ax.set_yticks(np.arange(-0.5, G.height, 1), minor=True)
    ax.grid(which="minor", color="0.85", linewidth=0.4)
    ax.tick_params(which="both", length=0, labelbottom=False, labelleft=False)
    ax.set_xlim(-0.5, G.width - 0.5)
    ax.set_ylim(-0.5, G.height - 0.5)
    ax.set_aspect("equal")


def _offset(i: int, k: int) -> float:
    # shift each robot a little so shared corridors stay readable
    return 0.0 if k == 1 else 0.24 * (i / (k - 1) - 0.5)


def solution_figure(inst: Instance, paths: Sequence[Sequence], title: Optional[str] = None):
    """Grid, obstacles, one colored closed polyline per robot, roots as squares."""
    G = inst.graph
    size = max(3.0, min(10.0, 0.25 * max(G.width, G.height)))
    fig, ax = plt.subplots(figsize=(size, size))
    _draw_map(ax, inst)
    colors = robot_colors(inst.k)
    for i, p in enumerate(paths):
        d = _offset(i, len(paths))
        xs = [v[0] + d for v in p]
        ys = [v[1] + d for v in p]
        ax.plot(xs, ys, color=colors[i % len(colors)], linewidth=1.2, label=f"robot {i}")
    for i, r in enumerate(inst.roots):
        ax.plot([r[0]], [r[1]], marker="s", markersize=7, color=colors[i % len(colors)],
                markeredgecolor="black", linestyle="none", label=f"root {i}")
    if title:
        ax.set_title(title)
    return fig, ax


def render_solution(inst: Instance, paths: Sequence[Sequence], out: str, title: Optional[str] = None):
    with plt.rc_context(STABLE_RC):
        fig, _ = solution_figure(inst, paths, title)
        _save(fig, out)


def render_trajectories(inst: Instance, trajs, out: str, title: Optional[str] = None):
    """Trajectory polylines; states where the robot waits get a dot sized by the wait."""
    with plt.rc_context(STABLE_RC):
        G = inst.graph
        size = max(3.0, min(10.0, 0.25 * max(G.width, G.height)))
        fig, ax = plt.subplots(figsize=(size, size))
        _draw_map(ax, inst)
        colors = robot_colors(len(trajs))
        for i, tau in enumerate(trajs):
            d = _offset(i, len(trajs))
            c = colors[i % len(colors)]
            ax.plot([s.vertex[0] + d for s in tau], [s.vertex[1] + d for s in tau], color=c, linewidth=1.0)
            for a, b in zip(tau, tau[1:]):
                slack = b.t - a.t - inst.graph.weight(a.vertex, b.vertex)
                if slack > 1e-9:
                    ax.plot([a.vertex[0] + d], [a.vertex[1] + d], marker="o", color=c,
                            markersize=min(8.0, 2.0 + slack), linestyle="none")
        for i, r in enumerate(inst.roots):
            ax.plot([r[0]], [r[1]], marker="s", markersize=7, color=colors[i % len(colors)],
                    markeredgecolor="black", linestyle="none")
        if title:
            ax.set_title(title)
        _save(fig, out)


def render_reductions(reductions: Dict, out: str, reference: str = "vor"):
    """Mean and spread of the makespan reduction over ``reference`` per removal index."""
    with plt.rc_context(STABLE_RC):
        fig, ax = plt.subplots(figsize=(6, 3.5))
        algos = sorted({a for _, a in reductions})
        rhos = sorted({r for r, _ in reductions if r is not None})
        for n, algo in enumerate(algos):
            xs, means, stds = [], [], []
            for r in rhos:
                vals = reductions.get((r, algo))
                if not vals:
                    continue
                xs.append(r + 0.15 * (n - (len(algos) - 1) / 2))
                means.append(float(np.mean(vals)))
                stds.append(float(np.std(vals)))
            ax.errorbar(xs, means, yerr=stds, marker="o", capsize=3, linestyle="-", label=algo)
        ax.axhline(0.0, color="0.5", linewidth=0.8)
        ax.set_xlabel("removal index")
        ax.set_ylabel(f"makespan reduction vs {reference}")
        ax.set_xticks(rhos)
        if algos:
            ax.legend()
        fig.tight_layout()
        _save(fig, out)
