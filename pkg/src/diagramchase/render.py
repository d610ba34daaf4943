"""Render a diagram to an image file.

Used by the CLI report path: node positions come from the deterministic
layout, parallel edges bend apart, and a selected face paints its left
side red and its right side green, goals outlined yellow, matching the
interactive highlight semantics.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
from matplotlib.patches import FancyArrowPatch

from .graph import Diagram
from .layout import CANVAS, LayoutPositions


def render_diagram(
    d: Diagram,
    positions: LayoutPositions,
    path: str,
    highlight_face: str | None = None,
    title: str | None = None,
) -> None:
    fig, ax = plt.subplots(figsize=(7, 7))
    ax.set_xlim(-5, CANVAS + 5)
    ax.set_ylim(-5, CANVAS + 5)
    ax.set_aspect("equal")
    ax.axis("off")
    if title:
        ax.set_title(title, fontsize=11)

    left_edges: set[str] = set()
    right_edges: set[str] = set()
    if highlight_face and highlight_face in d.faces:
        face = d.faces[highlight_face]
        left_edges = set(face.left)
        right_edges = set(face.right)

    groups: dict[tuple[str, str], list[str]] = {}
    for e in d.edges.values():
        if e.identity:
            continue
        key = (min(e.src, e.dst), max(e.src, e.dst))
        groups.setdefault(key, []).append(e.name)

    for key, names in sorted(groups.items()):
        for k, name in enumerate(sorted(names)):
            e = d.edges[name]
            a = positions.get(e.src)
            b = positions.get(e.dst)
            if a is None or b is None:
                continue
            spread = 0.28 * (k - (len(names) - 1) / 2.0)
            if e.src == e.dst:
                spread = 0.6 + 0.3 * k
            color = "black"
            if name in left_edges:
                color = "red"
            elif name in right_edges:
                color = "green"
            arrow = FancyArrowPatch(
                a,
                b,
                connectionstyle=f"arc3,rad={spread}",
                arrowstyle="-|>",
                mutation_scale=14,
                color=color,
                lw=1.2,
                shrinkA=12,
                shrinkB=12,
            )
            ax.add_patch(arrow)
            mx = (a[0] + b[0]) / 2.0 - spread * (b[1] - a[1]) * 0.5
            my = (a[1] + b[1]) / 2.0 + spread * (b[0] - a[0]) * 0.5
            ax.annotate(
                e.label,
                (mx, my),
                fontsize=8,
                ha="center",
                va="center",
                color=color,
                bbox=dict(boxstyle="round,pad=0.1", fc="white", ec="none", alpha=0.8),
            )

    for n in d.nodes.values():
        xy = positions.get(n.name)
        if xy is None:
            continue
        ax.annotate(
            n.label,
            xy,
            fontsize=11,
            ha="center",
            va="center",
            bbox=dict(boxstyle="circle,pad=0.25", fc="#f2f2f2", ec="#444444"),
        )

    goal_names = [f.name for f in d.faces.values() if f.kind == "goal"]
    if goal_names:
        ax.annotate(
            "goals: " + ", ".join(goal_names),
            (2, 2),
            fontsize=8,
            color="#8a7000",
        )
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
