"""Deterministic force-directed layout with user pins.

Node positions live in an abstract 100x100 canvas. Placement is seeded
from a stable hash of the node labels, relaxation runs a fixed number of
iterations (never to a convergence threshold), and pinned nodes do not
move, so identical diagrams always land on identical coordinates.
"""

from __future__ import annotations

import math
import random

from .graph import Diagram

CANVAS = 100.0
ITERATIONS = 300
REPULSION = 180.0  # force ~ REPULSION / r^2
SPRING = 0.08  # force ~ SPRING * (r - rest length)
REST_LENGTH = 22.0
STEP = 0.85
MIN_DIST = 1e-3


class LayoutError(Exception):
    pass


class LayoutPositions(dict):
    """Map node name -> (x, y); `pins` lists nodes relaxation must not move."""

    def __init__(self, *args, pins=None, **kwargs):
        super().__init__(*args, **kwargs)
        self.pins: set[str] = set(pins or ())

    def copy(self) -> "LayoutPositions":
        return LayoutPositions(self, pins=self.pins)


def stable_seed(d: Diagram) -> int:
    """FNV-1a over the sorted node labels; documented so renders are stable."""
    h = 0xCBF29CE484222325
    for label in sorted(n.label for n in d.nodes.values()):
        for b in label.encode("utf-8"):
            h ^= b
            h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
        h ^= 0x2C
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


def layout(d: Diagram, prev: LayoutPositions | None = None) -> LayoutPositions:
    """Relax the diagram, starting from `prev` where available."""
    names = sorted(d.nodes)
    pos = LayoutPositions(pins=(prev.pins & set(names)) if prev else ())
    if not names:
        return pos
    if len(names) == 1:
        only = names[0]
        if prev and only in prev:
            pos[only] = prev[only]
        else:
            pos[only] = (CANVAS / 2.0, CANVAS / 2.0)
        return pos
    rng = random.Random(stable_seed(d))
    for name in names:
        if prev and name in prev:
            pos[name] = prev[name]
        else:
            pos[name] = (
                rng.uniform(0.15 * CANVAS, 0.85 * CANVAS),
                rng.uniform(0.15 * CANVAS, 0.85 * CANVAS),
            )
    if pos.pins >= set(names):
        return pos
    edges = sorted(
        {(min(e.src, e.dst), max(e.src, e.dst)) for e in d.edges.values() if e.src != e.dst}
    )
    for _ in range(ITERATIONS):
        force = {n: [0.0, 0.0] for n in names}
        for i, a in enumerate(names):
            for b in names[i + 1 :]:
                dx = pos[a][0] - pos[b][0]
                dy = pos[a][1] - pos[b][1]
                r = max(math.hypot(dx, dy), MIN_DIST)
                f = REPULSION / (r * r)
                force[a][0] += f * dx / r
                force[a][1] += f * dy / r
                force[b][0] -= f * dx / r
                force[b][1] -= f * dy / r
        for a, b in edges:
            dx = pos[b][0] - pos[a][0]
            dy = pos[b][1] - pos[a][1]
            r = max(math.hypot(dx, dy), MIN_DIST)
            f = SPRING * (r - REST_LENGTH)
            force[a][0] += f * dx / r
            force[a][1] += f * dy / r
            force[b][0] -= f * dx / r
            force[b][1] -= f * dy / r
        for n in names:
            if n in pos.pins:
                continue
            x = pos[n][0] + STEP * force[n][0]
            y = pos[n][1] + STEP * force[n][1]
            pos[n] = (
                min(max(x, 0.0), CANVAS),
                min(max(y, 0.0), CANVAS),
            )
    return pos


def drag(d: Diagram, pos: LayoutPositions, node: str, xy) -> LayoutPositions:
    """Move a node to `xy`, pinning it there while the rest relaxes."""
    if node not in d.nodes:
        raise LayoutError(f"unknown node {node!r}")
    out = pos.copy()
    out[node] = (float(xy[0]), float(xy[1]))
    out.pins.add(node)
    return layout(d, out)


def pin(pos: LayoutPositions, node: str, pinned: bool = True) -> LayoutPositions:
    out = pos.copy()
    if pinned:
        out.pins.add(node)
    else:
        out.pins.discard(node)
    return out


# ---------------------------------------------------------------------------
# Sidecar persistence
# ---------------------------------------------------------------------------


def save_positions(path: str, pos: LayoutPositions) -> None:
    lines = []
    for name in sorted(pos):
        x, y = pos[name]
        flag = " pin" if name in pos.pins else ""
        lines.append(f"{name} {x!r} {y!r}{flag}\n")
    with open(path, "w", encoding="utf-8") as fh:
        fh.writelines(lines)


def load_positions(path: str) -> LayoutPositions | None:
    """Read a sidecar layout file; a missing file is never an error."""
    try:
        fh = open(path, "r", encoding="utf-8")
    except FileNotFoundError:
        return None
    pos = LayoutPositions()
    with fh:
        for raw in fh:
            parts = raw.split()
            if len(parts) < 3:
                continue
            name, x, y = parts[0], float(parts[1]), float(parts[2])
            pos[name] = (x, y)
            if "pin" in parts[3:]:
                pos.pins.add(name)
    return pos
