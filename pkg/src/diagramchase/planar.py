"""Planar region enumeration for automatic goal decomposition.

Given node positions, the bounded regions of the straight-line subdivision
spanned by the goal's two sides (plus any edge lying inside that region)
are enumerated by face traversal of the induced planar map, then chained
from the goal's left side to its right side.
"""

from __future__ import annotations

import math

from .graph import Diagram, Face
from .solver import Branch, DecomposeError, FaceSpec, NonPlanarPositions

_EPS = 1e-9


def auto_specs(d: Diagram, face: Face, positions) -> list[FaceSpec]:
    if positions is None:
        raise DecomposeError("automatic decomposition needs node positions")
    if not face.left or not face.right:
        raise DecomposeError("cannot decompose an identity-sided goal automatically")
    boundary = list(dict.fromkeys(face.left + face.right))
    cycle_nodes = _cycle_nodes(d, face)
    poly = [positions[n] for n in cycle_nodes]
    candidates = list(boundary)
    for e in d.edges.values():
        if e.name in candidates or e.identity:
            continue
        if e.src not in positions or e.dst not in positions:
            continue
        a, b = positions[e.src], positions[e.dst]
        mid = ((a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0)
        if _in_polygon(a, poly) and _in_polygon(b, poly) and _in_polygon(mid, poly):
            candidates.append(e.name)
    _check_crossings(d, candidates, positions)
    regions = _bounded_regions(d, candidates, positions)
    return _chain_regions(face, regions)


def _cycle_nodes(d: Diagram, face: Face) -> list[str]:
    nodes = [d.edges[face.left[0]].src]
    for e in face.left:
        nodes.append(d.edges[e].dst)
    back = []
    for e in reversed(face.right):
        back.append(d.edges[e].src)
    return nodes + back[:-1] if back else nodes


def _in_polygon(p, poly) -> bool:
    # ray casting with an on-boundary tolerance
    x, y = p
    for (x1, y1), (x2, y2) in zip(poly, poly[1:] + poly[:1]):
        if _on_segment(p, (x1, y1), (x2, y2)):
            return True
    inside = False
    for (x1, y1), (x2, y2) in zip(poly, poly[1:] + poly[:1]):
        if (y1 > y) != (y2 > y):
            t = (y - y1) / (y2 - y1)
            if x < x1 + t * (x2 - x1):
                inside = not inside
    return inside


def _on_segment(p, a, b) -> bool:
    cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
    if abs(cross) > _EPS * (1 + abs(b[0] - a[0]) + abs(b[1] - a[1])):
        return False
    dot = (p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1])
    length2 = (b[0] - a[0]) ** 2 + (b[1] - a[1]) ** 2
    return -_EPS <= dot <= length2 + _EPS


def _check_crossings(d: Diagram, candidates, positions) -> None:
    segs = []
    for name in candidates:
        e = d.edges[name]
        segs.append((name, positions[e.src], positions[e.dst], {e.src, e.dst}))
    for i in range(len(segs)):
        for j in range(i + 1, len(segs)):
            n1, a1, b1, ends1 = segs[i]
            n2, a2, b2, ends2 = segs[j]
            if ends1 & ends2:
                continue
            if _segments_cross(a1, b1, a2, b2):
                raise NonPlanarPositions(f"edges {n1} and {n2} cross")


def _segments_cross(a, b, c, e) -> bool:
    def orient(p, q, r):
        v = (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
        return 0 if abs(v) < _EPS else (1 if v > 0 else -1)

    o1 = orient(a, b, c)
    o2 = orient(a, b, e)
    o3 = orient(c, e, a)
    o4 = orient(c, e, b)
    return o1 != o2 and o3 != o4 and 0 not in (o1, o2, o3, o4)


def _bounded_regions(d: Diagram, candidates, positions):
    """Faces of the planar map as (pathA, pathB) pairs from source to sink."""
    darts = []  # (edge name, along: bool)
    out_of: dict[str, list[tuple[str, bool]]] = {}
    for name in candidates:
        e = d.edges[name]
        darts.append((name, True))
        darts.append((name, False))
        out_of.setdefault(e.src, []).append((name, True))
        out_of.setdefault(e.dst, []).append((name, False))

    def head(dart):
        e = d.edges[dart[0]]
        return e.dst if dart[1] else e.src

    def tail(dart):
        e = d.edges[dart[0]]
        return e.src if dart[1] else e.dst

    def angle(dart):
        a = positions[tail(dart)]
        b = positions[head(dart)]
        theta = math.atan2(b[1] - a[1], b[0] - a[0])
        # deterministic tie-break keeps parallel edges distinguishable
        return (theta, dart[0], dart[1])

    for v in out_of:
        out_of[v].sort(key=angle)

    def next_dart(dart):
        # turn as far clockwise as possible at the head: previous dart in
        # the counterclockwise rotation before the reversed dart
        v = head(dart)
        rev = (dart[0], not dart[1])
        ring = out_of[v]
        i = ring.index(rev)
        return ring[(i - 1) % len(ring)]

    seen: set = set()
    regions = []
    for start in sorted(darts):
        if start in seen:
            continue
        orbit = []
        cur = start
        while True:
            orbit.append(cur)
            seen.add(cur)
            cur = next_dart(cur)
            if cur == start:
                break
        area = 0.0
        pts = [positions[tail(dd)] for dd in orbit]
        for (x1, y1), (x2, y2) in zip(pts, pts[1:] + pts[:1]):
            area += x1 * y2 - x2 * y1
        if area > _EPS:
            regions.append(_orbit_paths(orbit))
    return [r for r in regions if r is not None]


def _orbit_paths(orbit):
    """Split a region boundary into its two directed source-to-sink paths."""
    flags = [along for _, along in orbit]
    if all(flags) or not any(flags):
        return None  # a directed cycle, not an equality shape
    # rotate so the orbit starts at the source (against -> along transition)
    n = len(orbit)
    start = None
    flips = 0
    for i in range(n):
        if not flags[i - 1] and flags[i]:
            flips += 1
            start = i
    if flips != 1:
        return None  # more than one source: not an atomic equality region
    rotated = orbit[start:] + orbit[:start]
    along = [e for e, a in rotated if a]
    against = [e for e, a in rotated if not a]
    return tuple(along), tuple(reversed(against))


def _chain_regions(face: Face, regions) -> list[FaceSpec]:
    """Order regions by sweeping the goal's left side toward its right."""
    current = tuple(face.left)
    target = tuple(face.right)
    remaining = list(regions)
    specs: list[FaceSpec] = []
    while current != target:
        progressed = False
        for idx, (pa, pb) in enumerate(remaining):
            for one, other in ((pa, pb), (pb, pa)):
                pos = _find_sub(current, one)
                if pos is None:
                    continue
                nxt = current[:pos] + other + current[pos + len(one) :]
                specs.append(_spec_for(current, nxt, pos, len(one), len(other)))
                current = nxt
                remaining.pop(idx)
                progressed = True
                break
            if progressed:
                break
        if not progressed:
            raise NonPlanarPositions(
                "bounded regions do not connect the goal's two sides"
            )
    return specs


def _find_sub(path, sub):
    if not sub:
        return None
    for i in range(len(path) - len(sub) + 1):
        if path[i : i + len(sub)] == sub:
            return i
    return None


def _spec_for(current, nxt, pos, old_len, new_len) -> FaceSpec:
    steps: list[object] = list(current[:pos])
    steps.append(Branch(current[pos : pos + old_len], nxt[pos : pos + new_len]))
    steps.extend(current[pos + old_len :])
    return FaceSpec(tuple(steps))
