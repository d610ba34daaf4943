"""The diagram: a graph of typed nodes, edges and faces.

Nodes carry object terms, edges morphism terms and faces named equalities
between two parallel paths. Structural operations (insert, merge, compose,
split) rewrite the graph; unification results are folded back into both
the graph and the owning context.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .context import Context, Fact
from .normal import fold_factors, normalize
from .terms import (
    App,
    Const,
    EqSort,
    Id,
    Meta,
    MorSort,
    ObjSort,
    Term,
    TermError,
    pretty,
    sort_of,
)
from .trace import Hypothesis, Refl
from .unify import Subst, UnifyError, unify


class DiagramError(Exception):
    pass


class UnknownObject(DiagramError):
    pass


class KindMismatch(DiagramError):
    pass


class UnificationFailed(DiagramError):
    pass


class BrokenPath(DiagramError):
    pass


class IdentityRejected(DiagramError):
    pass


@dataclass
class Node:
    name: str
    term: Term
    label: str


@dataclass
class Edge:
    name: str
    term: Term
    src: str
    dst: str
    label: str
    identity: bool = False


@dataclass
class Face:
    name: str
    kind: str  # mirrors the fact kind
    left: tuple[str, ...]
    right: tuple[str, ...]
    label: str


_NAME_OK = re.compile(r"[^A-Za-z0-9_'-]")


class Diagram:
    def __init__(self) -> None:
        self.nodes: dict[str, Node] = {}
        self.edges: dict[str, Edge] = {}
        self.faces: dict[str, Face] = {}

    def clone(self) -> "Diagram":
        d = Diagram()
        d.nodes = {n: Node(v.name, v.term, v.label) for n, v in self.nodes.items()}
        d.edges = {
            n: Edge(v.name, v.term, v.src, v.dst, v.label, v.identity)
            for n, v in self.edges.items()
        }
        d.faces = {
            n: Face(v.name, v.kind, v.left, v.right, v.label)
            for n, v in self.faces.items()
        }
        return d

    # -- lookup ---------------------------------------------------------------

    def node_of_term(self, term: Term) -> str | None:
        for n in self.nodes.values():
            if n.term == term:
                return n.name
        return None

    def resolve(self, name: str) -> tuple[str, str]:
        """Resolve an identifier to ("node"|"edge"|"face", key).

        Names win; a label is accepted when it identifies a unique object.
        """
        if name in self.nodes:
            return "node", name
        if name in self.edges:
            return "edge", name
        if name in self.faces:
            return "face", name
        hits = [("node", n.name) for n in self.nodes.values() if n.label == name]
        hits += [("edge", e.name) for e in self.edges.values() if e.label == name]
        hits += [("face", f.name) for f in self.faces.values() if f.label == name]
        if len(hits) == 1:
            return hits[0]
        if len(hits) > 1:
            raise UnknownObject(f"ambiguous label {name!r}")
        raise UnknownObject(f"unknown object {name!r}")

    # -- construction ----------------------------------------------------------

    def _node_base_name(self, term: Term) -> str:
        if isinstance(term, Const):
            return term.name
        if isinstance(term, Meta):
            return term.hint or f"m{term.uid}"
        base = _NAME_OK.sub("", pretty(term))
        return base or "o"

    def ensure_node(self, term: Term) -> str:
        found = self.node_of_term(term)
        if found is not None:
            return found
        base = self._node_base_name(term)
        name = base
        k = 0
        while name in self.nodes:
            name = f"{base}_{k}"
            k += 1
        self.nodes[name] = Node(name, term, pretty(term))
        return name

    def fresh_edge_name(self, src: str, dst: str) -> str:
        base = f"m{src}{dst}"
        if base not in self.edges:
            return base
        k = 0
        while f"{base}_{k}" in self.edges:
            k += 1
        return f"{base}_{k}"

    def add_edge(
        self, term: Term, name: str | None = None, identity: bool = False
    ) -> str:
        s = sort_of(term)
        if not isinstance(s, MorSort):
            raise DiagramError(f"{pretty(term)} is not a morphism")
        if not normalize(term).factors and not identity:
            raise IdentityRejected("identities are never displayed")
        src = self.ensure_node(s.src)
        dst = self.ensure_node(s.dst)
        if name is None:
            name = self.fresh_edge_name(src, dst)
        elif name in self.edges:
            raise DiagramError(f"edge {name!r} already exists")
        self.edges[name] = Edge(name, term, src, dst, pretty(term), identity)
        return name

    def path_to_edges(self, fact_stmt: EqSort, factors, reuse: bool) -> tuple[str, ...]:
        """Resolve a factor sequence to a path, creating edges as needed.

        With `reuse` set an existing edge with the same term and source is
        taken; otherwise every occurrence gets a fresh edge.
        """
        at = self.ensure_node(fact_stmt.src)
        path: list[str] = []
        for f in factors:
            fs = sort_of(f)
            hit = None
            if reuse:
                for e in self.edges.values():
                    if e.term == f and e.src == at and not e.identity:
                        hit = e.name
                        break
            if hit is None:
                hit = self.add_edge(f)
            path.append(hit)
            at = self.edges[hit].dst
        self.ensure_node(fact_stmt.dst)
        return tuple(path)

    def add_face(self, ctx: Context, fact: Fact, reuse: bool = False) -> Face:
        left = self.path_to_edges(fact.stmt, normalize(fact.stmt.lhs).factors, reuse)
        right = self.path_to_edges(fact.stmt, normalize(fact.stmt.rhs).factors, reuse)
        face = Face(fact.name, fact.kind, left, right, face_label(ctx, fact))
        self.faces[fact.name] = face
        return face

    # -- path helpers -----------------------------------------------------------

    def path_endpoints(self, path: tuple[str, ...]) -> tuple[str, str]:
        if not path:
            raise BrokenPath("empty path has no endpoints")
        return self.edges[path[0]].src, self.edges[path[-1]].dst

    def check_path(self, path: tuple[str, ...]) -> None:
        for a, b in zip(path, path[1:]):
            if self.edges[a].dst != self.edges[b].src:
                raise BrokenPath(f"{a} does not meet {b}")

    def fold_path(self, path: tuple[str, ...], anchor: str | None = None) -> Term:
        if not path:
            if anchor is None:
                raise BrokenPath("empty path needs an anchor node")
            return Id(self.nodes[anchor].term)
        self.check_path(path)
        return fold_factors(
            [self.edges[e].term for e in path], self.edges[path[0]].term
        )

    # -- substitution ------------------------------------------------------------

    def apply_subst(self, s: Subst, ctx: Context) -> None:
        for node in self.nodes.values():
            node.term = s.term(node.term)
            node.label = pretty(node.term)
        for edge in self.edges.values():
            edge.term = s.term(edge.term)
            edge.label = pretty(edge.term)
        for face in self.faces.values():
            fact = ctx.fact(face.name)
            if fact is not None:
                face.label = face_label(ctx, fact)

    # -- serialization -------------------------------------------------------------

    def to_data(self) -> dict:
        return {
            "nodes": [
                {"name": n.name, "term": pretty(n.term), "label": n.label}
                for n in self.nodes.values()
            ],
            "edges": [
                {
                    "name": e.name,
                    "term": pretty(e.term),
                    "src": e.src,
                    "dst": e.dst,
                    "label": e.label,
                    "identity": e.identity,
                }
                for e in self.edges.values()
            ],
            "faces": [
                {
                    "name": f.name,
                    "kind": f.kind,
                    "left": list(f.left),
                    "right": list(f.right),
                    "label": f.label,
                }
                for f in self.faces.values()
            ],
        }


def face_label(ctx: Context, fact: Fact) -> str:
    """Display annotation of a face; lemma instances elide implicit arguments."""
    term = ctx.subst.term(fact.term)
    head = term
    args: list[Term] = []
    while isinstance(head, App):
        args.insert(0, head.arg)
        head = head.fn
    if isinstance(head, Const) and head.name in ctx.lemmas and args:
        lemma = ctx.lemmas[head.name]
        shown = []
        ai = iter(args)
        for binder in lemma.binders:
            if binder.quant != "forall":
                continue
            try:
                a = next(ai)
            except StopIteration:
                break
            if not binder.implicit:
                shown.append(a)
        parts = [head.name] + [_atom_label(a) for a in shown]
        return " ".join(parts)
    return pretty(term)


def _atom_label(t: Term) -> str:
    s = pretty(t)
    return f"({s})" if " " in s else s


# ---------------------------------------------------------------------------
# Extraction
# ---------------------------------------------------------------------------


def extract_diagram(ctx: Context) -> Diagram:
    """Build the visible graph from the context's goals and hypotheses.

    Goals are walked first, then hypotheses, each side in normal form with
    one fresh edge per factor occurrence; the user merges duplicates.
    Identities never materialize as edges. Goal faces whose two sides are
    already equal are discharged with a reflexivity trace.
    """
    d = Diagram()
    ordered = [f for f in ctx.facts.values() if f.kind == "goal"]
    ordered += [f for f in ctx.facts.values() if f.kind != "goal"]
    for fact in ordered:
        d.add_face(ctx, fact, reuse=False)
        _discharge_if_refl(ctx, fact)
    return d


def _discharge_if_refl(ctx: Context, fact: Fact) -> None:
    if fact.kind != "goal" or ctx.proof_of(fact.name) is not None:
        return
    if normalize(fact.stmt.lhs) == normalize(fact.stmt.rhs):
        ctx.record_proof(fact, Refl(fact.stmt.lhs))


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def insert_node(d: Diagram, term: Term) -> tuple[Diagram, str]:
    if not isinstance(sort_of(term), ObjSort):
        raise DiagramError(f"{pretty(term)} is not an object")
    if d.node_of_term(term) is not None:
        return d, d.node_of_term(term)
    d2 = d.clone()
    return d2, d2.ensure_node(term)


def insert_edge(d: Diagram, term: Term) -> tuple[Diagram, str]:
    d2 = d.clone()
    return d2, d2.add_edge(term)


def insert_face(ctx: Context, d: Diagram, fact: Fact) -> tuple[Diagram, str]:
    d2 = d.clone()
    face = d2.add_face(ctx, fact, reuse=True)
    _discharge_if_refl(ctx, fact)
    return d2, face.name


def merge(ctx: Context, d: Diagram, x: str, y: str) -> tuple[Diagram, Subst]:
    """Identify two same-kind objects, unifying their annotations.

    Endpoints of edges (and sides of faces) are merged first; the unifier
    is applied to the whole diagram and context. On unification failure
    nothing changes.
    """
    kx, x = d.resolve(x)
    ky, y = d.resolve(y)
    if kx != ky:
        raise KindMismatch(f"{x} is a {kx}, {y} is a {ky}")
    d2 = d.clone()
    try:
        s = _merge_into(ctx, d2, kx, x, y, Subst())
    except UnifyError as e:
        raise UnificationFailed(str(e))
    ctx.apply_subst(s)
    d2.apply_subst(ctx.subst, ctx)
    return d2, s


def _merge_into(ctx: Context, d: Diagram, kind: str, x: str, y: str, s: Subst) -> Subst:
    if x == y:
        return s
    if kind == "node":
        s = unify(d.nodes[x].term, d.nodes[y].term, s)
        for e in d.edges.values():
            if e.src == y:
                e.src = x
            if e.dst == y:
                e.dst = x
        del d.nodes[y]
        return s
    if kind == "edge":
        ex, ey = d.edges[x], d.edges[y]
        s = _merge_into(ctx, d, "node", ex.src, ey.src, s)
        ex, ey = d.edges[x], d.edges[y]
        s = _merge_into(ctx, d, "node", ex.dst, ey.dst, s)
        s = unify(d.edges[x].term, d.edges[y].term, s)
        for f in d.faces.values():
            f.left = tuple(x if e == y else e for e in f.left)
            f.right = tuple(x if e == y else e for e in f.right)
        del d.edges[y]
        return s
    if kind == "face":
        fx, fy = d.faces[x], d.faces[y]
        if len(fx.left) != len(fy.left) or len(fx.right) != len(fy.right):
            raise UnificationFailed("face sides have different shapes")
        for a, b in zip(fx.left + fx.right, fy.left + fy.right):
            s = _merge_into(ctx, d, "edge", a, b, s)
        factx = ctx.fact(x)
        facty = ctx.fact(y)
        s = unify(factx.term, facty.term, s)
        if facty.kind == "goal" and isinstance(facty.term, Meta):
            if facty.term.uid in s.mapping and facty.term.uid not in ctx.proofs:
                ctx.record_proof(facty, Hypothesis(x))
        elif factx.kind == "goal" and isinstance(factx.term, Meta):
            if factx.term.uid in s.mapping and factx.term.uid not in ctx.proofs:
                ctx.record_proof(factx, Hypothesis(y))
        del d.faces[y]
        return s
    raise KindMismatch(kind)


def compose_path(
    d: Diagram, name: str, path: tuple[str, ...], anchor: str | None = None
) -> tuple[Diagram, str]:
    """Add one edge annotated with the composite of a path.

    An empty path with an anchor node yields an identity edge, flagged so
    that it is only rendered on demand.
    """
    d2 = d.clone()
    edges = tuple(d2.resolve(e)[1] if e not in d2.edges else e for e in path)
    for e in edges:
        if e not in d2.edges:
            raise UnknownObject(f"unknown edge {e!r}")
    if not edges:
        if anchor is None:
            raise BrokenPath("empty path needs an anchor node")
        anchor = d2.resolve(anchor)[1]
        if anchor not in d2.nodes:
            raise UnknownObject(f"unknown node {anchor!r}")
        term = Id(d2.nodes[anchor].term)
        d2.add_edge(term, name=name, identity=True)
        return d2, name
    term = d2.fold_path(edges)
    d2.add_edge(term, name=name)
    return d2, name


def split_edge(
    d: Diagram, edge: str, functor_laws: bool = False
) -> tuple[Diagram, tuple[str, ...]]:
    """Replace an edge by one edge per factor of its normal form.

    Atomic edges are left untouched, identity edges disappear, and faces
    whose paths mention the edge are rewritten to the factor sequence.
    Existing edges with the right annotation are reused.
    """
    kind, edge = d.resolve(edge)
    if kind != "edge":
        raise KindMismatch(f"{edge} is a {kind}")
    e = d.edges[edge]
    nm = normalize(e.term, functor_laws=functor_laws)
    if len(nm.factors) == 1 and nm.factors[0] == e.term:
        return d, (edge,)
    d2 = d.clone()
    del d2.edges[edge]
    path: list[str] = []
    at = d2.nodes[e.src].name
    for f in nm.factors:
        hit = None
        for cand in d2.edges.values():
            if cand.term == f and cand.src == at and not cand.identity:
                hit = cand.name
                break
        if hit is None:
            hit = d2.add_edge(f)
        path.append(hit)
        at = d2.edges[hit].dst
    seq = tuple(path)
    for face in d2.faces.values():
        face.left = _splice(face.left, edge, seq)
        face.right = _splice(face.right, edge, seq)
    return d2, seq


def _splice(path: tuple[str, ...], old: str, new: tuple[str, ...]) -> tuple[str, ...]:
    out: list[str] = []
    for e in path:
        if e == old:
            out.extend(new)
        else:
            out.append(e)
    return tuple(out)


# ---------------------------------------------------------------------------
# Auditing
# ---------------------------------------------------------------------------


def audit(d: Diagram, ctx: Context) -> None:
    """Check every structural invariant; raises DiagramError on violation."""
    for e in d.edges.values():
        s = sort_of(e.term)
        if not isinstance(s, MorSort):
            raise DiagramError(f"edge {e.name} is not a morphism")
        if e.src not in d.nodes or e.dst not in d.nodes:
            raise DiagramError(f"edge {e.name} has dangling endpoints")
        if d.nodes[e.src].term != s.src or d.nodes[e.dst].term != s.dst:
            raise DiagramError(f"edge {e.name} endpoints disagree with its sort")
        if not normalize(e.term).factors and not e.identity:
            raise DiagramError(f"edge {e.name} is a hidden identity")
    for f in d.faces.values():
        fact = ctx.fact(f.name)
        if fact is None:
            raise DiagramError(f"face {f.name} has no fact")
        if fact.kind == "goal" and not isinstance(fact.term, Meta):
            raise DiagramError(f"goal face {f.name} lost its metavariable")
        d.check_path(f.left)
        d.check_path(f.right)
        stmt = ctx.subst.sort(fact.stmt)
        for side, path in (("lhs", f.left), ("rhs", f.right)):
            want = normalize(getattr(stmt, side))
            got = (
                normalize(d.fold_path(path))
                if path
                else normalize(Id(want.src))
            )
            if got != want:
                raise DiagramError(
                    f"face {f.name} {side} path folds to {got}, statement says {want}"
                )
        if f.left and f.right:
            if d.path_endpoints(f.left) != d.path_endpoints(f.right):
                raise DiagramError(f"face {f.name} sides have different endpoints")
