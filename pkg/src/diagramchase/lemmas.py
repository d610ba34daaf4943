"""Quantified lemmas as graphs: admissibility, patterns, matching, pushout.

A lemma whose binders all range over the supported categorical sorts turns
into a pattern: a small metavariable-rich diagram. The user matches
pattern objects against goal objects (each match is a unification step)
and application computes the pushout of the two graphs over the matched
pairs, orienting the conclusion as a new proved face and any unmatched
equality premise as a new goal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .context import Context, Fact, LemmaStatement
from .graph import Diagram, Face, KindMismatch, UnknownObject, face_label
from .normal import normalize
from .terms import (
    App,
    CatSort,
    Const,
    EqSort,
    FunctSort,
    Meta,
    MorSort,
    ObjSort,
    Term,
    eq_statement,
    pretty,
    sort_of,
)
from .trace import Hypothesis, LemmaInstance, Trace
from .unify import Subst, UnifyError, unify


class LemmaError(Exception):
    pass


class NotAdmissible(LemmaError):
    pass


class Refused(LemmaError):
    """A match that would make unification fail; the session is unchanged."""


def admissible(lemma: LemmaStatement) -> tuple[bool, str | None]:
    """A lemma is usable when every binder ranges over a categorical sort
    and the conclusion is an equality between morphisms."""
    for binder in lemma.binders:
        if not isinstance(
            binder.sort, (CatSort, ObjSort, MorSort, FunctSort, EqSort)
        ):
            return False, f"UnsupportedSort: binder {binder.name}"
    try:
        eq_statement(lemma.lhs, lemma.rhs)
    except Exception as e:
        return False, f"conclusion is not a morphism equality: {e}"
    return True, None


@dataclass
class Pattern:
    """The metavariable-rich diagram extracted from a lemma."""

    lemma: str
    diagram: Diagram
    facts: dict[str, Fact]
    forall_metas: tuple[Meta, ...]
    meta_origin: dict[int, str]
    skolems: dict[str, Term]
    instance: Term
    conclusion_stmt: EqSort
    conclusion_face: str


def pattern_of(ctx: Context, lemma: LemmaStatement) -> Pattern:
    """Eliminate the binders and extract the lemma's graph.

    Universal binders become fresh metavariables, existential binders the
    lemma's projection constants; the conclusion and every equality binder
    become faces. Each call instantiates fresh metavariables, so two
    applications of the same lemma never share any.
    """
    ok, reason = admissible(lemma)
    if not ok:
        raise NotAdmissible(reason)
    inst = Subst()
    forall_metas: list[Meta] = []
    meta_origin: dict[int, str] = {}
    skolems: dict[str, Term] = {}
    d = Diagram()
    facts: dict[str, Fact] = {}
    premises: list[tuple[str, Meta]] = []
    for k, binder in enumerate(lemma.binders):
        sort = inst.sort(binder.meta.sort)
        if binder.quant == "forall":
            m = ctx.fresh_meta(sort, hint=binder.name)
            forall_metas.append(m)
            meta_origin[m.uid] = binder.name
            inst = inst.bind(binder.meta, m)
            if isinstance(sort, ObjSort):
                d.ensure_node(m)
            elif isinstance(sort, MorSort):
                d.add_edge(m)
            elif isinstance(sort, EqSort):
                premises.append((binder.name, m))
        else:
            skolem = ctx.skolem_const(lemma, k, inst)
            skolems[binder.name] = skolem
            inst = inst.bind(binder.meta, skolem)
            s2 = sort_of(skolem)
            if isinstance(s2, ObjSort):
                d.ensure_node(skolem)
            elif isinstance(s2, MorSort):
                d.add_edge(skolem)
    for name, m in premises:
        stmt = m.sort
        assert isinstance(stmt, EqSort)
        fact = Fact(name, "pattern", m, stmt)
        facts[name] = fact
        d.add_face(ctx, fact, reuse=True)
    head = ctx.instance_head(lemma, forall_metas)
    instance: Term = head
    for m in forall_metas:
        instance = App(instance, m)
    conclusion = eq_statement(inst.term(lemma.lhs), inst.term(lemma.rhs))
    cname = lemma.name
    fact = Fact(cname, "pattern", instance, conclusion)
    facts[cname] = fact
    d.add_face(ctx, fact, reuse=True)
    return Pattern(
        lemma.name,
        d,
        facts,
        tuple(forall_metas),
        meta_origin,
        skolems,
        instance,
        conclusion,
        cname,
    )


@dataclass
class MatchSession:
    """An in-progress pairing of pattern objects with goal objects."""

    pattern: Pattern
    pairs: list[tuple[str, str, str]] = field(default_factory=list)  # kind, p, g
    given: list[tuple[str, str]] = field(default_factory=list)  # as typed
    subst: Subst = field(default_factory=Subst)


def _term_of(kind: str, key: str, d: Diagram, facts) -> Term:
    if kind == "node":
        return d.nodes[key].term
    if kind == "edge":
        return d.edges[key].term
    fact = facts(key) if callable(facts) else facts.get(key)
    if fact is None:
        raise UnknownObject(f"unknown face {key!r}")
    return fact.term


def match_objects(
    ms: MatchSession, ctx: Context, d: Diagram, p: str, g: str
) -> MatchSession:
    """Extend the session with one pattern-to-goal pair.

    The two annotations are unified under the accumulated substitution;
    a failing unification refuses the match and leaves the session as is.
    """
    pk, pkey = ms.pattern.diagram.resolve(p)
    gk, gkey = d.resolve(g)
    if pk != gk:
        raise KindMismatch(f"{p} is a {pk}, {g} is a {gk}")
    pterm = _term_of(pk, pkey, ms.pattern.diagram, ms.pattern.facts)
    gterm = _term_of(gk, gkey, d, ctx.fact)
    try:
        s2 = unify(ctx.subst.term(pterm), ctx.subst.term(gterm), ms.subst)
    except UnifyError as e:
        raise Refused(str(e))
    if (pk, pkey, gkey) not in ms.pairs:
        ms.pairs.append((pk, pkey, gkey))
        ms.given.append((p, g))
    ms.subst = s2
    return ms


def unmatch_objects(ms: MatchSession, ctx: Context, d: Diagram, p: str, g: str) -> MatchSession:
    pk, pkey = ms.pattern.diagram.resolve(p)
    _, gkey = d.resolve(g)
    keep = [i for i, pair in enumerate(ms.pairs) if pair != (pk, pkey, gkey)]
    ms.given = [ms.given[i] for i in keep]
    ms.pairs = [ms.pairs[i] for i in keep]
    s = Subst()
    for kind, a, b in ms.pairs:
        pterm = _term_of(kind, a, ms.pattern.diagram, ms.pattern.facts)
        gterm = _term_of(kind, b, d, ctx.fact)
        s = unify(ctx.subst.term(pterm), ctx.subst.term(gterm), s)
    ms.subst = s
    return ms


def apply_match(
    ctx: Context, d: Diagram, ms: MatchSession
) -> tuple[Diagram, list[str]]:
    """Compute the pushout of the goal graph and the substituted pattern.

    Matched objects are identified (this cannot fail: the pairs already
    unified); unmatched pattern objects are imported with their metas
    intact. The conclusion enters as a proved face (instantiating the
    matched goal's metavariable when there is one) and every unmatched
    equality premise becomes a new goal.
    """
    pat = ms.pattern
    s = ms.subst
    d2 = d.clone()

    node_map: dict[str, str] = {}
    edge_map: dict[str, str] = {}
    face_map: dict[str, str] = {}
    for kind, p, g in ms.pairs:
        if kind == "node":
            node_map[p] = g
        elif kind == "edge":
            edge_map[p] = g
        else:
            face_map[p] = g

    # identify goal objects matched to one pattern object
    merged: dict[str, str] = {}
    for mapping, kind in ((node_map, "node"), (edge_map, "edge")):
        buckets: dict[str, list[str]] = {}
        for kp, kg in mapping.items():
            buckets.setdefault(kp, []).append(kg)
        for kp, kgs in buckets.items():
            keep = kgs[0]
            for other in kgs[1:]:
                _identify(d2, kind, keep, other)
                merged[other] = keep
            mapping[kp] = keep

    ctx.apply_subst(s)
    d2.apply_subst(ctx.subst, ctx)

    # import unmatched pattern nodes and edges
    for node in pat.diagram.nodes.values():
        if node.name in node_map:
            continue
        term = ctx.subst.term(s.term(node.term))
        node_map[node.name] = d2.ensure_node(term)
    for edge in pat.diagram.edges.values():
        if edge.name in edge_map:
            continue
        term = ctx.subst.term(s.term(edge.term))
        hit = None
        src = node_map[edge.src]
        for cand in d2.edges.values():
            if cand.term == term and cand.src == src and not cand.identity:
                hit = cand.name
                break
        edge_map[edge.name] = hit if hit is not None else d2.add_edge(term)

    # conclusion face
    args = tuple(ctx.subst.term(s.term(m)) for m in pat.forall_metas)
    trace = LemmaInstance(pat.lemma, args)
    instance = ctx.subst.term(s.term(pat.instance))
    conclusion = ctx.subst.sort(s.sort(pat.conclusion_stmt))
    parent: str | None = None
    matched_conclusion = face_map.get(pat.conclusion_face)
    if matched_conclusion is not None:
        gfact = ctx.fact(matched_conclusion)
        if gfact is not None and gfact.kind == "goal":
            ctx.record_proof(gfact, trace)
            parent = gfact.name
    else:
        name = ctx.fresh_face_name("p")
        fact = ctx.add_derived(name, instance, conclusion, trace)
        d2.add_face(ctx, fact, reuse=True)

    # unmatched equality premises become goals
    new_goals: list[str] = []
    for pname, pfact in pat.facts.items():
        if pname == pat.conclusion_face or pname in face_map:
            continue
        premise = ctx.subst.term(s.term(pfact.term))
        if not isinstance(premise, Meta):
            continue  # already justified by the matching
        stmt = premise.sort
        assert isinstance(stmt, EqSort)
        name = _goal_name(ctx, parent)
        fact = Fact(name, "goal", premise, stmt)
        ctx.facts[name] = fact
        d2.add_face(ctx, fact, reuse=True)
        from .graph import _discharge_if_refl

        _discharge_if_refl(ctx, fact)
        if not ctx.established(name):
            new_goals.append(name)
    d2.apply_subst(ctx.subst, ctx)
    return d2, new_goals


def _identify(d: Diagram, kind: str, keep: str, drop: str) -> None:
    if keep == drop:
        return
    if kind == "node":
        for e in d.edges.values():
            if e.src == drop:
                e.src = keep
            if e.dst == drop:
                e.dst = keep
        del d.nodes[drop]
        return
    ek, ed = d.edges[keep], d.edges[drop]
    _identify(d, "node", ek.src, ed.src)
    _identify(d, "node", ek.dst, ed.dst)
    for f in d.faces.values():
        f.left = tuple(keep if e == drop else e for e in f.left)
        f.right = tuple(keep if e == drop else e for e in f.right)
    del d.edges[drop]


def _goal_name(ctx: Context, parent: str | None) -> str:
    if parent is None:
        return ctx.fresh_goal_name()
    k = 0
    while f"{parent}-{k}" in ctx.facts:
        k += 1
    return f"{parent}-{k}"
