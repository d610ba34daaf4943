"""The declarative proof context.

A Context owns every declared constant, the named equalities (hypotheses),
the quantified statements (lemmas), the open goals, the accumulated
substitution and the registered proofs. All state is mutated by a single
session; terms themselves are immutable and shared freely.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .normal import normalize
from .terms import (
    CatSort,
    Const,
    EqSort,
    FunctSort,
    MapSort,
    Meta,
    MorSort,
    ObjSort,
    Sort,
    SortError,
    Term,
    eq_statement,
    pretty,
    pretty_sort,
)
from .trace import Trace, substitute_trace, trace_to_data
from .unify import Subst


class ContextError(Exception):
    pass


@dataclass
class Binder:
    name: str
    meta: Meta
    quant: str  # "forall" | "exists"
    implicit: bool = False

    @property
    def sort(self) -> Sort:
        return self.meta.sort


@dataclass
class LemmaStatement:
    name: str
    binders: tuple[Binder, ...]
    lhs: Term
    rhs: Term

    def statement(self) -> EqSort:
        return eq_statement(self.lhs, self.rhs)


@dataclass
class Fact:
    """A named equality: a hypothesis, an open goal, or a derived face."""

    name: str
    kind: str  # "hypothesis" | "goal" | "derived"
    term: Term
    stmt: EqSort
    trace: Trace | None = None


class Context:
    def __init__(self) -> None:
        self.consts: dict[str, Const] = {}
        self.categories: list[str] = []
        self.objects: list[str] = []
        self.morphisms: list[str] = []
        self.functors: list[str] = []
        self.maps: list[str] = []
        self.facts: dict[str, Fact] = {}
        self.lemmas: dict[str, LemmaStatement] = {}
        self.proofs: dict[int, Trace] = {}
        self.subst: Subst = Subst()
        self._meta_counter = 0
        self._goal_counter = 0

    # -- declarations -------------------------------------------------------

    def lookup_const(self, name: str) -> Const | None:
        return self.consts.get(name)

    def _declare(self, name: str, sort: Sort) -> Const:
        if name in self.consts or name in self.facts or name in self.lemmas:
            raise ContextError(f"name {name!r} already declared")
        c = Const(name, sort)
        self.consts[name] = c
        return c

    def declare_category(self, name: str) -> Const:
        c = self._declare(name, CatSort())
        self.categories.append(name)
        return c

    def declare_object(self, name: str, cat: Term) -> Const:
        c = self._declare(name, ObjSort(cat))
        self.objects.append(name)
        return c

    def declare_morphism(self, name: str, cat: Term, src: Term, dst: Term) -> Const:
        c = self._declare(name, MorSort(cat, src, dst))
        self.morphisms.append(name)
        return c

    def declare_functor(self, name: str, src_cat: Term, dst_cat: Term) -> Const:
        c = self._declare(name, FunctSort(src_cat, dst_cat))
        self.functors.append(name)
        return c

    def declare_map(self, name: str, sort: MapSort) -> Const:
        c = self._declare(name, sort)
        self.maps.append(name)
        return c

    def register_const(self, c: Const) -> Const:
        """Register an internally generated constant (lemma head, skolem)."""
        have = self.consts.get(c.name)
        if have is None:
            self.consts[c.name] = c
            return c
        return have

    # -- metavariables ------------------------------------------------------

    def fresh_meta(self, sort: Sort, hint: str = "") -> Meta:
        uid = self._meta_counter
        self._meta_counter += 1
        return Meta(uid, sort, hint or f"m{uid}")

    # -- facts and goals ----------------------------------------------------

    def add_hypothesis(self, name: str, lhs: Term, rhs: Term) -> Fact:
        stmt = eq_statement(lhs, rhs, self)
        c = self._declare(name, stmt)
        fact = Fact(name, "hypothesis", c, stmt)
        self.facts[name] = fact
        return fact

    def add_lemma(self, stmt: LemmaStatement) -> LemmaStatement:
        if stmt.name in self.lemmas or stmt.name in self.consts:
            raise ContextError(f"name {stmt.name!r} already declared")
        self.lemmas[stmt.name] = stmt
        return stmt

    def add_goal(self, lhs: Term, rhs: Term, name: str | None = None) -> Fact:
        stmt = eq_statement(lhs, rhs, self)
        if name is None:
            name = f"Goal-{self._goal_counter}"
        if name.startswith("Goal-"):
            head = name.split("-")[1]
            if head.isdigit():
                self._goal_counter = max(self._goal_counter, int(head) + 1)
        if name in self.facts:
            raise ContextError(f"goal {name!r} already exists")
        meta = self.fresh_meta(stmt, hint=name)
        fact = Fact(name, "goal", meta, stmt)
        self.facts[name] = fact
        return fact

    def add_derived(self, name: str, term: Term, stmt: EqSort, trace: Trace) -> Fact:
        if name in self.facts:
            raise ContextError(f"face {name!r} already exists")
        fact = Fact(name, "derived", term, stmt, trace)
        self.facts[name] = fact
        return fact

    def fresh_face_name(self, prefix: str = "p") -> str:
        k = 0
        while f"{prefix}{k}" in self.facts or f"{prefix}{k}" in self.consts:
            k += 1
        return f"{prefix}{k}"

    def fresh_goal_name(self) -> str:
        name = f"Goal-{self._goal_counter}"
        while name in self.facts:
            self._goal_counter += 1
            name = f"Goal-{self._goal_counter}"
        return name

    def fact(self, name: str) -> Fact | None:
        return self.facts.get(name)

    def goals(self) -> list[Fact]:
        return [f for f in self.facts.values() if f.kind == "goal"]

    # -- proofs -------------------------------------------------------------

    def proof_of(self, name: str) -> Trace | None:
        fact = self.facts.get(name)
        if fact is None:
            return None
        if fact.kind == "hypothesis":
            return None
        if fact.kind == "derived":
            return fact.trace
        assert isinstance(fact.term, Meta) or fact.trace is not None
        if isinstance(fact.term, Meta):
            return self.proofs.get(fact.term.uid) or fact.trace
        return fact.trace

    def record_proof(self, fact: Fact, trace: Trace) -> None:
        if fact.kind == "goal" and isinstance(fact.term, Meta):
            self.proofs[fact.term.uid] = trace
        else:
            fact.trace = trace

    def established(self, name: str, _seen: frozenset = frozenset()) -> bool:
        """True when the face is proved, tracing through goal references."""
        if name in _seen:
            return False
        fact = self.facts.get(name)
        if fact is None:
            return False
        if fact.kind == "hypothesis":
            return True
        tr = self.proof_of(name)
        if tr is None:
            return False
        return self._trace_established(tr, _seen | {name})

    def _trace_established(self, tr: Trace, seen: frozenset) -> bool:
        from . import trace as tr_mod

        if isinstance(tr, tr_mod.Hypothesis):
            return self.established(tr.face, seen)
        if isinstance(tr, tr_mod.LemmaInstance):
            for arg in tr.args:
                arg = self.subst.term(arg)
                if isinstance(arg, Meta) and isinstance(arg.sort, EqSort):
                    sub = self.proofs.get(arg.uid)
                    if sub is None or not self._trace_established(
                        sub, seen | {f"?meta:{arg.uid}"}
                    ):
                        return False
                elif isinstance(arg, Const) and isinstance(arg.sort, EqSort):
                    if arg.name in self.facts and not self.established(arg.name, seen):
                        return False
            return True
        if isinstance(tr, tr_mod.Sym):
            return self._trace_established(tr.inner, seen)
        if isinstance(tr, tr_mod.Trans):
            return self._trace_established(tr.first, seen) and self._trace_established(
                tr.second, seen
            )
        if isinstance(tr, tr_mod.CongLeft):
            return self._trace_established(tr.inner, seen)
        if isinstance(tr, tr_mod.CongRight):
            return self._trace_established(tr.inner, seen)
        return True

    def unproved_goals(self) -> list[Fact]:
        return [f for f in self.goals() if not self.established(f.name)]

    # -- lemma instantiation helpers ----------------------------------------

    def skolem_const(self, lemma: LemmaStatement, index: int, inst: Subst) -> Term:
        """The projection constant standing for an existential binder."""
        binder = lemma.binders[index]
        name = f"pi{index}_{lemma.name}"
        sort = inst.sort(binder.meta.sort)
        return self.register_const(Const(name, sort))

    def instance_head(self, lemma: LemmaStatement, metas: list[Meta]) -> Const:
        """A constant typed for this particular instantiation of the lemma.

        Universal binders contribute argument sorts; the chain ends in the
        conclusion statement, all specialized to the supplied metas.
        """
        inst = Subst()
        arg_sorts: list[Sort] = []
        mi = iter(metas)
        for k, binder in enumerate(lemma.binders):
            if binder.quant == "forall":
                m = next(mi)
                arg_sorts.append(m.sort)
                inst = inst.bind(binder.meta, m)
            else:
                inst = inst.bind(binder.meta, self.skolem_const(lemma, k, inst))
        sort: Sort = eq_statement(inst.term(lemma.lhs), inst.term(lemma.rhs))
        for s in reversed(arg_sorts):
            sort = MapSort(s, sort)
        return Const(lemma.name, sort)

    # -- substitution -------------------------------------------------------

    def apply_subst(self, s: Subst) -> None:
        """Fold a unifier into the context, rewriting facts and proofs."""
        if not len(s):
            return
        merged = s.copy()
        for uid, t in self.subst.mapping.items():
            if uid not in merged.mapping:
                merged.mapping[uid] = merged.term(t)
        self.subst = Subst({u: merged.term(t) for u, t in merged.mapping.items()})
        for fact in self.facts.values():
            fact.stmt = self.subst.sort(fact.stmt)
            if not isinstance(fact.term, Meta):
                fact.term = self.subst.term(fact.term)
            if fact.trace is not None:
                fact.trace = substitute_trace(fact.trace, self.subst)
        self.proofs = {
            uid: substitute_trace(tr, self.subst) for uid, tr in self.proofs.items()
        }

    # -- copying and serialization ------------------------------------------

    def clone(self) -> "Context":
        c = Context.__new__(Context)
        c.consts = dict(self.consts)
        c.categories = list(self.categories)
        c.objects = list(self.objects)
        c.morphisms = list(self.morphisms)
        c.functors = list(self.functors)
        c.maps = list(self.maps)
        c.facts = {
            n: Fact(f.name, f.kind, f.term, f.stmt, f.trace)
            for n, f in self.facts.items()
        }
        c.lemmas = dict(self.lemmas)
        c.proofs = dict(self.proofs)
        c.subst = self.subst.copy()
        c._meta_counter = self._meta_counter
        c._goal_counter = self._goal_counter
        return c

    def to_data(self) -> dict:
        return {
            "categories": list(self.categories),
            "objects": list(self.objects),
            "morphisms": list(self.morphisms),
            "functors": list(self.functors),
            "maps": list(self.maps),
            "lemmas": sorted(self.lemmas),
            "facts": [
                {
                    "name": f.name,
                    "kind": f.kind,
                    "term": pretty(self.subst.term(f.term)),
                    "statement": pretty_sort(self.subst.sort(f.stmt)),
                    "proved": self.established(f.name),
                    "trace": _fact_trace_data(self, f),
                }
                for f in self.facts.values()
            ],
        }


def _fact_trace_data(ctx: Context, fact: Fact):
    tr = ctx.proof_of(fact.name)
    return trace_to_data(tr) if tr is not None else None


def normalized_sides(stmt: EqSort):
    """The two sides of an equality statement in normal form."""
    return normalize(stmt.lhs), normalize(stmt.rhs)
