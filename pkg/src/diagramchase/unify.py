"""Substitutions and first-order unification with metavariables.

Unification is rigid decomposition over term constructors, performed on
composition normal forms for morphisms. Factor lists of unequal length
unify only when the difference reduces to a single flexible factor;
anything requiring a choice of splitting fails instead of enumerating.
"""

from __future__ import annotations

from .normal import NormalMor, fold_factors, normalize
from .terms import (
    App,
    CatSort,
    Comp,
    Const,
    EqSort,
    FMor,
    FObj,
    FunctSort,
    Id,
    MapSort,
    Meta,
    MorSort,
    ObjSort,
    Sort,
    Term,
    occurs,
    pretty,
    pretty_sort,
    sort_of,
)


class UnifyError(Exception):
    """Base class: the two terms have no unifier under this discipline."""


class Clash(UnifyError):
    pass


class OccursCheck(UnifyError):
    pass


class SortMismatch(UnifyError):
    pass


class FactorMismatch(UnifyError):
    pass


class Subst:
    """An idempotent, sort-preserving map from metavariable uid to term."""

    __slots__ = ("mapping",)

    def __init__(self, mapping: dict[int, Term] | None = None):
        self.mapping: dict[int, Term] = dict(mapping or {})

    def __contains__(self, uid: int) -> bool:
        return uid in self.mapping

    def __len__(self) -> int:
        return len(self.mapping)

    def __eq__(self, other) -> bool:
        return isinstance(other, Subst) and self.mapping == other.mapping

    def __repr__(self) -> str:
        items = ", ".join(
            f"?{u}->{pretty(t)}" for u, t in sorted(self.mapping.items())
        )
        return f"Subst({items})"

    def copy(self) -> "Subst":
        return Subst(self.mapping)

    def term(self, t: Term) -> Term:
        """Apply the substitution to a term (and to its embedded sorts)."""
        if isinstance(t, Meta):
            bound = self.mapping.get(t.uid)
            if bound is not None:
                return bound
            return Meta(t.uid, self.sort(t.sort), t.hint)
        if isinstance(t, Const):
            return Const(t.name, self.sort(t.sort))
        if isinstance(t, Comp):
            return Comp(self.term(t.first), self.term(t.second))
        if isinstance(t, Id):
            return Id(self.term(t.obj))
        if isinstance(t, FObj):
            return FObj(self.term(t.functor), self.term(t.obj))
        if isinstance(t, FMor):
            return FMor(self.term(t.functor), self.term(t.mor))
        if isinstance(t, App):
            return App(self.term(t.fn), self.term(t.arg))
        return t

    def sort(self, s: Sort) -> Sort:
        if isinstance(s, ObjSort):
            return ObjSort(self.term(s.cat))
        if isinstance(s, MorSort):
            return MorSort(self.term(s.cat), self.term(s.src), self.term(s.dst))
        if isinstance(s, FunctSort):
            return FunctSort(self.term(s.src_cat), self.term(s.dst_cat))
        if isinstance(s, EqSort):
            return EqSort(
                self.term(s.cat),
                self.term(s.src),
                self.term(s.dst),
                self.term(s.lhs),
                self.term(s.rhs),
            )
        if isinstance(s, MapSort):
            return MapSort(self.sort(s.arg), self.sort(s.res))
        return s

    def bind(self, meta: Meta, t: Term) -> "Subst":
        """Return a new substitution extended with meta -> t."""
        t = self.term(t)
        if occurs(meta.uid, t):
            raise OccursCheck(f"?{meta.hint or meta.uid} occurs in {pretty(t)}")
        single = Subst({meta.uid: t})
        merged = {uid: single.term(v) for uid, v in self.mapping.items()}
        merged[meta.uid] = t
        return Subst(merged)


def substitute(t: Term, s: Subst) -> Term:
    """Capture-free replacement of metavariables; sorts are preserved."""
    return s.term(t)


def unify(t1: Term, t2: Term, s: Subst | None = None) -> Subst:
    """Most general extension of `s` making the two terms equal.

    Morphisms are compared on normal forms, so the result identifies the
    sides modulo associativity and identity laws. Raises a UnifyError
    subclass when no unifier exists under the rigid discipline.
    """
    s = s.copy() if s is not None else Subst()
    return _unify(t1, t2, s)


def _unify(t1: Term, t2: Term, s: Subst) -> Subst:
    t1 = s.term(t1)
    t2 = s.term(t2)
    if t1 == t2:
        return s
    s1 = sort_of(t1)
    s2 = sort_of(t2)
    if isinstance(s1, MorSort) and isinstance(s2, MorSort):
        return _unify_mor(t1, t2, s)
    if isinstance(t1, Meta):
        return _bind(t1, t2, s)
    if isinstance(t2, Meta):
        return _bind(t2, t1, s)
    if isinstance(t1, Const) and isinstance(t2, Const):
        if t1.name != t2.name:
            raise Clash(f"{t1.name} vs {t2.name}")
        return unify_sort(t1.sort, t2.sort, s)
    if isinstance(t1, FObj) and isinstance(t2, FObj):
        s = _unify(t1.functor, t2.functor, s)
        return _unify(t1.obj, t2.obj, s)
    if isinstance(t1, App) and isinstance(t2, App):
        s = _unify(t1.fn, t2.fn, s)
        return _unify(t1.arg, t2.arg, s)
    raise Clash(f"{pretty(t1)} vs {pretty(t2)}")


def _unify_mor(t1: Term, t2: Term, s: Subst) -> Subst:
    n1 = normalize(t1)
    n2 = normalize(t2)
    s = _unify(n1.cat, n2.cat, s)
    s = _unify(n1.src, n2.src, s)
    s = _unify(n1.dst, n2.dst, s)
    f1 = [s.term(f) for f in n1.factors]
    f2 = [s.term(f) for f in n2.factors]
    return _unify_factors(f1, f2, s)


def _unify_factors(f1: list[Term], f2: list[Term], s: Subst) -> Subst:
    # renormalize: substitution may have turned factors into composites
    f1 = _reflatten(f1)
    f2 = _reflatten(f2)
    if len(f1) == len(f2):
        for a, b in zip(f1, f2):
            s = _unify_atom(a, b, s)
            f1 = _reflatten([s.term(f) for f in f1])
            f2 = _reflatten([s.term(f) for f in f2])
            if len(f1) != len(f2):
                return _unify_factors(f1, f2, s)
        return s
    # strip syntactically equal rigid prefix/suffix
    while f1 and f2 and f1[0] == f2[0] and not isinstance(f1[0], Meta):
        f1, f2 = f1[1:], f2[1:]
    while f1 and f2 and f1[-1] == f2[-1] and not isinstance(f1[-1], Meta):
        f1, f2 = f1[:-1], f2[:-1]
    if len(f1) == len(f2):
        return _unify_factors(f1, f2, s)
    if len(f1) == 1 and isinstance(f1[0], Meta):
        return _bind_to_factors(f1[0], f2, s)
    if len(f2) == 1 and isinstance(f2[0], Meta):
        return _bind_to_factors(f2[0], f1, s)
    raise FactorMismatch(
        f"factor lists of lengths {len(f1)} and {len(f2)} with no flexible side"
    )


def _reflatten(factors: list[Term]) -> list[Term]:
    out: list[Term] = []
    for f in factors:
        if isinstance(f, (Comp, Id)):
            out.extend(normalize(f).factors)
        else:
            out.append(f)
    return out


def _bind_to_factors(m: Meta, factors: list[Term], s: Subst) -> Subst:
    ms = s.sort(m.sort)
    if not isinstance(ms, MorSort):
        raise SortMismatch(pretty_sort(ms))
    if not factors:
        # a meta never unifies with a bare identity: conservative failure
        raise FactorMismatch("flexible factor against an identity path")
    fs_first = sort_of(factors[0])
    fs_last = sort_of(factors[-1])
    s = _unify(ms.cat, fs_first.cat, s)
    s = _unify(ms.src, fs_first.src, s)
    s = _unify(ms.dst, fs_last.dst, s)
    folded = fold_factors([s.term(f) for f in factors], s.term(ms.src))
    return s.bind(Meta(m.uid, s.sort(m.sort), m.hint), folded)


def _unify_atom(a: Term, b: Term, s: Subst) -> Subst:
    a = s.term(a)
    b = s.term(b)
    if a == b:
        return s
    if isinstance(a, Meta):
        return _bind(a, b, s)
    if isinstance(b, Meta):
        return _bind(b, a, s)
    if isinstance(a, Const) and isinstance(b, Const):
        if a.name != b.name:
            raise Clash(f"{a.name} vs {b.name}")
        return unify_sort(a.sort, b.sort, s)
    if isinstance(a, FMor) and isinstance(b, FMor):
        s = _unify(a.functor, b.functor, s)
        return _unify(a.mor, b.mor, s)
    if isinstance(a, App) and isinstance(b, App):
        s = _unify(a.fn, b.fn, s)
        return _unify(a.arg, b.arg, s)
    if isinstance(a, (Comp, Id)) or isinstance(b, (Comp, Id)):
        return _unify_mor(a, b, s)
    raise Clash(f"{pretty(a)} vs {pretty(b)}")


def _bind(m: Meta, t: Term, s: Subst) -> Subst:
    if isinstance(t, Meta) and t.uid == m.uid:
        return s
    s = unify_sort(m.sort, sort_of(t), s)
    m2 = Meta(m.uid, s.sort(m.sort), m.hint)
    t2 = s.term(t)
    if occurs(m.uid, t2):
        raise OccursCheck(f"?{m.hint or m.uid} occurs in {pretty(t2)}")
    return s.bind(m2, t2)


def unify_sort(s1: Sort, s2: Sort, s: Subst) -> Subst:
    s1 = s.sort(s1)
    s2 = s.sort(s2)
    if s1 == s2:
        return s
    if isinstance(s1, CatSort) and isinstance(s2, CatSort):
        return s
    if isinstance(s1, ObjSort) and isinstance(s2, ObjSort):
        return _unify(s1.cat, s2.cat, s)
    if isinstance(s1, MorSort) and isinstance(s2, MorSort):
        s = _unify(s1.cat, s2.cat, s)
        s = _unify(s1.src, s2.src, s)
        return _unify(s1.dst, s2.dst, s)
    if isinstance(s1, FunctSort) and isinstance(s2, FunctSort):
        s = _unify(s1.src_cat, s2.src_cat, s)
        return _unify(s1.dst_cat, s2.dst_cat, s)
    if isinstance(s1, EqSort) and isinstance(s2, EqSort):
        s = _unify(s1.cat, s2.cat, s)
        s = _unify(s1.src, s2.src, s)
        s = _unify(s1.dst, s2.dst, s)
        s = _unify(s1.lhs, s2.lhs, s)
        return _unify(s1.rhs, s2.rhs, s)
    if isinstance(s1, MapSort) and isinstance(s2, MapSort):
        s = unify_sort(s1.arg, s2.arg, s)
        return unify_sort(s1.res, s2.res, s)
    raise SortMismatch(f"{pretty_sort(s1)} vs {pretty_sort(s2)}")
