"""Typed term language for categorical expressions.

Terms describe categories, objects, morphisms, functors and equalities.
Every term has a unique sort computable by `sort_of`; morphisms compose
diagrammatically (`Comp(f, g)` means "f then g").
"""

from __future__ import annotations

from dataclasses import dataclass, field


class TermError(Exception):
    """Base class for sorting and typing failures."""


class UndeclaredConstant(TermError):
    pass


class IllTypedComposition(TermError):
    pass


class IllTypedApplication(TermError):
    pass


class SortError(TermError):
    pass


# ---------------------------------------------------------------------------
# Sorts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Sort:
    pass


@dataclass(frozen=True)
class CatSort(Sort):
    """The sort of categories."""


@dataclass(frozen=True)
class ObjSort(Sort):
    """Objects of the category `cat`."""

    cat: "Term"


@dataclass(frozen=True)
class MorSort(Sort):
    """Morphisms src -> dst in `cat`; src and dst are object terms."""

    cat: "Term"
    src: "Term"
    dst: "Term"


@dataclass(frozen=True)
class FunctSort(Sort):
    """Functors from `src_cat` to `dst_cat`."""

    src_cat: "Term"
    dst_cat: "Term"


@dataclass(frozen=True)
class EqSort(Sort):
    """Equalities between two parallel morphisms lhs and rhs."""

    cat: "Term"
    src: "Term"
    dst: "Term"
    lhs: "Term"
    rhs: "Term"


@dataclass(frozen=True)
class MapSort(Sort):
    """Opaque maps between categorical sorts, e.g. (a -> b) => (a -> c)."""

    arg: Sort
    res: Sort


CATEGORICAL_SORTS = (CatSort, ObjSort, MorSort, FunctSort, EqSort)


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Term:
    pass


@dataclass(frozen=True)
class Const(Term):
    """A declared constant; its sort is fixed at declaration."""

    name: str
    sort: Sort


@dataclass(frozen=True)
class Meta(Term):
    """A metavariable (existential) of known sort.

    `uid` identifies the meta; `hint` only affects printing.
    """

    uid: int
    sort: Sort
    hint: str = field(default="", compare=False)


@dataclass(frozen=True)
class Comp(Term):
    """Diagrammatic composition: `first` applies before `second`."""

    first: Term
    second: Term


@dataclass(frozen=True)
class Id(Term):
    """Identity morphism on `obj`."""

    obj: Term


@dataclass(frozen=True)
class FObj(Term):
    """Functor applied to an object."""

    functor: Term
    obj: Term


@dataclass(frozen=True)
class FMor(Term):
    """Functor applied to a morphism."""

    functor: Term
    mor: Term


@dataclass(frozen=True)
class App(Term):
    """Application of an opaque map (MapSort constant or meta)."""

    fn: Term
    arg: Term


# ---------------------------------------------------------------------------
# Sorting
# ---------------------------------------------------------------------------


def sort_of(t: Term, ctx=None) -> Sort:
    """Compute the unique sort of `t`.

    When `ctx` is given (any object with a `lookup_const(name)` method),
    constants must be declared in it with a matching sort.
    """
    if isinstance(t, Const):
        if ctx is not None:
            declared = ctx.lookup_const(t.name)
            if declared is None:
                raise UndeclaredConstant(f"constant {t.name!r} is not declared")
        return t.sort
    if isinstance(t, Meta):
        return t.sort
    if isinstance(t, Comp):
        s1 = sort_of(t.first, ctx)
        s2 = sort_of(t.second, ctx)
        if not isinstance(s1, MorSort) or not isinstance(s2, MorSort):
            raise IllTypedComposition("composition of non-morphisms")
        if s1.cat != s2.cat:
            raise IllTypedComposition("composition across categories")
        if s1.dst != s2.src:
            raise IllTypedComposition(
                f"endpoint mismatch: {pretty(s1.dst)} != {pretty(s2.src)}"
            )
        return MorSort(s1.cat, s1.src, s2.dst)
    if isinstance(t, Id):
        s = sort_of(t.obj, ctx)
        if not isinstance(s, ObjSort):
            raise SortError("identity on a non-object")
        return MorSort(s.cat, t.obj, t.obj)
    if isinstance(t, FObj):
        sf = sort_of(t.functor, ctx)
        so = sort_of(t.obj, ctx)
        if not isinstance(sf, FunctSort) or not isinstance(so, ObjSort):
            raise IllTypedApplication("functor applied to a non-object")
        if sf.src_cat != so.cat:
            raise IllTypedApplication("functor applied outside its source category")
        return ObjSort(sf.dst_cat)
    if isinstance(t, FMor):
        sf = sort_of(t.functor, ctx)
        sm = sort_of(t.mor, ctx)
        if not isinstance(sf, FunctSort) or not isinstance(sm, MorSort):
            raise IllTypedApplication("functor applied to a non-morphism")
        if sf.src_cat != sm.cat:
            raise IllTypedApplication("functor applied outside its source category")
        return MorSort(
            sf.dst_cat, FObj(t.functor, sm.src), FObj(t.functor, sm.dst)
        )
    if isinstance(t, App):
        sfn = sort_of(t.fn, ctx)
        sarg = sort_of(t.arg, ctx)
        if not isinstance(sfn, MapSort):
            raise IllTypedApplication("application head is not a map")
        if sfn.arg != sarg:
            raise IllTypedApplication(
                f"argument sort mismatch: expected {pretty_sort(sfn.arg)},"
                f" got {pretty_sort(sarg)}"
            )
        return sfn.res
    raise SortError(f"unknown term {t!r}")


def eq_statement(lhs: Term, rhs: Term, ctx=None) -> EqSort:
    """Build the EqSort statement `lhs = rhs`, checking the sides are parallel."""
    sl = sort_of(lhs, ctx)
    sr = sort_of(rhs, ctx)
    if not isinstance(sl, MorSort) or not isinstance(sr, MorSort):
        raise SortError("equality between non-morphisms")
    if sl != sr:
        raise SortError(
            f"equality between non-parallel morphisms:"
            f" {pretty_sort(sl)} vs {pretty_sort(sr)}"
        )
    return EqSort(sl.cat, sl.src, sl.dst, lhs, rhs)


# ---------------------------------------------------------------------------
# Traversal helpers
# ---------------------------------------------------------------------------


def subterms(t: Term):
    """Yield `t` and every direct or nested subterm, including inside sorts."""
    yield t
    if isinstance(t, (Const, Meta)):
        yield from _sort_terms(t.sort)
    elif isinstance(t, Comp):
        yield from subterms(t.first)
        yield from subterms(t.second)
    elif isinstance(t, Id):
        yield from subterms(t.obj)
    elif isinstance(t, FObj):
        yield from subterms(t.functor)
        yield from subterms(t.obj)
    elif isinstance(t, FMor):
        yield from subterms(t.functor)
        yield from subterms(t.mor)
    elif isinstance(t, App):
        yield from subterms(t.fn)
        yield from subterms(t.arg)


def _sort_terms(s: Sort):
    if isinstance(s, ObjSort):
        yield from subterms(s.cat)
    elif isinstance(s, MorSort):
        yield from subterms(s.cat)
        yield from subterms(s.src)
        yield from subterms(s.dst)
    elif isinstance(s, FunctSort):
        yield from subterms(s.src_cat)
        yield from subterms(s.dst_cat)
    elif isinstance(s, EqSort):
        yield from subterms(s.cat)
        yield from subterms(s.src)
        yield from subterms(s.dst)
        yield from subterms(s.lhs)
        yield from subterms(s.rhs)
    elif isinstance(s, MapSort):
        yield from _sort_terms(s.arg)
        yield from _sort_terms(s.res)


def metas_of(t: Term) -> set[int]:
    """Uids of every metavariable occurring in `t`, including inside sorts."""
    return {u.uid for u in subterms(t) if isinstance(u, Meta)}


def metas_of_sort(s: Sort) -> set[int]:
    return {u.uid for u in _sort_terms(s) if isinstance(u, Meta)}


def occurs(uid: int, t: Term) -> bool:
    return any(isinstance(u, Meta) and u.uid == uid for u in subterms(t))


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------


def pretty(t: Term) -> str:
    """Canonical, re-parseable rendering of a term."""
    if isinstance(t, Const):
        return t.name
    if isinstance(t, Meta):
        return "?" + (t.hint or f"m{t.uid}")
    if isinstance(t, Comp):
        return f"{_comp_operand(t.first)} . {_comp_operand(t.second)}"
    if isinstance(t, Id):
        return f"I[{pretty(t.obj)}]"
    if isinstance(t, FObj):
        return f"{_atom(t.functor)} {_atom(t.obj)}"
    if isinstance(t, FMor):
        return f"{_atom(t.functor)} {_atom(t.mor)}"
    if isinstance(t, App):
        return f"{_app_head(t.fn)} {_atom(t.arg)}"
    return repr(t)


def _comp_operand(t: Term) -> str:
    # `.` is flat and associative, no parens needed between comps
    return pretty(t)


def _atom(t: Term) -> str:
    s = pretty(t)
    if isinstance(t, (Comp, FObj, FMor, App)):
        return f"({s})"
    return s


def _app_head(t: Term) -> str:
    # nested application heads stay unparenthesized: `fctx F p`
    if isinstance(t, App):
        return f"{_app_head(t.fn)} {_atom(t.arg)}"
    return _atom(t)


def pretty_sort(s: Sort) -> str:
    if isinstance(s, CatSort):
        return "category"
    if isinstance(s, ObjSort):
        return pretty(s.cat)
    if isinstance(s, MorSort):
        return f"{pretty(s.src)} -> {pretty(s.dst)} in {pretty(s.cat)}"
    if isinstance(s, FunctSort):
        return f"{pretty(s.src_cat)} => {pretty(s.dst_cat)}"
    if isinstance(s, EqSort):
        return f"{pretty(s.lhs)} = {pretty(s.rhs)}"
    if isinstance(s, MapSort):
        return f"({pretty_sort(s.arg)}) => ({pretty_sort(s.res)})"
    return repr(s)
