"""Composition normal form for morphism terms.

A morphism normalizes to a flat, ordered list of atomic factors with all
identities removed, so that two morphisms equal modulo associativity and
the identity laws normalize to the same factor list.
"""

from __future__ import annotations

from dataclasses import dataclass

from .terms import (
    Comp,
    FMor,
    Id,
    MorSort,
    Sort,
    SortError,
    Term,
    pretty,
    sort_of,
)


@dataclass(frozen=True)
class NormalMor:
    """A morphism in composition normal form.

    An empty factor tuple is the identity on `src` (== `dst`); consecutive
    factors compose, i.e. dst(factors[i]) == src(factors[i+1]).
    """

    cat: Term
    src: Term
    dst: Term
    factors: tuple[Term, ...]

    def __str__(self) -> str:
        if not self.factors:
            return f"I[{pretty(self.src)}]"
        return " . ".join(pretty(f) for f in self.factors)


def normalize(t: Term, ctx=None, functor_laws: bool = False) -> NormalMor:
    """Flatten compositions and drop identities.

    With `functor_laws` set, functor application distributes over
    composition and absorbs identities; by default a functor applied to a
    composite stays a single atomic factor.
    """
    s = sort_of(t, ctx)
    if not isinstance(s, MorSort):
        raise SortError(f"cannot normalize non-morphism {pretty(t)}")
    factors = tuple(_expand(t, functor_laws))
    return NormalMor(s.cat, s.src, s.dst, factors)


def _expand(t: Term, laws: bool) -> list[Term]:
    if isinstance(t, Comp):
        return _expand(t.first, laws) + _expand(t.second, laws)
    if isinstance(t, Id):
        return []
    if laws and isinstance(t, FMor):
        return [FMor(t.functor, f) for f in _expand(t.mor, laws)]
    return [t]


def fold(nm: NormalMor) -> Term:
    """Left-associated composition of the factors (identity when empty)."""
    if not nm.factors:
        return Id(nm.src)
    t = nm.factors[0]
    for f in nm.factors[1:]:
        t = Comp(t, f)
    return t


def fold_factors(factors, src: Term) -> Term:
    if not factors:
        return Id(src)
    t = factors[0]
    for f in factors[1:]:
        t = Comp(t, f)
    return t


def validate_normal(nm: NormalMor, ctx=None) -> None:
    """Check the NormalMor invariants; raises SortError on violation."""
    at = nm.src
    for f in nm.factors:
        if isinstance(f, (Comp, Id)):
            raise SortError(f"non-atomic factor {pretty(f)}")
        fs = sort_of(f, ctx)
        if not isinstance(fs, MorSort) or fs.cat != nm.cat:
            raise SortError(f"factor {pretty(f)} is not a morphism of the category")
        if fs.src != at:
            raise SortError(f"factor chain broken at {pretty(f)}")
        at = fs.dst
    if at != nm.dst:
        raise SortError("factor chain does not reach dst")
