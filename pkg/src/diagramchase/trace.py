"""Checkable equality proofs.

A trace is a small tree whose leaves cite reflexivity, an established
face, or a lemma instance, and whose inner nodes apply symmetry,
transitivity, congruence or a normalization step. The checker recomputes
every node's conclusion bottom-up and accepts only locally valid trees;
it is the only component trusted to validate proofs.
"""

from __future__ import annotations

from dataclasses import dataclass

from .normal import NormalMor, normalize, validate_normal
from .terms import (
    Const,
    EqSort,
    Meta,
    Term,
    TermError,
    pretty,
    pretty_sort,
    sort_of,
)
from .unify import Subst


@dataclass(frozen=True)
class Trace:
    pass


@dataclass(frozen=True)
class Refl(Trace):
    mor: Term


@dataclass(frozen=True)
class Hypothesis(Trace):
    """Cites an established face (a hypothesis or a previously proved goal)."""

    face: str


@dataclass(frozen=True)
class LemmaInstance(Trace):
    """A lemma applied to one argument per universal binder, in order."""

    lemma: str
    args: tuple[Term, ...]


@dataclass(frozen=True)
class Sym(Trace):
    inner: Trace


@dataclass(frozen=True)
class Trans(Trace):
    first: Trace
    second: Trace


@dataclass(frozen=True)
class CongLeft(Trace):
    prefix: NormalMor
    inner: Trace


@dataclass(frozen=True)
class CongRight(Trace):
    inner: Trace
    suffix: NormalMor


@dataclass(frozen=True)
class NormStep(Trace):
    """States that `source` normalizes to exactly `target`."""

    source: Term
    target: NormalMor


@dataclass
class CheckResult:
    ok: bool
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.ok


class InvalidTrace(Exception):
    pass


def check_trace(tr: Trace, claimed: EqSort, ctx) -> CheckResult:
    """Accept iff `tr` proves `claimed` from the faces and lemmas of `ctx`.

    `claimed` may mention metavariables already resolved in the context's
    accumulated substitution. The first invalid node aborts the check.
    """
    try:
        lhs, rhs = _conclude(tr, ctx, frozenset())
    except InvalidTrace as e:
        return CheckResult(False, str(e))
    except TermError as e:
        return CheckResult(False, f"ill-sorted trace: {e}")
    try:
        stmt = ctx.subst.sort(claimed)
        want_l = normalize(stmt.lhs)
        want_r = normalize(stmt.rhs)
    except TermError as e:
        return CheckResult(False, f"ill-sorted claim: {e}")
    if (lhs, rhs) != (want_l, want_r):
        return CheckResult(
            False,
            f"trace concludes {lhs} = {rhs}, claim is {want_l} = {want_r}",
        )
    return CheckResult(True)


def _conclude(tr: Trace, ctx, seen: frozenset) -> tuple[NormalMor, NormalMor]:
    if isinstance(tr, Refl):
        nm = normalize(ctx.subst.term(tr.mor))
        return nm, nm
    if isinstance(tr, Hypothesis):
        return _conclude_face(tr.face, ctx, seen)
    if isinstance(tr, LemmaInstance):
        return _conclude_instance(tr, ctx, seen)
    if isinstance(tr, Sym):
        l, r = _conclude(tr.inner, ctx, seen)
        return r, l
    if isinstance(tr, Trans):
        l1, r1 = _conclude(tr.first, ctx, seen)
        l2, r2 = _conclude(tr.second, ctx, seen)
        if r1 != l2:
            raise InvalidTrace(f"transitivity mismatch: {r1} vs {l2}")
        return l1, r2
    if isinstance(tr, CongLeft):
        pre = _subst_normal(tr.prefix, ctx.subst)
        validate_normal(pre)
        l, r = _conclude(tr.inner, ctx, seen)
        if pre.dst != l.src:
            raise InvalidTrace("congruence prefix does not meet the sides")
        return (
            NormalMor(l.cat, pre.src, l.dst, pre.factors + l.factors),
            NormalMor(r.cat, pre.src, r.dst, pre.factors + r.factors),
        )
    if isinstance(tr, CongRight):
        suf = _subst_normal(tr.suffix, ctx.subst)
        validate_normal(suf)
        l, r = _conclude(tr.inner, ctx, seen)
        if l.dst != suf.src:
            raise InvalidTrace("congruence suffix does not meet the sides")
        return (
            NormalMor(l.cat, l.src, suf.dst, l.factors + suf.factors),
            NormalMor(r.cat, r.src, suf.dst, r.factors + suf.factors),
        )
    if isinstance(tr, NormStep):
        got = normalize(ctx.subst.term(tr.source))
        want = _subst_normal(tr.target, ctx.subst)
        if got != want:
            raise InvalidTrace(f"{pretty(tr.source)} does not normalize to {want}")
        return got, want
    raise InvalidTrace(f"unknown trace node {tr!r}")


def _conclude_face(name: str, ctx, seen: frozenset) -> tuple[NormalMor, NormalMor]:
    if name in seen:
        raise InvalidTrace(f"circular use of face {name}")
    fact = ctx.fact(name)
    if fact is None:
        raise InvalidTrace(f"unknown face {name}")
    if fact.kind != "hypothesis":
        sub = ctx.proof_of(name)
        if sub is None:
            raise InvalidTrace(f"face {name} is not established")
        sl, sr = _conclude(sub, ctx, seen | {name})
        stmt = ctx.subst.sort(fact.stmt)
        if (sl, sr) != (normalize(stmt.lhs), normalize(stmt.rhs)):
            raise InvalidTrace(f"proof of face {name} concludes a different equality")
    stmt = ctx.subst.sort(fact.stmt)
    return normalize(stmt.lhs), normalize(stmt.rhs)


def _conclude_instance(
    tr: LemmaInstance, ctx, seen: frozenset
) -> tuple[NormalMor, NormalMor]:
    lemma = ctx.lemmas.get(tr.lemma)
    if lemma is None:
        raise InvalidTrace(f"unknown lemma {tr.lemma}")
    inst = Subst()
    args = list(tr.args)
    for k, binder in enumerate(lemma.binders):
        want = inst.sort(binder.meta.sort)
        if binder.quant == "forall":
            if not args:
                raise InvalidTrace(f"lemma {tr.lemma} applied to too few arguments")
            arg = ctx.subst.term(args.pop(0))
            if sort_of(arg) != ctx.subst.sort(want):
                raise InvalidTrace(
                    f"argument {pretty(arg)} does not have sort"
                    f" {pretty_sort(ctx.subst.sort(want))}"
                )
            if isinstance(want, EqSort):
                _justify_equality(arg, ctx.subst.sort(want), ctx, seen)
            inst = inst.bind(binder.meta, arg)
        else:
            skolem = ctx.skolem_const(lemma, k, inst)
            inst = inst.bind(binder.meta, skolem)
    if args:
        raise InvalidTrace(f"lemma {tr.lemma} applied to too many arguments")
    lhs = ctx.subst.term(inst.term(lemma.lhs))
    rhs = ctx.subst.term(inst.term(lemma.rhs))
    return normalize(lhs), normalize(rhs)


def _justify_equality(arg: Term, stmt: EqSort, ctx, seen: frozenset) -> None:
    """An equality argument must itself be established."""
    if isinstance(arg, Meta):
        sub = ctx.proofs.get(arg.uid)
        if sub is None:
            raise InvalidTrace(f"equality premise ?{arg.hint or arg.uid} unproved")
        key = f"?meta:{arg.uid}"
        if key in seen:
            raise InvalidTrace("circular equality premise")
        sl, sr = _conclude(sub, ctx, seen | {key})
        if (sl, sr) != (normalize(stmt.lhs), normalize(stmt.rhs)):
            raise InvalidTrace("premise proof concludes a different equality")
        return
    if isinstance(arg, Const):
        fact = ctx.fact(arg.name)
        if fact is not None:
            sl, sr = _conclude_face(arg.name, ctx, seen)
            if (sl, sr) != (normalize(stmt.lhs), normalize(stmt.rhs)):
                raise InvalidTrace(
                    f"face {arg.name} does not state the required premise"
                )
            return
    raise InvalidTrace(f"equality premise {pretty(arg)} has no justification")


def _subst_normal(nm: NormalMor, s: Subst) -> NormalMor:
    factors: list[Term] = []
    for f in nm.factors:
        factors.extend(normalize(s.term(f)).factors)
    return NormalMor(
        s.term(nm.cat), s.term(nm.src), s.term(nm.dst), tuple(factors)
    )


def substitute_trace(tr: Trace, s: Subst) -> Trace:
    """Apply a substitution through every term embedded in a trace."""
    if isinstance(tr, Refl):
        return Refl(s.term(tr.mor))
    if isinstance(tr, Hypothesis):
        return tr
    if isinstance(tr, LemmaInstance):
        return LemmaInstance(tr.lemma, tuple(s.term(a) for a in tr.args))
    if isinstance(tr, Sym):
        return Sym(substitute_trace(tr.inner, s))
    if isinstance(tr, Trans):
        return Trans(substitute_trace(tr.first, s), substitute_trace(tr.second, s))
    if isinstance(tr, CongLeft):
        return CongLeft(_subst_normal(tr.prefix, s), substitute_trace(tr.inner, s))
    if isinstance(tr, CongRight):
        return CongRight(substitute_trace(tr.inner, s), _subst_normal(tr.suffix, s))
    if isinstance(tr, NormStep):
        return NormStep(s.term(tr.source), _subst_normal(tr.target, s))
    return tr


def trace_to_data(tr: Trace):
    """A stable, JSON-compatible rendering used in serialized states."""
    if isinstance(tr, Refl):
        return ["refl", pretty(tr.mor)]
    if isinstance(tr, Hypothesis):
        return ["face", tr.face]
    if isinstance(tr, LemmaInstance):
        return ["lemma", tr.lemma, [pretty(a) for a in tr.args]]
    if isinstance(tr, Sym):
        return ["sym", trace_to_data(tr.inner)]
    if isinstance(tr, Trans):
        return ["trans", trace_to_data(tr.first), trace_to_data(tr.second)]
    if isinstance(tr, CongLeft):
        return ["congl", str(tr.prefix), trace_to_data(tr.inner)]
    if isinstance(tr, CongRight):
        return ["congr", trace_to_data(tr.inner), str(tr.suffix)]
    if isinstance(tr, NormStep):
        return ["norm", pretty(tr.source), str(tr.target)]
    return ["?"]
