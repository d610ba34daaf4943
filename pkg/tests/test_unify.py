import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diagramchase.ctxparse import parse_context
from diagramchase.normal import fold_factors, normalize
from diagramchase.terms import (
    Comp,
    Const,
    FObj,
    Id,
    Meta,
    MorSort,
    ObjSort,
    pretty,
)
from diagramchase.unify import (
    Clash,
    FactorMismatch,
    OccursCheck,
    Subst,
    UnifyError,
    substitute,
    unify,
)


class TestUnifyExamples:
    def test_flex_rigid(self, demo_ctx):
        m1 = demo_ctx.lookup_const("m1")
        x = demo_ctx.fresh_meta(m1.sort, hint="m1q")
        s = unify(x, m1)
        assert substitute(x, s) == m1

    def test_functor_object_decomposition(self, fctx_ctx):
        F = fctx_ctx.lookup_const("F")
        a = fctx_ctx.lookup_const("a")
        C = fctx_ctx.lookup_const("C")
        from diagramchase.terms import CatSort, FunctSort

        mF = fctx_ctx.fresh_meta(FunctSort(C, C), hint="F")
        mx = fctx_ctx.fresh_meta(ObjSort(C), hint="x")
        s = unify(FObj(mF, mx), FObj(F, a))
        assert substitute(mF, s) == F
        assert substitute(mx, s) == a

    def test_occurs_check(self, fctx_ctx):
        F = fctx_ctx.lookup_const("F")
        C = fctx_ctx.lookup_const("C")
        mx = fctx_ctx.fresh_meta(ObjSort(C), hint="x")
        with pytest.raises(OccursCheck):
            unify(mx, FObj(F, mx))

    def test_constant_clash(self, demo_ctx):
        with pytest.raises(UnifyError):
            unify(demo_ctx.lookup_const("m1"), demo_ctx.lookup_const("m2"))

    def test_sort_clash(self, demo_ctx):
        # morphisms with different endpoints never unify
        with pytest.raises(UnifyError):
            unify(demo_ctx.lookup_const("m1"), demo_ctx.lookup_const("m''"))

    def test_modulo_identities(self, demo_ctx):
        m1 = demo_ctx.lookup_const("m1")
        m2 = demo_ctx.lookup_const("m2")
        b = demo_ctx.lookup_const("b")
        s = unify(Comp(Id(b), m1), m1)
        assert s == Subst()
        with pytest.raises(UnifyError):
            unify(Comp(Id(b), m1), m2)

    def test_meta_against_composite(self, demo_ctx):
        m1 = demo_ctx.lookup_const("m'")
        m3 = demo_ctx.lookup_const("m3")
        sort = MorSort(
            demo_ctx.lookup_const("C"),
            demo_ctx.lookup_const("a"),
            demo_ctx.lookup_const("c"),
        )
        e = demo_ctx.fresh_meta(sort, hint="e")
        s = unify(e, Comp(m1, m3))
        assert normalize(substitute(e, s)) == normalize(Comp(m1, m3))

    def test_rigid_length_mismatch(self, demo_ctx):
        m1 = demo_ctx.lookup_const("m1")
        b = demo_ctx.lookup_const("b")
        with pytest.raises(UnifyError):
            unify(m1, Id(b))

    def test_substitute_empty(self, demo_ctx):
        m1 = demo_ctx.lookup_const("m1")
        assert substitute(m1, Subst()) == m1

    def test_idempotent_binding(self, demo_ctx):
        m1 = demo_ctx.lookup_const("m1")
        x = demo_ctx.fresh_meta(m1.sort, hint="x")
        y = demo_ctx.fresh_meta(m1.sort, hint="y")
        s = unify(x, y)
        s = unify(y, m1, s)
        assert substitute(x, s) == m1
        # applying twice equals applying once
        assert substitute(substitute(x, s), s) == substitute(x, s)


# ---------------------------------------------------------------------------
# Soundness: every returned unifier really identifies the sides
# ---------------------------------------------------------------------------


def _loop_ctx():
    return parse_context("category C\nobject z : C\nmorphism c1 c2 c3 c4 c5 : z -> z in C\n")


_CTX = _loop_ctx()
_Z = _CTX.lookup_const("z")
_CONSTS = [_CTX.lookup_const(f"c{i}") for i in range(1, 6)]
_LOOP = MorSort(_CTX.lookup_const("C"), _Z, _Z)
_METAS = [Meta(900 + i, _LOOP, hint=f"M{i}") for i in range(3)]


def _tuples(atoms, max_len):
    for n in range(max_len + 1):
        yield from itertools.product(atoms, repeat=n)


def _term_of(factors):
    return fold_factors(list(factors), _Z)


@given(
    left=st.lists(st.sampled_from(_CONSTS[:2] + _METAS), max_size=3),
    right=st.lists(st.sampled_from(_CONSTS[:2] + _METAS), max_size=3),
)
@settings(max_examples=400, deadline=None)
def test_unify_soundness(left, right):
    t1 = _term_of(left)
    t2 = _term_of(right)
    try:
        s = unify(t1, t2)
    except UnifyError:
        return
    assert normalize(substitute(t1, s)) == normalize(substitute(t2, s))


# ---------------------------------------------------------------------------
# Generality: any enumerated unifier factors through the returned one
# ---------------------------------------------------------------------------


def _ground_candidates():
    # Candidate instantiations stay within the rigid positional discipline:
    # one atomic factor per meta, drawn from the five-constant signature.
    # (Composite or identity instantiations belong to word unification,
    # where no deterministic first-order unifier has a most general answer.)
    return [[c] for c in _CONSTS]


def _seq_matches(pat, tgt, env):
    """All ways to instantiate the metas of `pat` (factor sub-tuples,
    possibly empty) so that it becomes exactly `tgt`."""
    if not pat:
        if not tgt:
            yield env
        return
    head, rest = pat[0], list(pat[1:])
    if isinstance(head, Meta):
        if head.uid in env:
            bound = env[head.uid]
            if tuple(tgt[: len(bound)]) == bound:
                yield from _seq_matches(rest, tgt[len(bound) :], env)
        else:
            for k in range(len(tgt) + 1):
                env2 = dict(env)
                env2[head.uid] = tuple(tgt[:k])
                yield from _seq_matches(rest, tgt[k:], env2)
    else:
        if tgt and tgt[0] == head:
            yield from _seq_matches(rest, tgt[1:], env)


def _factors_through(s, sigma, uids, meta_by_uid):
    """Is there one rho with rho(s(M)) == sigma(M) for every meta M?"""
    envs = [dict()]
    for uid in uids:
        general = list(normalize(s.term(meta_by_uid[uid])).factors)
        specific = list(normalize(sigma.term(meta_by_uid[uid])).factors)
        envs = [
            e2 for e in envs for e2 in _seq_matches(general, specific, e)
        ]
        if not envs:
            return False
    return True


def test_unify_generality_enumerated():
    """On the <=3-meta, <=2-factor family over the 5-constant signature,
    every ground unifier factors through the substitution unify returns."""
    atoms = _CONSTS[:3] + _METAS
    pool = [list(t) for t in _tuples(atoms, 2)]
    candidates = _ground_candidates()
    checked = 0
    for left in pool:
        for right in pool:
            metas = [a for a in left + right if isinstance(a, Meta)]
            if not metas:
                continue
            t1 = _term_of(left)
            t2 = _term_of(right)
            try:
                s = unify(t1, t2)
            except UnifyError:
                continue
            uids = sorted({m.uid for m in metas})
            meta_by_uid = {m.uid: m for m in metas}
            for assignment in itertools.product(candidates, repeat=len(uids)):
                sigma = Subst()
                for uid, factors in zip(uids, assignment):
                    sigma = sigma.bind(meta_by_uid[uid], _term_of(factors))
                if normalize(sigma.term(t1)) != normalize(sigma.term(t2)):
                    continue
                assert _factors_through(s, sigma, uids, meta_by_uid), (
                    f"{pretty(t1)} =? {pretty(t2)}: unifier "
                    f"{sigma!r} does not factor through {s!r}"
                )
                checked += 1
    assert checked > 100
