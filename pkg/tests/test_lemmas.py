import itertools

import pytest

from diagramchase.context import Binder, LemmaStatement
from diagramchase.ctxparse import parse_context
from diagramchase.graph import extract_diagram
from diagramchase.lemmas import (
    MatchSession,
    NotAdmissible,
    Refused,
    admissible,
    apply_match,
    match_objects,
    pattern_of,
    unmatch_objects,
)
from diagramchase.session import Session
from diagramchase.terms import EqSort, MapSort, Meta, MorSort, pretty
from diagramchase.trace import LemmaInstance, check_trace

from conftest import FCTX_TEXT


class TestAdmissible:
    def test_demo_lemma(self, demo_ctx):
        ok, reason = admissible(demo_ctx.lemmas["Hf"])
        assert ok, reason

    def test_fctx(self, fctx_ctx):
        ok, reason = admissible(fctx_ctx.lemmas["fctx"])
        assert ok, reason

    def test_map_binder_rejected(self, demo_ctx):
        f = demo_ctx.lookup_const("f")
        meta = demo_ctx.fresh_meta(f.sort, hint="g")
        m1 = demo_ctx.lookup_const("m1")
        bad = LemmaStatement(
            "bad", (Binder("g", meta, "forall"),), m1, m1
        )
        ok, reason = admissible(bad)
        assert not ok and "UnsupportedSort" in reason


class TestPatternOf:
    def test_demo_lemma_pattern(self, demo_ctx):
        pat = pattern_of(demo_ctx, demo_ctx.lemmas["Hf"])
        d = pat.diagram
        assert sorted(d.nodes) == ["a", "b", "c"]
        labels = sorted(e.label for e in d.edges.values())
        assert labels == ["?m", "f ?m", "m1"]
        face = d.faces["Hf"]
        lhs_labels = [d.edges[e].label for e in face.left]
        rhs_labels = [d.edges[e].label for e in face.right]
        assert lhs_labels == ["f ?m"]
        assert rhs_labels == ["?m", "m1"]

    def test_fctx_pattern(self, fctx_ctx):
        pat = pattern_of(fctx_ctx, fctx_ctx.lemmas["fctx"])
        d = pat.diagram
        assert sorted(n.label for n in d.nodes.values()) == [
            "?G ?x",
            "?G ?y",
            "?x",
            "?y",
        ]
        assert sorted(e.label for e in d.edges.values()) == [
            "?G ?f1",
            "?G ?f2",
            "?f1",
            "?f2",
        ]
        assert sorted(d.faces) == ["fctx", "p"]
        assert pretty(pat.facts["p"].term) == "?p"

    def test_fresh_metas_per_call(self, fctx_ctx):
        p1 = pattern_of(fctx_ctx, fctx_ctx.lemmas["fctx"])
        p2 = pattern_of(fctx_ctx, fctx_ctx.lemmas["fctx"])
        assert not ({m.uid for m in p1.forall_metas} & {m.uid for m in p2.forall_metas})

    def test_exists_projection(self):
        ctx = parse_context(
            "category C\nobject a : C\n"
            "lemma L : exists (e : a -> a in C), e = e\n"
        )
        pat = pattern_of(ctx, ctx.lemmas["L"])
        assert pat.skolems["e"].name == "pi0_L"
        assert any(e.label == "pi0_L" for e in pat.diagram.edges.values())


class TestMatching:
    def test_refused_on_sort_clash(self, demo_session):
        s = demo_session
        ms = s.lemma_open("Hf")
        with pytest.raises(Refused):
            s.lemma_match("mbc", "mcd")  # pattern m1 (b->c) vs goal m'' (c->d)
        assert ms.pairs == []

    def test_idempotent_rematch(self, fctx_session):
        s = fctx_session
        s.cmd_insert("edge", "m1")
        ms = s.lemma_open("fctx")
        s.lemma_match("mxy", "maFa")
        once = (list(ms.pairs), dict(ms.subst.mapping))
        s.lemma_match("mxy", "maFa")
        assert (list(ms.pairs), dict(ms.subst.mapping)) == once

    def test_unmatch_recomputes(self, fctx_session):
        s = fctx_session
        s.cmd_insert("edge", "m1")
        s.cmd_insert("edge", "m2")
        ms = s.lemma_open("fctx")
        s.lemma_match("mxy", "maFa")
        s.lemma_match("mxy_0", "maFa_0")
        s.lemma_unmatch("mxy_0", "maFa_0")
        assert len(ms.pairs) == 1
        # ?f2 no longer bound
        origin = {v: k for k, v in ms.pattern.meta_origin.items()}
        assert origin["f2"] not in ms.subst.mapping

    def test_progressive_refinement(self, fctx_session):
        """Annotations get more precise as more objects are matched."""
        s = fctx_session
        s.cmd_insert("edge", "m1")
        ms = s.lemma_open("fctx")
        origin = {v: k for k, v in ms.pattern.meta_origin.items()}
        s.lemma_match("y", "Fa")
        assert pretty(ms.subst.term(Meta(origin["y"], None or ms.pattern.forall_metas[0].sort))) != "?y"
        s.lemma_match("mxy", "maFa")
        assert origin["x"] in ms.subst.mapping  # deduced, never matched directly


def _fctx_expected_unifier(ms):
    origin = {v: k for k, v in ms.pattern.meta_origin.items()}
    return {
        name: pretty(ms.subst.mapping[origin[name]])
        for name in ("x", "y", "f1", "f2", "G")
        if origin[name] in ms.subst.mapping
    }


class TestApply:
    def test_backward_from_figure(self, fctx_session):
        s = fctx_session
        s.cmd_insert("edge", "m1")
        s.cmd_insert("edge", "m2")
        ms = s.lemma_open("fctx")
        s.lemma_match("y", "Fa")
        s.lemma_match("mxy", "maFa")
        s.lemma_match("mxy_0", "maFa_0")
        s.lemma_match("fctx", "Goal-0")
        assert _fctx_expected_unifier(ms) == {
            "x": "a",
            "y": "F a",
            "f1": "m1",
            "f2": "m2",
            "G": "F",
        }
        new_goals = s.lemma_apply()
        assert len(new_goals) == 1
        sub = s.ctx.fact(new_goals[0])
        assert pretty(sub.stmt.lhs) == "m1" and pretty(sub.stmt.rhs) == "m2"
        face = s.diagram.faces["Goal-0"]
        assert face.label == "fctx F ?p"
        assert [s.diagram.edges[e].label for e in face.left] == ["F m1"]
        assert [s.diagram.edges[e].label for e in face.right] == ["F m2"]
        tr = s.ctx.proof_of("Goal-0")
        assert isinstance(tr, LemmaInstance)
        s.audit()

    def test_pair_order_invariance(self):
        pairs = [("y", "Fa"), ("mxy", "maFa"), ("mxy_0", "maFa_0"), ("fctx", "Goal-0")]
        outcomes = []
        for perm in itertools.permutations(pairs):
            ctx = parse_context(FCTX_TEXT)
            s = Session(ctx)
            s.cmd_insert("edge", "m1")
            s.cmd_insert("edge", "m2")
            ms = s.lemma_open("fctx")
            for p, g in perm:
                s.lemma_match(p, g)
            outcomes.append(
                (
                    _fctx_expected_unifier(ms),
                    sorted(
                        (e.label, s.diagram.nodes[e.src].label)
                        for e in s.diagram.edges.values()
                    ),
                )
            )
        assert all(o == outcomes[0] for o in outcomes)

    def test_apply_zero_pairs_disjoint_union(self, fctx_session):
        s = fctx_session
        before_nodes = len(s.diagram.nodes)
        before_edges = len(s.diagram.edges)
        s.lemma_open("fctx")
        new_goals = s.lemma_apply()
        # pattern dropped in fresh components, premise becomes a goal
        assert len(s.diagram.nodes) == before_nodes + 4
        assert len(s.diagram.edges) == before_edges + 4
        assert len(new_goals) == 1
        s.audit()

    def test_forward_reasoning(self):
        ctx = parse_context(
            "category C\nobject a : C\nfunctor F : C => C\n"
            "morphism m1 m2 : a -> F a in C\nhypothesis p : m1 = m2\n"
            "lemma fctx : forall (G : C => C) {x y : C} {f1 f2 : x -> y in C}"
            " (q : f1 = f2), G f1 = G f2\n"
            "goal Goal-0 : F m1 = F m2\n"
        )
        s = Session(ctx)
        s.lemma_open("fctx")
        s.lemma_match("q", "p")
        s.lemma_match("mGxGy", "mFaFFa")
        new_goals = s.lemma_apply()
        assert new_goals == []
        derived = [f for f in ctx.facts.values() if f.kind == "derived"]
        assert len(derived) == 1 and ctx.established(derived[0].name)
        s.cmd_solve("Goal-0")
        assert ctx.established("Goal-0")

    def test_exact_application_adds_no_goals(self):
        ctx = parse_context(
            "category C\nobject a : C\nfunctor F : C => C\n"
            "morphism m1 m2 : a -> F a in C\nhypothesis p : m1 = m2\n"
            "lemma fctx : forall (G : C => C) {x y : C} {f1 f2 : x -> y in C}"
            " (q : f1 = f2), G f1 = G f2\n"
            "goal Goal-0 : F m1 = F m2\n"
        )
        s = Session(ctx)
        s.lemma_open("fctx")
        s.lemma_match("q", "p")
        s.lemma_match("fctx", "Goal-0")
        assert s.lemma_apply() == []
        assert ctx.established("Goal-0")

    def test_applied_faces_have_checkable_traces(self, demo_session):
        s = demo_session
        from diagramchase.script import parse_script
        from diagramchase.session import execute_command

        with open("corpus/demo.diag") as fh:
            cmds = parse_script(fh.read())
        for cmd in cmds[:7]:
            execute_command(s, cmd)
        p0 = s.ctx.fact("p0")
        assert p0 is not None and isinstance(p0.trace, LemmaInstance)
        assert p0.trace == LemmaInstance("Hf", (s.ctx.lookup_const("m'"),))
        assert check_trace(p0.trace, p0.stmt, s.ctx).ok


class TestPushoutOracle:
    """apply computes exactly the quotient of the disjoint union."""

    def _oracle(self, goal_d, pat_d, pairs, subst, ctx):
        """Quotient of the disjoint union by the congruence generated by
        the matched pairs, closed over edge endpoints, inside the diagram
        model where two nodes carrying the same term are one node."""

        def at(term):
            return subst.term(ctx.subst.term(term))

        # nodes: the model is term-keyed, so classes are distinct terms
        node_terms = {pretty(at(n.term)) for n in goal_d.nodes.values()}
        node_terms |= {pretty(at(n.term)) for n in pat_d.nodes.values()}

        # edges: start from the goal's edges, then import each pattern edge
        # unless a pair identifies it or an equal edge already exists
        matched_p_edges = {p for kind, p, g in pairs if kind == "edge"}
        edges = [
            (pretty(at(e.term)), pretty(at(goal_d.nodes[e.src].term)))
            for e in goal_d.edges.values()
        ]
        for e in pat_d.edges.values():
            if e.name in matched_p_edges:
                continue
            key = (pretty(at(e.term)), pretty(at(pat_d.nodes[e.src].term)))
            if key not in edges:
                edges.append(key)
        return sorted(node_terms), sorted(edges)

    def test_structure_matches_quotient(self, fctx_session):
        s = fctx_session
        s.cmd_insert("edge", "m1")
        s.cmd_insert("edge", "m2")
        ms = s.lemma_open("fctx")
        s.lemma_match("y", "Fa")
        s.lemma_match("mxy", "maFa")
        s.lemma_match("mxy_0", "maFa_0")
        s.lemma_match("fctx", "Goal-0")
        goal_d = s.diagram.clone()
        pat_d = ms.pattern.diagram.clone()
        pairs = list(ms.pairs)
        subst = ms.subst.copy()
        node_terms, edge_keys = self._oracle(goal_d, pat_d, pairs, subst, s.ctx)
        s.lemma_apply()
        got_nodes = sorted(n.label for n in s.diagram.nodes.values())
        assert got_nodes == node_terms
        got_edges = sorted(
            (e.label, s.diagram.nodes[e.src].label) for e in s.diagram.edges.values()
        )
        assert got_edges == edge_keys
        # injections agree on matched objects: every matched pattern object
        # ended up at its goal partner's term
        for kind, p, g in pairs:
            if kind == "node":
                assert subst.term(pat_d.nodes[p].term) == s.diagram.nodes[g].term
            elif kind == "edge":
                assert subst.term(pat_d.edges[p].term) == s.diagram.edges[g].term

    def test_quotient_on_random_small_instances(self):
        """Brute-force quotient equality on a family of small matchings."""
        import random

        rng = random.Random(7)
        for trial in range(20):
            ctx = parse_context(FCTX_TEXT)
            s = Session(ctx)
            s.cmd_insert("edge", "m1")
            s.cmd_insert("edge", "m2")
            ms = s.lemma_open("fctx")
            options = [("y", "Fa"), ("mxy", "maFa"), ("mxy_0", "maFa_0"), ("fctx", "Goal-0")]
            chosen = [o for o in options if rng.random() < 0.7]
            for p, g in chosen:
                s.lemma_match(p, g)
            goal_d = s.diagram.clone()
            pat_d = ms.pattern.diagram.clone()
            pairs = list(ms.pairs)
            subst = ms.subst.copy()
            node_terms, edge_keys = self._oracle(goal_d, pat_d, pairs, subst, s.ctx)
            s.lemma_apply()
            got = sorted(n.label for n in s.diagram.nodes.values())
            assert got == node_terms, (trial, chosen)
            got_edges = sorted(
                (e.label, s.diagram.nodes[e.src].label)
                for e in s.diagram.edges.values()
            )
            assert got_edges == edge_keys, (trial, chosen)
            s.audit()
