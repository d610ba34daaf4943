"""Solver tests, including the independent path-rewriting oracle.

The oracle is a plain unidirectional breadth-first search over factor
tuples: apply every established face as a rewrite (both directions, every
position) and ask whether the goal's right side is reachable from its
left side within the budget. It shares nothing with the solver's
bidirectional implementation beyond the term types.
"""

import random

import pytest

from diagramchase.context import Context
from diagramchase.ctxparse import parse_context
from diagramchase.graph import extract_diagram
from diagramchase.normal import normalize
from diagramchase.session import Session
from diagramchase.solver import (
    FaceSpec,
    NonChainingSpecs,
    SolveFailure,
    UnknownEdge,
    decompose,
    parse_facespecs,
    print_facespecs,
    solve,
)
from diagramchase.terms import MorSort, sort_of
from diagramchase.trace import Hypothesis, Refl, Sym, Trans, check_trace


# ---------------------------------------------------------------------------
# Oracle
# ---------------------------------------------------------------------------


def oracle_solvable(ctx: Context, goal: str, depth: int) -> bool:
    fact = ctx.fact(goal)
    stmt = ctx.subst.sort(fact.stmt)
    start_nm = normalize(stmt.lhs)
    target = normalize(stmt.rhs).factors
    rules = []
    for other in ctx.facts.values():
        if other.name == goal or not ctx.established(other.name):
            continue
        st = ctx.subst.sort(other.stmt)
        l, r = normalize(st.lhs), normalize(st.rhs)
        if l == r:
            continue
        rules.append((l, r))
        rules.append((r, l))

    def boundary(state, i):
        if i == 0:
            return start_nm.src
        return sort_of(state[i - 1]).dst

    frontier = {start_nm.factors}
    seen = set(frontier)
    for _ in range(depth):
        if target in seen:
            return True
        nxt = set()
        for state in frontier:
            for lhs, rhs in rules:
                pat = lhs.factors
                for i in range(len(state) - len(pat) + 1):
                    if state[i : i + len(pat)] != pat:
                        continue
                    if not pat and boundary(state, i) != lhs.src:
                        continue
                    new = state[:i] + rhs.factors + state[i + len(pat) :]
                    if new not in seen:
                        nxt.add(new)
        seen |= nxt
        frontier = nxt
        if not frontier:
            break
    return target in seen


# ---------------------------------------------------------------------------
# Random instances
# ---------------------------------------------------------------------------


def random_instance(rng: random.Random) -> Context:
    """<= 4 nodes, <= 5 edges, <= 4 hypothesis faces and one goal."""
    ctx = Context()
    C = ctx.declare_category("C")
    n_nodes = rng.randint(2, 4)
    nodes = [ctx.declare_object(f"o{i}", C) for i in range(n_nodes)]
    n_edges = rng.randint(2, 5)
    edges = []
    for i in range(n_edges):
        src = rng.choice(nodes)
        dst = rng.choice(nodes)
        edges.append(ctx.declare_morphism(f"e{i}", C, src, dst))

    by_src = {}
    for e in edges:
        by_src.setdefault(e.sort.src, []).append(e)

    def paths_from(src, max_len):
        out = [(src, ())]
        frontier = [(src, ())]
        for _ in range(max_len):
            new = []
            for at, path in frontier:
                for e in by_src.get(at, []):
                    new.append((e.sort.dst, path + (e,)))
            out.extend(new)
            frontier = new
        return out

    def random_parallel_pair(distinct: bool = False):
        for _ in range(60):
            src = rng.choice(nodes)
            cands = paths_from(src, 3)
            a_dst, a = rng.choice(cands)
            parallel = [p for d, p in cands if d == a_dst]
            if distinct:
                parallel = [p for p in parallel if p != a]
            if not parallel:
                continue
            b = rng.choice(parallel)
            lhs = _fold(a, src)
            rhs = _fold(b, src)
            return lhs, rhs
        return None

    n_hyps = rng.randint(1, 4)
    made = 0
    k = 0
    while made < n_hyps and k < 40:
        k += 1
        pair = random_parallel_pair()
        if pair is None:
            break
        try:
            ctx.add_hypothesis(f"H{made}", *pair)
            made += 1
        except Exception:
            continue
    if rng.random() < 0.5 and made:
        pair = _rewritten_goal(ctx, rng)
        if pair is not None:
            ctx.add_goal(*pair, name="Goal-0")
            return ctx
    tries = 0
    while True:
        tries += 1
        pair = random_parallel_pair(distinct=tries < 30)
        if pair is None:
            ctx.add_goal(edges[0], edges[0], name="Goal-0")
            break
        try:
            ctx.add_goal(*pair, name="Goal-0")
            break
        except Exception:
            continue
    return ctx


def _rewritten_goal(ctx, rng):
    """A goal guaranteed reachable by a few hypothesis rewrites."""
    rules = []
    for fact in ctx.facts.values():
        l, r = normalize(fact.stmt.lhs), normalize(fact.stmt.rhs)
        rules.append((l, r))
        rules.append((r, l))
    if not rules:
        return None
    l0, _ = rng.choice(rules)
    state = l0.factors
    src = l0.src
    for _ in range(rng.randint(1, 3)):
        options = []
        for lhs, rhs in rules:
            pat = lhs.factors
            for i in range(len(state) - len(pat) + 1):
                if state[i : i + len(pat)] != pat:
                    continue
                if not pat:
                    at = src if i == 0 else sort_of(state[i - 1]).dst
                    if at != lhs.src:
                        continue
                options.append(state[:i] + rhs.factors + state[i + len(pat) :])
        if not options:
            break
        state = rng.choice(options)
    return _fold(list(l0.factors), src), _fold(list(state), src)


def _fold(path, src):
    from diagramchase.normal import fold_factors

    return fold_factors(list(path), src)


# ---------------------------------------------------------------------------
# Examples
# ---------------------------------------------------------------------------


class TestSolveExamples:
    def test_refl_goal(self):
        ctx = parse_context(
            "category C\nobject x y : C\nmorphism n : x -> y in C\n"
            "goal Goal-0 : n = I . n\n"
        )
        extract_diagram(ctx)
        tr = solve(ctx, "Goal-0")
        assert isinstance(tr, Refl)
        assert ctx.established("Goal-0")

    def test_two_hypotheses_shape(self):
        ctx = parse_context(
            "category C\nobject x y : C\nmorphism n1 n2 n3 : x -> y in C\n"
            "hypothesis H1 : n1 = n2\nhypothesis H2 : n3 = n2\n"
            "goal Goal-0 : n1 = n3\n"
        )
        tr = solve(ctx, "Goal-0")
        assert tr == Trans(Hypothesis("H1"), Sym(Hypothesis("H2")))
        assert check_trace(tr, ctx.fact("Goal-0").stmt, ctx).ok

    def test_demo_after_apply(self, demo_session):
        from diagramchase.script import parse_script
        from diagramchase.session import execute_command

        with open("corpus/demo.diag") as fh:
            cmds = parse_script(fh.read())
        for cmd in cmds[:7]:  # up to and including apply Hf
            execute_command(demo_session, cmd)
        ctx = demo_session.ctx
        tr = solve(ctx, "Goal-0-0")
        assert check_trace(tr, ctx.fact("Goal-0-0").stmt, ctx).ok

    def test_budget_failure(self):
        ctx = parse_context(
            "category C\nobject x y : C\nmorphism n1 n2 : x -> y in C\n"
            "goal Goal-0 : n1 = n2\n"
        )
        with pytest.raises(SolveFailure):
            solve(ctx, "Goal-0", depth=6)

    def test_depth_zero_only_refl(self):
        ctx = parse_context(
            "category C\nobject x y : C\nmorphism n1 n2 : x -> y in C\n"
            "hypothesis H : n1 = n2\ngoal Goal-0 : n1 = n2\n"
        )
        with pytest.raises(SolveFailure):
            solve(ctx, "Goal-0", depth=0)
        tr = solve(ctx, "Goal-0", depth=1)
        assert tr == Hypothesis("H")

    def test_solve_uses_proved_goals(self):
        ctx = parse_context(
            "category C\nobject x y : C\nmorphism n1 n2 n3 : x -> y in C\n"
            "hypothesis H1 : n1 = n2\nhypothesis H2 : n2 = n3\n"
            "goal Goal-0 : n1 = n3\ngoal Goal-1 : n3 = n1\n"
        )
        solve(ctx, "Goal-0", depth=2)
        tr = solve(ctx, "Goal-1", depth=1)
        assert tr == Sym(Hypothesis("Goal-0"))
        assert check_trace(tr, ctx.fact("Goal-1").stmt, ctx).ok

    def test_cancellation(self):
        ctx = parse_context(
            "category C\nobject x y : C\nmorphism n1 n2 n3 : x -> y in C\n"
            "hypothesis H1 : n1 = n2\ngoal Goal-0 : n1 = n3\n"
        )
        with pytest.raises(SolveFailure):
            solve(ctx, "Goal-0", depth=6, cancel=lambda: True)


class TestOracleAgreement:
    def test_small_sweep(self):
        rng = random.Random(20260808)
        agree = 0
        for _ in range(60):
            ctx = random_instance(rng)
            extract_diagram(ctx)
            if ctx.established("Goal-0"):
                continue  # discharged at extraction; nothing to compare
            expected = oracle_solvable(ctx, "Goal-0", 6)
            try:
                tr = solve(ctx.clone(), "Goal-0", depth=6)
                got = True
            except SolveFailure:
                got = False
            assert got == expected
            agree += 1
        assert agree >= 30


# ---------------------------------------------------------------------------
# Decomposition
# ---------------------------------------------------------------------------


class TestFaceSpecs:
    def test_parse_demo_specs(self):
        specs = parse_facespecs("mab:<m3;m2>:mcd;mab:<m2;m1>:mcd")
        assert len(specs) == 2
        assert specs[0].left_path() == ("mab", "m3", "mcd")
        assert specs[0].right_path() == ("mab", "m2", "mcd")

    def test_roundtrip(self):
        text = "mab:<m3;m2>:mcd;<a,b;c>:x"
        specs = parse_facespecs(text)
        assert print_facespecs(specs) == text

    def test_multi_edge_branches(self):
        (spec,) = parse_facespecs("<e1,e2;e3,e4,e5>")
        assert spec.left_path() == ("e1", "e2")
        assert spec.right_path() == ("e3", "e4", "e5")


class TestDecompose:
    def _demo_after_merges(self, demo_session):
        from diagramchase.script import parse_script
        from diagramchase.session import execute_command

        with open("corpus/demo.diag") as fh:
            cmds = parse_script(fh.read())
        for cmd in cmds[:5]:
            execute_command(demo_session, cmd)
        return demo_session

    def test_demo_decompose(self, demo_session):
        s = self._demo_after_merges(demo_session)
        specs = parse_facespecs("mab:<m3;m2>:mcd;mab:<m2;m1>:mcd")
        d2, goals, _ = decompose(s.ctx, s.diagram, "Goal-0", list(specs), None)
        assert goals == ["Goal-0-0", "Goal-0-1", "Goal-0-2"]
        from diagramchase.terms import pretty

        stmts = {
            g: (
                pretty(s.ctx.fact(g).stmt.lhs),
                pretty(s.ctx.fact(g).stmt.rhs),
            )
            for g in goals
        }
        assert stmts["Goal-0-0"] == ("m' . m3 . m''", "m' . m2 . m''")
        assert stmts["Goal-0-1"] == ("m' . m2 . m''", "m' . m1 . m''")
        assert stmts["Goal-0-2"] == ("m' . m1 . m''", "f m' . m''")

    def test_non_chaining_rejected(self, demo_session):
        s = self._demo_after_merges(demo_session)
        specs = parse_facespecs("mab:<m2;m1>:mcd")  # left != goal's left
        with pytest.raises(NonChainingSpecs):
            decompose(s.ctx, s.diagram, "Goal-0", list(specs), None)

    def test_unknown_edge(self, demo_session):
        s = self._demo_after_merges(demo_session)
        specs = parse_facespecs("mab:<nope;m2>:mcd")
        with pytest.raises(UnknownEdge):
            decompose(s.ctx, s.diagram, "Goal-0", list(specs), None)

    def test_equal_sides_zero_subgoals(self):
        ctx = parse_context(
            "category C\nobject x y : C\nmorphism n : x -> y in C\n"
            "morphism k : x -> y in C\n"
            "goal Goal-0 : n = n\n"
        )
        d = extract_diagram(ctx)
        assert ctx.established("Goal-0")  # refl goals never persist

    def test_decompose_soundness(self, demo_session):
        """Sub-goal traces plus the transitivity chain prove the parent."""
        s = self._demo_after_merges(demo_session)
        specs = parse_facespecs("mab:<m3;m2>:mcd;mab:<m2;m1>:mcd")
        decompose(s.ctx, s.diagram, "Goal-0", list(specs), None)
        from diagramchase.script import parse_script
        from diagramchase.session import execute_command

        with open("corpus/demo.diag") as fh:
            cmds = parse_script(fh.read())
        execute_command(s, cmds[6])  # apply Hf
        for g in ("Goal-0-0", "Goal-0-1", "Goal-0-2"):
            solve(s.ctx, g)
        parent = s.ctx.proof_of("Goal-0")
        res = check_trace(parent, s.ctx.fact("Goal-0").stmt, s.ctx)
        assert res.ok, res.reason

    def test_explicit_specs_ignore_positions(self, demo_session):
        """Purity: any positions give the same decomposition."""
        import copy

        s = self._demo_after_merges(demo_session)
        specs = list(parse_facespecs("mab:<m3;m2>:mcd;mab:<m2;m1>:mcd"))
        ctx1 = s.ctx.clone()
        d1, g1, u1 = decompose(ctx1, s.diagram, "Goal-0", specs, None)
        crazy = {n: (float(i * 7 % 5), float(i * 13 % 7)) for i, n in enumerate(s.diagram.nodes)}
        ctx2 = s.ctx.clone()
        d2, g2, u2 = decompose(ctx2, s.diagram, "Goal-0", specs, crazy)
        assert g1 == g2 and u1 == u2
        assert d1.to_data() == d2.to_data()


class TestAutoDecompose:
    def test_square_with_diagonal(self):
        ctx = parse_context(
            "category C\nobject a b c d : C\n"
            "morphism top : a -> b in C\nmorphism right : b -> d in C\n"
            "morphism left : a -> c in C\nmorphism bottom : c -> d in C\n"
            "morphism diag : a -> d in C\n"
            "goal Goal-0 : top . right = left . bottom\n"
        )
        d = extract_diagram(ctx)
        from diagramchase.graph import insert_edge

        d, _ = insert_edge(d, ctx.lookup_const("diag"))
        positions = {"a": (0.0, 0.0), "b": (50.0, 40.0), "c": (50.0, -40.0), "d": (100.0, 0.0)}
        d2, goals, specs = decompose(ctx, d, "Goal-0", None, positions)
        assert len(goals) == 2
        from diagramchase.terms import pretty

        sides = [
            (pretty(ctx.fact(g).stmt.lhs), pretty(ctx.fact(g).stmt.rhs))
            for g in goals
        ]
        assert sides == [
            ("top . right", "diag"),
            ("diag", "left . bottom"),
        ]

    def test_crossing_positions_rejected(self):
        ctx = parse_context(
            "category C\nobject a b c d : C\n"
            "morphism top : a -> b in C\nmorphism right : b -> d in C\n"
            "morphism left : a -> c in C\nmorphism bottom : c -> d in C\n"
            "morphism diag : a -> d in C\nmorphism cross : b -> c in C\n"
            "goal Goal-0 : top . right = left . bottom\n"
        )
        d = extract_diagram(ctx)
        from diagramchase.graph import insert_edge
        from diagramchase.solver import NonPlanarPositions

        d, _ = insert_edge(d, ctx.lookup_const("diag"))
        d, _ = insert_edge(d, ctx.lookup_const("cross"))
        positions = {"a": (0.0, 0.0), "b": (50.0, 40.0), "c": (50.0, -40.0), "d": (100.0, 0.0)}
        with pytest.raises(NonPlanarPositions):
            decompose(ctx, d, "Goal-0", None, positions)
