"""Automatic face solving and planar goal decomposition.

The solver searches for a chain of face rewrites between the two sides of
a goal: every established face may replace one of its sides by the other
anywhere inside a path. The search is a bidirectional breadth-first walk
bounded by the number of rewrites along the found chain, and it returns a
checkable trace rather than a bare yes.
"""

from __future__ import annotations

from dataclasses import dataclass

from .context import Context, Fact
from .graph import Diagram, Face, KindMismatch, UnknownObject
from .normal import NormalMor, normalize
from .terms import Id, MorSort, Term, sort_of
from .trace import (
    CongLeft,
    CongRight,
    Hypothesis,
    Refl,
    Sym,
    Trace,
    Trans,
    check_trace,
)


class SolveFailure(Exception):
    """No proof within the rewrite budget; says nothing about provability."""


class DecomposeError(Exception):
    pass


class NonChainingSpecs(DecomposeError):
    pass


class NonPlanarPositions(DecomposeError):
    pass


class UnknownEdge(DecomposeError):
    pass


# ---------------------------------------------------------------------------
# Solving
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Rule:
    name: str
    forward: bool
    lhs: NormalMor
    rhs: NormalMor


@dataclass(frozen=True)
class Step:
    rule: Rule
    pos: int


def _rules_from_context(ctx: Context, exclude: str) -> list[Rule]:
    rules: list[Rule] = []
    for fact in sorted(ctx.facts.values(), key=lambda f: f.name):
        if fact.name == exclude or not ctx.established(fact.name):
            continue
        stmt = ctx.subst.sort(fact.stmt)
        lhs = normalize(stmt.lhs)
        rhs = normalize(stmt.rhs)
        if lhs == rhs:
            continue
        rules.append(Rule(fact.name, True, lhs, rhs))
        rules.append(Rule(fact.name, False, rhs, lhs))
    return rules


def _boundary(src: Term, factors: tuple[Term, ...], i: int) -> Term:
    if i == 0:
        return src
    s = sort_of(factors[i - 1])
    assert isinstance(s, MorSort)
    return s.dst


def _successors(state: tuple[Term, ...], src: Term, rules: list[Rule]):
    """Deterministic rewrite expansion: rule order, then position order."""
    for rule in rules:
        pat = rule.lhs.factors
        rep = rule.rhs.factors
        for i in range(len(state) - len(pat) + 1):
            if state[i : i + len(pat)] != pat:
                continue
            if not pat and _boundary(src, state, i) != rule.lhs.src:
                continue
            yield Step(rule, i), state[:i] + rep + state[i + len(pat) :]


def solve(
    ctx: Context, goal: str, depth: int = 6, cancel=None
) -> Trace:
    """Prove the goal from the established faces, or raise SolveFailure.

    Only the goal's metavariable is instantiated (by recording its proof);
    the graph itself is untouched. `depth` bounds the number of rewrite
    applications along the found chain.
    """
    fact = ctx.fact(goal)
    if fact is None or fact.kind != "goal":
        raise UnknownObject(f"{goal!r} is not a goal")
    if ctx.established(goal):
        return ctx.proof_of(goal)  # trivial goals are discharged eagerly
    stmt = ctx.subst.sort(fact.stmt)
    start_nm = normalize(stmt.lhs)
    target_nm = normalize(stmt.rhs)
    src = start_nm.src
    start = start_nm.factors
    target = target_nm.factors
    trace: Trace
    if start == target:
        trace = Refl(stmt.lhs)
    else:
        rules = _rules_from_context(ctx, exclude=goal)
        steps = _search(start, target, src, rules, depth, cancel)
        if steps is None:
            raise SolveFailure(f"no proof of {goal} within {depth} rewrites")
        trace = _assemble(stmt.lhs, start, steps, start_nm)
    result = check_trace(trace, fact.stmt, ctx)
    assert result.ok, f"solver produced an invalid trace: {result.reason}"
    ctx.record_proof(fact, trace)
    return trace


def _search(start, target, src, rules, depth, cancel):
    """Bidirectional BFS; returns the forward step list of a chain, or None."""
    fwd: dict[tuple, list[Step]] = {start: []}
    bwd: dict[tuple, list[Step]] = {target: []}
    frontier_f: dict[tuple, list[Step]] = {start: []}
    frontier_b: dict[tuple, list[Step]] = {target: []}
    df = db = 0
    meet = _best_meet(fwd, bwd, depth)
    while meet is None and df + db < depth and (frontier_f or frontier_b):
        if cancel is not None and cancel():
            return None
        take_forward = len(frontier_f) <= len(frontier_b)
        if not frontier_f:
            take_forward = False
        if not frontier_b:
            take_forward = True
        if take_forward:
            frontier_f = _expand(frontier_f, fwd, src, rules)
            df += 1
        else:
            frontier_b = _expand(frontier_b, bwd, src, rules)
            db += 1
        meet = _best_meet(fwd, bwd, depth)
    if meet is None:
        return None
    fsteps = list(fwd[meet])
    bsteps = list(bwd[meet])
    for step in reversed(bsteps):
        inv = Rule(step.rule.name, not step.rule.forward, step.rule.rhs, step.rule.lhs)
        fsteps.append(Step(inv, step.pos))
    return fsteps


def _expand(frontier, seen, src, rules):
    new: dict[tuple, list[Step]] = {}
    for state in list(frontier):
        steps = seen[state]
        for step, nxt in _successors(state, src, rules):
            if nxt in seen or nxt in new:
                continue
            new[nxt] = steps + [step]
    seen.update(new)
    return new


def _best_meet(fwd, bwd, depth):
    best = None
    for state in fwd:
        if state in bwd:
            total = len(fwd[state]) + len(bwd[state])
            if total > depth:
                continue
            key = (total, tuple(repr(t) for t in state))
            if best is None or key < best[0]:
                best = (key, state)
    return best[1] if best is not None else None


def _assemble(lhs_term: Term, start, steps, start_nm: NormalMor) -> Trace:
    """Fold the step list into a Trans chain of congruence-wrapped faces."""
    nodes: list[Trace] = []
    state = start
    cat = start_nm.cat
    src = start_nm.src
    dst = start_nm.dst
    for step in steps:
        rule = step.rule
        i = step.pos
        pat = rule.lhs.factors
        pre = state[:i]
        post = state[i + len(pat) :]
        base: Trace = Hypothesis(rule.name)
        if not rule.forward:
            base = Sym(base)
        if post:
            suffix = NormalMor(cat, rule.lhs.dst, dst, post)
            base = CongRight(base, suffix)
        if pre:
            prefix = NormalMor(cat, src, rule.lhs.src, pre)
            base = CongLeft(prefix, base)
        nodes.append(base)
        state = state[:i] + rule.rhs.factors + state[i + len(pat) :]
    trace = nodes[-1]
    for node in reversed(nodes[:-1]):
        trace = Trans(node, trace)
    return trace


# ---------------------------------------------------------------------------
# Face specifications
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Branch:
    left: tuple[str, ...]
    right: tuple[str, ...]


@dataclass(frozen=True)
class FaceSpec:
    """A sequence of shared edges and <left;right> branch pairs."""

    steps: tuple[object, ...]  # str (shared edge) or Branch

    def left_path(self) -> tuple[str, ...]:
        out: list[str] = []
        for s in self.steps:
            out.extend(s.left if isinstance(s, Branch) else (s,))
        return tuple(out)

    def right_path(self) -> tuple[str, ...]:
        out: list[str] = []
        for s in self.steps:
            out.extend(s.right if isinstance(s, Branch) else (s,))
        return tuple(out)


def parse_facespecs(text: str) -> list[FaceSpec]:
    specs: list[FaceSpec] = []
    for part in _split_top(text, ";"):
        steps: list[object] = []
        for step in _split_top(part, ":"):
            step = step.strip()
            if step.startswith("<") and step.endswith(">"):
                inner = step[1:-1]
                halves = inner.split(";")
                if len(halves) != 2:
                    raise DecomposeError(f"malformed branch {step!r}")
                left = tuple(e.strip() for e in halves[0].split(",") if e.strip())
                right = tuple(e.strip() for e in halves[1].split(",") if e.strip())
                steps.append(Branch(left, right))
            elif step:
                steps.append(step)
            else:
                raise DecomposeError("empty step in face specification")
        if steps:
            specs.append(FaceSpec(tuple(steps)))
    if not specs:
        raise DecomposeError("empty face specification")
    return specs


def print_facespecs(specs) -> str:
    parts = []
    for spec in specs:
        bits = []
        for s in spec.steps:
            if isinstance(s, Branch):
                bits.append(f"<{','.join(s.left)};{','.join(s.right)}>")
            else:
                bits.append(s)
        parts.append(":".join(bits))
    return ";".join(parts)


def _split_top(text: str, sep: str) -> list[str]:
    out: list[str] = []
    depth = 0
    cur: list[str] = []
    for ch in text:
        if ch == "<":
            depth += 1
        elif ch == ">":
            depth -= 1
        if ch == sep and depth == 0:
            out.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    out.append("".join(cur))
    return [p for p in out if p.strip()]


# ---------------------------------------------------------------------------
# Decomposition
# ---------------------------------------------------------------------------


def decompose(
    ctx: Context,
    d: Diagram,
    goal: str,
    specs: list[FaceSpec] | None,
    positions=None,
) -> tuple[Diagram, list[str], list[FaceSpec]]:
    """Refine a goal face into a transitivity chain of sub-goals.

    With explicit specs the layout is never consulted. Without specs the
    planar subdivision of the goal's region (straight-line edges at the
    given positions) supplies one spec per bounded region, left to right.
    Sub-goals matching an existing face are discharged immediately.
    """
    fact = ctx.fact(goal)
    if fact is None or fact.kind != "goal":
        raise UnknownObject(f"{goal!r} is not a goal")
    if ctx.established(goal):
        raise DecomposeError(f"goal {goal} is already proved")
    face = d.faces[goal]
    if specs is None:
        from .planar import auto_specs

        specs = auto_specs(d, face, positions)
    specs = [_resolve_spec(d, s) for s in specs]
    if not specs:
        raise DecomposeError("no face specifications")

    ends = _face_endpoints(d, ctx, face, fact)
    chain: list[tuple[str, ...]] = [face.left]
    for k, spec in enumerate(specs):
        left = spec.left_path()
        right = spec.right_path()
        for path in (left, right):
            if path:
                d.check_path(path)
                if d.path_endpoints(path) != ends:
                    raise NonChainingSpecs(
                        f"specification {k} does not share the goal's endpoints"
                    )
        if left != chain[-1]:
            raise NonChainingSpecs(
                f"specification {k} does not chain from the previous side"
            )
        chain.append(right)
    if chain[-1] != face.right:
        # close the chain back to the goal's right-hand side
        chain.append(face.right)

    d2 = d.clone()
    new_goals: list[str] = []
    link_traces: list[Trace] = []
    anchor = ends[0]
    for pa, pb in zip(chain, chain[1:]):
        if pa == pb:
            link_traces.append(Refl(d2.fold_path(pa, anchor=anchor)))
            continue
        lhs = d2.fold_path(pa, anchor=anchor)
        rhs = d2.fold_path(pb, anchor=anchor)
        name = _child_name(ctx, goal)
        sub = ctx.add_goal(lhs, rhs, name=name)
        face2 = Face(name, "goal", pa, pb, f"?{name}")
        d2.faces[name] = face2
        discharged = _discharge(ctx, sub)
        if not discharged:
            new_goals.append(name)
        link_traces.append(Hypothesis(name))
    if not link_traces:
        parent_trace: Trace = Refl(fact.stmt.lhs)
    else:
        parent_trace = link_traces[-1]
        for t in reversed(link_traces[:-1]):
            parent_trace = Trans(t, parent_trace)
    ctx.record_proof(fact, parent_trace)
    return d2, new_goals, specs


def _face_endpoints(d: Diagram, ctx: Context, face: Face, fact: Fact):
    if face.left:
        return d.path_endpoints(face.left)
    if face.right:
        return d.path_endpoints(face.right)
    node = d.node_of_term(ctx.subst.term(fact.stmt.src))
    return (node, node)


def _resolve_spec(d: Diagram, spec: FaceSpec) -> FaceSpec:
    def edge(name: str) -> str:
        try:
            kind, key = d.resolve(name)
        except UnknownObject:
            raise UnknownEdge(f"unknown edge {name!r}")
        if kind != "edge":
            raise UnknownEdge(f"{name!r} is a {kind}, not an edge")
        return key

    steps: list[object] = []
    for s in spec.steps:
        if isinstance(s, Branch):
            steps.append(
                Branch(tuple(edge(e) for e in s.left), tuple(edge(e) for e in s.right))
            )
        else:
            steps.append(edge(s))
    return FaceSpec(tuple(steps))


def _child_name(ctx: Context, parent: str) -> str:
    k = 0
    while f"{parent}-{k}" in ctx.facts:
        k += 1
    return f"{parent}-{k}"


def _discharge(ctx: Context, sub: Fact) -> bool:
    """Discharge a fresh sub-goal by reflexivity or an exact-match face."""
    lhs = normalize(sub.stmt.lhs)
    rhs = normalize(sub.stmt.rhs)
    if lhs == rhs:
        ctx.record_proof(sub, Refl(sub.stmt.lhs))
        return True
    for fact in ctx.facts.values():
        if fact.name == sub.name:
            continue
        if fact.kind == "goal" and not ctx.established(fact.name):
            continue
        stmt = ctx.subst.sort(fact.stmt)
        fl, fr = normalize(stmt.lhs), normalize(stmt.rhs)
        if (fl, fr) == (lhs, rhs):
            ctx.record_proof(sub, Hypothesis(fact.name))
            return True
        if (fr, fl) == (lhs, rhs):
            ctx.record_proof(sub, Sym(Hypothesis(fact.name)))
            return True
    return False
