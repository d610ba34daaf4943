"""A proof session: the single writer over context, diagram and recorder.

Every proof-relevant operation snapshots the state for undo and appends
the equivalent script command, so that an interactive session and a
headless replay of its recording go through exactly the same code path.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass

from . import graph, lemmas, script, solver
from .context import Context
from .ctxparse import parse_equality, parse_term
from .graph import Diagram, audit, extract_diagram
from .layout import LayoutPositions, layout
from .terms import Meta, pretty, pretty_sort
from .trace import check_trace


class SessionError(Exception):
    pass


class ReplayError(Exception):
    def __init__(self, step: int, reason: str):
        super().__init__(f"step {step}: {reason}")
        self.step = step
        self.reason = reason


@dataclass
class Snapshot:
    ctx: Context
    diagram: Diagram
    recorded: list


class Session:
    def __init__(
        self,
        ctx: Context,
        script_path: str | None = None,
        depth: int = 6,
        functor_laws: bool = False,
    ):
        self.ctx = ctx
        self.diagram = extract_diagram(ctx)
        self.script_path = script_path
        self.depth = depth
        self.functor_laws = functor_laws
        self.recorded: list[script.Command] = []
        self.undo_stack: list[Snapshot] = []
        self.redo_stack: list[Snapshot] = []
        self.pending: list[script.Command] = []
        self.match: lemmas.MatchSession | None = None
        self.patterns: dict[str, lemmas.Pattern] = {}
        self.positions: LayoutPositions = layout(self.diagram)
        self.finished: str | None = None

    # -- snapshots -----------------------------------------------------------

    def _snapshot(self) -> Snapshot:
        return Snapshot(self.ctx.clone(), self.diagram.clone(), list(self.recorded))

    def _restore(self, snap: Snapshot) -> None:
        self.ctx = snap.ctx
        self.diagram = snap.diagram
        self.recorded = list(snap.recorded)
        self.match = None
        self.positions = layout(self.diagram, self.positions)

    def _mutate(self, command: script.Command, fn):
        if self.finished is not None:
            raise SessionError("the proof is already terminated")
        snap = self._snapshot()
        try:
            result = fn()
        except Exception:
            self._restore(snap)
            raise
        self.undo_stack.append(snap)
        self.redo_stack.clear()
        self.recorded.append(command)
        self.positions = layout(self.diagram, self.positions)
        return result

    def undo(self) -> None:
        if not self.undo_stack:
            raise SessionError("nothing to undo")
        self.redo_stack.append(self._snapshot())
        self._restore(self.undo_stack.pop())

    def redo(self) -> None:
        if self.redo_stack:
            snap = self.redo_stack.pop()
            self.undo_stack.append(self._snapshot())
            self._restore(snap)
            return
        if self.pending:
            cmd = self.pending.pop(0)
            execute_command(self, cmd)
            return
        raise SessionError("nothing to redo")

    # -- operations -----------------------------------------------------------

    def cmd_merge(self, x: str, y: str):
        def run():
            d2, s = graph.merge(self.ctx, self.diagram, x, y)
            self.diagram = d2
            return s

        return self._mutate(script.Merge(x, y), run)

    def cmd_split(self, edge: str):
        def run():
            d2, seq = graph.split_edge(self.diagram, edge, self.functor_laws)
            self.diagram = d2
            return seq

        return self._mutate(script.Split(edge), run)

    def cmd_compose(self, name: str, path, anchor: str | None = None):
        def run():
            d2, ename = graph.compose_path(self.diagram, name, tuple(path), anchor)
            self.diagram = d2
            return ename

        return self._mutate(script.Compose(name, tuple(path), anchor), run)

    def cmd_insert(self, kind: str, text: str):
        if kind == "node":
            term = parse_term(text, self.ctx)
            canonical = " ".join(text.split())

            def run():
                d2, name = graph.insert_node(self.diagram, term)
                self.diagram = d2
                return name

        elif kind == "edge":
            term = parse_term(text, self.ctx)
            canonical = " ".join(text.split())

            def run():
                d2, name = graph.insert_edge(self.diagram, term)
                self.diagram = d2
                return name

        elif kind == "face":
            canonical = " ".join(text.split())

            def run():
                if "=" in text:
                    lhs, rhs = parse_equality(text, self.ctx)
                    fact = self.ctx.add_goal(lhs, rhs)
                else:
                    fact = self.ctx.fact(text.strip())
                    if fact is None:
                        raise SessionError(f"unknown face {text.strip()!r}")
                    if fact.name in self.diagram.faces:
                        raise SessionError(f"face {fact.name} is already displayed")
                d2, name = graph.insert_face(self.ctx, self.diagram, fact)
                self.diagram = d2
                return name

        else:
            raise SessionError(f"unknown insert kind {kind!r}")
        return self._mutate(script.Insert(kind, canonical), run)

    def cmd_solve(self, goal: str, depth: int | None = None, cancel=None):
        budget = depth if depth is not None else self.depth

        def run():
            return solver.solve(self.ctx, goal, depth=budget, cancel=cancel)

        return self._mutate(script.Solve(goal, depth), run)

    def cmd_decompose(self, goal: str, specs=None):
        explicit = list(specs) if specs else None

        def run():
            d2, new_goals, used = solver.decompose(
                self.ctx, self.diagram, goal, explicit, self.positions
            )
            self.diagram = d2
            return new_goals, used

        # run first so automatically computed specs are recorded explicitly
        if self.finished is not None:
            raise SessionError("the proof is already terminated")
        snap = self._snapshot()
        try:
            new_goals, used = run()
        except Exception:
            self._restore(snap)
            raise
        self.undo_stack.append(snap)
        self.redo_stack.clear()
        recorded_specs = tuple(explicit) if explicit is not None else tuple(used)
        self.recorded.append(script.Decompose(goal, recorded_specs))
        self.positions = layout(self.diagram, self.positions)
        return new_goals

    # -- lemmas ----------------------------------------------------------------

    def pattern(self, lemma_name: str) -> lemmas.Pattern:
        stmt = self.ctx.lemmas.get(lemma_name)
        if stmt is None:
            raise SessionError(f"unknown lemma {lemma_name!r}")
        return lemmas.pattern_of(self.ctx, stmt)

    def lemma_open(self, lemma_name: str) -> lemmas.MatchSession:
        if self.match is not None:
            raise SessionError("a lemma application is already in progress")
        self.match = lemmas.MatchSession(self.pattern(lemma_name))
        return self.match

    def lemma_match(self, p: str, g: str):
        if self.match is None:
            raise SessionError("no lemma application in progress")
        return lemmas.match_objects(self.match, self.ctx, self.diagram, p, g)

    def lemma_unmatch(self, p: str, g: str):
        if self.match is None:
            raise SessionError("no lemma application in progress")
        return lemmas.unmatch_objects(self.match, self.ctx, self.diagram, p, g)

    def lemma_cancel(self) -> None:
        self.match = None

    def lemma_apply(self):
        if self.match is None:
            raise SessionError("no lemma application in progress")
        ms = self.match
        pairs = tuple(ms.given)

        def run():
            d2, new_goals = lemmas.apply_match(self.ctx, self.diagram, ms)
            self.diagram = d2
            self.match = None
            return new_goals

        return self._mutate(script.Apply(ms.pattern.lemma, pairs), run)

    def replay_apply(self, lemma_name: str, pairs):
        """The scripted form of open + match* + apply."""
        if self.match is not None:
            raise SessionError("a lemma application is already in progress")
        ms = lemmas.MatchSession(self.pattern(lemma_name))
        for p, g in pairs:
            lemmas.match_objects(ms, self.ctx, self.diagram, p, g)
        self.match = ms
        return self.lemma_apply()

    # -- termination -------------------------------------------------------------

    def obligations(self) -> list[dict]:
        return [
            {"name": f.name, "statement": pretty_sort(self.ctx.subst.sort(f.stmt))}
            for f in self.ctx.unproved_goals()
        ]

    def succeed(self) -> list[dict]:
        if self.finished is not None:
            raise SessionError("the proof is already terminated")
        self.recorded.append(script.Succeed())
        self.finished = "succeed"
        remaining = self.obligations()
        if self.script_path:
            save_script(self.script_path, self.recorded)
            sidecar = self.script_path + ".layout"
            if self.positions.pins or os.path.exists(sidecar):
                from .layout import save_positions

                save_positions(sidecar, self.positions)
        return remaining

    def fail(self) -> None:
        if self.finished is not None:
            raise SessionError("the proof is already terminated")
        self.recorded.append(script.Fail())
        self.finished = "fail"

    # -- state -----------------------------------------------------------------

    def state_data(self) -> dict:
        return {
            "context": self.ctx.to_data(),
            "diagram": self.diagram.to_data(),
            "goals": [
                {
                    "name": f.name,
                    "statement": pretty_sort(self.ctx.subst.sort(f.stmt)),
                    "proved": self.ctx.established(f.name),
                }
                for f in self.ctx.goals()
            ],
            "finished": self.finished,
        }

    def state_json(self) -> str:
        return json.dumps(self.state_data(), sort_keys=True, separators=(",", ":"))

    def audit(self) -> None:
        audit(self.diagram, self.ctx)

    def verify_proofs(self) -> list[tuple[str, bool, str | None]]:
        """Run the trusted checker over every goal that claims a proof."""
        results = []
        for fact in self.ctx.goals():
            tr = self.ctx.proof_of(fact.name)
            if tr is None:
                results.append((fact.name, False, "unproved"))
                continue
            res = check_trace(tr, fact.stmt, self.ctx)
            results.append((fact.name, res.ok, res.reason))
        return results


# ---------------------------------------------------------------------------
# Command execution and replay
# ---------------------------------------------------------------------------


def execute_command(session: Session, cmd: script.Command):
    if isinstance(cmd, script.Merge):
        return session.cmd_merge(cmd.x, cmd.y)
    if isinstance(cmd, script.Split):
        return session.cmd_split(cmd.edge)
    if isinstance(cmd, script.Decompose):
        return session.cmd_decompose(cmd.goal, list(cmd.specs) or None)
    if isinstance(cmd, script.Apply):
        return session.replay_apply(cmd.lemma, cmd.pairs)
    if isinstance(cmd, script.Solve):
        return session.cmd_solve(cmd.goal, cmd.depth)
    if isinstance(cmd, script.Compose):
        return session.cmd_compose(cmd.name, cmd.path, cmd.anchor)
    if isinstance(cmd, script.Insert):
        return session.cmd_insert(cmd.kind, cmd.text)
    if isinstance(cmd, script.Succeed):
        return session.succeed()
    if isinstance(cmd, script.Fail):
        return session.fail()
    raise SessionError(f"unknown command {cmd!r}")


def replay(commands, session: Session):
    """Execute a recorded script; state up to a failing step is retained."""
    for i, cmd in enumerate(commands):
        try:
            execute_command(session, cmd)
        except Exception as e:
            raise ReplayError(i, str(e))
    return session


def save_script(path: str, commands) -> None:
    """Atomic write: the script file appears only complete."""
    text = script.print_script(commands)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".diag-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
