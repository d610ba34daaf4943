"""The replayable proof script language.

One command per line, `#` comments. Every interactive operation appends an
equivalent command; a saved script replays deterministically against the
same context. `succeed`/`fail` terminate a script.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .solver import FaceSpec, parse_facespecs, print_facespecs

IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_'-]*$")


class ScriptError(Exception):
    def __init__(self, message: str, line: int = 0):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


@dataclass(frozen=True)
class Command:
    pass


@dataclass(frozen=True)
class Merge(Command):
    x: str
    y: str


@dataclass(frozen=True)
class Split(Command):
    edge: str


@dataclass(frozen=True)
class Decompose(Command):
    goal: str
    specs: tuple[FaceSpec, ...]


@dataclass(frozen=True)
class Apply(Command):
    lemma: str
    pairs: tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class Solve(Command):
    goal: str
    depth: int | None = None


@dataclass(frozen=True)
class Compose(Command):
    name: str
    path: tuple[str, ...]
    anchor: str | None = None


@dataclass(frozen=True)
class Insert(Command):
    kind: str  # "node" | "edge" | "face"
    text: str


@dataclass(frozen=True)
class Succeed(Command):
    pass


@dataclass(frozen=True)
class Fail(Command):
    pass


def _ident(word: str, line: int) -> str:
    if not IDENT.match(word):
        raise ScriptError(f"bad identifier {word!r}", line)
    return word


def parse_script(text: str) -> list[Command]:
    commands: list[Command] = []
    for line_no, raw in enumerate(text.split("\n"), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if commands and isinstance(commands[-1], (Succeed, Fail)):
            raise ScriptError("commands after a terminal command", line_no)
        words = line.split()
        head, rest = words[0], words[1:]
        if head == "merge":
            if len(rest) != 2:
                raise ScriptError("merge takes two objects", line_no)
            commands.append(Merge(_ident(rest[0], line_no), _ident(rest[1], line_no)))
        elif head == "split":
            if len(rest) != 1:
                raise ScriptError("split takes one edge", line_no)
            commands.append(Split(_ident(rest[0], line_no)))
        elif head == "decompose":
            if len(rest) < 1:
                raise ScriptError("decompose takes a goal", line_no)
            goal = _ident(rest[0], line_no)
            if len(rest) == 1:
                commands.append(Decompose(goal, ()))
            else:
                spec_text = " ".join(rest[1:])
                try:
                    specs = tuple(parse_facespecs(spec_text))
                except Exception as e:
                    raise ScriptError(str(e), line_no)
                commands.append(Decompose(goal, specs))
        elif head == "apply":
            if len(rest) < 1:
                raise ScriptError("apply takes a lemma", line_no)
            lemma = _ident(rest[0], line_no)
            pairs = []
            for word in rest[1:]:
                if ":" not in word:
                    raise ScriptError(f"bad pair {word!r}", line_no)
                p, g = word.split(":", 1)
                pairs.append((_ident(p, line_no), _ident(g, line_no)))
            commands.append(Apply(lemma, tuple(pairs)))
        elif head == "solve":
            if len(rest) == 1:
                commands.append(Solve(_ident(rest[0], line_no)))
            elif len(rest) == 2 and rest[1].isdigit():
                commands.append(Solve(_ident(rest[0], line_no), int(rest[1])))
            else:
                raise ScriptError("solve takes a goal and an optional depth", line_no)
        elif head == "compose":
            if len(rest) < 2:
                raise ScriptError("compose takes a name and a path", line_no)
            name = _ident(rest[0], line_no)
            if rest[1] == "@":
                if len(rest) != 3:
                    raise ScriptError("compose name @ node", line_no)
                commands.append(Compose(name, (), _ident(rest[2], line_no)))
            else:
                commands.append(
                    Compose(name, tuple(_ident(w, line_no) for w in rest[1:]))
                )
        elif head == "insert":
            if len(rest) < 2 or rest[0] not in ("node", "edge", "face"):
                raise ScriptError("insert node|edge|face <term>", line_no)
            commands.append(Insert(rest[0], " ".join(rest[1:])))
        elif head == "succeed":
            if rest:
                raise ScriptError("succeed takes no arguments", line_no)
            commands.append(Succeed())
        elif head == "fail":
            if rest:
                raise ScriptError("fail takes no arguments", line_no)
            commands.append(Fail())
        else:
            raise ScriptError(f"unknown command {head!r}", line_no)
    return commands


def print_command(cmd: Command) -> str:
    if isinstance(cmd, Merge):
        return f"merge {cmd.x} {cmd.y}"
    if isinstance(cmd, Split):
        return f"split {cmd.edge}"
    if isinstance(cmd, Decompose):
        if not cmd.specs:
            return f"decompose {cmd.goal}"
        return f"decompose {cmd.goal} {print_facespecs(cmd.specs)}"
    if isinstance(cmd, Apply):
        pairs = " ".join(f"{p}:{g}" for p, g in cmd.pairs)
        return f"apply {cmd.lemma} {pairs}".rstrip()
    if isinstance(cmd, Solve):
        if cmd.depth is None:
            return f"solve {cmd.goal}"
        return f"solve {cmd.goal} {cmd.depth}"
    if isinstance(cmd, Compose):
        if cmd.anchor is not None:
            return f"compose {cmd.name} @ {cmd.anchor}"
        return f"compose {cmd.name} {' '.join(cmd.path)}"
    if isinstance(cmd, Insert):
        return f"insert {cmd.kind} {cmd.text}"
    if isinstance(cmd, Succeed):
        return "succeed"
    if isinstance(cmd, Fail):
        return "fail"
    raise ScriptError(f"unknown command {cmd!r}")


def print_script(commands) -> str:
    return "".join(print_command(c) + "\n" for c in commands)
