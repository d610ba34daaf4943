"""Command line entry points.

    diagram run   <ctx> <diag>   replay; open a stdio session if needed
    diagram edit  <ctx> <diag>   stdio session with the script as a redo queue
    diagram check <ctx> <diag>   headless replay + trusted verification report
    diagram serve --port N --exercises DIR   websocket endpoint

Exit codes are stable for CI: 0 success, 2 replay failure, 3 verification
failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import os
import sys

from .ctxparse import ParseError, parse_context, parse_library
from .layout import load_positions
from .script import parse_script
from .server import Engine, serve_stdio, serve_websocket
from .session import ReplayError, Session, replay


def _load_session(args, with_script: str = "replay") -> tuple[Session, bool]:
    """Build a session; returns (session, fully_replayed)."""
    with open(args.ctx, "r", encoding="utf-8") as fh:
        ctx = parse_context(fh.read())
    if getattr(args, "library", None):
        with open(args.library, "r", encoding="utf-8") as fh:
            parse_library(fh.read(), ctx)
    session = Session(
        ctx,
        script_path=args.diag,
        depth=args.depth,
        functor_laws=args.functor_laws,
    )
    sidecar = load_positions(args.diag + ".layout")
    if sidecar is not None:
        for name, xy in sidecar.items():
            if name in session.positions:
                session.positions[name] = xy
        session.positions.pins |= sidecar.pins & set(session.positions)
    if not os.path.exists(args.diag):
        return session, False
    with open(args.diag, "r", encoding="utf-8") as fh:
        commands = parse_script(fh.read())
    if with_script == "queue":
        session.pending = list(commands)
        return session, False
    try:
        replay(commands, session)
    except ReplayError as e:
        print(f"replay failed at {e}", file=sys.stderr)
        return session, False
    return session, session.finished == "succeed"


def cmd_run(args) -> int:
    session, replayed = _load_session(args)
    if replayed:
        for ob in session.obligations():
            print(f"{ob['name']}\t{ob['statement']}")
        return 0
    engine = Engine(session)
    serve_stdio(engine)
    return 0 if session.finished == "succeed" else 2


def cmd_edit(args) -> int:
    session, _ = _load_session(args, with_script="queue")
    engine = Engine(session)
    serve_stdio(engine)
    return 0 if session.finished == "succeed" else 2


def cmd_check(args) -> int:
    """Replay headlessly and run the trusted checker over every proof.

    Writes one tab-delimited line per goal; with --render, a figure of the
    final diagram lands next to the report.
    """
    with open(args.ctx, "r", encoding="utf-8") as fh:
        ctx = parse_context(fh.read())
    if getattr(args, "library", None):
        with open(args.library, "r", encoding="utf-8") as fh:
            parse_library(fh.read(), ctx)
    session = Session(
        ctx, script_path=None, depth=args.depth, functor_laws=args.functor_laws
    )
    if not os.path.exists(args.diag):
        print(f"missing script file {args.diag}", file=sys.stderr)
        return 4
    with open(args.diag, "r", encoding="utf-8") as fh:
        commands = parse_script(fh.read())
    try:
        replay(commands, session)
    except ReplayError as e:
        print(f"replay failed at {e}", file=sys.stderr)
        return 2
    results = session.verify_proofs()
    print("goal\tproved\tchecked\tdetail")
    failed = False
    for name, ok, reason in results:
        proved = session.ctx.established(name)
        if proved and not ok:
            failed = True
        detail = reason or ""
        if not proved and reason == "unproved":
            detail = "exported obligation"
        print(f"{name}\t{'yes' if proved else 'no'}\t{'yes' if ok else 'no'}\t{detail}")
    if args.render:
        from .render import render_diagram

        os.makedirs(args.render, exist_ok=True)
        base = os.path.splitext(os.path.basename(args.diag))[0]
        out = os.path.join(args.render, f"{base}.png")
        render_diagram(
            session.diagram, session.positions, out, title=os.path.basename(args.ctx)
        )
        print(f"figure\t{out}", file=sys.stderr)
    if session.finished != "succeed":
        print("script did not end in succeed", file=sys.stderr)
        return 2
    if failed:
        return 3
    return 0


def cmd_serve(args) -> int:
    exercises = args.exercises

    def make_engine(params: dict) -> Engine:
        name = str(params.get("exercise", ""))
        if not name or "/" in name or "\\" in name or name.startswith("."):
            raise ValueError(f"unknown exercise {name!r}")
        ctx_path = os.path.join(exercises, f"{name}.ctx")
        if not os.path.exists(ctx_path):
            raise ValueError(f"unknown exercise {name!r}")
        with open(ctx_path, "r", encoding="utf-8") as fh:
            ctx = parse_context(fh.read())
        diag_path = os.path.join(exercises, f"{name}.diag")
        session = Session(
            ctx, script_path=diag_path, depth=args.depth, functor_laws=args.functor_laws
        )
        replayed = False
        if os.path.exists(diag_path):
            with open(diag_path, "r", encoding="utf-8") as fh:
                commands = parse_script(fh.read())
            try:
                replay(commands, session)
                replayed = session.finished == "succeed"
            except ReplayError:
                pass
        return Engine(session, replayed=replayed)

    server = serve_websocket(args.port, make_engine, host=args.host)
    print(f"listening on ws://{args.host}:{args.port}", file=sys.stderr)
    with server:
        server.serve_forever()
    return 0


def cmd_render(args) -> int:
    session, _ = _load_session(args)
    from .render import render_diagram

    render_diagram(
        session.diagram,
        session.positions,
        args.out,
        highlight_face=args.face,
        title=os.path.basename(args.ctx),
    )
    print(args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="diagram")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, diag=True):
        p.add_argument("ctx", help="context file")
        if diag:
            p.add_argument("diag", help="proof script file (.diag)")
        p.add_argument("--depth", type=int, default=6, help="solver rewrite budget")
        p.add_argument(
            "--functor-laws",
            action="store_true",
            help="distribute functors over composition when normalizing",
        )
        p.add_argument("--library", help="lemma library file (lemma lines only)")

    p = sub.add_parser("run", help="replay a proof, opening a session only if needed")
    common(p)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("edit", help="open a session with the script as a redo queue")
    common(p)
    p.set_defaults(fn=cmd_edit)

    p = sub.add_parser("check", help="headless replay and proof verification")
    common(p)
    p.add_argument("--render", metavar="DIR", help="write a figure of the final state")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("serve", help="websocket server for curated exercises")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--exercises", required=True, help="directory of .ctx files")
    p.add_argument("--depth", type=int, default=6)
    p.add_argument("--functor-laws", action="store_true")
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("render", help="render the final diagram to an image")
    common(p)
    p.add_argument("-o", "--out", default="diagram.png")
    p.add_argument("--face", help="face whose sides to highlight")
    p.set_defaults(fn=cmd_render)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except FileNotFoundError as e:
        print(str(e), file=sys.stderr)
        return 4
    except ParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
