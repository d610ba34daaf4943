"""Line-delimited request/response protocol over stdio or websocket.

One JSON envelope per line, fields exactly `id`, `kind`, `method`,
`params`, `result`, `error{code,message}`. Responses echo the request id;
notifications carry none. Malformed lines never crash a session: they are
dropped with a notification. Both transports share the same engine, so a
session behaves byte-identically over stdio and websocket.
"""

from __future__ import annotations

import json
import sys

from . import layout as layout_mod
from .graph import face_label
from .lemmas import MatchSession, Pattern, Refused
from .session import ReplayError, Session, execute_command, replay
from .solver import SolveFailure, parse_facespecs
from .terms import pretty, pretty_sort

PROTOCOL_ERROR = 1
UNKNOWN_METHOD = 2
BAD_PARAMS = 3
OPERATION_FAILED = 4
REFUSED = 5
SESSION_CLOSED = 6


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def notification(method: str, params) -> str:
    return _dumps({"kind": "notification", "method": method, "params": params})


def response(req_id, method: str, result) -> str:
    return _dumps(
        {"id": req_id, "kind": "response", "method": method, "result": result}
    )


def error_response(req_id, method: str, code: int, message: str) -> str:
    return _dumps(
        {
            "id": req_id,
            "kind": "response",
            "method": method,
            "error": {"code": code, "message": message},
        }
    )


def pattern_data(ms: MatchSession) -> dict:
    """The lemma window's view: the pattern under the current unifier."""
    pat = ms.pattern
    s = ms.subst
    return {
        "lemma": pat.lemma,
        "nodes": [
            {"name": n.name, "label": pretty(s.term(n.term))}
            for n in pat.diagram.nodes.values()
        ],
        "edges": [
            {
                "name": e.name,
                "label": pretty(s.term(e.term)),
                "src": e.src,
                "dst": e.dst,
            }
            for e in pat.diagram.edges.values()
        ],
        "faces": [
            {
                "name": f.name,
                "label": pretty(s.term(pat.facts[f.name].term)),
                "left": list(f.left),
                "right": list(f.right),
            }
            for f in pat.diagram.faces.values()
        ],
        "matched": [[kind, p, g] for kind, p, g in ms.pairs],
        "unifier": {
            f"?{_meta_hint(pat, uid)}": pretty(t)
            for uid, t in sorted(s.mapping.items())
        },
    }


def _meta_hint(pat: Pattern, uid: int) -> str:
    return pat.meta_origin.get(uid, f"m{uid}")


class Engine:
    """Protocol core shared by every transport: lines in, lines out."""

    def __init__(self, session: Session, replayed: bool = False):
        self.session = session
        self.closed = False
        self.replayed = replayed
        self._cancel = False

    # -- startup ----------------------------------------------------------------

    def startup_lines(self) -> list[str]:
        if self.replayed:
            self.closed = True
            return [
                notification(
                    "replay/success",
                    {"obligations": self.session.obligations()},
                )
            ]
        lines = [notification("state/init", self.session.state_data())]
        if self.session.pending:
            lines.append(
                notification("edit/queue", {"length": len(self.session.pending)})
            )
        return lines

    # -- the line loop ------------------------------------------------------------

    def feed_line(self, line: str) -> list[str]:
        line = line.strip()
        if not line:
            return []
        try:
            env = json.loads(line)
        except (json.JSONDecodeError, UnicodeDecodeError):
            return [notification("protocol/dropped", {"reason": "not valid JSON"})]
        if not isinstance(env, dict):
            return [notification("protocol/dropped", {"reason": "not an envelope"})]
        method = env.get("method")
        req_id = env.get("id")
        if env.get("kind") != "request" or not isinstance(method, str):
            if isinstance(req_id, int):
                return [
                    error_response(req_id, str(method), PROTOCOL_ERROR, "not a request")
                ]
            return [notification("protocol/dropped", {"reason": "not a request"})]
        if not isinstance(req_id, int):
            return [notification("protocol/dropped", {"reason": "request without id"})]
        params = env.get("params")
        if params is None:
            params = {}
        if not isinstance(params, dict):
            return [error_response(req_id, method, BAD_PARAMS, "params must be a map")]
        if self.closed:
            return [
                error_response(req_id, method, SESSION_CLOSED, "session is closed")
            ]
        try:
            return self.dispatch(req_id, method, params)
        except Refused as e:
            return [error_response(req_id, method, REFUSED, f"Refused: {e}")]
        except SolveFailure as e:
            return [error_response(req_id, method, OPERATION_FAILED, str(e))]
        except KeyError as e:
            return [
                error_response(req_id, method, BAD_PARAMS, f"missing parameter {e}")
            ]
        except Exception as e:
            return [error_response(req_id, method, OPERATION_FAILED, str(e))]

    # -- dispatch -------------------------------------------------------------------

    def dispatch(self, req_id: int, method: str, params: dict) -> list[str]:
        session = self.session
        changed = lambda: notification("state/changed", session.state_data())

        if method == "state/get":
            return [response(req_id, method, session.state_data())]
        if method == "op/merge":
            session.cmd_merge(str(params["x"]), str(params["y"]))
            return [response(req_id, method, {"ok": True}), changed()]
        if method == "op/split":
            edges = session.cmd_split(str(params["edge"]))
            return [
                response(req_id, method, {"edges": list(edges)}),
                changed(),
            ]
        if method == "op/compose":
            name = session.cmd_compose(
                str(params["name"]),
                tuple(str(e) for e in params.get("path", ())),
                params.get("anchor"),
            )
            return [response(req_id, method, {"edge": name}), changed()]
        if method == "op/insert":
            name = session.cmd_insert(str(params["kind"]), str(params["text"]))
            return [response(req_id, method, {"name": name}), changed()]
        if method == "op/solve":
            self._cancel = False
            depth = params.get("depth")
            session.cmd_solve(str(params["goal"]), depth, cancel=lambda: self._cancel)
            return [response(req_id, method, {"ok": True}), changed()]
        if method == "solve/cancel":
            self._cancel = True
            return [response(req_id, method, {"ok": True})]
        if method == "op/decompose":
            specs = params.get("specs")
            parsed = parse_facespecs(str(specs)) if specs else None
            goals = session.cmd_decompose(str(params["goal"]), parsed)
            return [response(req_id, method, {"goals": goals}), changed()]
        if method == "lemma/list":
            lemmas = []
            for name, stmt in sorted(session.ctx.lemmas.items()):
                from .lemmas import admissible

                ok, _ = admissible(stmt)
                lemmas.append({"name": name, "admissible": ok})
            return [response(req_id, method, {"lemmas": lemmas})]
        if method == "lemma/pattern":
            ms = MatchSession(session.pattern(str(params["name"])))
            return [response(req_id, method, pattern_data(ms))]
        if method == "lemma/open":
            ms = session.lemma_open(str(params["name"]))
            return [response(req_id, method, pattern_data(ms))]
        if method == "lemma/match":
            ms = session.lemma_match(str(params["pattern"]), str(params["goal"]))
            return [response(req_id, method, pattern_data(ms))]
        if method == "lemma/unmatch":
            ms = session.lemma_unmatch(str(params["pattern"]), str(params["goal"]))
            return [response(req_id, method, pattern_data(ms))]
        if method == "lemma/apply":
            goals = session.lemma_apply()
            return [response(req_id, method, {"goals": goals}), changed()]
        if method == "lemma/cancel":
            session.lemma_cancel()
            return [response(req_id, method, {"ok": True})]
        if method == "layout/get":
            return [response(req_id, method, _layout_data(session))]
        if method == "layout/drag":
            session.positions = layout_mod.drag(
                session.diagram,
                session.positions,
                str(params["node"]),
                (float(params["x"]), float(params["y"])),
            )
            return [response(req_id, method, _layout_data(session))]
        if method == "layout/pin":
            session.positions = layout_mod.pin(
                session.positions, str(params["node"]), bool(params.get("pinned", True))
            )
            return [response(req_id, method, _layout_data(session))]
        if method == "edit/undo":
            session.undo()
            return [response(req_id, method, {"ok": True}), changed()]
        if method == "edit/redo":
            session.redo()
            return [response(req_id, method, {"ok": True}), changed()]
        if method == "proof/finish":
            obligations = session.succeed()
            self.closed = True
            return [response(req_id, method, {"obligations": obligations})]
        if method == "proof/fail":
            session.fail()
            self.closed = True
            return [response(req_id, method, {"ok": True})]
        return [error_response(req_id, method, UNKNOWN_METHOD, f"unknown method {method!r}")]


def _layout_data(session: Session) -> dict:
    return {
        "positions": {n: [x, y] for n, (x, y) in sorted(session.positions.items())},
        "pins": sorted(session.positions.pins),
    }


# ---------------------------------------------------------------------------
# Transports
# ---------------------------------------------------------------------------


def serve_stdio(engine: Engine, stdin=None, stdout=None) -> None:
    """Serve one session over standard input and output."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    for line in engine.startup_lines():
        stdout.write(line + "\n")
    stdout.flush()
    if engine.closed:
        return
    for raw in stdin:
        for line in engine.feed_line(raw):
            stdout.write(line + "\n")
        stdout.flush()
        if engine.closed:
            break


def serve_websocket(port: int, make_engine, host: str = "127.0.0.1"):
    """A websocket endpoint; one independent session per connection.

    `make_engine(params) -> Engine` builds the session from the opening
    `session/start` request (exercise selection). Returns the server; call
    `.serve_forever()` or use it as a context manager.
    """
    from websockets.sync.server import serve

    def handler(conn):
        engine: Engine | None = None
        for message in conn:
            if isinstance(message, bytes):
                message = message.decode("utf-8", errors="replace")
            if engine is None:
                engine, lines = _start_session(message, make_engine)
                for line in lines:
                    conn.send(line)
                if engine is not None and engine.closed:
                    break
                continue
            for line in engine.feed_line(message):
                conn.send(line)
            if engine.closed:
                break

    return serve(handler, host, port)


def _start_session(message: str, make_engine):
    try:
        env = json.loads(message)
        assert isinstance(env, dict)
    except Exception:
        return None, [notification("protocol/dropped", {"reason": "not valid JSON"})]
    req_id = env.get("id")
    method = env.get("method")
    if method != "session/start" or not isinstance(req_id, int):
        out = error_response(
            req_id if isinstance(req_id, int) else 0,
            str(method),
            PROTOCOL_ERROR,
            "first request must be session/start",
        )
        return None, [out]
    try:
        engine = make_engine(env.get("params") or {})
    except Exception as e:
        return None, [error_response(req_id, method, OPERATION_FAILED, str(e))]
    lines = [response(req_id, method, {"ok": True})]
    lines.extend(engine.startup_lines())
    return engine, lines
