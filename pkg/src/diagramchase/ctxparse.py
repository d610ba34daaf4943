"""Parser for the declarative context file format.

The format is UTF-8 and line-oriented; `#` starts a comment. Composition
is written `.` in diagrammatic order, `I` is an identity whose endpoint is
inferred from its neighbours (or given explicitly as `I[a]`), and functor
or map application is juxtaposition, as in `F x` or `f m`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .context import Binder, Context, ContextError, LemmaStatement
from .terms import (
    App,
    CatSort,
    Comp,
    Const,
    FMor,
    FObj,
    FunctSort,
    Id,
    MapSort,
    Meta,
    MorSort,
    ObjSort,
    Sort,
    Term,
    TermError,
    sort_of,
)


class ParseError(Exception):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"line {line}, column {col}: {message}" if line else message)
        self.line = line
        self.col = col


@dataclass
class Token:
    kind: str  # "ident" | "meta" | "sym"
    text: str
    line: int
    col: int


_SYMBOLS = ("->", "=>", "(", ")", "{", "}", "[", "]", ":", ",", "=", ".", "@", ";", "<", ">")
_IDENT_START = re.compile(r"[A-Za-z_]")
_IDENT_CONT = re.compile(r"[A-Za-z0-9_']")


def tokenize(text: str, line_no: int = 1) -> list[Token]:
    tokens: list[Token] = []
    for off, raw in enumerate(text.split("\n")):
        line = line_no + off
        i = 0
        n = len(raw)
        while i < n:
            ch = raw[i]
            if ch in " \t\r":
                i += 1
                continue
            if ch == "#":
                break
            col = i + 1
            if ch == "?" and i + 1 < n and _IDENT_START.match(raw[i + 1]):
                j = i + 1
                while j < n and (
                    _IDENT_CONT.match(raw[j])
                    or (raw[j] == "-" and j + 1 < n and _IDENT_CONT.match(raw[j + 1]))
                ):
                    j += 1
                tokens.append(Token("meta", raw[i + 1 : j], line, col))
                i = j
                continue
            if _IDENT_START.match(ch):
                j = i
                while j < n and (
                    _IDENT_CONT.match(raw[j])
                    or (raw[j] == "-" and j + 1 < n and _IDENT_CONT.match(raw[j + 1]))
                ):
                    j += 1
                tokens.append(Token("ident", raw[i:j], line, col))
                i = j
                continue
            matched = False
            for sym in _SYMBOLS:
                if raw.startswith(sym, i):
                    tokens.append(Token("sym", sym, line, col))
                    i += len(sym)
                    matched = True
                    break
            if not matched:
                raise ParseError(f"unexpected character {ch!r}", line, col)
    return tokens


class _Stream:
    def __init__(self, tokens: list[Token], line: int):
        self.tokens = tokens
        self.pos = 0
        self.line = line

    def peek(self) -> Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self) -> Token:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of line", self.line)
        self.pos += 1
        return tok

    def expect(self, text: str) -> Token:
        tok = self.next()
        if tok.text != text:
            raise ParseError(f"expected {text!r}, got {tok.text!r}", tok.line, tok.col)
        return tok

    def at(self, text: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.text == text

    def done(self) -> bool:
        return self.pos >= len(self.tokens)


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------


class _IdHole:
    """Placeholder for `I` whose endpoint is still to be inferred."""

    __slots__ = ("token",)

    def __init__(self, token: Token):
        self.token = token


def _parse_term(ts: _Stream, ctx: Context, scope: dict[str, Term]):
    """Parse a composition chain.

    The result is a Term whose Comp tree may still contain _IdHole leaves;
    `_finalize` infers their endpoints once the whole statement is known.
    """
    t = _parse_app(ts, ctx, scope)
    while ts.at("."):
        ts.next()
        t = Comp(t, _parse_app(ts, ctx, scope))
    return t


def _has_hole(t) -> bool:
    if isinstance(t, _IdHole):
        return True
    if isinstance(t, Comp):
        return _has_hole(t.first) or _has_hole(t.second)
    return False


def _finalize(t, ts: _Stream):
    """Fill identity holes from their neighbours in the flattened chain."""
    if not _has_hole(t):
        return t

    flat: list = []

    def leaves(node):
        if isinstance(node, Comp):
            leaves(node.first)
            leaves(node.second)
        else:
            flat.append(node)

    leaves(t)
    resolved: list[Term | None] = [
        None if isinstance(f, _IdHole) else f for f in flat
    ]

    def settle(order):
        for i in order:
            if resolved[i] is not None:
                continue
            if i > 0 and resolved[i - 1] is not None:
                s = sort_of(resolved[i - 1])
                if isinstance(s, MorSort):
                    resolved[i] = Id(s.dst)
                    continue
            if i + 1 < len(flat) and resolved[i + 1] is not None:
                s = sort_of(resolved[i + 1])
                if isinstance(s, MorSort):
                    resolved[i] = Id(s.src)

    settle(range(len(flat)))
    settle(range(len(flat) - 1, -1, -1))
    settle(range(len(flat)))
    for i, f in enumerate(flat):
        if resolved[i] is None:
            tok = f.token if isinstance(f, _IdHole) else None
            raise ParseError(
                "cannot infer identity endpoint",
                tok.line if tok else ts.line,
                tok.col if tok else 0,
            )

    it = iter(resolved)

    def rebuild(node):
        if isinstance(node, Comp):
            first = rebuild(node.first)
            return Comp(first, rebuild(node.second))
        return next(it)

    return rebuild(t)


_KEYWORDS = ("in", "forall", "exists")


def _parse_app(ts: _Stream, ctx: Context, scope: dict[str, Term]):
    head = _parse_atom(ts, ctx, scope)
    while True:
        tok = ts.peek()
        if tok is None or tok.text in (")", "]", "}", ".", "=", ",", "->", "=>", ";", ":", "<", ">"):
            return head
        if tok.kind == "ident" and tok.text in _KEYWORDS:
            return head
        arg = _parse_atom(ts, ctx, scope)
        head = _apply(_finalize(head, ts), _finalize(arg, ts), tok)


def _apply(head, arg, tok: Token) -> Term:
    if isinstance(head, _IdHole) or isinstance(arg, _IdHole):
        raise ParseError("identity cannot be applied", tok.line, tok.col)
    try:
        hs = sort_of(head)
        as_ = sort_of(arg)
    except TermError as e:
        raise ParseError(str(e), tok.line, tok.col)
    if isinstance(hs, FunctSort):
        if isinstance(as_, ObjSort):
            return FObj(head, arg)
        if isinstance(as_, MorSort):
            return FMor(head, arg)
        raise ParseError("functor applied to a non-object", tok.line, tok.col)
    if isinstance(hs, MapSort):
        return App(head, arg)
    raise ParseError("term is not applicable", tok.line, tok.col)


def _parse_atom(ts: _Stream, ctx: Context, scope: dict[str, Term]):
    tok = ts.next()
    if tok.text == "(":
        inner = _parse_term(ts, ctx, scope)
        ts.expect(")")
        return inner
    if tok.kind == "meta":
        if tok.text in scope:
            return scope[tok.text]
        raise ParseError(f"unknown metavariable ?{tok.text}", tok.line, tok.col)
    if tok.kind != "ident":
        raise ParseError(f"unexpected {tok.text!r}", tok.line, tok.col)
    if tok.text == "I":
        if ts.at("["):
            ts.next()
            obj = _parse_term(ts, ctx, scope)
            ts.expect("]")
            if _has_hole(obj):
                raise ParseError("identity of an identity", tok.line, tok.col)
            return Id(obj)
        return _IdHole(tok)
    if tok.text in scope:
        return scope[tok.text]
    c = ctx.lookup_const(tok.text)
    if c is None:
        raise ParseError(f"undeclared name {tok.text!r}", tok.line, tok.col)
    return c


def parse_term(text: str, ctx: Context, scope: dict[str, Term] | None = None, line: int = 1) -> Term:
    """Parse a standalone term (used by insert and the protocol)."""
    ts = _Stream(tokenize(text, line), line)
    t = _finalize(_parse_term(ts, ctx, scope or {}), ts)
    if not ts.done():
        tok = ts.peek()
        raise ParseError(f"trailing input {tok.text!r}", tok.line, tok.col)
    return t


def parse_equality(text: str, ctx: Context, scope: dict[str, Term] | None = None, line: int = 1):
    ts = _Stream(tokenize(text, line), line)
    lhs, rhs = _parse_eq(ts, ctx, scope or {})
    if not ts.done():
        tok = ts.peek()
        raise ParseError(f"trailing input {tok.text!r}", tok.line, tok.col)
    return lhs, rhs


def _parse_eq(ts: _Stream, ctx: Context, scope: dict[str, Term]):
    lhs = _parse_term(ts, ctx, scope)
    eq = ts.expect("=")
    rhs = _parse_term(ts, ctx, scope)
    try:
        return _finalize(lhs, ts), _finalize(rhs, ts)
    except ParseError:
        raise ParseError(
            "bare I needs an explicit endpoint here, write I[a]", eq.line, eq.col
        )


# ---------------------------------------------------------------------------
# Declarations
# ---------------------------------------------------------------------------


def parse_context(text: str) -> Context:
    """Parse a full context file into a sorted Context."""
    ctx = Context()
    for line_no, raw in enumerate(text.split("\n"), start=1):
        tokens = tokenize(raw, line_no)
        if not tokens:
            continue
        ts = _Stream(tokens, line_no)
        head = ts.next()
        try:
            _parse_decl(head, ts, ctx)
        except (ContextError, TermError) as e:
            raise ParseError(str(e), head.line, head.col)
        if not ts.done():
            tok = ts.peek()
            raise ParseError(f"trailing input {tok.text!r}", tok.line, tok.col)
    return ctx


def parse_library(text: str, ctx: Context) -> list[str]:
    """Load a lemma library file: `lemma` lines only, same grammar.

    Library lemmas are added to the context's lemma table; they must be
    fully quantified (category binders and all), since they cannot see any
    context-local names that a different context would lack.
    """
    added: list[str] = []
    for line_no, raw in enumerate(text.split("\n"), start=1):
        tokens = tokenize(raw, line_no)
        if not tokens:
            continue
        ts = _Stream(tokens, line_no)
        head = ts.next()
        if head.text != "lemma":
            raise ParseError("library files contain only lemma lines", head.line, head.col)
        name = _name(ts)
        ts.expect(":")
        try:
            stmt = _parse_lemma(name, ts, ctx)
            ctx.add_lemma(stmt)
        except (ContextError, TermError) as e:
            raise ParseError(str(e), head.line, head.col)
        added.append(name)
        if not ts.done():
            tok = ts.peek()
            raise ParseError(f"trailing input {tok.text!r}", tok.line, tok.col)
    return added


def _parse_decl(head: Token, ts: _Stream, ctx: Context) -> None:
    if head.text == "category":
        for name in _name_list(ts):
            ctx.declare_category(name)
        return
    if head.text == "object":
        names = _name_list_until(ts, ":")
        ts.expect(":")
        cat = _category_term(ts, ctx)
        for name in names:
            ctx.declare_object(name, cat)
        return
    if head.text == "morphism":
        names = _name_list_until(ts, ":")
        ts.expect(":")
        sort = _morphism_sort(ts, ctx, {})
        for name in names:
            ctx.declare_morphism(name, sort.cat, sort.src, sort.dst)
        return
    if head.text == "functor":
        names = _name_list_until(ts, ":")
        ts.expect(":")
        src = _category_term(ts, ctx)
        ts.expect("=>")
        dst = _category_term(ts, ctx)
        for name in names:
            ctx.declare_functor(name, src, dst)
        return
    if head.text == "map":
        names = _name_list_until(ts, ":")
        ts.expect(":")
        sort = _map_sort(ts, ctx)
        for name in names:
            ctx.declare_map(name, sort)
        return
    if head.text == "hypothesis":
        name = _name(ts)
        ts.expect(":")
        lhs, rhs = _parse_eq(ts, ctx, {})
        ctx.add_hypothesis(name, lhs, rhs)
        return
    if head.text == "lemma":
        name = _name(ts)
        ts.expect(":")
        stmt = _parse_lemma(name, ts, ctx)
        ctx.add_lemma(stmt)
        return
    if head.text == "goal":
        name = _name(ts)
        ts.expect(":")
        lhs, rhs = _parse_eq(ts, ctx, {})
        ctx.add_goal(lhs, rhs, name)
        return
    raise ParseError(f"unknown declaration {head.text!r}", head.line, head.col)


def _name(ts: _Stream) -> str:
    tok = ts.next()
    if tok.kind != "ident":
        raise ParseError(f"expected a name, got {tok.text!r}", tok.line, tok.col)
    return tok.text


def _name_list(ts: _Stream) -> list[str]:
    names = []
    while not ts.done():
        names.append(_name(ts))
    if not names:
        raise ParseError("expected at least one name", ts.line)
    return names


def _name_list_until(ts: _Stream, stop: str) -> list[str]:
    names = []
    while not ts.at(stop):
        names.append(_name(ts))
    if not names:
        raise ParseError("expected at least one name", ts.line)
    return names


def _category_term(ts: _Stream, ctx: Context, scope: dict[str, Term] | None = None) -> Term:
    t = _finalize(_parse_term(ts, ctx, scope or {}), ts)
    if not isinstance(sort_of(t), CatSort):
        raise ParseError("expected a category", ts.line)
    return t


def _morphism_sort(ts: _Stream, ctx: Context, scope: dict[str, Term]) -> MorSort:
    src = _parse_term(ts, ctx, scope)
    arrow = ts.expect("->")
    dst = _parse_term(ts, ctx, scope)
    if _has_hole(src) or _has_hole(dst):
        raise ParseError("identities are not objects", arrow.line, arrow.col)
    ss = sort_of(src)
    ds = sort_of(dst)
    if not isinstance(ss, ObjSort) or not isinstance(ds, ObjSort):
        raise ParseError("morphism endpoints must be objects", arrow.line, arrow.col)
    if ss.cat != ds.cat:
        raise ParseError("morphism endpoints live in different categories", arrow.line, arrow.col)
    if ts.at("in"):
        ts.next()
        cat = _category_term(ts, ctx, scope)
        if cat != ss.cat:
            raise ParseError("stated category does not match the endpoints", arrow.line, arrow.col)
    return MorSort(ss.cat, src, dst)


def _map_sort(ts: _Stream, ctx: Context) -> MapSort:
    parts: list[Sort] = [_map_atom(ts, ctx)]
    while ts.at("=>"):
        ts.next()
        parts.append(_map_atom(ts, ctx))
    if ts.at("in"):
        ts.next()
        _category_term(ts, ctx)
    if len(parts) < 2:
        raise ParseError("a map needs an argument and a result type", ts.line)
    sort = parts[-1]
    for p in reversed(parts[:-1]):
        sort = MapSort(p, sort)
    return sort


def _map_atom(ts: _Stream, ctx: Context) -> Sort:
    ts.expect("(")
    sort = _morphism_sort(ts, ctx, {})
    ts.expect(")")
    return sort


# ---------------------------------------------------------------------------
# Lemmas
# ---------------------------------------------------------------------------


def _parse_lemma(name: str, ts: _Stream, ctx: Context) -> LemmaStatement:
    binders: list[Binder] = []
    scope: dict[str, Term] = {}
    while True:
        tok = ts.peek()
        if tok is not None and tok.text in ("forall", "exists"):
            quant = ts.next().text
            while ts.at("(") or ts.at("{"):
                implicit = ts.peek().text == "{"
                close = "}" if implicit else ")"
                ts.next()
                names = _name_list_until(ts, ":")
                ts.expect(":")
                sort = _binder_sort(ts, ctx, scope)
                ts.expect(close)
                for bn in names:
                    meta = ctx.fresh_meta(sort, hint=bn)
                    scope[bn] = meta
                    binders.append(Binder(bn, meta, quant, implicit))
            ts.expect(",")
            continue
        break
    lhs, rhs = _parse_eq_tokens(ts, ctx, scope)
    return LemmaStatement(name, tuple(binders), lhs, rhs)


def _parse_eq_tokens(ts: _Stream, ctx: Context, scope: dict[str, Term]):
    return _parse_eq(ts, ctx, scope)


def _binder_sort(ts: _Stream, ctx: Context, scope: dict[str, Term]) -> Sort:
    tok = ts.peek()
    if tok is not None and tok.text == "category" and tok.kind == "ident":
        ts.next()
        return CatSort()
    if tok is not None and tok.text == "(":
        # parenthesized morphism types mean a map binder
        return _map_sort_scoped(ts, ctx, scope)
    first = _parse_term(ts, ctx, scope)
    nxt = ts.peek()
    if nxt is not None and nxt.text == "->":
        ts.next()
        dst = _parse_term(ts, ctx, scope)
        if _has_hole(first) or _has_hole(dst):
            raise ParseError("identities are not objects", nxt.line, nxt.col)
        ss = sort_of(first)
        if not isinstance(ss, ObjSort):
            raise ParseError("morphism endpoints must be objects", nxt.line, nxt.col)
        if ts.at("in"):
            ts.next()
            _category_term(ts, ctx, scope)
        return MorSort(ss.cat, first, dst)
    if nxt is not None and nxt.text == "=>":
        ts.next()
        dst_cat = _parse_term(ts, ctx, scope)
        if not isinstance(sort_of(first), CatSort):
            raise ParseError("functor endpoints must be categories", nxt.line, nxt.col)
        return FunctSort(first, dst_cat)
    if nxt is not None and nxt.text == "=":
        ts.next()
        rhs = _parse_term(ts, ctx, scope)
        from .terms import eq_statement

        return eq_statement(_finalize(first, ts), _finalize(rhs, ts))
    if _has_hole(first):
        raise ParseError("unexpected identity", ts.line)
    s = sort_of(first)
    if isinstance(s, CatSort):
        return ObjSort(first)
    raise ParseError("binder type must name a category or a sort", ts.line)


def _map_sort_scoped(ts: _Stream, ctx: Context, scope: dict[str, Term]) -> Sort:
    parts: list[Sort] = []
    while True:
        ts.expect("(")
        parts.append(_morphism_sort(ts, ctx, scope))
        ts.expect(")")
        if ts.at("=>"):
            ts.next()
            continue
        break
    if ts.at("in"):
        ts.next()
        _category_term(ts, ctx, scope)
    if len(parts) == 1:
        return parts[0]
    sort: Sort = parts[-1]
    for p in reversed(parts[:-1]):
        sort = MapSort(p, sort)
    return sort
