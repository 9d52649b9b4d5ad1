"""Textual model (.tam) and query (.tq) languages.

Model grammar::

    model    := decl* template+ system
    decl     := "clock" ids ";" | "int" "[" c "," c "]" ids ";"
              | "chan" ids ";" | "broadcast" "chan" ids ";"
    template := "process" NAME "{" locdecl+ "init" NAME ";" edge* "}"
    locdecl  := ("urgent"|"committed")? "loc" NAME ("inv" conj)? ";"
    edge     := NAME "->" NAME "{" ("guard" conj ";")? ("sync" NAME ("!"|"?") ";")?
                ("assign" updates ";")? "}"
    system   := "system" NAME ("," NAME)* ";"

Constraints compare a clock, a clock difference or an integer expression
with an integer constant using ``<, <=, ==, >=, >``.  ``//`` starts a comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Union

from .core import (
    BinOp,
    ChannelDecl,
    ChannelKind,
    ClockConstraint,
    ClockReset,
    Edge,
    Expr,
    IntAssign,
    IntPredicate,
    IntVar,
    ModelError,
    Location,
    LocationKind,
    Name,
    Neg,
    Num,
    Receive,
    Send,
    TimedAutomatonTemplate,
    clock_constraints,
    constant_value,
)
from .formulas import (
    AlwaysEventually,
    AlwaysGlobally,
    And,
    BoolConst,
    Compare,
    DeadlockAtom,
    ExistsEventually,
    ExistsGlobally,
    Formula,
    LeadsTo,
    LocationAtom,
    Not,
    Or,
    Query,
)
from .network import Network, validate_network

KEYWORDS = {
    "clock", "int", "chan", "broadcast", "process", "loc", "urgent", "committed",
    "inv", "init", "guard", "sync", "assign", "system",
}
CMP_OPS = ("<", "<=", "==", ">=", ">")


@dataclass(frozen=True)
class ParseDiagnostic:
    line: int
    column: int
    message: str
    severity: str = "error"

    def __str__(self) -> str:
        return f"{self.line}:{self.column}: {self.severity}: {self.message}"


class ModelSyntaxError(ValueError):
    def __init__(self, diagnostics: list[ParseDiagnostic]) -> None:
        self.diagnostics = diagnostics
        super().__init__("; ".join(str(d) for d in diagnostics))


# ---------------------------------------------------------------------------
# lexer

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\f]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<op>E<>|A\[\]|E\[\]|A<>)(?![A-Za-z0-9_])
  | (?P<num>\d+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<sym>-->|->|:=|==|!=|<=|>=|&&|\|\||[{}()\[\];,.!?<>=+\-*/%])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # "num", "name", "sym", "eof"
    text: str
    line: int
    column: int


def tokenize(text: str, first_line: int = 1) -> list[Token]:
    tokens = []
    line, line_start, pos = first_line, 0, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ModelSyntaxError(
                [ParseDiagnostic(line, pos - line_start + 1, f"unexpected character {text[pos]!r}")]
            )
        kind = m.lastgroup
        if kind == "nl":
            line, line_start = line + 1, m.end()
        elif kind not in ("ws", "comment"):
            tokens.append(Token("sym" if kind == "op" else kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Stream:
    def __init__(self, tokens: list[Token]) -> None:
        self.tokens = tokens
        self.pos = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def error(self, message: str, tok: Token | None = None) -> ModelSyntaxError:
        tok = tok or self.current
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        return ModelSyntaxError([ParseDiagnostic(tok.line, tok.column, f"{message} (found {found})")])

    def check(self, text: str) -> bool:
        tok = self.current
        return tok.kind in ("sym", "name") and tok.text == text

    def accept(self, text: str) -> Token | None:
        if self.check(text):
            tok = self.current
            self.pos += 1
            return tok
        return None

    def expect(self, text: str) -> Token:
        tok = self.accept(text)
        if tok is None:
            raise self.error(f"expected {text!r}")
        return tok

    def name(self, what: str = "identifier") -> Token:
        tok = self.current
        if tok.kind != "name" or tok.text in KEYWORDS:
            raise self.error(f"expected {what}")
        self.pos += 1
        return tok

    def number(self) -> int:
        sign = -1 if self.accept("-") else 1
        tok = self.current
        if tok.kind != "num":
            raise self.error("expected integer")
        self.pos += 1
        return sign * int(tok.text)


# ---------------------------------------------------------------------------
# expressions


def _parse_expr(s: _Stream) -> Expr:
    left = _parse_term(s)
    while s.current.kind == "sym" and s.current.text in ("+", "-"):
        op = s.current.text
        s.pos += 1
        left = BinOp(op, left, _parse_term(s))
    return left


def _parse_term(s: _Stream) -> Expr:
    left = _parse_unary(s)
    while s.current.kind == "sym" and s.current.text in ("*", "/", "%"):
        op = s.current.text
        s.pos += 1
        left = BinOp(op, left, _parse_unary(s))
    return left


def _parse_unary(s: _Stream) -> Expr:
    if s.accept("-"):
        operand = _parse_unary(s)
        if isinstance(operand, Num) and operand.value >= 0:
            return Num(-operand.value)
        return Neg(operand)
    tok = s.current
    if tok.kind == "num":
        s.pos += 1
        return Num(int(tok.text))
    if tok.kind == "name" and tok.text not in KEYWORDS:
        s.pos += 1
        return Name(tok.text)
    if s.accept("("):
        e = _parse_expr(s)
        s.expect(")")
        return e
    raise s.error("expected expression")


def _parse_cmp(s: _Stream) -> IntPredicate:
    left = _parse_expr(s)
    tok = s.current
    if tok.kind != "sym" or tok.text not in CMP_OPS:
        raise s.error("expected comparison operator")
    s.pos += 1
    return IntPredicate(left, tok.text, _parse_expr(s))


def _parse_conj(s: _Stream) -> tuple[IntPredicate, ...]:
    out = [_parse_cmp(s)]
    while s.accept("&&"):
        out.append(_parse_cmp(s))
    return tuple(out)


# ---------------------------------------------------------------------------
# model AST


@dataclass(frozen=True)
class ClockDecl:
    names: tuple[str, ...]


@dataclass(frozen=True)
class IntDecl:
    lo: int
    hi: int
    names: tuple[str, ...]


@dataclass(frozen=True)
class ChanDecl:
    names: tuple[str, ...]
    broadcast: bool = False


Decl = Union[ClockDecl, IntDecl, ChanDecl]


@dataclass(frozen=True)
class LocDef:
    name: str
    kind: str = ""  # "", "urgent" or "committed"
    inv: tuple[IntPredicate, ...] = ()
    pos: tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class EdgeDef:
    source: str
    target: str
    guard: tuple[IntPredicate, ...] = ()
    sync: tuple[str, str] | None = None  # (channel, "!" | "?")
    updates: tuple[tuple[str, Expr], ...] = ()
    pos: tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class ProcessDef:
    name: str
    locations: tuple[LocDef, ...]
    init: str
    edges: tuple[EdgeDef, ...] = ()
    pos: tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class SourceModel:
    decls: tuple[Decl, ...]
    processes: tuple[ProcessDef, ...]
    system: tuple[str, ...]
    text: str = field(default="", compare=False, repr=False)

    def _names(self, kind) -> list[str]:
        return [n for d in self.decls if isinstance(d, kind) for n in d.names]

    @property
    def clocks(self) -> list[str]:
        return self._names(ClockDecl)

    @property
    def int_decls(self) -> list[tuple[str, int, int]]:
        return [(n, d.lo, d.hi) for d in self.decls if isinstance(d, IntDecl) for n in d.names]

    @property
    def channels(self) -> list[tuple[str, bool]]:
        return [(n, d.broadcast) for d in self.decls if isinstance(d, ChanDecl) for n in d.names]


def _ids(s: _Stream) -> tuple[str, ...]:
    names = [s.name().text]
    while s.accept(","):
        names.append(s.name().text)
    s.expect(";")
    return tuple(names)


def _parse_decl(s: _Stream) -> Decl | None:
    if s.accept("clock"):
        return ClockDecl(_ids(s))
    if s.accept("int"):
        s.expect("[")
        lo = s.number()
        s.expect(",")
        hi = s.number()
        s.expect("]")
        return IntDecl(lo, hi, _ids(s))
    if s.accept("chan"):
        return ChanDecl(_ids(s))
    if s.accept("broadcast"):
        s.expect("chan")
        return ChanDecl(_ids(s), broadcast=True)
    return None


def _parse_location(s: _Stream) -> LocDef:
    start = s.current
    kind = ""
    for k in ("urgent", "committed"):
        if s.accept(k):
            kind = k
    s.expect("loc")
    name = s.name("location name").text
    inv: tuple[IntPredicate, ...] = ()
    if s.accept("inv"):
        inv = _parse_conj(s)
    s.expect(";")
    return LocDef(name, kind, inv, (start.line, start.column))


def _parse_edge(s: _Stream) -> EdgeDef:
    start = s.current
    src = s.name("source location").text
    s.expect("->")
    tgt = s.name("target location").text
    s.expect("{")
    guard: tuple[IntPredicate, ...] = ()
    sync = None
    updates: list[tuple[str, Expr]] = []
    if s.accept("guard"):
        guard = _parse_conj(s)
        s.expect(";")
    if s.accept("sync"):
        chan = s.name("channel name").text
        if s.accept("!"):
            sync = (chan, "!")
        elif s.accept("?"):
            sync = (chan, "?")
        else:
            raise s.error("expected '!' or '?'")
        s.expect(";")
    if s.accept("assign"):
        while True:
            target = s.name("assignment target").text
            if not (s.accept(":=") or s.accept("=")):
                raise s.error("expected ':='")
            updates.append((target, _parse_expr(s)))
            if not s.accept(","):
                break
        s.expect(";")
    s.expect("}")
    return EdgeDef(src, tgt, guard, sync, tuple(updates), (start.line, start.column))


def _parse_process(s: _Stream) -> ProcessDef:
    start = s.expect("process")
    name = s.name("process name").text
    s.expect("{")
    locs = [_parse_location(s)]
    while s.check("loc") or s.check("urgent") or s.check("committed"):
        locs.append(_parse_location(s))
    s.expect("init")
    init = s.name("initial location").text
    s.expect(";")
    edges = []
    while not s.check("}"):
        edges.append(_parse_edge(s))
    s.expect("}")
    return ProcessDef(name, tuple(locs), init, tuple(edges), (start.line, start.column))


def parse_model(text: str) -> SourceModel:
    """Parse and name-check a model; raises ModelSyntaxError with diagnostics."""
    s = _Stream(tokenize(text))
    decls = []
    while (d := _parse_decl(s)) is not None:
        decls.append(d)
    processes = [_parse_process(s)]
    while s.check("process"):
        processes.append(_parse_process(s))
    s.expect("system")
    system = [s.name("process name").text]
    while s.accept(","):
        system.append(s.name("process name").text)
    s.expect(";")
    if s.current.kind != "eof":
        raise s.error("expected end of input")
    model = SourceModel(tuple(decls), tuple(processes), tuple(system), text)
    diags = check_model(model)
    if diags:
        raise ModelSyntaxError(diags)
    return model


def check_model(m: SourceModel) -> list[ParseDiagnostic]:
    """Name resolution diagnostics (positions from the parsed text)."""
    diags: list[ParseDiagnostic] = []

    def err(pos: tuple[int, int], msg: str) -> None:
        diags.append(ParseDiagnostic(max(pos[0], 1), max(pos[1], 1), msg))

    clocks = set(m.clocks)
    ints = {n for n, _, _ in m.int_decls}
    chans = {n for n, _ in m.channels}
    all_names = m.clocks + [n for n, _, _ in m.int_decls] + [n for n, _ in m.channels]
    seen: set[str] = set()
    for n in all_names:
        if n in seen:
            err((1, 1), f"duplicate declaration {n!r}")
        seen.add(n)
    for lo, hi, in ((d.lo, d.hi) for d in m.decls if isinstance(d, IntDecl)):
        if lo > hi:
            err((1, 1), f"empty integer range [{lo},{hi}]")
    procs = {p.name: p for p in m.processes}
    if len(procs) != len(m.processes):
        err((1, 1), "duplicate process name")
    for p in m.processes:
        locnames = [l.name for l in p.locations]
        if len(set(locnames)) != len(locnames):
            err(p.pos, f"duplicate location in {p.name}")
        if p.init not in locnames:
            err(p.pos, f"unknown initial location {p.init!r}")
        for l in p.locations:
            for c in l.inv:
                _check_names(c, clocks | ints, l.pos, err)
        for e in p.edges:
            for end in (e.source, e.target):
                if end not in locnames:
                    err(e.pos, f"unknown location {end!r} in {p.name}")
            for c in e.guard:
                _check_names(c, clocks | ints, e.pos, err)
            if e.sync and e.sync[0] not in chans:
                err(e.pos, f"unknown channel {e.sync[0]!r}")
            for target, expr in e.updates:
                if target not in clocks | ints:
                    err(e.pos, f"unknown assignment target {target!r}")
                if target in clocks and (expr.names() or constant_value(expr) < 0):
                    err(e.pos, f"clock {target!r} must be assigned a non-negative constant")
                for n in expr.names():
                    if n not in ints:
                        err(e.pos, f"unknown integer {n!r}")
    for n in m.system:
        if n not in procs:
            err((1, 1), f"unknown process {n!r} in system")
    if len(set(m.system)) != len(m.system):
        err((1, 1), "process instantiated twice")
    return diags


def _check_names(c: IntPredicate, known: set[str], pos, err) -> None:
    for n in sorted(c.names()):
        if n not in known:
            err(pos, f"unknown identifier {n!r}")


# ---------------------------------------------------------------------------
# printing


def _render_conj(cs) -> str:
    return " && ".join(c.render() for c in cs)


def print_model(m: SourceModel) -> str:
    lines = []
    for d in m.decls:
        if isinstance(d, ClockDecl):
            lines.append(f"clock {', '.join(d.names)};")
        elif isinstance(d, IntDecl):
            lines.append(f"int[{d.lo},{d.hi}] {', '.join(d.names)};")
        else:
            prefix = "broadcast chan" if d.broadcast else "chan"
            lines.append(f"{prefix} {', '.join(d.names)};")
    for p in m.processes:
        lines.append("")
        lines.append(f"process {p.name} {{")
        for l in p.locations:
            head = f"{l.kind} loc" if l.kind else "loc"
            inv = f" inv {_render_conj(l.inv)}" if l.inv else ""
            lines.append(f"  {head} {l.name}{inv};")
        lines.append(f"  init {p.init};")
        for e in p.edges:
            body = []
            if e.guard:
                body.append(f"guard {_render_conj(e.guard)};")
            if e.sync:
                body.append(f"sync {e.sync[0]}{e.sync[1]};")
            if e.updates:
                ups = ", ".join(f"{t} := {x.render()}" for t, x in e.updates)
                body.append(f"assign {ups};")
            inner = " ".join(body)
            lines.append(f"  {e.source} -> {e.target} {{ {inner} }}" if inner else f"  {e.source} -> {e.target} {{ }}")
        lines.append("}")
    lines.append("")
    lines.append(f"system {', '.join(m.system)};")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# building networks


def _clock_form(c: IntPredicate, clocks: dict[str, int]) -> tuple[ClockConstraint, ...] | None:
    """Clock constraints for ``c`` or None if ``c`` mentions no clock."""
    names = c.names()
    if not names & clocks.keys():
        return None
    flip = {"<": ">", "<=": ">=", "==": "==", ">=": "<=", ">": "<"}
    for lhs, op, rhs in ((c.left, c.op, c.right), (c.right, flip[c.op], c.left)):
        value = constant_value(rhs)
        if value is None:
            continue
        if isinstance(lhs, Name) and lhs.name in clocks:
            return clock_constraints(clocks[lhs.name], 0, op, value)
        if (
            isinstance(lhs, BinOp)
            and lhs.op == "-"
            and isinstance(lhs.left, Name)
            and isinstance(lhs.right, Name)
            and lhs.left.name in clocks
            and lhs.right.name in clocks
        ):
            return clock_constraints(clocks[lhs.left.name], clocks[lhs.right.name], op, value)
    raise ModelSyntaxError(
        [ParseDiagnostic(1, 1, f"unsupported clock constraint {c.render()!r}")]
    )


def build_template(p: ProcessDef, m: SourceModel) -> TimedAutomatonTemplate:
    clocks = {n: k + 1 for k, n in enumerate(m.clocks)}
    ints = tuple(
        IntVar(n, lo, hi, 0 if lo <= 0 <= hi else lo) for n, lo, hi in m.int_decls
    )
    index = {l.name: k for k, l in enumerate(p.locations)}
    kinds = {"": LocationKind.NORMAL, "urgent": LocationKind.URGENT, "committed": LocationKind.COMMITTED}
    locations = []
    for k, l in enumerate(p.locations):
        inv: list[ClockConstraint] = []
        for c in l.inv:
            form = _clock_form(c, clocks)
            if form is None:
                raise ModelSyntaxError(
                    [ParseDiagnostic(*l.pos, "invariants may only constrain clocks")]
                )
            inv.extend(form)
        locations.append(Location(k, l.name, kinds[l.kind], tuple(inv)))
    edges = []
    for e in p.edges:
        cg: list[ClockConstraint] = []
        ig: list[IntPredicate] = []
        for c in e.guard:
            form = _clock_form(c, clocks)
            if form is None:
                ig.append(c)
            else:
                cg.extend(form)
        sync = None
        if e.sync:
            sync = Send(e.sync[0]) if e.sync[1] == "!" else Receive(e.sync[0])
        resets = tuple(
            ClockReset(clocks[t], constant_value(x)) for t, x in e.updates if t in clocks
        )
        assigns = tuple(IntAssign(t, x) for t, x in e.updates if t not in clocks)
        edges.append(
            Edge(index[e.source], index[e.target], tuple(cg), tuple(ig), sync, resets, assigns)
        )
    return TimedAutomatonTemplate(
        p.name, tuple(locations), index[p.init], tuple(edges), tuple(m.clocks), ints
    )


def build_network(m: SourceModel) -> Network:
    procs = {p.name: p for p in m.processes}
    templates = tuple(build_template(procs[n], m) for n in m.system)
    channels = tuple(
        ChannelDecl(n, ChannelKind.BROADCAST if b else ChannelKind.BINARY) for n, b in m.channels
    )
    ints = templates[0].ints if templates else ()
    net = Network(templates, tuple(m.clocks), ints, channels)
    problems = validate_network(net)
    if problems:
        raise ModelError("; ".join(d.message for d in problems))
    return net


def load_network(text: str) -> Network:
    return build_network(parse_model(text))


# ---------------------------------------------------------------------------
# queries


def _parse_formula(s: _Stream) -> Formula:
    left = _parse_and(s)
    while s.accept("or") or s.accept("||"):
        left = Or(left, _parse_and(s))
    return left


def _parse_and(s: _Stream) -> Formula:
    left = _parse_not(s)
    while s.accept("and") or s.accept("&&"):
        left = And(left, _parse_not(s))
    return left


def _parse_not(s: _Stream) -> Formula:
    if s.accept("not") or s.accept("!"):
        return Not(_parse_not(s))
    return _parse_atom(s)


def _parse_atom(s: _Stream) -> Formula:
    tok = s.current
    if tok.kind == "name":
        if tok.text == "deadlock":
            s.pos += 1
            return DeadlockAtom()
        if tok.text in ("true", "false"):
            s.pos += 1
            return BoolConst(tok.text == "true")
        if s.peek().text == "." and s.peek().kind == "sym":
            s.pos += 2
            loc = s.name("location name")
            return LocationAtom(tok.text, loc.text)
    mark = s.pos
    try:
        left = _parse_expr(s)
        op = s.current
        if op.kind == "sym" and op.text in CMP_OPS + ("!=",):
            s.pos += 1
            return Compare(left, op.text, _parse_expr(s))
        raise s.error("expected comparison operator")
    except ModelSyntaxError:
        s.pos = mark
        if not s.accept("("):
            raise
    inner = _parse_formula(s)
    s.expect(")")
    return inner


_PREFIX = {
    "E<>": ExistsEventually,
    "A[]": AlwaysGlobally,
    "E[]": ExistsGlobally,
    "A<>": AlwaysEventually,
}


def parse_query(text: str, line: int = 1) -> Query:
    s = _Stream(tokenize(text, first_line=line))
    tok = s.current
    if tok.kind == "sym" and tok.text in _PREFIX:
        s.pos += 1
        q: Query = _PREFIX[tok.text](_parse_formula(s))
    else:
        premise = _parse_formula(s)
        s.expect("-->")
        q = LeadsTo(premise, _parse_formula(s))
    if s.current.kind != "eof":
        raise s.error("expected end of query")
    return q


def parse_queries(text: str) -> list[Query]:
    """One query per line; blank lines and ``//`` comments are skipped."""
    out, diags = [], []
    for n, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("//", 1)[0]
        if not body.strip():
            continue
        try:
            out.append(parse_query(body, n))
        except ModelSyntaxError as exc:
            diags.extend(exc.diagnostics)
    if diags:
        raise ModelSyntaxError(diags)
    return out


def iter_query_lines(text: str) -> Iterator[str]:
    for raw in text.splitlines():
        body = raw.split("//", 1)[0].strip()
        if body:
            yield body
