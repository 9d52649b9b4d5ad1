"""Timed-automaton building blocks: clocks, bounds, constraints, locations, edges."""

from __future__ import annotations

import enum
import functools
import operator
from dataclasses import dataclass, field
from typing import Callable, Mapping, Union

INT_MIN = -32768
INT_MAX = 32767

ZERO_CLOCK = 0


class ModelError(ValueError):
    """Raised for structurally invalid models or runtime model faults."""


# ---------------------------------------------------------------------------
# bounds

# Packed encoding: raw = 2*value + (1 if weak else 0).  Ordering of raw ints
# is the bound ordering; INF sits above every finite bound.
INF = 1 << 62
LE_ZERO = 1
LT_ZERO = 0


def raw_bound(value: int, weak: bool) -> int:
    return (value << 1) | (1 if weak else 0)


def raw_add(a: int, b: int) -> int:
    if a == INF or b == INF:
        return INF
    return (((a >> 1) + (b >> 1)) << 1) | (a & b & 1)


def raw_negate(a: int) -> int:
    # (< c) -> (<= -c), (<= c) -> (< -c)
    return 1 - a


class BoundKind(enum.Enum):
    STRICT = "<"
    WEAK = "<="
    UNBOUNDED = "inf"


@functools.total_ordering
@dataclass(frozen=True)
class Bound:
    kind: BoundKind
    value: int = 0

    def __post_init__(self) -> None:
        if self.kind is BoundKind.UNBOUNDED and self.value != 0:
            object.__setattr__(self, "value", 0)

    @classmethod
    def weak(cls, value: int) -> Bound:
        return cls(BoundKind.WEAK, value)

    @classmethod
    def strict(cls, value: int) -> Bound:
        return cls(BoundKind.STRICT, value)

    @classmethod
    def unbounded(cls) -> Bound:
        return cls(BoundKind.UNBOUNDED)

    @classmethod
    def from_raw(cls, raw: int) -> Bound:
        if raw == INF:
            return cls.unbounded()
        return cls(BoundKind.WEAK if raw & 1 else BoundKind.STRICT, raw >> 1)

    @property
    def raw(self) -> int:
        if self.kind is BoundKind.UNBOUNDED:
            return INF
        return raw_bound(self.value, self.kind is BoundKind.WEAK)

    def __lt__(self, other: Bound) -> bool:
        return self.raw < other.raw

    def __str__(self) -> str:
        if self.kind is BoundKind.UNBOUNDED:
            return "<inf"
        return f"{self.kind.value}{self.value}"


@dataclass(frozen=True)
class ClockConstraint:
    """``x_left - x_right (< | <=) value``; clock 0 is the constant zero."""

    left: int
    right: int
    bound: Bound

    def __post_init__(self) -> None:
        if self.left == self.right:
            raise ModelError("constraint must relate two distinct clocks")
        if self.left < 0 or self.right < 0:
            raise ModelError("clock index must be non-negative")

    @property
    def is_diagonal(self) -> bool:
        return self.left != ZERO_CLOCK and self.right != ZERO_CLOCK

    @property
    def is_upper(self) -> bool:
        return self.right == ZERO_CLOCK

    def render(self, names: tuple[str, ...]) -> str:
        def n(i: int) -> str:
            return names[i - 1] if 0 < i <= len(names) else f"x{i}"

        b = self.bound
        if b.kind is BoundKind.UNBOUNDED:
            return "true"
        op = b.kind.value
        if self.right == ZERO_CLOCK:
            return f"{n(self.left)}{op}{b.value}"
        if self.left == ZERO_CLOCK:
            flipped = ">" if b.kind is BoundKind.STRICT else ">="
            return f"{n(self.right)}{flipped}{-b.value}"
        return f"{n(self.left)}-{n(self.right)}{op}{b.value}"


def negate_constraint(c: ClockConstraint) -> ClockConstraint:
    """Constraint satisfied by exactly the valuations that violate ``c``."""
    if c.bound.kind is BoundKind.UNBOUNDED:
        raise ModelError("cannot negate a tautology into a clock constraint")
    return ClockConstraint(c.right, c.left, Bound.from_raw(raw_negate(c.bound.raw)))


def upper(clock: int, value: int, strict: bool = False) -> ClockConstraint:
    kind = BoundKind.STRICT if strict else BoundKind.WEAK
    return ClockConstraint(clock, ZERO_CLOCK, Bound(kind, value))


def lower(clock: int, value: int, strict: bool = False) -> ClockConstraint:
    kind = BoundKind.STRICT if strict else BoundKind.WEAK
    return ClockConstraint(ZERO_CLOCK, clock, Bound(kind, -value))


def clock_constraints(
    left: int, right: int, op: str, value: int
) -> tuple[ClockConstraint, ...]:
    """Encode ``x_left - x_right op value``; ``==`` yields two conjuncts."""
    if op == "<":
        return (ClockConstraint(left, right, Bound.strict(value)),)
    if op == "<=":
        return (ClockConstraint(left, right, Bound.weak(value)),)
    if op == ">":
        return (ClockConstraint(right, left, Bound.strict(-value)),)
    if op == ">=":
        return (ClockConstraint(right, left, Bound.weak(-value)),)
    if op == "==":
        return (
            ClockConstraint(left, right, Bound.weak(value)),
            ClockConstraint(right, left, Bound.weak(-value)),
        )
    raise ModelError(f"unsupported clock comparison {op!r}")


# ---------------------------------------------------------------------------
# integer expressions


_BINOPS: dict[str, Callable[[int, int], int]] = {
    "+": operator.add,
    "-": operator.sub,
    "*": operator.mul,
    "/": lambda a, b: int(a / b),
    "%": lambda a, b: a - b * int(a / b),
}

_COMPARE: dict[str, Callable[[int, int], bool]] = {
    "<": operator.lt,
    "<=": operator.le,
    "==": operator.eq,
    "!=": operator.ne,
    ">=": operator.ge,
    ">": operator.gt,
}

_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2, "%": 2}


@dataclass(frozen=True)
class Num:
    value: int

    def eval(self, env: Mapping[str, int]) -> int:
        return self.value

    def names(self) -> frozenset[str]:
        return frozenset()

    def render(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class Name:
    name: str

    def eval(self, env: Mapping[str, int]) -> int:
        try:
            return env[self.name]
        except KeyError:
            raise ModelError(f"unknown integer variable {self.name!r}") from None

    def names(self) -> frozenset[str]:
        return frozenset((self.name,))

    def render(self) -> str:
        return self.name


@dataclass(frozen=True)
class Neg:
    operand: Expr

    def eval(self, env: Mapping[str, int]) -> int:
        return -self.operand.eval(env)

    def names(self) -> frozenset[str]:
        return self.operand.names()

    def render(self) -> str:
        inner = self.operand.render()
        if isinstance(self.operand, BinOp):
            inner = f"({inner})"
        return f"-{inner}"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: Expr
    right: Expr

    def eval(self, env: Mapping[str, int]) -> int:
        a, b = self.left.eval(env), self.right.eval(env)
        if self.op in "/%" and b == 0:
            raise ModelError("division by zero")
        return _BINOPS[self.op](a, b)

    def names(self) -> frozenset[str]:
        return self.left.names() | self.right.names()

    def render(self) -> str:
        prec = _PRECEDENCE[self.op]
        lhs, rhs = self.left.render(), self.right.render()
        if isinstance(self.left, BinOp) and _PRECEDENCE[self.left.op] < prec:
            lhs = f"({lhs})"
        if isinstance(self.right, BinOp) and _PRECEDENCE[self.right.op] <= prec:
            rhs = f"({rhs})"
        return f"{lhs} {self.op} {rhs}"


Expr = Union[Num, Name, Neg, BinOp]


def constant_value(expr: Expr) -> int | None:
    """Value of a variable-free expression, else None."""
    if expr.names():
        return None
    return expr.eval({})


@dataclass(frozen=True)
class IntPredicate:
    left: Expr
    op: str
    right: Expr

    def holds(self, env: Mapping[str, int]) -> bool:
        return _COMPARE[self.op](self.left.eval(env), self.right.eval(env))

    def names(self) -> frozenset[str]:
        return self.left.names() | self.right.names()

    def render(self) -> str:
        return f"{self.left.render()} {self.op} {self.right.render()}"


# ---------------------------------------------------------------------------
# automata


class LocationKind(enum.Enum):
    NORMAL = "normal"
    URGENT = "urgent"
    COMMITTED = "committed"


@dataclass(frozen=True)
class Location:
    id: int
    name: str
    kind: LocationKind = LocationKind.NORMAL
    invariant: tuple[ClockConstraint, ...] = ()

    @property
    def stops_time(self) -> bool:
        return self.kind is not LocationKind.NORMAL


class ChannelKind(enum.Enum):
    BINARY = "binary"
    BROADCAST = "broadcast"


@dataclass(frozen=True)
class ChannelDecl:
    name: str
    kind: ChannelKind = ChannelKind.BINARY


@dataclass(frozen=True)
class Send:
    channel: str

    def render(self) -> str:
        return f"{self.channel}!"


@dataclass(frozen=True)
class Receive:
    channel: str

    def render(self) -> str:
        return f"{self.channel}?"


SyncLabel = Union[Send, Receive, None]  # None is the internal (tau) action


@dataclass(frozen=True)
class ClockReset:
    clock: int
    value: int


@dataclass(frozen=True)
class IntAssign:
    name: str
    expr: Expr


@dataclass(frozen=True)
class Edge:
    source: int
    target: int
    clock_guard: tuple[ClockConstraint, ...] = ()
    int_guard: tuple[IntPredicate, ...] = ()
    sync: SyncLabel = None
    resets: tuple[ClockReset, ...] = ()
    assigns: tuple[IntAssign, ...] = ()


@dataclass(frozen=True)
class IntVar:
    name: str
    lo: int = INT_MIN
    hi: int = INT_MAX
    init: int = 0


@dataclass(frozen=True)
class TimedAutomatonTemplate:
    """One process: the (L, l0, C, A, E, I) tuple plus bounded integers.

    ``clocks`` lists the clock names in scope; clock index ``i`` (1-based) in
    any constraint or reset refers to ``clocks[i - 1]``.
    """

    name: str
    locations: tuple[Location, ...]
    initial: int
    edges: tuple[Edge, ...] = ()
    clocks: tuple[str, ...] = ()
    ints: tuple[IntVar, ...] = ()

    def location_named(self, name: str) -> Location:
        for loc in self.locations:
            if loc.name == name:
                return loc
        raise KeyError(name)

    def edges_from(self, loc: int) -> list[tuple[int, Edge]]:
        return [(k, e) for k, e in enumerate(self.edges) if e.source == loc]


@dataclass(frozen=True)
class Diagnostic:
    message: str
    location: int | None = None
    edge: int | None = None

    def __str__(self) -> str:
        where = []
        if self.location is not None:
            where.append(f"location {self.location}")
        if self.edge is not None:
            where.append(f"edge {self.edge}")
        prefix = f"[{', '.join(where)}] " if where else ""
        return prefix + self.message


@dataclass(frozen=True)
class _Scope:
    nclocks: int
    ints: frozenset[str] = field(default_factory=frozenset)


def _check_constraints(
    cs: tuple[ClockConstraint, ...], scope: _Scope, **where: int
) -> list[Diagnostic]:
    out = []
    for c in cs:
        if max(c.left, c.right) > scope.nclocks:
            out.append(Diagnostic("undeclared clock in constraint", **where))
    return out


def validate_template(t: TimedAutomatonTemplate) -> list[Diagnostic]:
    """Structural checks; an empty list means the template is well formed."""
    diags: list[Diagnostic] = []
    scope = _Scope(len(t.clocks), frozenset(v.name for v in t.ints))
    ids = [loc.id for loc in t.locations]
    if not t.locations:
        diags.append(Diagnostic("template has no locations"))
    if sorted(ids) != list(range(len(ids))):
        diags.append(Diagnostic("location ids must be 0..n-1 in order"))
    names = [loc.name for loc in t.locations]
    if len(set(names)) != len(names):
        diags.append(Diagnostic("duplicate location name"))
    if not 0 <= t.initial < len(t.locations):
        diags.append(Diagnostic("initial location does not exist"))
    for loc in t.locations:
        diags += _check_constraints(loc.invariant, scope, location=loc.id)
        for c in loc.invariant:
            if c.left == ZERO_CLOCK:
                diags.append(
                    Diagnostic("invariant must bound clocks from above", location=loc.id)
                )
    for k, e in enumerate(t.edges):
        if not 0 <= e.source < len(t.locations):
            diags.append(Diagnostic("dangling source", edge=k))
        if not 0 <= e.target < len(t.locations):
            diags.append(Diagnostic("dangling target", edge=k))
        diags += _check_constraints(e.clock_guard, scope, edge=k)
        for p in e.int_guard:
            if not p.names() <= scope.ints:
                diags.append(Diagnostic("undeclared integer in guard", edge=k))
        for r in e.resets:
            if not 0 < r.clock <= scope.nclocks:
                diags.append(Diagnostic("reset of undeclared clock", edge=k))
            if r.value < 0:
                diags.append(Diagnostic("clock reset value must be non-negative", edge=k))
        for a in e.assigns:
            if a.name not in scope.ints or not a.expr.names() <= scope.ints:
                diags.append(Diagnostic("undeclared integer in update", edge=k))
    for v in t.ints:
        if not v.lo <= v.init <= v.hi:
            diags.append(Diagnostic(f"initial value of {v.name} out of range"))
    return diags
