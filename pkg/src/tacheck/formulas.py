"""State formulas and queries (E<>, A[], E[], A<>, -->) over a network."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from . import dbm
from .core import BinOp, Expr, IntPredicate, Name, clock_constraints, constant_value
from .dbm import Dbm
from .network import Network, SymbolicState, dead_zones


class QueryError(ValueError):
    """Unknown identifiers or unsupported formula shapes."""


@dataclass(frozen=True)
class BoolConst:
    value: bool

    def render(self) -> str:
        return "true" if self.value else "false"


@dataclass(frozen=True)
class LocationAtom:
    instance: str
    location: str

    def render(self) -> str:
        return f"{self.instance}.{self.location}"


@dataclass(frozen=True)
class Compare:
    """``var op c`` or ``clock op c`` (or a clock difference); resolved per network."""

    left: Expr
    op: str
    right: Expr

    def render(self) -> str:
        return f"{self.left.render()} {self.op} {self.right.render()}"


@dataclass(frozen=True)
class DeadlockAtom:
    def render(self) -> str:
        return "deadlock"


@dataclass(frozen=True)
class Not:
    operand: Formula

    def render(self) -> str:
        return f"not {_wrap(self.operand, 3)}"


@dataclass(frozen=True)
class And:
    left: Formula
    right: Formula

    def render(self) -> str:
        return f"{_wrap(self.left, 2)} and {_wrap(self.right, 2)}"


@dataclass(frozen=True)
class Or:
    left: Formula
    right: Formula

    def render(self) -> str:
        return f"{_wrap(self.left, 1)} or {_wrap(self.right, 1)}"


Formula = Union[BoolConst, LocationAtom, Compare, DeadlockAtom, Not, And, Or]


def _level(f: Formula) -> int:
    if isinstance(f, Or):
        return 1
    if isinstance(f, And):
        return 2
    if isinstance(f, Not):
        return 3
    return 4


def _wrap(f: Formula, level: int) -> str:
    text = f.render()
    return f"({text})" if _level(f) < level else text


@dataclass(frozen=True)
class ExistsEventually:
    formula: Formula

    def render(self) -> str:
        return f"E<> {self.formula.render()}"


@dataclass(frozen=True)
class AlwaysGlobally:
    formula: Formula

    def render(self) -> str:
        return f"A[] {self.formula.render()}"


@dataclass(frozen=True)
class ExistsGlobally:
    formula: Formula

    def render(self) -> str:
        return f"E[] {self.formula.render()}"


@dataclass(frozen=True)
class AlwaysEventually:
    formula: Formula

    def render(self) -> str:
        return f"A<> {self.formula.render()}"


@dataclass(frozen=True)
class LeadsTo:
    premise: Formula
    conclusion: Formula

    def render(self) -> str:
        return f"{self.premise.render()} --> {self.conclusion.render()}"


Query = Union[ExistsEventually, AlwaysGlobally, ExistsGlobally, AlwaysEventually, LeadsTo]


def mentions_deadlock(f: Formula) -> bool:
    if isinstance(f, DeadlockAtom):
        return True
    if isinstance(f, Not):
        return mentions_deadlock(f.operand)
    if isinstance(f, (And, Or)):
        return mentions_deadlock(f.left) or mentions_deadlock(f.right)
    return False


# ---------------------------------------------------------------------------
# resolution against a network


@dataclass(frozen=True)
class _Loc:
    instance: int
    location: int


@dataclass(frozen=True)
class _IntCmp:
    left: Expr
    op: str
    right: Expr


@dataclass(frozen=True)
class _ClockCmp:
    constraints: tuple  # alternatives: tuple of tuple[ClockConstraint]


def _clock_side(net: Network, e: Expr) -> tuple[int, int] | None:
    """``(left, right)`` clock indices for ``x`` or ``x - y``; None if no clocks."""
    clocks = set(net.clocks)
    if isinstance(e, Name) and e.name in clocks:
        return net.clock_index(e.name), 0
    if (
        isinstance(e, BinOp)
        and e.op == "-"
        and isinstance(e.left, Name)
        and isinstance(e.right, Name)
        and e.left.name in clocks
        and e.right.name in clocks
    ):
        return net.clock_index(e.left.name), net.clock_index(e.right.name)
    if e.names() & clocks:
        raise QueryError(f"unsupported clock expression {e.render()!r}")
    return None


_FLIP = {"<": ">", "<=": ">=", "==": "==", "!=": "!=", ">=": "<=", ">": "<"}


def _resolve_compare(net: Network, c: Compare):
    ints = {v.name for v in net.ints}
    known = ints | set(net.clocks)
    for n in c.left.names() | c.right.names():
        if n not in known:
            raise QueryError(f"unknown identifier {n!r}")
    lhs, rhs, op = c.left, c.right, c.op
    side = _clock_side(net, lhs)
    if side is None and _clock_side(net, rhs) is not None:
        lhs, rhs, op = rhs, lhs, _FLIP[op]
        side = _clock_side(net, lhs)
    if side is None:
        return _IntCmp(lhs, op, rhs)
    value = constant_value(rhs)
    if value is None:
        raise QueryError("clocks may only be compared with integer constants")
    left, right = side
    if op == "!=":
        alts = (clock_constraints(left, right, "<", value), clock_constraints(left, right, ">", value))
    else:
        alts = (clock_constraints(left, right, op, value),)
    return _ClockCmp(alts)


def resolve(net: Network, f: Formula):
    """Bind names in ``f`` to network indices; raises QueryError for unknowns."""
    if isinstance(f, LocationAtom):
        try:
            i = net.instance_index(f.instance)
        except KeyError:
            raise QueryError(f"unknown instance {f.instance!r}") from None
        try:
            loc = net.processes[i].location_named(f.location)
        except KeyError:
            raise QueryError(f"unknown location {f.instance}.{f.location}") from None
        return _Loc(i, loc.id)
    if isinstance(f, Compare):
        return _resolve_compare(net, f)
    if isinstance(f, Not):
        return Not(resolve(net, f.operand))
    if isinstance(f, And):
        return And(resolve(net, f.left), resolve(net, f.right))
    if isinstance(f, Or):
        return Or(resolve(net, f.left), resolve(net, f.right))
    return f


def clock_constants(resolved) -> dict[int, int]:
    """Per-clock constants a resolved formula compares against."""
    out: dict[int, int] = {}
    if isinstance(resolved, _ClockCmp):
        for alt in resolved.constraints:
            for c in alt:
                for i in (c.left, c.right):
                    if i:
                        out[i] = max(out.get(i, 0), abs(c.bound.value))
    elif isinstance(resolved, Not):
        out = clock_constants(resolved.operand)
    elif isinstance(resolved, (And, Or)):
        out = clock_constants(resolved.left)
        for k, v in clock_constants(resolved.right).items():
            out[k] = max(out.get(k, 0), v)
    return out


def satisfying_zones(net: Network, s: SymbolicState, r) -> list[Dbm]:
    """Disjoint-ish list of zones covering the valuations of ``s`` satisfying ``r``."""
    z = s.zone
    if isinstance(r, BoolConst):
        return [z] if r.value else []
    if isinstance(r, _Loc):
        return [z] if s.locs[r.instance] == r.location else []
    if isinstance(r, _IntCmp):
        env = {v.name: x for v, x in zip(net.ints, s.ints)}
        return [z] if IntPredicate(r.left, r.op, r.right).holds(env) else []
    if isinstance(r, _ClockCmp):
        out = []
        for alt in r.constraints:
            piece = dbm.and_all(z, alt)
            if not piece.empty:
                out.append(piece)
        return out
    if isinstance(r, DeadlockAtom):
        return dead_zones(net, s)
    if isinstance(r, Or):
        return satisfying_zones(net, s, r.left) + satisfying_zones(net, s, r.right)
    if isinstance(r, And):
        left = satisfying_zones(net, s, r.left)
        if not left:
            return []
        right = satisfying_zones(net, s, r.right)
        out = []
        for a in left:
            for b in right:
                c = dbm.intersect(a, b)
                if not c.empty:
                    out.append(c)
        return out
    if isinstance(r, Not):
        rest = [z]
        for piece in satisfying_zones(net, s, r.operand):
            rest = dbm.subtract_all(rest, piece)
            if not rest:
                break
        return rest
    raise TypeError(f"unresolved formula node {r!r}")


def holds_somewhere(net: Network, s: SymbolicState, r) -> bool:
    return bool(satisfying_zones(net, s, r))


def holds_everywhere(net: Network, s: SymbolicState, r) -> bool:
    return not satisfying_zones(net, s, Not(r))
