"""Explicit region-graph semantics, used as a brute-force cross-check.

A region fixes, per clock, either its integer part (up to the clock's maximal
constant) or the fact that it lies beyond that constant, plus the ordering of
the fractional parts of the bounded clocks.  Guards and invariants are
evaluated on one representative valuation per region, which is exact for
non-diagonal constraints with integer constants.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

from .core import BoundKind, ClockConstraint, IntPredicate
from .formulas import (
    AlwaysGlobally,
    And,
    BoolConst,
    DeadlockAtom,
    ExistsEventually,
    Not,
    Or,
    Query,
    QueryError,
    _ClockCmp,
    _IntCmp,
    _Loc,
    clock_constants,
    resolve,
)
from .network import (
    Network,
    TransitionLabel,
    apply_discrete,
    can_delay,
    participants,
    transitions,
)

MAX_CLOCKS = 5
MAX_CONSTANT = 16


class OracleRefused(ValueError):
    """The model is too large (or uses constraints) the oracle does not handle."""


@dataclass(frozen=True)
class Region:
    """``ints[i]`` is the integer part of clock i+1, or ``bound + 1`` once beyond it.

    ``zero`` lists bounded clocks with zero fraction; ``fracs`` lists groups of
    bounded clocks with equal positive fraction, in increasing order.
    """

    ints: tuple[int, ...]
    zero: tuple[int, ...]
    fracs: tuple[tuple[int, ...], ...]

    def representative(self) -> tuple[Fraction, ...]:
        n = len(self.fracs) + 1
        value = [Fraction(0)] * (len(self.ints) + 1)
        for k, v in enumerate(self.ints, start=1):
            value[k] = Fraction(v)
        for pos, group in enumerate(self.fracs, start=1):
            for c in group:
                value[c] += Fraction(pos, n)
        return tuple(value)


def initial_region(nclocks: int) -> Region:
    return Region((0,) * nclocks, tuple(range(1, nclocks + 1)), ())


def time_successor(r: Region, bounds: tuple[int, ...]) -> Region:
    """The next region reached by letting time pass (itself if all clocks are beyond)."""
    if r.zero:
        stay = tuple(c for c in r.zero if r.ints[c - 1] < bounds[c])
        ints = list(r.ints)
        for c in r.zero:
            if r.ints[c - 1] == bounds[c]:
                ints[c - 1] = bounds[c] + 1
        fracs = ((stay,) if stay else ()) + r.fracs
        return Region(tuple(ints), (), fracs)
    if r.fracs:
        top = r.fracs[-1]
        ints = list(r.ints)
        zero = []
        for c in top:
            ints[c - 1] += 1
            zero.append(c)
        return Region(tuple(ints), tuple(sorted(zero)), r.fracs[:-1])
    return r


def reset(r: Region, clock: int, value: int, bounds: tuple[int, ...]) -> Region:
    ints = list(r.ints)
    zero = [c for c in r.zero if c != clock]
    fracs = tuple(g for g in (tuple(c for c in g if c != clock) for g in r.fracs) if g)
    if value > bounds[clock]:
        ints[clock - 1] = bounds[clock] + 1
    else:
        ints[clock - 1] = value
        zero.append(clock)
    return Region(tuple(ints), tuple(sorted(zero)), fracs)


def region_bound(bounds: tuple[int, ...]) -> int:
    """Classical upper bound n! * 2^n * prod(2c+2) on the number of regions."""
    n = len(bounds) - 1
    prod = 1
    for c in bounds[1:]:
        prod *= 2 * c + 2
    return math.factorial(n) * 2**n * prod


# ---------------------------------------------------------------------------
# constraint evaluation on representatives


def _satisfies(v: tuple[Fraction, ...], c: ClockConstraint) -> bool:
    kind = c.bound.kind
    if kind is BoundKind.UNBOUNDED:
        return True
    diff = v[c.left] - v[c.right]
    return diff < c.bound.value if kind is BoundKind.STRICT else diff <= c.bound.value


def _all(v, cs) -> bool:
    return all(_satisfies(v, c) for c in cs)


@dataclass(frozen=True)
class RegionState:
    locs: tuple[int, ...]
    ints: tuple[int, ...]
    region: Region


class RegionGraph:
    def __init__(self, net: Network, extra_bounds: dict[int, int] | None = None) -> None:
        if net.nclocks > MAX_CLOCKS:
            raise OracleRefused(f"{net.nclocks} clocks exceed the oracle limit of {MAX_CLOCKS}")
        bounds = list(net.max_constants)
        for k, c in (extra_bounds or {}).items():
            bounds[k] = max(bounds[k], c)
        if max(bounds, default=0) > MAX_CONSTANT:
            raise OracleRefused(f"constants above {MAX_CONSTANT} are not supported")
        for p in net.processes:
            cs = [c for l in p.locations for c in l.invariant]
            cs += [c for e in p.edges for c in e.clock_guard]
            if any(c.is_diagonal for c in cs):
                raise OracleRefused("diagonal constraints are not supported")
        self.net = net
        self.bounds = tuple(bounds)

    def invariant_ok(self, locs, v) -> bool:
        return all(_all(v, p.locations[l].invariant) for p, l in zip(self.net.processes, locs))

    def initial(self) -> RegionState:
        net = self.net
        s = RegionState(
            tuple(p.initial for p in net.processes),
            tuple(x.init for x in net.ints),
            initial_region(net.nclocks),
        )
        if not self.invariant_ok(s.locs, s.region.representative()):
            raise QueryError("empty initial state")
        return s

    def delay_successor(self, s: RegionState) -> RegionState | None:
        if not can_delay(self.net, s.locs):
            return None
        r = time_successor(s.region, self.bounds)
        if r == s.region or not self.invariant_ok(s.locs, r.representative()):
            return None
        return RegionState(s.locs, s.ints, r)

    def action_successors(self, s: RegionState) -> Iterator[tuple[TransitionLabel, RegionState]]:
        v = s.region.representative()
        for label in transitions(self.net, s.locs, s.ints):
            edges = [self.net.processes[i].edges[k] for i, k in participants(label)]
            if not all(_all(v, e.clock_guard) for e in edges):
                continue
            locs, ints, resets = apply_discrete(self.net, s.locs, s.ints, label)
            r = s.region
            for rs in resets:
                r = reset(r, rs.clock, rs.value, self.bounds)
            if self.invariant_ok(locs, r.representative()):
                yield label, RegionState(locs, ints, r)

    def successors(self, s: RegionState) -> list[RegionState]:
        out = [t for _, t in self.action_successors(s)]
        d = self.delay_successor(s)
        if d is not None:
            out.append(d)
        return out

    def is_deadlock(self, s: RegionState) -> bool:
        cur: RegionState | None = s
        while cur is not None:
            if next(self.action_successors(cur), None) is not None:
                return False
            cur = self.delay_successor(cur)
        return True

    def reachable(self, limit: int = 2_000_000) -> list[RegionState]:
        init = self.initial()
        seen = {init}
        order = [init]
        queue = deque([init])
        while queue:
            s = queue.popleft()
            for t in self.successors(s):
                if t not in seen:
                    seen.add(t)
                    order.append(t)
                    queue.append(t)
                    if len(seen) > limit:
                        raise OracleRefused("region graph too large")
        return order

    def holds(self, s: RegionState, r) -> bool:
        if isinstance(r, BoolConst):
            return r.value
        if isinstance(r, _Loc):
            return s.locs[r.instance] == r.location
        if isinstance(r, _IntCmp):
            env = {x.name: val for x, val in zip(self.net.ints, s.ints)}
            return IntPredicate(r.left, r.op, r.right).holds(env)
        if isinstance(r, _ClockCmp):
            v = s.region.representative()
            return any(_all(v, alt) for alt in r.constraints)
        if isinstance(r, DeadlockAtom):
            return self.is_deadlock(s)
        if isinstance(r, Not):
            return not self.holds(s, r.operand)
        if isinstance(r, And):
            return self.holds(s, r.left) and self.holds(s, r.right)
        if isinstance(r, Or):
            return self.holds(s, r.left) or self.holds(s, r.right)
        raise TypeError(f"unresolved formula node {r!r}")


def region_successors(net: Network, s: RegionState) -> list[RegionState]:
    return RegionGraph(net).successors(s)


def reachable_location_vectors(net: Network) -> set[tuple[int, ...]]:
    return {s.locs for s in RegionGraph(net).reachable()}


def region_check(net: Network, q: Query) -> bool:
    """Verdict of an ``E<>`` or ``A[]`` query by exhaustive region-graph search."""
    if not isinstance(q, (ExistsEventually, AlwaysGlobally)):
        raise QueryError("the region oracle only decides E<> and A[] queries")
    r = resolve(net, q.formula)
    graph = RegionGraph(net, clock_constants(r))
    hit = any(graph.holds(s, r if isinstance(q, ExistsEventually) else Not(r)) for s in graph.reachable())
    return hit if isinstance(q, ExistsEventually) else not hit
