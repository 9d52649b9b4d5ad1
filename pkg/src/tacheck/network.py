"""Parallel composition of timed automata and its symbolic (zone) semantics."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence, Union

from . import dbm
from .core import (
    ChannelDecl,
    ChannelKind,
    ClockReset,
    Diagnostic,
    Edge,
    IntVar,
    LocationKind,
    ModelError,
    Receive,
    Send,
    TimedAutomatonTemplate,
    validate_template,
)
from .dbm import Dbm


@dataclass(frozen=True)
class Network:
    """Instances in system order, sharing global clocks, integers and channels."""

    processes: tuple[TimedAutomatonTemplate, ...]
    clocks: tuple[str, ...] = ()
    ints: tuple[IntVar, ...] = ()
    channels: tuple[ChannelDecl, ...] = ()
    max_constants: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        if not self.max_constants:
            object.__setattr__(self, "max_constants", compute_max_constants(self))
        object.__setattr__(
            self, "_chan", {c.name: c for c in self.channels}
        )

    @property
    def nclocks(self) -> int:
        return len(self.clocks)

    def channel(self, name: str) -> ChannelDecl:
        return self._chan[name]  # type: ignore[attr-defined]

    def instance_index(self, name: str) -> int:
        for k, p in enumerate(self.processes):
            if p.name == name:
                return k
        raise KeyError(name)

    def clock_index(self, name: str) -> int:
        return self.clocks.index(name) + 1

    def int_index(self, name: str) -> int:
        for k, v in enumerate(self.ints):
            if v.name == name:
                return k
        raise KeyError(name)

    def with_max_constants(self, extra: dict[int, int]) -> Network:
        mc = list(self.max_constants)
        for i, c in extra.items():
            mc[i] = max(mc[i], c)
        return Network(self.processes, self.clocks, self.ints, self.channels, tuple(mc))


def compute_max_constants(net: Network) -> tuple[int, ...]:
    mc = [0] * (len(net.clocks) + 1)

    def see(cs):
        for c in cs:
            if c.bound.raw == dbm.INF:
                continue
            v = abs(c.bound.value)
            for i in (c.left, c.right):
                if i:
                    mc[i] = max(mc[i], v)

    for p in net.processes:
        for loc in p.locations:
            see(loc.invariant)
        for e in p.edges:
            see(e.clock_guard)
            for r in e.resets:
                mc[r.clock] = max(mc[r.clock], r.value)
    return tuple(mc)


def validate_network(net: Network) -> list[Diagnostic]:
    diags: list[Diagnostic] = []
    names = [p.name for p in net.processes]
    if len(set(names)) != len(names):
        diags.append(Diagnostic("duplicate instance name"))
    chans = [c.name for c in net.channels]
    if len(set(chans)) != len(chans):
        diags.append(Diagnostic("duplicate channel name"))
    declared = set(chans)
    for p in net.processes:
        for d in validate_template(p):
            diags.append(Diagnostic(f"{p.name}: {d.message}", d.location, d.edge))
        if p.clocks != net.clocks:
            diags.append(Diagnostic(f"{p.name}: clock scope differs from network"))
        for k, e in enumerate(p.edges):
            if e.sync is None:
                continue
            if e.sync.channel not in declared:
                diags.append(Diagnostic(f"{p.name}: unknown channel {e.sync.channel!r}", edge=k))
            elif (
                isinstance(e.sync, Receive)
                and net.channel(e.sync.channel).kind is ChannelKind.BROADCAST
                and e.clock_guard
            ):
                diags.append(
                    Diagnostic(f"{p.name}: clock guard on broadcast receiver", edge=k)
                )
    return diags


# ---------------------------------------------------------------------------
# states and labels


@dataclass(frozen=True)
class SymbolicState:
    locs: tuple[int, ...]
    ints: tuple[int, ...]
    zone: Dbm

    @property
    def discrete(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return self.locs, self.ints


@dataclass(frozen=True)
class Delay:
    pass


@dataclass(frozen=True)
class Internal:
    instance: int
    edge: int


@dataclass(frozen=True)
class Sync:
    channel: str
    sender: tuple[int, int]
    receivers: tuple[tuple[int, int], ...]


TransitionLabel = Union[Delay, Internal, Sync]


def participants(label: TransitionLabel) -> tuple[tuple[int, int], ...]:
    if isinstance(label, Internal):
        return ((label.instance, label.edge),)
    if isinstance(label, Sync):
        return (label.sender,) + label.receivers
    return ()


def describe(net: Network, label: TransitionLabel) -> str:
    if isinstance(label, Delay):
        return "delay"

    def step(inst: int, k: int) -> str:
        p = net.processes[inst]
        e = p.edges[k]
        return f"{p.name}.{p.locations[e.source].name}->{p.locations[e.target].name}"

    if isinstance(label, Internal):
        return step(label.instance, label.edge)
    parts = [step(*label.sender)] + [step(*r) for r in label.receivers]
    return f"{label.channel}: " + ", ".join(parts)


def location_names(net: Network, locs: Sequence[int]) -> list[str]:
    return [f"{p.name}.{p.locations[l].name}" for p, l in zip(net.processes, locs)]


# ---------------------------------------------------------------------------
# discrete structure of transitions


def _stops_time(net: Network, locs: Sequence[int]) -> bool:
    return any(p.locations[l].stops_time for p, l in zip(net.processes, locs))


def _committed(net: Network, locs: Sequence[int]) -> set[int]:
    return {
        k
        for k, (p, l) in enumerate(zip(net.processes, locs))
        if p.locations[l].kind is LocationKind.COMMITTED
    }


def _env(net: Network, ints: Sequence[int]) -> dict[str, int]:
    return {v.name: x for v, x in zip(net.ints, ints)}


def _int_enabled(e: Edge, env: dict[str, int]) -> bool:
    return all(p.holds(env) for p in e.int_guard)


def transitions(
    net: Network, locs: Sequence[int], ints: Sequence[int]
) -> list[TransitionLabel]:
    """Discretely enabled transitions, ordered by instance then edge index."""
    env = _env(net, ints)
    committed = _committed(net, locs)
    out: list[TransitionLabel] = []
    for i, p in enumerate(net.processes):
        for k, e in p.edges_from(locs[i]):
            if not _int_enabled(e, env):
                continue
            if e.sync is None:
                out.append(Internal(i, k))
            elif isinstance(e.sync, Send):
                chan = net.channel(e.sync.channel)
                options = []
                for j, q in enumerate(net.processes):
                    if j == i:
                        continue
                    recv = [
                        (j, f)
                        for f, g in q.edges_from(locs[j])
                        if isinstance(g.sync, Receive)
                        and g.sync.channel == chan.name
                        and _int_enabled(g, env)
                    ]
                    if recv:
                        options.append(recv)
                if chan.kind is ChannelKind.BINARY:
                    for recv in options:
                        for r in recv:
                            out.append(Sync(chan.name, (i, k), (r,)))
                else:
                    for combo in itertools.product(*options):
                        out.append(Sync(chan.name, (i, k), tuple(combo)))
    if committed:
        out = [
            t for t in out if any(inst in committed for inst, _ in participants(t))
        ]
    return out


def _edges(net: Network, label: TransitionLabel) -> list[tuple[int, Edge]]:
    return [(i, net.processes[i].edges[k]) for i, k in participants(label)]


def apply_discrete(
    net: Network, locs: Sequence[int], ints: Sequence[int], label: TransitionLabel
) -> tuple[tuple[int, ...], tuple[int, ...], list[ClockReset]]:
    """Target locations, updated integers and clock resets (sender first)."""
    env = _env(net, ints)
    new_locs = list(locs)
    resets: list[ClockReset] = []
    for i, e in _edges(net, label):
        new_locs[i] = e.target
        resets.extend(e.resets)
        for a in e.assigns:
            env[a.name] = a.expr.eval(env)
    new_ints = []
    for v in net.ints:
        x = env[v.name]
        if not v.lo <= x <= v.hi:
            raise ModelError(f"integer {v.name}={x} outside [{v.lo},{v.hi}]")
        new_ints.append(x)
    return tuple(new_locs), tuple(new_ints), resets


def invariant_zone(net: Network, locs: Sequence[int], base: Dbm) -> Dbm:
    for p, l in zip(net.processes, locs):
        base = dbm.and_all(base, p.locations[l].invariant)
    return base


def guard_zone(net: Network, label: TransitionLabel, base: Dbm) -> Dbm:
    for _, e in _edges(net, label):
        base = dbm.and_all(base, e.clock_guard)
    return base


def _post(net: Network, label: TransitionLabel, z: Dbm, locs, ints):
    new_locs, new_ints, resets = apply_discrete(net, locs, ints, label)
    for r in resets:
        z = dbm.assign(z, r.clock, r.value)
    z = invariant_zone(net, new_locs, z)
    return new_locs, new_ints, resets, z


def enabling_zone(
    net: Network, locs: Sequence[int], ints: Sequence[int], label: TransitionLabel, base: Dbm
) -> Dbm:
    """Valuations of ``base`` from which ``label`` fires into a legal target."""
    g = guard_zone(net, label, base)
    if g.empty:
        return g
    _, _, resets, post = _post(net, label, g, locs, ints)
    if post.empty:
        return post
    for r in {r.clock for r in resets}:
        post = dbm.free(post, r)
    return dbm.intersect(g, post)


def _close_delay(net: Network, locs: Sequence[int], z: Dbm) -> Dbm:
    if not _stops_time(net, locs):
        z = invariant_zone(net, locs, dbm.up(z))
    return dbm.extrapolate(z, net.max_constants)


def initial_state(net: Network) -> SymbolicState:
    locs = tuple(p.initial for p in net.processes)
    ints = tuple(v.init for v in net.ints)
    z = invariant_zone(net, locs, dbm.init_zero(net.nclocks))
    if z.empty:
        raise ModelError("empty initial state")
    return SymbolicState(locs, ints, _close_delay(net, locs, z))


def fire(net: Network, s: SymbolicState, label: TransitionLabel) -> SymbolicState | None:
    z = guard_zone(net, label, s.zone)
    if z.empty:
        return None
    locs, ints, _, z = _post(net, label, z, s.locs, s.ints)
    if z.empty:
        return None
    return SymbolicState(locs, ints, _close_delay(net, locs, z))


def successors(
    net: Network, s: SymbolicState
) -> list[tuple[TransitionLabel, SymbolicState]]:
    out = []
    for label in transitions(net, s.locs, s.ints):
        t = fire(net, s, label)
        if t is not None:
            out.append((label, t))
    return out


def can_delay(net: Network, locs: Sequence[int]) -> bool:
    return not _stops_time(net, locs)


def dead_zones(net: Network, s: SymbolicState) -> list[Dbm]:
    """Parts of ``s.zone`` from which no action is possible now or after delay."""
    rest = [s.zone]
    delay = can_delay(net, s.locs)
    for label in transitions(net, s.locs, s.ints):
        pre = enabling_zone(net, s.locs, s.ints, label, s.zone)
        if pre.empty:
            continue
        rest = dbm.subtract_all(rest, dbm.down(pre) if delay else pre)
        if not rest:
            break
    return rest


def is_deadlock(net: Network, s: SymbolicState) -> bool:
    return bool(dead_zones(net, s))
