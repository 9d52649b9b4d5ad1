"""Zone-graph exploration with subsumption, query checking and concrete traces."""

from __future__ import annotations

import random
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import networkx as nx

from . import dbm
from .core import INF, ModelError
from .dbm import Dbm
from .formulas import (
    AlwaysEventually,
    AlwaysGlobally,
    And,
    ExistsEventually,
    ExistsGlobally,
    LeadsTo,
    Not,
    Query,
    QueryError,
    clock_constants,
    holds_somewhere,
    mentions_deadlock,
    resolve,
    satisfying_zones,
)
from .network import (
    Delay,
    Network,
    SymbolicState,
    TransitionLabel,
    apply_discrete,
    can_delay,
    dead_zones,
    describe,
    enabling_zone,
    guard_zone,
    initial_state,
    invariant_zone,
    location_names,
    successors,
    transitions,
)

DEFAULT_BUDGET = 1_000_000

LEADSTO_NOTE = "zeno runs are not excluded"


class BudgetExceeded(RuntimeError):
    pass


class ReplayError(AssertionError):
    pass


@dataclass
class Stats:
    explored: int = 0
    stored: int = 0
    max_waiting: int = 0

    def as_dict(self) -> dict[str, int]:
        return {"explored": self.explored, "stored": self.stored, "max_waiting": self.max_waiting}


@dataclass
class Exploration:
    net: Network
    nodes: list[SymbolicState]
    parents: list[tuple[int, TransitionLabel] | None]
    found: int | None
    stats: Stats
    edges: list[list[tuple[TransitionLabel, int]]] | None = None

    @property
    def found_state(self) -> SymbolicState | None:
        return None if self.found is None else self.nodes[self.found]


def explore(
    net: Network,
    stop: Callable[[SymbolicState], bool] | None = None,
    *,
    budget: int = DEFAULT_BUDGET,
    record_edges: bool = False,
    jobs: int = 1,
) -> Exploration:
    """Breadth-first forward reachability; returns at the first ``stop`` state."""
    init = initial_state(net)
    nodes = [init]
    parents: list[tuple[int, TransitionLabel] | None] = [None]
    edges: list[list[tuple[TransitionLabel, int]]] | None = [[]] if record_edges else None
    passed: dict[tuple, list[int]] = {init.discrete: [0]}
    stats = Stats(explored=1, stored=1, max_waiting=1)
    result = Exploration(net, nodes, parents, None, stats, edges)
    if stop is not None and stop(init):
        result.found = 0
        return result

    waiting: deque[int] = deque([0])
    pool = ThreadPoolExecutor(max_workers=jobs) if jobs > 1 else None
    try:
        while waiting:
            batch = [waiting.popleft() for _ in range(len(waiting) if pool else 1)]
            if pool:
                succ_lists = list(pool.map(lambda k: successors(net, nodes[k]), batch))
            else:
                succ_lists = [successors(net, nodes[batch[0]])]
            for pos, (src, succs) in enumerate(zip(batch, succ_lists)):
                pending = len(batch) - pos - 1
                for label, t in succs:
                    stats.explored += 1
                    bucket = passed.setdefault(t.discrete, [])
                    cover = next((k for k in bucket if dbm.subset(t.zone, nodes[k].zone)), None)
                    if cover is not None:
                        if edges is not None:
                            edges[src].append((label, cover))
                        continue
                    idx = len(nodes)
                    nodes.append(t)
                    parents.append((src, label))
                    if edges is not None:
                        edges.append([])
                        edges[src].append((label, idx))
                    bucket.append(idx)
                    waiting.append(idx)
                    stats.stored += 1
                    stats.max_waiting = max(stats.max_waiting, len(waiting) + pending)
                    if stats.stored > budget:
                        raise BudgetExceeded(f"state budget {budget} exceeded")
                    if stop is not None and stop(t):
                        result.found = idx
                        return result
    finally:
        if pool:
            pool.shutdown()
    return result


# ---------------------------------------------------------------------------
# traces


@dataclass(frozen=True)
class TraceStep:
    label: TransitionLabel | None  # None for the initial state
    delay: Fraction  # time spent in the previous state before ``label``
    locs: tuple[int, ...]
    ints: tuple[int, ...]
    zone: Dbm | None
    valuation: tuple[Fraction, ...]


@dataclass
class Trace:
    net: Network
    steps: list[TraceStep]
    deadlock: bool = False
    loop_start: int | None = None

    @property
    def total_time(self) -> Fraction:
        return sum((s.delay for s in self.steps), Fraction(0))

    def time_at(self, k: int) -> Fraction:
        return sum((s.delay for s in self.steps[: k + 1]), Fraction(0))

    @property
    def transitions(self) -> list[TraceStep]:
        return [s for s in self.steps[1:] if not isinstance(s.label, Delay)]

    def to_json(self) -> list[dict]:
        out = []
        for s in self.steps:
            label = "init" if s.label is None else describe(self.net, s.label)
            if s.zone is not None:
                zone = dbm.render(s.zone, self.net.clocks)
            else:
                zone = render_valuation(self.net, s.valuation)
            out.append(
                {
                    "label": label,
                    "delay": _fmt(s.delay),
                    "locations": location_names(self.net, s.locs),
                    "zone": zone,
                }
            )
        return out


def _fmt(q: Fraction) -> str:
    return str(q)


def render_valuation(net: Network, v: Sequence[Fraction]) -> str:
    parts = [f"{n}=={_fmt(x)}" for n, x in zip(net.clocks, v[1:])]
    return " && ".join(parts) if parts else "true"


def _pick_delay(z: Dbm, v: Sequence[Fraction]) -> Fraction | None:
    iv = dbm.delay_interval(z, v)
    if iv is None:
        return None
    lo, lo_strict, hi, _ = iv
    if not lo_strict:
        return lo
    gap = Fraction(1, 2) if hi is None else min(Fraction(1, 2), (hi - lo) / 2)
    return lo + gap


def _reset_image(d: Dbm, resets) -> Dbm:
    for r in resets:
        d = dbm.and_all(
            d,
            (
                dbm.ClockConstraint(r.clock, 0, dbm.Bound.weak(r.value)),
                dbm.ClockConstraint(0, r.clock, dbm.Bound.weak(-r.value)),
            ),
        )
    return d


def concretize(
    net: Network,
    states: Sequence[SymbolicState],
    labels: Sequence[TransitionLabel],
    target: list[Dbm] | None = None,
) -> list[TraceStep]:
    """Pick minimal feasible delays along a zone-graph path ending in ``target``.

    Goal sets are propagated backwards first (valuations of each state that
    can still complete the path), then delays are chosen forwards.
    """
    n = len(states) - 1
    goals: list[list[Dbm]] = [[] for _ in states]
    goals[n] = list(target) if target else [states[n].zone]
    for k in range(n - 1, -1, -1):
        s, nxt, label = states[k], states[k + 1], labels[k]
        _, _, resets = apply_discrete(net, s.locs, s.ints, label)
        guard = guard_zone(net, label, s.zone)
        pieces = []
        for t in goals[k + 1]:
            entry = dbm.down(t) if can_delay(net, nxt.locs) else t
            img = _reset_image(entry, resets)
            for clock in {r.clock for r in resets}:
                img = dbm.free(img, clock)
            pre = dbm.intersect(guard, img)
            if not pre.empty:
                pieces.append(pre)
        if not pieces:
            raise ReplayError("no concrete run realizes this symbolic path")
        goals[k] = pieces

    v = tuple(Fraction(0) for _ in range(net.nclocks + 1))
    entries: list[tuple[Fraction, ...]] = []
    delays: list[Fraction] = []
    for k, s in enumerate(states):
        if k > 0:
            _, _, resets = apply_discrete(net, states[k - 1].locs, states[k - 1].ints, labels[k - 1])
            w = list(v)
            for r in resets:
                w[r.clock] = Fraction(r.value)
            v = tuple(w)
        entries.append(v)
        if can_delay(net, s.locs):
            options = [d for d in (_pick_delay(g, v) for g in goals[k]) if d is not None]
        else:
            options = [Fraction(0)] if any(dbm.contains(g, v) for g in goals[k]) else []
        if not options:
            raise ReplayError(f"no feasible delay at step {k}")
        d = min(options)
        delays.append(d)
        v = (v[0],) + tuple(x + d for x in v[1:])

    steps = [TraceStep(None, Fraction(0), states[0].locs, states[0].ints, states[0].zone, entries[0])]
    for k in range(1, n + 1):
        s = states[k]
        steps.append(TraceStep(labels[k - 1], delays[k - 1], s.locs, s.ints, s.zone, entries[k]))
    if delays[n]:
        s = states[n]
        steps.append(TraceStep(Delay(), delays[n], s.locs, s.ints, s.zone, v))
    return steps


def path_to(expl: Exploration, goal: int) -> tuple[list[SymbolicState], list[TransitionLabel]]:
    if not 0 <= goal < len(expl.nodes):
        raise ModelError("goal state was not produced by this exploration")
    states, labels = [], []
    k: int | None = goal
    while k is not None:
        states.append(expl.nodes[k])
        link = expl.parents[k]
        if link is None:
            k = None
        else:
            labels.append(link[1])
            k = link[0]
    return states[::-1], labels[::-1]


def reconstruct_trace(
    expl: Exploration, goal: int, target: list[Dbm] | None = None
) -> Trace:
    """Path from the initial state to node ``goal`` with minimal concrete delays."""
    states, labels = path_to(expl, goal)
    steps = concretize(expl.net, states, labels, target)
    return Trace(expl.net, steps)


def replay(net: Network, trace: Trace) -> tuple[Fraction, ...]:
    """Re-run ``trace`` through the concrete semantics; returns the final valuation."""
    first = trace.steps[0]
    locs = tuple(p.initial for p in net.processes)
    ints = tuple(v.init for v in net.ints)
    v = tuple(Fraction(0) for _ in range(net.nclocks + 1))
    if first.locs != locs or first.ints != ints or v != first.valuation:
        raise ReplayError("trace does not start in the initial state")
    universe = dbm.universe(net.nclocks)

    def check_inv(point, where):
        if not dbm.contains(invariant_zone(net, locs, universe), point):
            raise ReplayError(f"invariant violated {where}")

    check_inv(v, "initially")
    for k, step in enumerate(trace.steps[1:], start=1):
        if step.delay < 0:
            raise ReplayError("negative delay")
        if step.delay and not can_delay(net, locs):
            raise ReplayError(f"time passes in an urgent state at step {k}")
        v = (v[0],) + tuple(x + step.delay for x in v[1:])
        check_inv(v, f"after delay at step {k}")
        if isinstance(step.label, Delay):
            continue
        if step.label not in transitions(net, locs, ints):
            raise ReplayError(f"transition not enabled at step {k}")
        if not dbm.contains(guard_zone(net, step.label, universe), v):
            raise ReplayError(f"guard violated at step {k}")
        locs, ints, resets = apply_discrete(net, locs, ints, step.label)
        w = list(v)
        for r in resets:
            w[r.clock] = Fraction(r.value)
        v = tuple(w)
        check_inv(v, f"on entry at step {k}")
        if (locs, ints) != (step.locs, step.ints) or v != step.valuation:
            raise ReplayError(f"state mismatch at step {k}")
        if step.zone is not None and not dbm.contains(step.zone, v):
            raise ReplayError(f"valuation outside the recorded zone at step {k}")
    return v


# ---------------------------------------------------------------------------
# checking


@dataclass
class Verdict:
    query: Query
    satisfied: bool
    witness: Trace | None
    stats: Stats
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "query": self.query.render(),
            "satisfied": self.satisfied,
            "stats": self.stats.as_dict(),
            "trace": self.witness.to_json() if self.witness else [],
        }


def _prepare(net: Network, *formulas):
    resolved = [resolve(net, f) for f in formulas]
    extra: dict[int, int] = {}
    for r in resolved:
        for k, c in clock_constants(r).items():
            extra[k] = max(extra.get(k, 0), c)
    if any(net.max_constants[k] < c for k, c in extra.items()):
        net = net.with_max_constants(extra)
    return net, resolved


def _reach(net: Network, r, budget: int, jobs: int):
    expl = explore(net, lambda s: holds_somewhere(net, s, r), budget=budget, jobs=jobs)
    witness = None
    if expl.found is not None:
        target = satisfying_zones(net, expl.nodes[expl.found], r)
        witness = reconstruct_trace(expl, expl.found, target)
    return expl, witness


def _time_divergent(net: Network, s: SymbolicState) -> bool:
    if not can_delay(net, s.locs):
        return False
    d = s.zone.dim
    return all(s.zone.m[i * d] == INF for i in range(1, d))


def _avoiding_run(
    net: Network, is_start: Callable[[int, SymbolicState], bool], avoid_r, budget: int, jobs: int
):
    """Find a reachable start state with a maximal run avoiding ``avoid_r``.

    Maximal means: ends in a deadlock, can idle forever, or loops.
    Returns ``(exploration, start node, node path from start, loop start)``.
    """
    expl = explore(net, None, budget=budget, record_edges=True, jobs=jobs)
    n = len(expl.nodes)
    inside = [holds_somewhere(net, s, Not(avoid_r)) for s in expl.nodes]
    graph = nx.DiGraph()
    graph.add_nodes_from(k for k in range(n) if inside[k])
    for k in range(n):
        if inside[k]:
            for _, t in expl.edges[k]:
                if inside[t]:
                    graph.add_edge(k, t)
    stuck = {
        k
        for k in graph.nodes
        if dead_zones(net, expl.nodes[k]) or _time_divergent(net, expl.nodes[k])
    }
    cyclic = set()
    for comp in nx.strongly_connected_components(graph):
        if len(comp) > 1 or any(graph.has_edge(k, k) for k in comp):
            cyclic |= comp
    for start in range(n):
        if not inside[start] or not is_start(start, expl.nodes[start]):
            continue
        reach = nx.single_source_shortest_path(graph, start)
        bad = sorted((k for k in reach if k in stuck or k in cyclic), key=lambda k: (len(reach[k]), k))
        if not bad:
            continue
        end = bad[0]
        path = list(reach[end])
        loop_start = None
        if end not in stuck:
            cycle = nx.shortest_path(graph, end, end) if graph.has_edge(end, end) else None
            if cycle is None:
                succ = sorted(t for t in graph.successors(end) if t in cyclic and nx.has_path(graph, t, end))
                cycle = [end] + nx.shortest_path(graph, succ[0], end)
            loop_start = len(path) - 1
            path = path + cycle[1:]
        return expl, start, path, loop_start
    return expl, None, None, None


def _lasso_trace(expl: Exploration, start: int, path: list[int], loop_start) -> Trace:
    states, labels = path_to(expl, start)
    for a, b in zip(path, path[1:]):
        label = next(l for l, t in expl.edges[a] if t == b)
        states.append(expl.nodes[b])
        labels.append(label)
    try:
        steps = concretize(expl.net, states, labels)
    except ReplayError:
        # loops through subsuming states need not be concretely realizable
        steps = [TraceStep(None, Fraction(0), states[0].locs, states[0].ints, states[0].zone, ())]
        steps += [
            TraceStep(l, Fraction(0), s.locs, s.ints, s.zone, ()) for l, s in zip(labels, states[1:])
        ]
    prefix = len(path_to(expl, start)[0]) - 1
    trace = Trace(expl.net, steps)
    trace.loop_start = None if loop_start is None else prefix + loop_start
    trace.deadlock = loop_start is None
    return trace


def earliest(net: Network, formula, horizon: int) -> tuple[int, bool] | None:
    """Infimum of the global time at which ``formula`` can hold, up to ``horizon``.

    Returns ``(t, strict)`` where ``strict`` means the infimum is not attained,
    or None if no state within the horizon satisfies the formula.  An extra
    never-reset clock measures elapsed time.
    """
    timed = Network(
        net.processes, net.clocks + ("__elapsed",), net.ints, net.channels,
        net.max_constants + (horizon,),
    )
    timed, (r,) = _prepare(timed, formula)
    t = timed.nclocks
    best: tuple[int, bool] | None = None
    for s in explore(timed, None, budget=DEFAULT_BUDGET).nodes:
        for z in satisfying_zones(timed, s, r):
            raw = z.m[t]
            cand = (-(raw >> 1), not raw & 1)
            if cand[0] <= horizon and (best is None or (cand[0], cand[1]) < best):
                best = cand
    return best


def check(net: Network, q: Query, *, budget: int = DEFAULT_BUDGET, jobs: int = 1) -> Verdict:
    if isinstance(q, ExistsEventually):
        net, (r,) = _prepare(net, q.formula)
        expl, witness = _reach(net, r, budget, jobs)
        return Verdict(q, expl.found is not None, witness, expl.stats)
    if isinstance(q, AlwaysGlobally):
        net, (r,) = _prepare(net, q.formula)
        expl, witness = _reach(net, Not(r), budget, jobs)
        return Verdict(q, expl.found is None, witness, expl.stats)
    if isinstance(q, (AlwaysEventually, ExistsGlobally, LeadsTo)):
        formulas = (q.premise, q.conclusion) if isinstance(q, LeadsTo) else (q.formula,)
        if any(mentions_deadlock(f) for f in formulas):
            raise QueryError("deadlock is only supported under E<> and A[]")
        net, resolved = _prepare(net, *formulas)
        if isinstance(q, LeadsTo):
            premise, goal = resolved
            bad = And(premise, Not(goal))

            def is_start(k: int, s: SymbolicState) -> bool:
                return holds_somewhere(net, s, bad)

        else:
            goal = resolved[0] if isinstance(q, AlwaysEventually) else Not(resolved[0])

            def is_start(k: int, s: SymbolicState) -> bool:
                return k == 0

        expl, s0, path, loop = _avoiding_run(net, is_start, goal, budget, jobs)
        found = path is not None
        witness = _lasso_trace(expl, s0, path, loop) if found else None
        satisfied = found if isinstance(q, ExistsGlobally) else not found
        notes = [LEADSTO_NOTE]
        return Verdict(q, satisfied, witness, expl.stats, notes)
    raise QueryError(f"unsupported query {q!r}")


# ---------------------------------------------------------------------------
# random concrete runs

_GRID = 1000


def _sample(rng: random.Random, lo: Fraction, lo_strict: bool, hi: Fraction, hi_strict: bool) -> Fraction:
    if hi == lo:
        return lo
    d = lo + (hi - lo) * Fraction(rng.randint(0, _GRID), _GRID)
    if (d == lo and lo_strict) or (d == hi and hi_strict):
        d = (lo + hi) / 2
    return d


def simulate(net: Network, seed: int, steps: int) -> Trace:
    """Random concrete run: uniform transition choice, uniform delay in its window."""
    rng = random.Random(seed)
    universe = dbm.universe(net.nclocks)
    cap = max(net.max_constants, default=0) + 1
    locs = tuple(p.initial for p in net.processes)
    ints = tuple(v.init for v in net.ints)
    v = tuple(Fraction(0) for _ in range(net.nclocks + 1))
    if not dbm.contains(invariant_zone(net, locs, universe), v):
        raise ModelError("empty initial state")
    out = [TraceStep(None, Fraction(0), locs, ints, None, v)]
    trace = Trace(net, out)
    for _ in range(steps):
        here = invariant_zone(net, locs, universe)
        options = []
        for label in transitions(net, locs, ints):
            pre = enabling_zone(net, locs, ints, label, here)
            if not can_delay(net, locs):
                if dbm.contains(pre, v):
                    options.append((label, (Fraction(0), False, Fraction(0), False)))
                continue
            iv = dbm.delay_interval(pre, v)
            if iv is not None:
                lo, lo_s, hi, hi_s = iv
                if hi is None:
                    hi, hi_s = lo + cap, False
                options.append((label, (lo, lo_s, hi, hi_s)))
        if not options:
            trace.deadlock = True
            break
        label, (lo, lo_s, hi, hi_s) = options[rng.randrange(len(options))]
        d = _sample(rng, lo, lo_s, hi, hi_s)
        v = (v[0],) + tuple(x + d for x in v[1:])
        locs, ints, resets = apply_discrete(net, locs, ints, label)
        w = list(v)
        for r in resets:
            w[r.clock] = Fraction(r.value)
        v = tuple(w)
        out.append(TraceStep(label, d, locs, ints, None, v))
    return trace
