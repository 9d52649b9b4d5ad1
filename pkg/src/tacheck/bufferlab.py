"""Buffer-network corpus: model builders, pipeline timing and buffer sizing.

Two systems are modelled.  The *existing* system has two generators feeding
two buffers that exchange packets in opposite directions.  The *proposed*
system adds a dedicated buffer ``Md`` on the return path so that the two
flows never wait on each other.  Its canonical channel naming is::

    G1 -a-> M1 -b-> M2 -c-> E1
    G2 -e-> M2 -g-> Md -f-> M1 -d-> E2
"""

from __future__ import annotations

import enum
import heapq
from dataclasses import dataclass
from typing import Iterable, Union

from .modelspec import load_network, parse_queries
from .network import Network

# ---------------------------------------------------------------------------
# time models


@dataclass(frozen=True)
class NoTime:
    """Handshake structure only; every clock, guard and invariant removed."""


@dataclass(frozen=True)
class Deterministic:
    """Generators fire every ``alpha_hat``/``beta_hat``; each buffer holds ``gamma_hat``."""

    alpha_hat: int = 10
    beta_hat: int = 1
    gamma_hat: int = 2


@dataclass(frozen=True)
class NonDeterministic:
    """Emission and forwarding happen anywhere inside fixed windows."""


@dataclass(frozen=True)
class ShiftedExisting:
    g1_offset: int = 15
    g2_offset: int = 10
    period: int = 10


TimeModelConfig = Union[NoTime, Deterministic, NonDeterministic, ShiftedExisting]


def _check_durations(*values: int) -> None:
    for v in values:
        if not isinstance(v, int) or v < 0:
            raise ValueError(f"durations must be non-negative integers, got {v!r}")


# ---------------------------------------------------------------------------
# model texts


def existing_text(shifted: bool = False) -> str:
    g1, g2, period = (15, 10, 10) if shifted else (10, 10, 10)
    title = "shifted start (G1 at 15, G2 at 10)" if shifted else "simultaneous start"
    return f"""\
// Existing two-way buffer, {title}.
// G1 -a-> M1 -c2-> M2 -e-> E2 and G2 -b-> M2 -c1-> M1 -d-> E1.
// Buffers hold one packet and must forward it within 2 time units.
clock xG1, xG2, xM1, xM2;
chan a, b, c1, c2, d, e;

process G1 {{
  loc wait inv xG1 <= {g1};
  loc run inv xG1 <= {period};
  init wait;
  wait -> run {{ guard xG1 >= {g1}; sync a!; assign xG1 := 0; }}
  run -> run {{ guard xG1 >= {period}; sync a!; assign xG1 := 0; }}
}}

process G2 {{
  loc wait inv xG2 <= {g2};
  loc run inv xG2 <= {period};
  init wait;
  wait -> run {{ guard xG2 >= {g2}; sync b!; assign xG2 := 0; }}
  run -> run {{ guard xG2 >= {period}; sync b!; assign xG2 := 0; }}
}}

process M1 {{
  loc idle;
  loc G1_receive inv xM1 <= 2;
  loc G2_receive inv xM1 <= 2;
  init idle;
  idle -> G1_receive {{ sync a?; assign xM1 := 0; }}
  G1_receive -> idle {{ sync c2!; }}
  idle -> G2_receive {{ sync c1?; assign xM1 := 0; }}
  G2_receive -> idle {{ sync d!; }}
}}

process M2 {{
  loc idle;
  loc G1_receive inv xM2 <= 2;
  loc G2_receive inv xM2 <= 2;
  init idle;
  idle -> G2_receive {{ sync b?; assign xM2 := 0; }}
  G2_receive -> idle {{ sync c1!; }}
  idle -> G1_receive {{ sync c2?; assign xM2 := 0; }}
  G1_receive -> idle {{ sync e!; }}
}}

process E1 {{
  loc idle;
  loc receive;
  init idle;
  idle -> receive {{ sync d?; }}
  receive -> receive {{ sync d?; }}
}}

process E2 {{
  loc idle;
  loc receive;
  init idle;
  idle -> receive {{ sync e?; }}
  receive -> receive {{ sync e?; }}
}}

system G1, G2, M1, M2, E1, E2;
"""


_EXITS = """\
process E1 {
  loc idle;
  loc receive;
  init idle;
  idle -> receive { sync c?; }
  receive -> receive { sync c?; }
}

process E2 {
  loc idle;
  loc receive;
  init idle;
  idle -> receive { sync d?; }
  receive -> receive { sync d?; }
}

system G1, G2, M1, M2, Md, E1, E2;
"""


def _notime_text() -> str:
    return """\
// Proposed three-buffer system without time.
// Channels: G1 -a-> M1 -b-> M2 -c-> E1 and G2 -e-> M2 -g-> Md -f-> M1 -d-> E2.
chan a, b, c, d, e, f, g;

process G1 {
  loc start;
  loc send;
  init start;
  start -> send { sync a!; }
  send -> start { }
}

process G2 {
  loc start;
  loc send;
  init start;
  start -> send { sync e!; }
  send -> start { }
}

process M1 {
  loc idle;
  loc G1_receive;
  loc G2_receive;
  init idle;
  idle -> G1_receive { sync a?; }
  G1_receive -> idle { sync b!; }
  idle -> G2_receive { sync f?; }
  G2_receive -> idle { sync d!; }
}

process M2 {
  loc idle;
  loc G1_receive;
  loc G2_receive;
  init idle;
  idle -> G1_receive { sync b?; }
  G1_receive -> idle { sync c!; }
  idle -> G2_receive { sync e?; }
  G2_receive -> idle { sync g!; }
}

process Md {
  loc idle;
  loc hold;
  init idle;
  idle -> hold { sync g?; }
  hold -> idle { sync f!; }
}

""" + _EXITS


def _deterministic_text(alpha: int, beta: int, gamma: int) -> str:
    return f"""\
// Proposed three-buffer system with exact delays:
// G1 fires every {alpha}, G2 every {beta}, every buffer holds a packet for {gamma}.
// G2 broadcasts on e, so its packet is dropped while M2 is occupied;
// all other hand-overs block until the receiver is free.
clock xG1, xG2, xM1, xM2, xMd;
chan a, b, c, d, f, g;
broadcast chan e;

process G1 {{
  loc start inv xG1 <= {alpha};
  init start;
  start -> start {{ guard xG1 == {alpha}; sync a!; assign xG1 := 0; }}
}}

process G2 {{
  loc start inv xG2 <= {beta};
  init start;
  start -> start {{ guard xG2 == {beta}; sync e!; assign xG2 := 0; }}
}}

process M1 {{
  loc idle;
  loc G1_receive inv xM1 <= {gamma};
  loc G2_receive inv xM1 <= {gamma};
  init idle;
  idle -> G1_receive {{ sync a?; assign xM1 := 0; }}
  G1_receive -> idle {{ guard xM1 == {gamma}; sync b!; }}
  idle -> G2_receive {{ sync f?; assign xM1 := 0; }}
  G2_receive -> idle {{ guard xM1 == {gamma}; sync d!; }}
}}

process M2 {{
  loc idle;
  loc G1_receive inv xM2 <= {gamma};
  loc G2_receive inv xM2 <= {gamma};
  init idle;
  idle -> G1_receive {{ sync b?; assign xM2 := 0; }}
  G1_receive -> idle {{ guard xM2 == {gamma}; sync c!; }}
  idle -> G2_receive {{ sync e?; assign xM2 := 0; }}
  G2_receive -> idle {{ guard xM2 == {gamma}; sync g!; }}
}}

process Md {{
  loc idle;
  loc hold inv xMd <= {gamma};
  init idle;
  idle -> hold {{ sync g?; assign xMd := 0; }}
  hold -> idle {{ guard xMd == {gamma}; sync f!; }}
}}

""" + _EXITS


def _nondeterministic_text() -> str:
    return """\
// Proposed three-buffer system with non-deterministic windows.
// G1 emits at any time after the previous cycle, G2 likewise; a generator
// re-arms once 5 units have passed.  M1 holds a G1 packet for (2,3] and
// then sets its clock to 3.  Constants marked "reconstructed" were chosen
// symmetric to M1 so that the reachability, safety and liveness queries hold.
clock xG1, xG2, xM1, xMd;
int[0,1] md_busy;
chan a, b, c, d, e, f, g;

process G1 {
  loc start;
  loc send inv xG1 <= 5;
  init start;
  // reconstructed: G1 waits until the return buffer Md is empty
  start -> send { guard xG1 >= 0 && md_busy == 0; sync a!; assign xG1 := 0; }
  send -> start { guard xG1 >= 5; }
}

process G2 {
  loc start;
  loc send inv xG2 <= 5;
  init start;
  start -> send { guard xG2 >= 0; sync e!; assign xG2 := 0; }
  send -> start { guard xG2 >= 5; }
}

process M1 {
  loc idle;
  loc G1_receive inv xM1 <= 3;
  loc G2_receive inv xM1 <= 1;  // reconstructed
  init idle;
  idle -> G1_receive { sync a?; assign xM1 := 0; }
  G1_receive -> idle { guard xM1 > 2; sync b!; assign xM1 := 3; }
  idle -> G2_receive { sync f?; assign xM1 := 0; }
  G2_receive -> idle { sync d!; }
}

process M2 {
  // reconstructed: M2 forwards immediately in both directions
  loc idle;
  urgent loc G1_receive;
  urgent loc G2_receive;
  init idle;
  idle -> G1_receive { sync b?; }
  G1_receive -> idle { sync c!; }
  idle -> G2_receive { sync e?; }
  G2_receive -> idle { sync g!; }
}

process Md {
  loc idle;
  loc hold inv xMd <= 3;  // reconstructed: symmetric to M1
  init idle;
  idle -> hold { sync g?; assign xMd := 0, md_busy := 1; }
  hold -> idle { guard xMd > 2; sync f!; assign xMd := 3, md_busy := 0; }
}

""" + _EXITS


def proposed_text(cfg: TimeModelConfig) -> str:
    if isinstance(cfg, NoTime):
        return _notime_text()
    if isinstance(cfg, Deterministic):
        _check_durations(cfg.alpha_hat, cfg.beta_hat, cfg.gamma_hat)
        return _deterministic_text(cfg.alpha_hat, cfg.beta_hat, cfg.gamma_hat)
    if isinstance(cfg, NonDeterministic):
        return _nondeterministic_text()
    raise TypeError(f"not a proposed-system time model: {cfg!r}")


def build_existing(shifted: bool = False) -> Network:
    return load_network(existing_text(shifted))


def build_proposed(cfg: TimeModelConfig) -> Network:
    return load_network(proposed_text(cfg))


# ---------------------------------------------------------------------------
# shipped corpus

EXISTING_QUERIES = """\
// safety
A[] not deadlock
// some packet of G1 reaches its exit
E<> E2.receive
"""

PROPOSED_QUERIES = """\
// reachability
E<> M1.G2_receive
// safety
A[] not deadlock
// liveness
G1.send --> E1.receive
"""

NOTIME_QUERIES = """\
A[] not deadlock
E<> E1.receive
"""

DETERMINISTIC_QUERIES = """\
A[] not deadlock
E<> E2.receive
"""


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    description: str
    model: str
    queries: str

    def network(self) -> Network:
        return load_network(self.model)

    def parsed_queries(self):
        return parse_queries(self.queries)


def corpus() -> dict[str, CorpusEntry]:
    entries = [
        CorpusEntry("existing", "existing system, simultaneous start", existing_text(False), EXISTING_QUERIES),
        CorpusEntry("existing_shifted", "existing system, G1 at 15 and G2 at 10", existing_text(True), EXISTING_QUERIES),
        CorpusEntry("proposed_notime", "proposed system without time", proposed_text(NoTime()), NOTIME_QUERIES),
        CorpusEntry(
            "proposed_det", "proposed system, periods 10 and 1, buffer delay 2",
            proposed_text(Deterministic()), DETERMINISTIC_QUERIES,
        ),
        CorpusEntry(
            "proposed_nondet", "proposed system with non-deterministic windows",
            proposed_text(NonDeterministic()), PROPOSED_QUERIES,
        ),
    ]
    return {e.name: e for e in entries}


# ---------------------------------------------------------------------------
# pipeline timing


class ArrivalPoint(enum.Enum):
    GenReady = "GenReady"
    M1fromG1 = "M1fromG1"
    M1fromMd = "M1fromMd"
    M2fromM1 = "M2fromM1"
    M2fromG2 = "M2fromG2"
    MdFromM2 = "MdFromM2"
    E1fromM2 = "E1fromM2"
    E2fromM1 = "E2fromM1"


@dataclass(frozen=True)
class TimingParams:
    zeta: int  # transfer time over one channel
    theta: int  # hold time at M1 (G1 packets) and Md
    alpha: int  # iteration index

    def __post_init__(self) -> None:
        for name in ("zeta", "theta", "alpha"):
            v = getattr(self, name)
            if v < 0:
                raise ValueError(f"{name} must be non-negative, got {v}")


def period(zeta: int, theta: int) -> int:
    return 4 * zeta + theta


# (zeta coefficient, theta coefficient) on top of alpha * period
_OFFSETS = {
    ArrivalPoint.GenReady: (0, 0),
    ArrivalPoint.M1fromG1: (1, 1),
    ArrivalPoint.M1fromMd: (3, 1),
    ArrivalPoint.M2fromM1: (2, 1),
    ArrivalPoint.M2fromG2: (1, 0),
    ArrivalPoint.MdFromM2: (2, 1),
    ArrivalPoint.E1fromM2: (3, 1),
    ArrivalPoint.E2fromM1: (4, 1),
}


def arrival_time(p: ArrivalPoint, t: TimingParams) -> int:
    kz, kt = _OFFSETS[p]
    return kz * t.zeta + kt * t.theta + t.alpha * period(t.zeta, t.theta)


class PipelineSim:
    """Event-driven run of the proposed system with one packet per generator per round.

    Every hop takes ``zeta``.  M1 holds G1 packets and Md holds every packet
    for ``theta`` before forwarding; M2 forwards at once.  A buffer is
    reserved from the moment a packet is sent to it, and a packet whose next
    buffer is taken waits where it is.  A round starts once E2 has its packet
    and E1's acknowledgement (one hop) is back.
    """

    ROUTES = {"G1": ("M1", "M2", "E1"), "G2": ("M2", "Md", "M1", "E2")}
    POINTS = {
        ("G1", "M1"): ArrivalPoint.M1fromG1,
        ("G1", "M2"): ArrivalPoint.M2fromM1,
        ("G1", "E1"): ArrivalPoint.E1fromM2,
        ("G2", "M2"): ArrivalPoint.M2fromG2,
        ("G2", "Md"): ArrivalPoint.MdFromM2,
        ("G2", "M1"): ArrivalPoint.M1fromMd,
        ("G2", "E2"): ArrivalPoint.E2fromM1,
    }

    def __init__(self, zeta: int, theta: int) -> None:
        _check_durations(zeta, theta)
        self.zeta, self.theta = zeta, theta

    def hold(self, pkt: str, node: str) -> int:
        return self.theta if node == "Md" or (pkt, node) == ("G1", "M1") else 0

    def run(self, rounds: int) -> list[dict[ArrivalPoint, int]]:
        out, start = [], 0
        for _ in range(rounds):
            rec, start = self._round(start)
            out.append(rec)
        return out

    def _round(self, start: int) -> tuple[dict[ArrivalPoint, int], int]:
        occupied: dict[str, str | None] = {"M1": None, "M2": None, "Md": None}
        pos = {"G1": -1, "G2": -1}
        blocked: list[str] = []
        rec: dict[ArrivalPoint, int] = {}
        emitted: dict[str, int] = {}
        events: list[tuple[int, int, str, str]] = []
        counter = iter(range(1 << 30))

        def push(t: int, kind: str, pkt: str) -> None:
            heapq.heappush(events, (t, next(counter), kind, pkt))

        def forward(pkt: str, t: int) -> bool:
            route = self.ROUTES[pkt]
            dest = route[pos[pkt] + 1]
            if dest in occupied and occupied[dest] is not None:
                return False
            if pos[pkt] >= 0:
                occupied[route[pos[pkt]]] = None
            if dest in occupied:
                occupied[dest] = pkt
            pos[pkt] += 1
            push(t + self.zeta, "arrive", pkt)
            return True

        for pkt in ("G1", "G2"):
            push(start, "ready", pkt)
        while events:
            t, _, kind, pkt = heapq.heappop(events)
            if kind == "arrive":
                node = self.ROUTES[pkt][pos[pkt]]
                if node.startswith("E"):
                    rec[self.POINTS[(pkt, node)]] = t
                else:
                    push(t + self.hold(pkt, node), "ready", pkt)
                continue
            if pos[pkt] < 0:
                emitted[pkt] = t
            else:
                rec[self.POINTS[(pkt, self.ROUTES[pkt][pos[pkt]])]] = t
            if not forward(pkt, t):
                blocked.append(pkt)
            progress = True
            while progress:
                progress = False
                for waiting in list(blocked):
                    if forward(waiting, t):
                        blocked.remove(waiting)
                        progress = True
        if blocked:
            raise RuntimeError(f"pipeline stuck with {blocked} waiting")
        rec[ArrivalPoint.GenReady] = emitted["G1"]
        rec_g2 = emitted["G2"]
        if rec_g2 != emitted["G1"]:
            raise AssertionError("generators released out of step")
        nxt = max(rec[ArrivalPoint.E2fromM1], rec[ArrivalPoint.E1fromM2] + self.zeta)
        return rec, nxt


@dataclass(frozen=True)
class TimingRow:
    point: ArrivalPoint
    alpha: int
    closed_form: int
    measured: int


def timing_table(alphas: Iterable[int], zeta: int, theta: int) -> list[TimingRow]:
    """Closed form next to the simulated value for every point and iteration."""
    alphas = list(alphas)
    if not alphas:
        return []
    if min(alphas) < 0:
        raise ValueError("alpha must be non-negative")
    runs = PipelineSim(zeta, theta).run(max(alphas) + 1)
    rows = []
    for alpha in alphas:
        params = TimingParams(zeta, theta, alpha)
        for p in ArrivalPoint:
            rows.append(TimingRow(p, alpha, arrival_time(p, params), runs[alpha][p]))
    return rows


def buffer_size(rtt: float, capacity: float) -> float:
    """Bandwidth-delay product: buffer bits needed for round-trip ``rtt`` at ``capacity``."""
    if rtt < 0 or capacity < 0:
        raise ValueError("rtt and capacity must be non-negative")
    return rtt * capacity
