import pytest

from tacheck import dbm
from tacheck.bufferlab import NoTime, NonDeterministic, build_existing, build_proposed
from tacheck.core import ModelError
from tacheck.modelspec import load_network
from tacheck.network import (
    Internal,
    Sync,
    describe,
    initial_state,
    is_deadlock,
    location_names,
    participants,
    successors,
)
from tacheck.verifier import explore


def by_names(net, names):
    want = dict(n.split(".") for n in names)
    locs = tuple(
        p.location_named(want[p.name]).id if p.name in want else p.initial for p in net.processes
    )
    return locs


def test_initial_state_of_nondeterministic_model():
    net = build_proposed(NonDeterministic())
    s = initial_state(net)
    assert location_names(net, s.locs)[:5] == ["G1.start", "G2.start", "M1.idle", "M2.idle", "Md.idle"]
    # all clocks advance together and no initial invariant bounds them
    assert dbm.render(s.zone, net.clocks).startswith("xG1>=0 && xG2>=0")
    assert s.zone.bound(1, 2).value == 0 and s.zone.bound(2, 1).value == 0


def test_initial_invariant_at_zero():
    net = load_network("clock x; process P { loc a inv x <= 0; init a; } system P;")
    assert dbm.render(initial_state(net).zone, ["x"]) == "x==0"


def test_unsatisfiable_initial_invariant():
    net = load_network("clock x; process P { loc a inv x < 0; init a; } system P;")
    with pytest.raises(ModelError, match="empty initial state"):
        initial_state(net)


def test_no_time_initial_state_has_two_handshakes():
    net = build_proposed(NoTime())
    succ = successors(net, initial_state(net))
    labels = [describe(net, l) for l, _ in succ]
    assert labels == ["a: G1.start->send, M1.idle->G1_receive", "e: G2.start->send, M2.idle->G2_receive"]


def test_cyclic_wait_has_no_successors():
    net = build_proposed(NoTime())
    expl = explore(net)
    locs = by_names(net, ["M1.G1_receive", "M2.G2_receive", "Md.hold"])
    # generators back at start and every buffer full
    stuck = [s for s in expl.nodes if s.locs[:5] == locs[:5]]
    assert stuck
    for s in stuck:
        assert successors(net, s) == []
        assert is_deadlock(net, s)


def test_shifted_existing_initial_state_is_live():
    net = build_existing(shifted=True)
    assert not is_deadlock(net, initial_state(net))


def test_self_loop_is_never_deadlocked():
    net = load_network("clock x; process P { loc a; init a; a -> a { guard x >= 0; } } system P;")
    assert not is_deadlock(net, initial_state(net))


def test_idling_forever_counts_as_deadlock():
    net = load_network("clock x; process P { loc a; init a; } system P;")
    assert is_deadlock(net, initial_state(net))


BROADCAST = """
clock x;
broadcast chan go;
process S { loc s; loc t; init s; s -> t { sync go!; } }
process R1 { loc r; loc u; init r; r -> u { sync go?; } }
process R2 { loc r; loc u; init r; r -> u { sync go?; assign x := 0; } }
process R3 { loc busy; init busy; }
system S, R1, R2, R3;
"""


def test_broadcast_takes_every_enabled_receiver():
    net = load_network(BROADCAST)
    ((label, t),) = successors(net, initial_state(net))
    assert isinstance(label, Sync) and label.receivers == ((1, 0), (2, 0))
    assert location_names(net, t.locs) == ["S.t", "R1.u", "R2.u", "R3.busy"]


def test_broadcast_without_receivers_fires_alone():
    net = load_network(BROADCAST.replace("system S, R1, R2, R3;", "system S, R3;"))
    ((label, t),) = successors(net, initial_state(net))
    assert label.receivers == ()
    assert location_names(net, t.locs) == ["S.t", "R3.busy"]


def test_binary_channel_pairs_each_receiver_separately():
    net = load_network(BROADCAST.replace("broadcast chan", "chan"))
    labels = [l for l, _ in successors(net, initial_state(net))]
    assert [l.receivers for l in labels] == [((1, 0),), ((2, 0),)]


COMMITTED = """
clock x;
process A { committed loc c; loc d; init c; c -> d { } }
process B { loc p; loc q; init p; p -> q { } }
system B, A;
"""


def test_committed_location_takes_priority():
    net = load_network(COMMITTED)
    s = initial_state(net)
    succ = successors(net, s)
    assert [l for l, _ in succ] == [Internal(1, 0)]
    # time is frozen in the committed state
    assert dbm.render(s.zone, ["x"]) == "x==0"
    # once A has left, B may move and time flows again
    (_, t), = succ
    (label, u), = successors(net, t)
    assert label == Internal(0, 0)
    assert dbm.render(u.zone, ["x"]) == "x>=0"


def test_urgent_location_stops_time_only():
    net = load_network(
        "clock x; process P { urgent loc u; loc v; init u; u -> v { guard x <= 0; } } system P;"
    )
    s = initial_state(net)
    assert dbm.render(s.zone, ["x"]) == "x==0"
    assert len(successors(net, s)) == 1


def test_sender_updates_apply_before_receiver_updates():
    net = load_network(
        """
        int[0,10] v;
        chan c;
        process S { loc a; loc b; init a; a -> b { sync c!; assign v := 3; } }
        process R { loc a; loc b; init a; a -> b { sync c?; assign v := v * 2; } }
        system S, R;
        """
    )
    ((_, t),) = successors(net, initial_state(net))
    assert t.ints == (6,)


def test_successor_order_and_invariants():
    net = build_proposed(NonDeterministic())
    expl = explore(net)
    for s in expl.nodes[:40]:
        first = successors(net, s)
        assert first == successors(net, s)
        keys = [participants(l)[0] for l, _ in first]
        assert keys == sorted(keys)
        for _, t in first:
            assert not t.zone.empty
            assert dbm.canonicalize(t.zone) == t.zone


def test_integer_range_violation_is_an_error():
    net = load_network(
        "int[0,1] v; process P { loc a; init a; a -> a { assign v := v + 1; } } system P;"
    )
    with pytest.raises(ModelError, match="outside"):
        explore(net)
