import pytest

from tacheck.bufferlab import (
    ArrivalPoint,
    Deterministic,
    NoTime,
    NonDeterministic,
    PipelineSim,
    ShiftedExisting,
    TimingParams,
    arrival_time,
    buffer_size,
    build_existing,
    build_proposed,
    corpus,
    proposed_text,
    timing_table,
)
from tacheck.network import validate_network


def at(point, alpha, zeta, theta):
    return arrival_time(point, TimingParams(zeta, theta, alpha))


def coeffs(point, alpha):
    """(zeta, theta) coefficients recovered from two evaluations."""
    return at(point, alpha, 1, 0), at(point, alpha, 0, 1)


def test_generator_ready_second_iteration():
    assert coeffs(ArrivalPoint.GenReady, 2) == (8, 2)


def test_first_iteration_cycle_time():
    assert coeffs(ArrivalPoint.GenReady, 1) == (4, 1)


def test_m2_from_g2_enumerated_values():
    assert [coeffs(ArrivalPoint.M2fromG2, a) for a in range(3)] == [(1, 0), (5, 1), (9, 2)]


def test_m1_from_g1_first_round():
    assert coeffs(ArrivalPoint.M1fromG1, 0) == (1, 1)


def test_null_timing():
    for p in ArrivalPoint:
        assert at(p, 5, 0, 0) == 0


def test_e2_example():
    assert at(ArrivalPoint.E2fromM1, 2, 1, 2) == 18


def test_negative_parameters_rejected():
    with pytest.raises(ValueError):
        TimingParams(-1, 0, 0)


def test_table_small_grid():
    rows = timing_table(range(4), 1, 2)
    assert len(rows) == 4 * len(ArrivalPoint)
    assert all(r.closed_form == r.measured for r in rows)


def test_table_empty_range():
    assert timing_table([], 1, 2) == []


def test_generators_release_together():
    sim = PipelineSim(2, 3)
    for rec in sim.run(6):
        assert rec[ArrivalPoint.GenReady] % (4 * 2 + 3) == 0


def test_full_grid_matches_closed_forms():
    for zeta in (1, 2, 3):
        for theta in (0, 1, 2, 5):
            for r in timing_table(range(11), zeta, theta):
                assert r.measured == r.closed_form, (zeta, theta, r)


def test_buffer_size_product():
    assert buffer_size(0, 10e9) == 0
    assert buffer_size(1, 1) == 1
    assert buffer_size(0.25, 10e9) == pytest.approx(2.5e9)
    with pytest.raises(ValueError):
        buffer_size(-1, 1)


def test_builders_produce_valid_networks():
    nets = [build_existing(False), build_existing(True)] + [
        build_proposed(c) for c in (NoTime(), Deterministic(), NonDeterministic())
    ]
    for net in nets:
        assert validate_network(net) == []
    assert [len(n.processes) for n in nets] == [6, 6, 7, 7, 7]
    assert max(n.nclocks for n in nets) <= 5
    assert max(max(n.max_constants) for n in nets) <= 16


def test_existing_topology():
    net = build_existing(False)
    assert [c.name for c in net.channels] == ["a", "b", "c1", "c2", "d", "e"]


def test_no_time_model_has_no_clocks():
    assert build_proposed(NoTime()).nclocks == 0


def test_deterministic_parameters_appear_in_model():
    text = proposed_text(Deterministic(7, 3, 1))
    assert "xG1 == 7" in text and "xG2 == 3" in text and "xMd == 1" in text
    with pytest.raises(ValueError):
        proposed_text(Deterministic(-1, 1, 1))


def test_shifted_config_is_not_a_proposed_model():
    with pytest.raises(TypeError):
        proposed_text(ShiftedExisting())


def test_reconstructed_constants_are_marked():
    assert "reconstructed" in corpus()["proposed_nondet"].model


def test_corpus_inventory():
    assert sorted(corpus()) == [
        "existing", "existing_shifted", "proposed_det", "proposed_nondet", "proposed_notime",
    ]
