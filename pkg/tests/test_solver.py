from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from ideflow.instances import gen_oscillator, gen_random_acyclic, gen_random_cyclic
from ideflow.labels import compute_labels, slope_bound
from ideflow.network import build_network
from ideflow.solver import (CyclicNetworkError, HintError, ResourceLimitError, SolverConfig,
                            derive_phases, resolve_hints, result_to_dict, serialize_result, solve,
                            solve_acyclic, solve_general)
from ideflow.verifier import verify

SV, SW, VT, WX, XT = range(5)


def queue(res, eid, t):
    return res.flow.queue_at(eid, F(t))


def test_zero_inflow_network():
    net = build_network(["s", "t"], "t", [("s", "t", 1, 1)])
    res = solve(net)
    assert res.phases == [] and res.terminated and res.termination_time == 0


def test_single_edge_transit():
    net = build_network(["s", "t"], "t", [("s", "t", 1, 1)], {"s": [(0, 1, 1)]})
    for res in (solve_general(net), solve_acyclic(net)):
        assert res.termination_time == 2
        assert [(p.start, p.end) for p in res.phases] == [(0, 1), (1, 2)]


def test_oscillator_first_phases():
    res = solve(gen_oscillator(1))
    first = res.phases[:2]
    assert (first[0].start, first[0].end) == (0, 1)
    assert first[0].inflow[SV] == 2 and first[0].inflow[SW] == 0
    assert (first[1].start, first[1].end) == (1, 2)
    assert queue(res, VT, 2) == 1


def test_oscillator_queue_values():
    res = solve(gen_oscillator(8))
    assert queue(res, VT, 3) == 2
    assert queue(res, WX, F(7, 2)) == F(1, 2)
    assert queue(res, VT, F(9, 2)) == F(1, 2)
    assert queue(res, WX, F(9, 2)) == F(3, 2)
    assert queue(res, VT, F(13, 2)) == F(5, 2)


def test_oscillator_regression_values():
    # frozen from the first verified run
    res = solve(gen_oscillator(8))
    assert res.termination_time == 12
    assert len(res.phases) == 22


def test_first_extension_lengths():
    res = solve_general(gen_oscillator(8))
    times = sorted({ev.time for ev in res.events})
    assert times[:3] == [1, 2, 3]
    kinds_at_2 = {ev.kind for ev in res.events if ev.time == 2}
    assert "activation" in kinds_at_2
    # the wx queue from the first period runs dry at 4k+2 with k=1
    assert any(ev.kind == "queue-depletion" and ev.time == 6 for ev in res.events)


def test_event_lines_format():
    res = solve_general(gen_oscillator(1))
    line = res.event_lines().splitlines()[0]
    assert line.startswith("θ=1 kind=")


def test_horizon_stops_early():
    res = solve(gen_oscillator(8), SolverConfig(horizon=F(5)))
    assert res.end == 5 and not res.terminated and res.termination_time is None
    assert res.phases[-1].end == 5
    acyc = solve_acyclic(gen_oscillator(8), SolverConfig(horizon=F(5)))
    assert acyc.phases == res.phases


def test_resource_limit_carries_partial_result():
    with pytest.raises(ResourceLimitError) as info:
        solve(gen_oscillator(8), SolverConfig(max_phases=4))
    partial = info.value.partial
    assert partial.end == F(7, 2) and not partial.terminated
    assert [p.end for p in partial.phases] == [1, 2, 3, F(7, 2)]
    assert verify(partial.network, partial.flow) == []


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(horizon=F(0))
    with pytest.raises(ValueError):
        SolverConfig(max_phases=0)
    with pytest.raises(ValueError):
        SolverConfig(mode="fast")


def test_acyclic_driver_rejects_cycles():
    with pytest.raises(CyclicNetworkError):
        solve_acyclic(build_network(["a", "b", "t"], "t",
                                    [("a", "b", 1, 1), ("b", "a", 1, 1), ("b", "t", 1, 1)]))


def test_invalid_hint_is_an_input_error():
    net = gen_oscillator(1)
    with pytest.raises(HintError):
        solve(net, SolverConfig(hints=resolve_hints(net, {"s": "w"})))
    with pytest.raises(HintError):
        resolve_hints(net, {"s": "t"})


def test_hint_steers_tied_node():
    net = build_network(["s", "a", "b", "t"], "t",
                        [("s", "a", 1, 4), ("s", "b", 1, 4), ("a", "t", 1, 4), ("b", "t", 1, 4)],
                        {"s": [(0, 1, 2)]})
    plain = solve(net)
    assert plain.phases[0].inflow[:2] == (2, 0)
    hinted = solve(net, SolverConfig(hints=resolve_hints(net, {"s": "b"})))
    assert hinted.phases[0].inflow[:2] == (0, 2)
    assert verify(net, hinted.flow) == []
    assert solve_acyclic(net, SolverConfig(hints=resolve_hints(net, {"s": "b"}))).phases == hinted.phases


def test_empty_network_stays_empty():
    res = solve(gen_oscillator(2))
    end = res.termination_time
    assert all(res.flow.queue_now(e.id) == 0 for e in res.network.edges)
    assert not res.flow.in_transit_after(end)


def test_phase_invariants_on_oscillator():
    net = gen_oscillator(8)
    res = solve(net)
    bound = slope_bound(net)
    assert res.phases[0].start == 0
    for a, b in zip(res.phases, res.phases[1:]):
        assert a.end == b.start
    for p in res.phases:
        assert p.end > p.start
        assert all(abs(s) <= bound for s in p.label_slopes)
        for e in net.edges:
            if p.inflow[e.id] > 0:
                assert e.id in p.active
    assert derive_phases(net, res.flow, res.end) == res.phases


def test_deterministic_documents():
    a = serialize_result(solve(gen_oscillator(3)))
    b = serialize_result(solve(gen_oscillator(3)))
    assert a == b
    doc = result_to_dict(solve(gen_oscillator(3)))
    assert doc["terminated"] is True and doc["phases"][0]["inflow"][0] == "2"


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 100_000), st.integers(2, 7))
def test_random_acyclic_drivers_agree(seed, n):
    net = gen_random_acyclic(seed, n)
    a = solve_general(net)
    b = solve_acyclic(net)
    assert a.phases == b.phases
    assert a.flow == b.flow
    assert a.termination_time == b.termination_time == a.flow.last_activity()


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 100_000), st.integers(3, 6))
def test_random_cyclic_solutions_verify(seed, n):
    net = gen_random_cyclic(seed, n)
    res = solve_general(net)
    assert res.terminated
    assert verify(net, res.flow) == []
    for rec in res.refreshes:
        for _, tail_label, head_label in rec.removed:
            assert tail_label < head_label


def test_volume_conservation_at_termination():
    net = gen_random_acyclic(7, 6)
    res = solve(net)
    sink_in = sum(res.flow.outflow(i).integrate(0, res.end) for i in net.in_edges[net.sink])
    total = sum((lo_hi_v[2] * (lo_hi_v[1] - lo_hi_v[0])
                 for u in net.inflows for lo_hi_v in u.pieces() if lo_hi_v[1] is not None), F(0))
    assert sink_in == total


def test_labels_of_phase_match_fresh_computation():
    net = gen_oscillator(4)
    res = solve(net)
    for p in res.phases:
        assert compute_labels(net, list(p.queue)).labels == p.labels
