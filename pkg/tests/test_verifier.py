import json
from fractions import Fraction as F

import pytest

from ideflow.flowstate import FlowOverTime
from ideflow.instances import gen_oscillator
from ideflow.network import build_network
from ideflow.numerics import StepFunction
from ideflow.solver import SolverConfig, result_to_dict, solve
from ideflow.verifier import RawFlow, check_periodicity, report, verify

SV, SW, VT, WX, XT = range(5)


def kinds(vs):
    return {v.kind for v in vs}


def test_solver_output_is_clean():
    res = solve(gen_oscillator(8))
    assert verify(res.network, res.flow) == []
    assert json.loads(report([])) == {"ok": True, "violations": []}


def test_detects_flow_on_inactive_edge():
    # at time 0 the route through w is longer, so splitting 1/1 is not an equilibrium
    net = gen_oscillator(1)
    flow = FlowOverTime(net)
    flow.commit(F(0), F(1), [F(1), F(1), F(0), F(0), F(0)])
    flow.commit(F(1), F(2), [F(0), F(0), F(1), F(1), F(0)])
    flow.commit(F(2), F(3), [F(0)] * 4 + [F(1)])
    vs = verify(net, flow)
    assert "inactive-edge-inflow" in kinds(vs)
    hit = next(v for v in vs if v.kind == "inactive-edge-inflow")
    assert hit.location == "s->w" and hit.time == 0


def test_detects_outflow_rule_break():
    net = build_network(["s", "t"], "t", [("s", "t", 1, 1)], {"s": [(0, 1, 1)]})
    res = solve(net)
    raw = RawFlow.from_flow(res.flow)
    # outflow leaves early, as if the edge were shorter
    end = raw.outflows[0].domain_end
    bad = RawFlow(raw.inflows, (StepFunction.from_pieces([(F(1, 2), F(3, 2), 1)], 0, end),))
    found = kinds(verify(net, bad))
    assert "no-outflow-before-tau" in found


def test_detects_outflow_below_capacity_with_queue():
    net = build_network(["s", "t"], "t", [("s", "t", 1, 1)], {"s": [(0, 1, 2)]})
    res = solve(net)
    raw = RawFlow.from_flow(res.flow)
    end = raw.outflows[0].domain_end
    slow = StepFunction.from_pieces([(1, end, F(1, 2))], 0, end)
    assert "outflow-rule" in kinds(verify(net, RawFlow(raw.inflows, (slow,))))


def test_detects_conservation_break():
    res = solve(gen_oscillator(8))
    raw = RawFlow.from_flow(res.flow)
    f = raw.inflows[SV]
    mutated = raw.with_inflow(SV, f + StepFunction.from_pieces([(F(1, 2), 1, F(1, 4))], 0, f.domain_end))
    assert "conservation" in kinds(verify(res.network, mutated))


def test_raw_flow_document_round_trip():
    res = solve(gen_oscillator(4))
    doc = json.loads(json.dumps(result_to_dict(res)))
    raw = RawFlow.from_doc(res.network, doc["flow"])
    assert raw == RawFlow.from_flow(res.flow)
    assert verify(res.network, raw) == []


def test_shape_errors():
    net = gen_oscillator(1)
    with pytest.raises(ValueError):
        verify(net, RawFlow((), ()))


def test_violation_report_document():
    net = gen_oscillator(1)
    flow = FlowOverTime(net)
    flow.commit(F(0), F(1), [F(1), F(1), F(0), F(0), F(0)])
    doc = json.loads(report(verify(net, flow)))
    assert doc["ok"] is False
    assert {"kind", "location", "time", "details"} <= set(doc["violations"][0])


def test_periodicity_of_zero_flow():
    net = build_network(["s", "t"], "t", [("s", "t", 1, 1)])
    flow = FlowOverTime(net)
    flow.commit(F(0), F(10), [F(0)])
    assert check_periodicity(flow, F(0), F(3))


def test_periodicity_of_steady_queue():
    # constant overload from time 0: queue grows, so no period
    net = build_network(["s", "t"], "t", [("s", "t", 1, 1)], {"s": [(0, 20, 2)]})
    res = solve(net, SolverConfig(horizon=F(12)))
    assert not check_periodicity(res.flow, F(2), F(4))
    # exactly at capacity the queue stays empty
    net = build_network(["s", "t"], "t", [("s", "t", 1, 1)], {"s": [(0, 20, 1)]})
    res = solve(net, SolverConfig(horizon=F(12)))
    assert check_periodicity(res.flow, F(2), F(4))


def test_oscillator_is_not_periodic():
    res = solve(gen_oscillator(40), SolverConfig(horizon=F(30)))
    assert not check_periodicity(res.flow, F(3), F(4))
    assert not check_periodicity(res.flow, F(11), F(8))


def test_periodicity_needs_enough_horizon():
    res = solve(gen_oscillator(8), SolverConfig(horizon=F(5)))
    with pytest.raises(ValueError):
        check_periodicity(res.flow, F(2), F(2))
    with pytest.raises(ValueError):
        check_periodicity(res.flow, F(0), F(0))
