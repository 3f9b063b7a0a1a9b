from fractions import Fraction as F

import pytest

from ideflow.instances import gen_oscillator
from ideflow.labels import (LabelState, OrderInvariantError, OrderState, compute_labels,
                            dump_labels, initial_order, label_slopes, refresh_order, slope_bound)
from ideflow.network import build_network

SV, SW, VT, WX, XT = range(5)


def osc_labels(q_vt=0):
    net = gen_oscillator(8)
    return net, compute_labels(net, [0, 0, F(q_vt), 0, 0])


def by_name(net, values):
    return {net.node_names[v]: x for v, x in enumerate(values)}


def test_oscillator_labels_at_start():
    net, ls = osc_labels()
    assert by_name(net, ls.labels) == {"s": 2, "v": 1, "w": 2, "x": 1, "t": 0}
    # the route via w is one unit longer, so only sv is active at time 0
    assert SV in ls.active and SW not in ls.active


def test_oscillator_labels_with_queue_on_vt():
    net, ls = osc_labels(q_vt=1)
    assert ls.labels[net.node_index("v")] == 2
    assert ls.labels[net.node_index("s")] == 3
    assert {SV, SW} <= ls.active


def test_single_edge_label():
    net = build_network(["s", "t"], "t", [("s", "t", 1, 1)])
    ls = compute_labels(net, [0])
    assert ls.labels == (1, 0) and ls.active == {0}


def test_negative_queue_rejected():
    net = build_network(["s", "t"], "t", [("s", "t", 1, 1)])
    with pytest.raises(ValueError):
        compute_labels(net, [-1])


def test_draining_queue_slope():
    net = build_network(["s", "t"], "t", [("s", "t", 1, 1)])
    ls = compute_labels(net, [F(2)])
    assert label_slopes(net, ls, [0])[0] == -1


def test_slope_when_vt_queue_builds():
    net, ls = osc_labels()
    slopes = label_slopes(net, ls, [2, 0, 2, 0, 0])
    assert slopes[net.node_index("v")] == 1


def test_slope_just_after_time_two():
    net, ls = osc_labels(q_vt=1)
    # all inflow goes to sw, vt keeps filling at rate 1
    slopes = label_slopes(net, ls, [0, 2, 2, 0, 0])
    assert slopes[net.node_index("v")] == 1
    assert slopes[net.node_index("s")] == 0


def test_slope_bound_examples():
    single = build_network(["s", "t"], "t", [("s", "t", 1, 1)], {"s": [(0, 1, 1)]})
    assert slope_bound(single) == 1
    osc = gen_oscillator(8)
    # s: 2/2 twice -> 1 + 1; v, w: 2/1 each; x: 1/1
    assert slope_bound(osc) == 1 + 1 + 2 + 2 + 1
    idle = build_network(["a", "b", "t"], "t", [("a", "b", 1, 4), ("b", "t", 1, 2)])
    assert slope_bound(idle) == 1 + 2


def two_cycle_network():
    # a -> b and b -> a both exist; b's direct edge is short but congests
    return build_network(["a", "b", "t"], "t",
                         [("a", "t", 2, 1), ("a", "b", 1, 1), ("b", "a", 1, 1), ("b", "t", 1, 1)])


def test_refresh_identity_when_contained():
    net = two_cycle_network()
    ls = compute_labels(net, [0, 0, 0, 0])
    os_ = initial_order(net, ls)
    same, rec = refresh_order(net, os_, ls, F(0))
    assert same is os_ and rec is None


def test_refresh_acyclic_addition_reorders():
    net = two_cycle_network()
    ls0 = compute_labels(net, [0, 0, 0, 0])
    os_ = OrderState(frozenset({3}), (2, 1, 0))
    new, rec = refresh_order(net, os_, ls0, F(0))
    assert ls0.active <= new.edges and rec.removed == ()
    assert new.order[0] == net.sink


def test_refresh_removes_edge_closing_a_cycle():
    net = two_cycle_network()
    ls0 = compute_labels(net, [0, 0, 0, 0])
    os_ = initial_order(net, ls0)
    assert 1 in os_.edges
    # a queue of 3 on b->t makes b route through a
    ls = compute_labels(net, [0, 0, 0, F(3)])
    assert 2 in ls.active
    new, rec = refresh_order(net, os_, ls, F(5))
    assert rec.removed == ((1, F(2), F(3)),)
    assert 1 not in new.edges and ls.active <= new.edges
    order = {v: i for i, v in enumerate(new.order)}
    for eid in new.edges:
        e = net.edges[eid]
        assert order[e.head] < order[e.tail]


def test_refresh_detects_broken_claim():
    net = two_cycle_network()
    # labels where every cycle edge points downhill cannot come from real queues
    fake = LabelState((F(1), F(1), F(0)), frozenset({1, 2}), (0, 0, 0, 0), (1, 1, 1, 1))
    with pytest.raises(OrderInvariantError):
        refresh_order(net, OrderState(frozenset(), (2, 0, 1)), fake, F(0))


def test_dump_labels_line():
    net, ls = osc_labels()
    line = dump_labels(net, F(0), ls, initial_order(net, ls))
    assert line.startswith("theta=0 labels={s:2,")
    assert "active=[s->v" in line
