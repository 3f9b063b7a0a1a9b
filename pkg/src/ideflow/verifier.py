"""Independent feasibility and equilibrium checks for flows over time.

Queues are recomputed from cumulative rates and labels with a plain
Bellman-Ford pass; nothing here reuses the solver's label or queue code.
"""
from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Union

from .flowstate import FlowOverTime
from .network import Network, NetworkError, pieces_from_doc
from .numerics import StepFunction, ZERO, format_rational, to_rational

VIOLATION_KINDS = ("conservation", "queue-negative", "outflow-rule", "no-outflow-before-tau",
                   "inactive-edge-inflow", "sink-overflow")


@dataclass(frozen=True)
class Violation:
    kind: str
    location: str
    time: Fraction
    details: str = ""

    def to_dict(self) -> dict:
        return {"kind": self.kind, "location": self.location,
                "time": format_rational(self.time), "details": self.details}


@dataclass(frozen=True)
class RawFlow:
    """Edge in- and outflow rates as given, with no derived state."""

    inflows: tuple
    outflows: tuple

    @classmethod
    def from_flow(cls, flow: FlowOverTime) -> "RawFlow":
        m = len(flow.network.edges)
        return cls(tuple(flow.inflow(i) for i in range(m)), tuple(flow.outflow(i) for i in range(m)))

    @classmethod
    def from_doc(cls, net: Network, doc: dict) -> "RawFlow":
        """Read the ``flow`` section of a solve document."""
        try:
            entries = sorted(doc["edges"], key=lambda x: int(x["edge"]))
            if [int(x["edge"]) for x in entries] != list(range(len(net.edges))):
                raise NetworkError("flow document does not list every edge exactly once")
            ins, outs = [], []
            for item in entries:
                e = net.edges[int(item["edge"])]
                until = to_rational(item["until"])
                ins.append(StepFunction.from_pieces(pieces_from_doc(item["inflow"]), 0, until))
                outs.append(StepFunction.from_pieces(pieces_from_doc(item["outflow"]), 0, until + e.tau))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, NetworkError):
                raise
            raise NetworkError(f"bad flow document: {exc}") from None
        return cls(tuple(ins), tuple(outs))

    def with_inflow(self, eid: int, f: StepFunction) -> "RawFlow":
        ins = list(self.inflows)
        ins[eid] = f
        return RawFlow(tuple(ins), self.outflows)


class _Cumulative:
    """Prefix integrals of a step function for fast exact evaluation."""

    def __init__(self, f: StepFunction) -> None:
        self.f = f
        self.starts = [lo for lo, _, _ in f.pieces()]
        acc = [ZERO]
        for lo, hi, v in f.pieces():
            if hi is not None:
                acc.append(acc[-1] + v * (hi - lo))
        self.acc = acc

    def __call__(self, t: Fraction) -> Fraction:
        i = bisect_right(self.starts, t) - 1
        if i < 0:
            return ZERO
        return self.acc[i] + self.f.values[i] * (t - self.starts[i])


def _bellman_ford(net: Network, costs: Sequence[Fraction]) -> List[Fraction]:
    dist: List[Optional[Fraction]] = [None] * net.num_nodes
    dist[net.sink] = ZERO
    for _ in range(net.num_nodes):
        changed = False
        for e in net.edges:
            d = dist[e.head]
            if d is None:
                continue
            cand = d + costs[e.id]
            if dist[e.tail] is None or cand < dist[e.tail]:
                dist[e.tail] = cand
                changed = True
        if not changed:
            break
    return dist


def verify(net: Network, flow: Union[FlowOverTime, RawFlow]) -> List[Violation]:
    """All constraint and equilibrium violations of ``flow`` (empty list = pass)."""
    raw = RawFlow.from_flow(flow) if isinstance(flow, FlowOverTime) else flow
    m = len(net.edges)
    if len(raw.inflows) != m or len(raw.outflows) != m:
        raise ValueError("flow does not match the network's edge count")
    ends = set()
    for e, fin, fout in zip(net.edges, raw.inflows, raw.outflows):
        if fin.domain_start != 0 or fout.domain_start != 0 or fin.domain_end is None:
            raise ValueError("rates must be defined on a bounded interval starting at 0")
        if fout.domain_end is None or fout.domain_end < fin.domain_end + e.tau:
            raise ValueError(f"outflow of {net.edge_label(e.id)} too short")
        ends.add(fin.domain_end)
    if len(ends) != 1:
        raise ValueError("all edge inflows must share one horizon")
    horizon = ends.pop()
    out: List[Violation] = []
    cum_in = [_Cumulative(f) for f in raw.inflows]
    cum_out = [_Cumulative(f) for f in raw.outflows]

    def queue(i: int, t: Fraction) -> Fraction:
        return cum_in[i](t) - cum_out[i](t + net.edges[i].tau)

    # outflow before the transit time
    for e, fout in zip(net.edges, raw.outflows):
        for lo, hi, v in fout.pieces():
            if lo >= e.tau:
                break
            if v != 0:
                out.append(Violation("no-outflow-before-tau", net.edge_label(e.id), lo,
                                     f"outflow {format_rational(v)} before {format_rational(e.tau)}"))
                break

    cuts = {ZERO, horizon}
    for e, fin, fout in zip(net.edges, raw.inflows, raw.outflows):
        for b in fin.breakpoints:
            cuts.update((b, b + e.tau))
        for b in fout.breakpoints:
            cuts.update((b, b - e.tau))
    for u in net.inflows:
        cuts.update(u.breakpoints)
    grid = sorted(c for c in cuts if 0 <= c <= horizon)

    for a, b in zip(grid, grid[1:]):
        mid = (a + b) / 2
        _check_conservation(net, raw, mid, out)
        for e in net.edges:
            i = e.id
            for t in (a, mid, b):
                if queue(i, t) < 0:
                    out.append(Violation("queue-negative", net.edge_label(i), t,
                                         f"queue {format_rational(queue(i, t))}"))
                    break
            q = queue(i, mid)
            expected = e.nu if q > 0 else min(raw.inflows[i](mid), e.nu)
            got = raw.outflows[i](mid + e.tau)
            if got != expected:
                out.append(Violation("outflow-rule", net.edge_label(i), mid + e.tau,
                                     f"outflow {format_rational(got)}, expected {format_rational(expected)}"))
        for t, rates in ((a, [f(a) for f in raw.inflows]),
                         (mid, [f(mid) for f in raw.inflows]),
                         (b, [f.left_limit(b) for f in raw.inflows])):
            _check_equilibrium(net, [queue(i, t) for i in range(m)], rates, t, out)
    return _dedupe(out)


def _check_conservation(net, raw, t, out) -> None:
    for v in range(net.num_nodes):
        sent = sum((raw.inflows[i](t) for i in net.out_edges[v]), ZERO)
        arrived = sum((raw.outflows[i](t) for i in net.in_edges[v]), ZERO) + net.inflows[v](t)
        if v == net.sink:
            if sent > arrived:
                out.append(Violation("sink-overflow", net.node_names[v], t,
                                     f"sends {format_rational(sent)} but receives {format_rational(arrived)}"))
        elif sent != arrived:
            out.append(Violation("conservation", net.node_names[v], t,
                                 f"sends {format_rational(sent)} but receives {format_rational(arrived)}"))


def _check_equilibrium(net, queues, rates, t, out) -> None:
    if all(r == 0 for r in rates):
        return
    costs = [e.tau + max(queues[e.id], ZERO) / e.nu for e in net.edges]
    dist = _bellman_ford(net, costs)
    for e in net.edges:
        if rates[e.id] > 0 and dist[e.tail] != dist[e.head] + costs[e.id]:
            out.append(Violation("inactive-edge-inflow", net.edge_label(e.id), t,
                                 f"rate {format_rational(rates[e.id])} on a non-shortest edge"))


def _dedupe(vs: List[Violation]) -> List[Violation]:
    seen = set()
    res = []
    for v in vs:
        key = (v.kind, v.location, v.time)
        if key not in seen:
            seen.add(key)
            res.append(v)
    return res


def report(violations: Sequence[Violation]) -> str:
    return json.dumps({"ok": not violations, "violations": [v.to_dict() for v in violations]},
                      indent=2) + "\n"


def check_periodicity(flow: FlowOverTime, window: Fraction, period: Fraction) -> bool:
    """Whether every queue satisfies q(t + period) == q(t) on [window, window + period]."""
    window = to_rational(window)
    period = to_rational(period)
    if period <= 0:
        raise ValueError("period must be positive")
    horizon = flow.common_frontier()
    if horizon < window + 2 * period:
        raise ValueError(f"flow known up to {horizon}, need {window + 2 * period}")
    for i in range(len(flow.network.edges)):
        q = flow.queue(i)
        points = {window, window + period}
        points.update(b for b in q.breakpoints if window <= b <= window + period)
        points.update(b - period for b in q.breakpoints if window + period <= b <= window + 2 * period)
        if any(q(t) != q(t + period) for t in points):
            return False
    return True
