"""Event-driven construction of instantaneous dynamic equilibria.

Two drivers build the same flow:

* :func:`solve` extends the flow network-wide, one interval of constant
  edge rates at a time, keeping an acyclic superset of the active edges to
  order the nodes.
* :func:`solve_acyclic` works on acyclic graphs window by window (each of
  length ``tau_min``), handling one node at a time in a fixed order.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .flowstate import FlowOverTime, PhaseRecord, gross_node_inflow
from .labels import (LabelState, RefreshRecord, compute_labels, dump_labels, initial_order,
                     label_slopes, queue_slope, refresh_order)
from .network import Network, step_to_pieces, topological_order
from .numerics import PWLinear, ZERO, format_rational, to_rational
from .waterfill import build_marginals, waterfill

log = logging.getLogger(__name__)

EVENT_KINDS = ("inflow-break", "gross-inflow-break", "queue-depletion", "activation",
               "order-refresh", "label-break", "window-end", "horizon")


class SolverError(RuntimeError):
    pass


class InternalSolverError(SolverError):
    """Broken invariant inside the solver (a bug, not bad input)."""


class HintError(ValueError):
    """A tie-break hint names an edge that cannot carry flow."""


class ResourceLimitError(SolverError):
    def __init__(self, message: str, partial: "SolveResult") -> None:
        super().__init__(message)
        self.partial = partial


@dataclass
class SolverConfig:
    horizon: Optional[Fraction] = None
    max_phases: int = 100_000
    hints: Dict[int, int] = field(default_factory=dict)  # node -> preferred out-edge
    mode: str = "auto"

    def __post_init__(self) -> None:
        if self.horizon is not None:
            self.horizon = to_rational(self.horizon)
            if self.horizon <= 0:
                raise ValueError("horizon must be positive")
        if self.max_phases <= 0:
            raise ValueError("max_phases must be positive")
        if self.mode not in ("auto", "acyclic", "general"):
            raise ValueError(f"unknown mode {self.mode!r}")


def resolve_hints(net: Network, hints: Mapping[str, str]) -> Dict[int, int]:
    """Map ``{node name: head name}`` to ``{node index: edge id}``."""
    out = {}
    for tail, head in hints.items():
        try:
            out[net.node_index(tail)] = net.find_edge(tail, head)
        except KeyError as exc:
            raise HintError(str(exc)) from None
    return out


@dataclass(frozen=True)
class Event:
    time: Fraction
    kind: str
    subject: str

    def line(self) -> str:
        key = "edge" if "->" in self.subject else "node"
        return f"θ={format_rational(self.time)} kind={self.kind} {key}={self.subject}"


@dataclass
class SolveResult:
    network: Network
    flow: FlowOverTime
    phases: List[PhaseRecord]
    events: List[Event]
    refreshes: List[RefreshRecord]
    terminated: bool
    termination_time: Optional[Fraction]
    end: Fraction
    steps: int

    def event_lines(self) -> str:
        return "".join(ev.line() + "\n" for ev in self.events)


# -- shared helpers -------------------------------------------------------------

def _inflow_over(net: Network, theta: Fraction) -> bool:
    for u in net.inflows:
        if u(theta) != 0 or u.next_breakpoint(theta) is not None:
            return False
    return True


def network_empty(net: Network, flow: FlowOverTime, theta: Fraction,
                  queues: Optional[Sequence[Fraction]] = None) -> bool:
    """No queues, nothing in transit and no more network inflow after ``theta``."""
    if queues is None:
        queues = [flow.queue_at(e.id, theta) for e in net.edges]
    if any(q != 0 for q in queues):
        return False
    return not flow.in_transit_after(theta) and _inflow_over(net, theta)


def _distribute(net, v, b, active_out, queues, slopes, hints, theta):
    """Water-fill ``b`` at ``v``; returns the distribution."""
    hint = hints.get(v)
    if hint is not None and b > 0 and hint not in active_out:
        raise HintError(f"hinted edge {net.edge_label(hint)} is not active at {theta}")
    ms = build_marginals(net, v, active_out, queues, slopes)
    return waterfill(b, ms, preferred=hint)


def _depletion(q: Fraction, rate: Fraction, nu: Fraction) -> Optional[Fraction]:
    if q > 0 and rate < nu:
        return q / (nu - rate)
    return None


def _crossing(gap: Fraction, closing_speed: Fraction) -> Optional[Fraction]:
    """Time until a positive gap shrinking at ``closing_speed`` closes."""
    if closing_speed > 0:
        return gap / closing_speed
    return None


class _Candidates:
    def __init__(self) -> None:
        self.best: Optional[Fraction] = None
        self.why: List[Tuple[str, str]] = []

    def offer(self, t: Optional[Fraction], kind: str, subject: str) -> None:
        if t is None:
            return
        if self.best is None or t < self.best:
            self.best = t
            self.why = [(kind, subject)]
        elif t == self.best:
            self.why.append((kind, subject))


# -- general driver ---------------------------------------------------------------

def solve(net: Network, cfg: Optional[SolverConfig] = None) -> SolveResult:
    """Compute an IDE; dispatches on ``cfg.mode``."""
    cfg = cfg or SolverConfig()
    if cfg.mode == "acyclic":
        return solve_acyclic(net, cfg)
    return solve_general(net, cfg)


def solve_general(net: Network, cfg: Optional[SolverConfig] = None) -> SolveResult:
    cfg = cfg or SolverConfig()
    flow = FlowOverTime(net)
    theta = ZERO
    events: List[Event] = []
    refreshes: List[RefreshRecord] = []
    steps = 0
    horizon = cfg.horizon
    queues = [ZERO] * len(net.edges)
    ls = compute_labels(net, queues)
    order_state = initial_order(net, ls)

    def result(terminated: bool) -> SolveResult:
        return _finish(net, flow, events, refreshes, terminated, theta, steps)

    while True:
        queues = [flow.queue_now(e.id) for e in net.edges]
        ls = compute_labels(net, queues)
        order_state, rec = refresh_order(net, order_state, ls, theta)
        if rec is not None:
            refreshes.append(rec)
            events.extend(Event(theta, "order-refresh", net.edge_label(i)) for i in rec.added)
        if log.isEnabledFor(logging.DEBUG):
            log.debug(dump_labels(net, theta, ls, order_state))
        if network_empty(net, flow, theta, queues):
            return result(True)
        if horizon is not None and theta >= horizon:
            return result(False)
        if steps >= cfg.max_phases:
            raise ResourceLimitError(f"more than {cfg.max_phases} extension steps", result(False))

        rates = [ZERO] * len(net.edges)
        slopes: List[Optional[Fraction]] = [None] * net.num_nodes
        slopes[net.sink] = ZERO
        for v in order_state.order:
            if v == net.sink:
                continue
            b = net.inflows[v](theta) + sum((flow.outflow_at(i, theta) for i in net.in_edges[v]), ZERO)
            active_out = [i for i in net.out_edges[v] if i in ls.active]
            dist = _distribute(net, v, b, active_out, queues, slopes, cfg.hints, theta)
            for eid, z in dist.rates.items():
                rates[eid] = z
            slopes[v] = dist.level

        cands = _Candidates()
        for v, u in enumerate(net.inflows):
            cands.offer(u.next_breakpoint(theta), "inflow-break", net.node_names[v])
        for e in net.edges:
            i = e.id
            label = net.edge_label(i)
            cands.offer(flow.outflow_next_change(i, theta), "gross-inflow-break", label)
            new_out = e.nu if queues[i] > 0 else min(rates[i], e.nu)
            if new_out != flow.last_outflow_rate(i):
                cands.offer(flow.outflow_known_until(i), "gross-inflow-break", label)
            dt = _depletion(queues[i], rates[i], e.nu)
            cands.offer(None if dt is None else theta + dt, "queue-depletion", label)
            if e.tail == net.sink or i in ls.active:
                continue
            gap = ls.labels[e.head] + ls.costs[i] - ls.labels[e.tail]
            speed = slopes[e.tail] - slopes[e.head] - queue_slope(queues[i], ZERO, e.nu) / e.nu
            dt = _crossing(gap, speed)
            cands.offer(None if dt is None else theta + dt, "activation", label)
        if horizon is not None:
            cands.offer(horizon, "horizon", net.node_names[net.sink])
        if cands.best is None:
            raise InternalSolverError(f"no event bounds the extension at {theta}")
        if cands.best <= theta:
            raise InternalSolverError(f"non-positive extension at {theta}")
        end = cands.best
        flow.commit(theta, end, rates)
        events.extend(Event(end, kind, subj) for kind, subj in cands.why)
        theta = end
        steps += 1


# -- acyclic driver ---------------------------------------------------------------

class CyclicNetworkError(ValueError):
    pass


def solve_acyclic(net: Network, cfg: Optional[SolverConfig] = None) -> SolveResult:
    """Window-by-window construction for acyclic graphs."""
    cfg = cfg or SolverConfig()
    order = topological_order(net.num_nodes, [(e.tail, e.head) for e in net.edges])
    if order is None:
        raise CyclicNetworkError("network contains a directed cycle")
    order.remove(net.sink)
    order.insert(0, net.sink)
    tau_min = net.tau_min
    flow = FlowOverTime(net)
    events: List[Event] = []
    steps = 0
    horizon = cfg.horizon
    start = ZERO
    while True:
        if network_empty(net, flow, start):
            end = flow.last_activity()
            return _finish(net, flow.truncated(end), events, [], True, end, steps)
        if horizon is not None and start >= horizon:
            flow = flow.truncated(horizon)
            done = network_empty(net, flow, horizon)
            end = flow.last_activity() if done else horizon
            if done:
                flow = flow.truncated(end)
            return _finish(net, flow, events, [], done, end, steps)
        if steps >= cfg.max_phases:
            partial = _finish(net, flow, events, [], False, start, steps)
            raise ResourceLimitError(f"more than {cfg.max_phases} local phases", partial)
        stop = start + tau_min
        node_labels: Dict[int, PWLinear] = {net.sink: PWLinear.constant(0, start, stop)}
        for eid in net.out_edges[net.sink]:
            flow.extend_edge(eid, ZERO, stop)
        for v in order[1:]:
            node_labels[v], n = _window_at_node(net, flow, v, start, stop, node_labels, cfg.hints, events)
            steps += n
        start = stop


def _window_at_node(net, flow, v, start, stop, node_labels, hints, events):
    inflow = gross_node_inflow(flow, net, v, (start, stop))
    outs = net.out_edges[v]
    theta = start
    pieces = []
    count = 0
    while theta < stop:
        queues = {i: flow.queue_now(i) for i in outs}
        through = {}
        for i in outs:
            e = net.edges[i]
            through[i] = node_labels[e.head](theta) + e.tau + queues[i] / e.nu
        label = min(through.values())
        active_out = [i for i in outs if through[i] == label]
        head_slopes = {net.edges[i].head: node_labels[net.edges[i].head].right_slope(theta) for i in outs}
        dist = _distribute(net, v, inflow(theta), active_out, queues, head_slopes, hints, theta)
        slope = dist.level
        rates = {i: dist.rates.get(i, ZERO) for i in outs}

        cands = _Candidates()
        cands.offer(stop, "window-end", net.node_names[v])
        cands.offer(inflow.next_breakpoint(theta), "gross-inflow-break", net.node_names[v])
        for i in outs:
            e = net.edges[i]
            cands.offer(node_labels[e.head].next_breakpoint(theta), "label-break", net.node_names[e.head])
            dt = _depletion(queues[i], rates[i], e.nu)
            cands.offer(None if dt is None else theta + dt, "queue-depletion", net.edge_label(i))
            if i in active_out:
                continue
            speed = slope - head_slopes[e.head] - queue_slope(queues[i], ZERO, e.nu) / e.nu
            dt = _crossing(through[i] - label, speed)
            cands.offer(None if dt is None else theta + dt, "activation", net.edge_label(i))
        end = min(cands.best, stop)
        if end <= theta:
            raise InternalSolverError(f"non-positive local phase at {net.node_names[v]}, {theta}")
        for i in outs:
            flow.extend_edge(i, rates[i], end)
        pieces.append((theta, label, slope))
        events.extend(Event(end, kind, subj) for kind, subj in cands.why if kind != "window-end")
        theta = end
        count += 1
    bps, vals, slopes = zip(*pieces)
    return PWLinear(bps, vals, slopes, stop), count


# -- phases -----------------------------------------------------------------------

def _finish(net, flow, events, refreshes, terminated, end, steps) -> SolveResult:
    phases = derive_phases(net, flow, end)
    return SolveResult(net, flow, phases, events, refreshes, terminated,
                       end if terminated else None, end, steps)


def derive_phases(net: Network, flow: FlowOverTime, end: Fraction) -> List[PhaseRecord]:
    """Maximal intervals of ``[0, end)`` with constant edge rates and queue slopes.

    Derived from the flow alone, so any two drivers producing the same flow
    produce the same list.
    """
    if end <= 0:
        return []
    cuts = {ZERO, end}
    for e in net.edges:
        for fn in (flow.inflow(e.id), flow.outflow(e.id), flow.queue(e.id)):
            cuts.update(b for b in fn.breakpoints if 0 < b < end)
    cuts = sorted(cuts)
    phases = []
    m = len(net.edges)
    fin = [flow.inflow(i) for i in range(m)]
    fout = [flow.outflow(i) for i in range(m)]
    queue = [flow.queue(i) for i in range(m)]
    for a, b in zip(cuts, cuts[1:]):
        inflows = tuple(f(a) for f in fin)
        qs = [q(a) for q in queue]
        ls = compute_labels(net, qs)
        mid = (a + b) / 2
        mid_ls = compute_labels(net, [q(mid) for q in queue])
        phases.append(PhaseRecord(
            start=a,
            end=b,
            inflow=inflows,
            outflow=tuple(f(a) for f in fout),
            queue=tuple(qs),
            queue_slope=tuple(q.right_slope(a) for q in queue),
            labels=ls.labels,
            label_slopes=tuple(label_slopes(net, ls, inflows)),
            active=mid_ls.active,
        ))
    return phases


# -- documents --------------------------------------------------------------------

def phase_to_dict(net: Network, p: PhaseRecord) -> dict:
    fr = format_rational
    return {
        "start": fr(p.start),
        "end": fr(p.end),
        "inflow": [fr(x) for x in p.inflow],
        "outflow": [fr(x) for x in p.outflow],
        "queue": [fr(x) for x in p.queue],
        "queue_slope": [fr(x) for x in p.queue_slope],
        "labels": {net.node_names[v]: fr(x) for v, x in enumerate(p.labels)},
        "label_slopes": {net.node_names[v]: fr(x) for v, x in enumerate(p.label_slopes)},
        "active": [net.edge_label(i) for i in sorted(p.active)],
    }


def flow_to_dict(net: Network, flow: FlowOverTime) -> dict:
    edges = []
    for e in net.edges:
        edges.append({
            "edge": e.id,
            "tail": net.node_names[e.tail],
            "head": net.node_names[e.head],
            "until": format_rational(flow.frontier(e.id)),
            "inflow": step_to_pieces(flow.inflow(e.id)),
            "outflow": step_to_pieces(flow.outflow(e.id)),
        })
    return {"edges": edges}


def result_to_dict(res: SolveResult) -> dict:
    net = res.network
    return {
        "terminated": res.terminated,
        "termination_time": None if res.termination_time is None else format_rational(res.termination_time),
        "end": format_rational(res.end),
        "edges": [net.edge_label(e.id) for e in net.edges],
        "phases": [phase_to_dict(net, p) for p in res.phases],
        "flow": flow_to_dict(net, res.flow),
    }


def serialize_result(res: SolveResult) -> str:
    return json.dumps(result_to_dict(res), indent=2) + "\n"
