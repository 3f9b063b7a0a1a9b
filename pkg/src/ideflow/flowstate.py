"""Flows over time: edge rate functions, queue dynamics and gross node inflow."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from typing import FrozenSet, List, Optional, Sequence, Tuple

from .network import Edge, Network
from .numerics import (PWLinear, StepFunction, ZERO, format_rational, step_sum,
                       to_rational)


class FrontierError(RuntimeError):
    """A rate was requested beyond the part of the flow constructed so far."""


def queue_segments(q0: Fraction, rate: Fraction, nu: Fraction, length: Fraction) -> list:
    """Split a constant-inflow interval into pieces with constant queue slope.

    Returns ``(duration, queue_at_start, queue_slope, outflow_rate)`` tuples,
    where the outflow rate applies ``tau`` later.  A queue operates at
    capacity while positive; an empty queue passes ``min(rate, nu)``.
    """
    if length <= 0:
        return []
    if q0 > 0:
        if rate >= nu:
            return [(length, q0, rate - nu, nu)]
        depletion = q0 / (nu - rate)
        if depletion >= length:
            return [(length, q0, rate - nu, nu)]
        return [(depletion, q0, rate - nu, nu), (length - depletion, ZERO, ZERO, rate)]
    if rate > nu:
        return [(length, ZERO, rate - nu, nu)]
    return [(length, ZERO, ZERO, rate)]


class _EdgeTrack:
    """Inflow, outflow and queue of one edge, grown by appending intervals."""

    __slots__ = ("tau", "nu", "frontier", "in_b", "in_v", "out_b", "out_v", "q_b", "q_v", "q_s")

    def __init__(self, tau: Fraction, nu: Fraction) -> None:
        self.tau = tau
        self.nu = nu
        self.frontier = ZERO
        self.in_b = [ZERO]
        self.in_v: List[Fraction] = []
        self.out_b = [ZERO, tau]
        self.out_v = [ZERO]
        self.q_b = [ZERO]
        self.q_v = [ZERO]
        self.q_s = [ZERO]

    def queue_now(self) -> Fraction:
        return self.q_v[-1] + self.q_s[-1] * (self.frontier - self.q_b[-1])

    @staticmethod
    def _push(bps: list, vals: list, value: Fraction, end: Fraction) -> None:
        if vals and vals[-1] == value:
            bps[-1] = end
        else:
            vals.append(value)
            bps.append(end)

    def _push_queue(self, start: Fraction, value: Fraction, slope: Fraction) -> None:
        if self.q_b[-1] == start:
            self.q_v[-1] = value
            self.q_s[-1] = slope
            if len(self.q_s) > 1 and self.q_s[-2] == slope:
                self.q_b.pop()
                self.q_v.pop()
                self.q_s.pop()
        elif self.q_s[-1] != slope:
            self.q_b.append(start)
            self.q_v.append(value)
            self.q_s.append(slope)

    def extend(self, rate: Fraction, until: Fraction) -> None:
        if rate < 0:
            raise ValueError("negative inflow rate")
        if until < self.frontier:
            raise FrontierError("cannot extend backwards")
        s = self.frontier
        for dt, q_start, slope, out_rate in queue_segments(self.queue_now(), rate, self.nu, until - s):
            self._push_queue(s, q_start, slope)
            self._push(self.in_b, self.in_v, rate, s + dt)
            self._push(self.out_b, self.out_v, out_rate, s + dt + self.tau)
            s += dt
        self.frontier = until

    def inflow(self) -> StepFunction:
        return StepFunction(tuple(self.in_b), tuple(self.in_v))

    def outflow(self) -> StepFunction:
        return StepFunction(tuple(self.out_b), tuple(self.out_v))

    def queue(self) -> PWLinear:
        return PWLinear(tuple(self.q_b), tuple(self.q_v), tuple(self.q_s), self.frontier)

    def outflow_at(self, t: Fraction) -> Fraction:
        from bisect import bisect_right

        if t < 0 or t >= self.out_b[-1]:
            raise FrontierError(f"outflow at {t} not yet determined")
        return self.out_v[bisect_right(self.out_b, t) - 1]

    def outflow_next_change(self, t: Fraction) -> Optional[Fraction]:
        from bisect import bisect_right

        i = bisect_right(self.out_b, t)
        if i >= len(self.out_b) - 1:
            return None
        return self.out_b[i]

    def outflow_nonzero_after(self, t: Fraction) -> bool:
        for i in range(len(self.out_v) - 1, -1, -1):
            if self.out_b[i + 1] <= t:
                return False
            if self.out_v[i] != 0:
                return True
        return False

    def copy(self) -> "_EdgeTrack":
        other = _EdgeTrack(self.tau, self.nu)
        other.frontier = self.frontier
        for name in ("in_b", "in_v", "out_b", "out_v", "q_b", "q_v", "q_s"):
            setattr(other, name, list(getattr(self, name)))
        return other


def propagate_outflow(edge: Edge, f_plus: StepFunction, upto: Optional[Fraction] = None
                      ) -> Tuple[StepFunction, PWLinear]:
    """Outflow on ``[0, upto + tau)`` and queue on ``[0, upto]`` for an inflow.

    Implements the point-queue dynamics: the queue is cumulative inflow minus
    cumulative outflow shifted by ``tau`` and the queue operates at capacity.
    """
    if f_plus.domain_start != 0:
        raise ValueError("inflow must start at time 0")
    if upto is None:
        upto = f_plus.domain_end
        if upto is None:
            raise ValueError("need a finite horizon for an unbounded inflow")
    upto = to_rational(upto)
    track = _EdgeTrack(edge.tau, edge.nu)
    for lo, hi, v in f_plus.pieces():
        if lo >= upto:
            break
        stop = upto if hi is None else min(hi, upto)
        track.extend(v, stop)
    if track.frontier < upto:
        raise FrontierError("inflow not defined up to the requested horizon")
    return track.outflow(), track.queue()


@dataclass(frozen=True)
class PhaseRecord:
    """A maximal interval on which all edge rates and queue slopes are constant."""

    start: Fraction
    end: Fraction
    inflow: Tuple[Fraction, ...]
    outflow: Tuple[Fraction, ...]
    queue: Tuple[Fraction, ...]
    queue_slope: Tuple[Fraction, ...]
    labels: Tuple[Fraction, ...]
    label_slopes: Tuple[Fraction, ...]
    active: FrozenSet[int]

    def __post_init__(self) -> None:
        if self.end <= self.start:
            raise ValueError("phases must have positive length")


class FlowOverTime:
    """Partial flow over time, extended interval by interval by the solvers.

    Queues and outflows are derived from the inflow rates while extending, so
    constraint (queue operates at capacity) holds by construction.  Public
    accessors return immutable snapshots.
    """

    def __init__(self, network: Network) -> None:
        self.network = network
        self._tracks = [_EdgeTrack(e.tau, e.nu) for e in network.edges]

    # -- growth -------------------------------------------------------------

    def extend_edge(self, eid: int, rate: Fraction, until: Fraction) -> None:
        self._tracks[eid].extend(to_rational(rate), to_rational(until))

    def commit(self, start: Fraction, end: Fraction, rates: Sequence[Fraction]) -> None:
        """Extend every edge from ``start`` to ``end`` with constant ``rates``."""
        for eid, track in enumerate(self._tracks):
            if track.frontier != start:
                raise FrontierError(f"edge {eid} frontier {track.frontier} != phase start {start}")
        for eid, track in enumerate(self._tracks):
            track.extend(rates[eid], end)

    def copy(self) -> "FlowOverTime":
        other = FlowOverTime.__new__(FlowOverTime)
        other.network = self.network
        other._tracks = [t.copy() for t in self._tracks]
        return other

    def truncated(self, horizon: Fraction) -> "FlowOverTime":
        """Copy whose inflows stop at ``horizon`` (outflows re-derived)."""
        other = FlowOverTime(self.network)
        for eid, track in enumerate(self._tracks):
            if track.frontier < horizon:
                raise FrontierError("cannot truncate beyond the frontier")
            for lo, hi, v in track.inflow().pieces():
                if lo >= horizon:
                    break
                other._tracks[eid].extend(v, min(hi, horizon))
        return other

    # -- queries ------------------------------------------------------------

    def frontier(self, eid: int) -> Fraction:
        return self._tracks[eid].frontier

    def common_frontier(self) -> Fraction:
        return min(t.frontier for t in self._tracks)

    def inflow(self, eid: int) -> StepFunction:
        return self._tracks[eid].inflow()

    def outflow(self, eid: int) -> StepFunction:
        return self._tracks[eid].outflow()

    def queue(self, eid: int) -> PWLinear:
        return self._tracks[eid].queue()

    def queue_now(self, eid: int) -> Fraction:
        return self._tracks[eid].queue_now()

    def queue_at(self, eid: int, t: Fraction) -> Fraction:
        return self._tracks[eid].queue()(t)

    def outflow_at(self, eid: int, t: Fraction) -> Fraction:
        return self._tracks[eid].outflow_at(to_rational(t))

    def outflow_next_change(self, eid: int, t: Fraction) -> Optional[Fraction]:
        return self._tracks[eid].outflow_next_change(t)

    def outflow_known_until(self, eid: int) -> Fraction:
        return self._tracks[eid].out_b[-1]

    def last_outflow_rate(self, eid: int) -> Fraction:
        return self._tracks[eid].out_v[-1]

    def in_transit_after(self, t: Fraction) -> bool:
        return any(track.outflow_nonzero_after(t) for track in self._tracks)

    def last_activity(self) -> Fraction:
        """End of the last interval on which any edge has a non-zero outflow."""
        last = ZERO
        for track in self._tracks:
            for i in range(len(track.out_v) - 1, -1, -1):
                if track.out_v[i] != 0:
                    last = max(last, track.out_b[i + 1])
                    break
        return last

    def snapshot(self) -> "FlowOverTime":
        return self.copy()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FlowOverTime):
            return NotImplemented
        return (self.network == other.network and all(
            a.inflow() == b.inflow() and a.outflow() == b.outflow()
            for a, b in zip(self._tracks, other._tracks)))

    __hash__ = None  # mutable


def commit_phase(flow: FlowOverTime, phase: PhaseRecord) -> FlowOverTime:
    flow.commit(phase.start, phase.end, phase.inflow)
    return flow


def gross_node_inflow(flow: FlowOverTime, network: Network, v: int,
                      window: Tuple[Fraction, Fraction]) -> StepFunction:
    """Sum of incoming edge outflows plus network inflow on ``[a, b)``."""
    a, b = (to_rational(x) for x in window)
    parts = [network.inflows[v].restrict(a, b)]
    for eid in network.in_edges[v]:
        out = flow.outflow(eid)
        if out.domain_end is None or out.domain_end < b:
            raise FrontierError(
                f"outflow of {network.edge_label(eid)} only known up to {out.domain_end}")
        parts.append(out.restrict(a, b))
    return step_sum(parts, a, b)


# -- trace export --------------------------------------------------------------

TRACE_COLUMNS = ("edge", "theta_from", "theta_to", "inflow_rate", "outflow_rate",
                 "queue_at_from", "queue_slope")


def trace_rows(flow: FlowOverTime) -> list:
    """Per-edge rows over intervals with constant in/out rate and queue slope."""
    net = flow.network
    rows = []
    for e in net.edges:
        fin = flow.inflow(e.id)
        fout = flow.outflow(e.id)
        q = flow.queue(e.id)
        end = flow.frontier(e.id)
        cuts = {ZERO, end}
        cuts.update(b for b in fin.breakpoints if b < end)
        cuts.update(b for b in fout.breakpoints if b < end)
        cuts.update(b for b in q.breakpoints if b < end)
        cuts = sorted(cuts)
        for lo, hi in zip(cuts, cuts[1:]):
            rows.append((net.edge_label(e.id), lo, hi, fin(lo), fout(lo), q(lo), q.right_slope(lo)))
    return rows


def write_trace_csv(flow: FlowOverTime, decimals: bool = True) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = list(TRACE_COLUMNS)
    if decimals:
        header += ["theta_from_dec", "queue_at_from_dec"]
    writer.writerow(header)
    for label, lo, hi, fin, fout, q, qs in trace_rows(flow):
        row = [label] + [format_rational(x) for x in (lo, hi, fin, fout, q, qs)]
        if decimals:
            row += [f"{float(lo):.6f}", f"{float(q):.6f}"]
        writer.writerow(row)
    return buf.getvalue()
