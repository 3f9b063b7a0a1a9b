"""Travel times, node labels, active edges, label slopes and the maintained edge order."""
from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

from .network import Network, topological_order
from .numerics import ZERO, format_rational

log = logging.getLogger(__name__)


class OrderInvariantError(RuntimeError):
    """An edge about to be dropped from the maintained set has tail label >= head label."""


def queue_slope(queue: Fraction, rate: Fraction, nu: Fraction) -> Fraction:
    """Right derivative of a queue receiving ``rate``."""
    if queue > 0:
        return rate - nu
    return max(rate - nu, ZERO)


def travel_times(net: Network, queues: Sequence[Fraction]) -> List[Fraction]:
    return [e.tau + queues[e.id] / e.nu for e in net.edges]


@dataclass(frozen=True)
class LabelState:
    """Labels and active edges of a network at one instant."""

    labels: Tuple[Fraction, ...]
    active: FrozenSet[int]
    queues: Tuple[Fraction, ...]
    costs: Tuple[Fraction, ...]

    def is_active(self, eid: int) -> bool:
        return eid in self.active


def compute_labels(net: Network, queues: Sequence[Fraction]) -> LabelState:
    """Shortest instantaneous travel times to the sink (Dijkstra on reversed edges)."""
    if any(q < 0 for q in queues):
        raise ValueError("queues must be nonnegative")
    costs = travel_times(net, queues)
    dist: List[Optional[Fraction]] = [None] * net.num_nodes
    dist[net.sink] = ZERO
    heap = [(ZERO, net.sink)]
    done = [False] * net.num_nodes
    while heap:
        d, w = heapq.heappop(heap)
        if done[w]:
            continue
        done[w] = True
        for eid in net.in_edges[w]:
            v = net.edges[eid].tail
            cand = d + costs[eid]
            if dist[v] is None or cand < dist[v]:
                dist[v] = cand
                heapq.heappush(heap, (cand, v))
    if any(d is None for d in dist):
        raise ValueError("sink unreachable from some node")
    active = frozenset(e.id for e in net.edges
                       if e.tail != net.sink and dist[e.tail] == dist[e.head] + costs[e.id])
    return LabelState(tuple(dist), active, tuple(queues), tuple(costs))


def label_slopes(net: Network, ls: LabelState, rates: Sequence[Fraction]) -> List[Fraction]:
    """Right derivatives of all labels when edges receive the given inflow rates.

    Active edges strictly decrease labels, so processing nodes by increasing
    label visits every active edge's head before its tail.
    """
    slopes: List[Optional[Fraction]] = [None] * net.num_nodes
    slopes[net.sink] = ZERO
    for v in sorted(range(net.num_nodes), key=lambda x: (ls.labels[x], x)):
        if v == net.sink:
            continue
        best = None
        for eid in net.out_edges[v]:
            if eid not in ls.active:
                continue
            e = net.edges[eid]
            s = queue_slope(ls.queues[eid], rates[eid], e.nu) / e.nu + slopes[e.head]
            if best is None or s < best:
                best = s
        slopes[v] = best
    return slopes


def slope_bound(net: Network) -> Fraction:
    """Instance constant bounding every label's derivative in absolute value."""
    total = ZERO
    for e in net.edges:
        cap_in = sum((net.edges[i].nu for i in net.in_edges[e.tail]), ZERO)
        node_bound = cap_in + net.inflows[e.tail].max_value()
        total += max(Fraction(1), node_bound / e.nu)
    return total


# -- maintained acyclic edge set ---------------------------------------------

@dataclass(frozen=True)
class OrderState:
    """Acyclic superset of the active edges and a matching node order (sink first)."""

    edges: FrozenSet[int]
    order: Tuple[int, ...]


@dataclass(frozen=True)
class RefreshRecord:
    time: Fraction
    added: Tuple[int, ...]
    removed: Tuple[Tuple[int, Fraction, Fraction], ...]  # (edge, tail label, head label)


def _order_for(net: Network, edge_set: FrozenSet[int]) -> Optional[Tuple[int, ...]]:
    order = topological_order(net.num_nodes, [(net.edges[i].tail, net.edges[i].head)
                                              for i in sorted(edge_set)])
    if order is None:
        return None
    order.remove(net.sink)
    return (net.sink, *order)


def initial_order(net: Network, ls: LabelState) -> OrderState:
    order = _order_for(net, ls.active)
    if order is None:
        raise OrderInvariantError("active edges contain a cycle")
    return OrderState(ls.active, order)


def _find_cycle(net: Network, edge_set: FrozenSet[int]) -> Optional[List[int]]:
    """Edge ids of some directed cycle inside ``edge_set`` (iterative DFS)."""
    succ: Dict[int, List[int]] = {}
    for eid in sorted(edge_set):
        succ.setdefault(net.edges[eid].tail, []).append(eid)
    state = [0] * net.num_nodes  # 0 new, 1 on stack, 2 finished
    for root in range(net.num_nodes):
        if state[root]:
            continue
        path_edges: List[int] = []
        stack = [(root, iter(succ.get(root, ())))]
        state[root] = 1
        while stack:
            node, it = stack[-1]
            advanced = False
            for eid in it:
                head = net.edges[eid].head
                if state[head] == 1:
                    j = [n for n, _ in stack].index(head)
                    return path_edges[j:] + [eid]
                if state[head] == 0:
                    state[head] = 1
                    path_edges.append(eid)
                    stack.append((head, iter(succ.get(head, ()))))
                    advanced = True
                    break
            if not advanced:
                state[node] = 2
                stack.pop()
                if path_edges:
                    path_edges.pop()
    return None


def refresh_order(net: Network, os: OrderState, ls: LabelState,
                  theta: Fraction) -> Tuple[OrderState, Optional[RefreshRecord]]:
    """Add the current active edges to the maintained set and break new cycles.

    From every cycle the edge maximizing ``head label - tail label`` is dropped
    (smallest id on ties).  Such an edge is never active.
    """
    if ls.active <= os.edges:
        return os, None
    added = tuple(sorted(ls.active - os.edges))
    edges = set(os.edges | ls.active)
    removed = []
    while True:
        cycle = _find_cycle(net, frozenset(edges))
        if cycle is None:
            break
        victim = min(cycle, key=lambda i: (-(ls.labels[net.edges[i].head] - ls.labels[net.edges[i].tail]), i))
        x, y = net.edges[victim].tail, net.edges[victim].head
        if not ls.labels[x] < ls.labels[y]:
            raise OrderInvariantError(
                f"removing {net.edge_label(victim)} at {theta} with tail label {ls.labels[x]} >= {ls.labels[y]}")
        edges.discard(victim)
        removed.append((victim, ls.labels[x], ls.labels[y]))
    frozen = frozenset(edges)
    order = _order_for(net, frozen)
    assert order is not None
    log.debug("order refresh at %s: added %s removed %s", format_rational(theta),
              [net.edge_label(i) for i in added], [net.edge_label(i) for i, _, _ in removed])
    return OrderState(frozen, order), RefreshRecord(theta, added, tuple(removed))


def dump_labels(net: Network, theta: Fraction, ls: LabelState, os: Optional[OrderState] = None) -> str:
    """One log line describing labels, active edges and (optionally) the order."""
    parts = [f"theta={format_rational(theta)}"]
    parts.append("labels={" + ",".join(f"{net.node_names[v]}:{format_rational(ls.labels[v])}"
                                       for v in range(net.num_nodes)) + "}")
    parts.append("active=[" + ",".join(net.edge_label(i) for i in sorted(ls.active)) + "]")
    if os is not None:
        parts.append("tracked=[" + ",".join(net.edge_label(i) for i in sorted(os.edges)) + "]")
        parts.append("order=[" + ",".join(net.node_names[v] for v in os.order) + "]")
    return " ".join(parts)
