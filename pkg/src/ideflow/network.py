"""Static problem instances: graph, edge parameters, inflow profiles, sink."""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .numerics import StepFunction, ZERO, format_rational, to_rational


class NetworkError(ValueError):
    """Invalid network document or instance."""


class UnreachableSinkError(NetworkError):
    pass


@dataclass(frozen=True)
class Edge:
    id: int
    tail: int
    head: int
    tau: Fraction
    nu: Fraction


@dataclass(frozen=True)
class InstanceStats:
    tau_min: Fraction
    max_out_degree: int
    inflow_breakpoint_count: int
    total_inflow_volume: Fraction


@dataclass(frozen=True, eq=False)
class Network:
    """Single-sink network with rational transit times and capacities.

    Node ids are strings at the boundary and dense integers internally;
    edge ids are the positions in ``edges`` (file order), which is also the
    global tie-break key.
    """

    node_names: Tuple[str, ...]
    edges: Tuple[Edge, ...]
    sink: int
    inflows: Tuple[StepFunction, ...]
    out_edges: Tuple[Tuple[int, ...], ...] = field(init=False, repr=False)
    in_edges: Tuple[Tuple[int, ...], ...] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        n = len(self.node_names)
        outs: List[List[int]] = [[] for _ in range(n)]
        ins: List[List[int]] = [[] for _ in range(n)]
        for e in self.edges:
            outs[e.tail].append(e.id)
            ins[e.head].append(e.id)
        object.__setattr__(self, "out_edges", tuple(tuple(x) for x in outs))
        object.__setattr__(self, "in_edges", tuple(tuple(x) for x in ins))

    @property
    def num_nodes(self) -> int:
        return len(self.node_names)

    def node_index(self, name: str) -> int:
        try:
            return self.node_names.index(name)
        except ValueError:
            raise KeyError(f"unknown node {name!r}") from None

    def edge_label(self, eid: int) -> str:
        e = self.edges[eid]
        return f"{self.node_names[e.tail]}->{self.node_names[e.head]}"

    @property
    def tau_min(self) -> Fraction:
        return min(e.tau for e in self.edges)

    def find_edge(self, tail: str, head: str) -> int:
        """Id of the first edge ``tail -> head`` in file order."""
        t, h = self.node_index(tail), self.node_index(head)
        for eid in self.out_edges[t]:
            if self.edges[eid].head == h:
                return eid
        raise KeyError(f"no edge {tail}->{head}")

    def is_acyclic(self) -> bool:
        return topological_order(self.num_nodes, [(e.tail, e.head) for e in self.edges]) is not None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Network):
            return NotImplemented
        return (self.node_names == other.node_names and self.edges == other.edges
                and self.sink == other.sink and self.inflows == other.inflows)

    def __hash__(self) -> int:
        return hash((self.node_names, self.edges, self.sink))


def topological_order(num_nodes: int, arcs: Sequence[Tuple[int, int]]) -> Optional[List[int]]:
    """Kahn ordering where every arc's head precedes its tail.

    Returns None on a cycle.  Ties are broken by smallest node index, so the
    result is deterministic.
    """
    import heapq

    out_deg = [0] * num_nodes
    preds: List[List[int]] = [[] for _ in range(num_nodes)]
    for tail, head in arcs:
        out_deg[tail] += 1
        preds[head].append(tail)
    heap = [v for v in range(num_nodes) if out_deg[v] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        v = heapq.heappop(heap)
        order.append(v)
        for u in preds[v]:
            out_deg[u] -= 1
            if out_deg[u] == 0:
                heapq.heappush(heap, u)
    return order if len(order) == num_nodes else None


def build_network(nodes: Sequence[str], sink: str,
                  edges: Sequence[Tuple[str, str, object, object]],
                  inflows: Optional[Mapping[str, object]] = None) -> Network:
    """Assemble and validate a network from plain Python data.

    ``inflows`` maps node names to a StepFunction or a list of
    ``(from, to, rate)`` pieces.
    """
    names = tuple(str(v) for v in nodes)
    if len(set(names)) != len(names):
        raise NetworkError("duplicate node ids")
    index = {v: i for i, v in enumerate(names)}
    if sink not in index:
        raise NetworkError(f"sink {sink!r} is not a node")
    built = []
    for eid, (tail, head, tau, nu) in enumerate(edges):
        if tail not in index or head not in index:
            raise NetworkError(f"edge {tail}->{head} references an unknown node")
        tau = to_rational(tau)
        nu = to_rational(nu)
        if tau <= 0:
            raise NetworkError(f"edge {tail}->{head}: transit time must be positive")
        if nu <= 0:
            raise NetworkError(f"edge {tail}->{head}: capacity must be positive")
        if tail == head:
            raise NetworkError(f"self-loop at {tail}")
        built.append(Edge(eid, index[tail], index[head], tau, nu))
    if not built:
        raise NetworkError("network has no edges")
    u = [StepFunction.constant(0) for _ in names]
    for name, prof in (inflows or {}).items():
        if name not in index:
            raise NetworkError(f"inflow at unknown node {name!r}")
        if not isinstance(prof, StepFunction):
            prof = StepFunction.from_pieces(prof)
        if prof.domain_start != 0 or prof.domain_end is not None:
            raise NetworkError("inflow profiles must be defined on [0, inf)")
        if any(v < 0 for v in prof.values):
            raise NetworkError(f"negative inflow at {name!r}")
        if prof.values[-1] != 0:
            raise NetworkError(f"inflow at {name!r} must have bounded support")
        if name == sink and any(v != 0 for v in prof.values):
            raise NetworkError("the sink cannot have network inflow")
        u[index[name]] = prof
    net = Network(names, tuple(built), index[sink], tuple(u))
    _check_reachability(net)
    return net


def _check_reachability(net: Network) -> None:
    seen = {net.sink}
    queue = deque([net.sink])
    while queue:
        w = queue.popleft()
        for eid in net.in_edges[w]:
            v = net.edges[eid].tail
            if v not in seen:
                seen.add(v)
                queue.append(v)
    missing = [net.node_names[v] for v in range(net.num_nodes) if v not in seen]
    if missing:
        raise UnreachableSinkError(f"sink not reachable from: {', '.join(missing)}")


def stats(net: Network) -> InstanceStats:
    volume = ZERO
    jumps = 0
    for prof in net.inflows:
        # a non-zero start counts as a jump up from the silence before time 0
        jumps += len(prof.interior_breakpoints()) + (prof.values[0] != 0)
        for lo, hi, v in prof.pieces():
            if hi is not None:
                volume += v * (hi - lo)
    return InstanceStats(
        tau_min=net.tau_min,
        max_out_degree=max(len(x) for x in net.out_edges),
        inflow_breakpoint_count=jumps,
        total_inflow_volume=volume,
    )


# -- documents ---------------------------------------------------------------

def step_to_pieces(f: StepFunction, skip_zero: bool = True) -> list:
    out = []
    for lo, hi, v in f.pieces():
        if skip_zero and v == 0:
            continue
        if hi is None:
            raise NetworkError("cannot serialize a non-zero unbounded tail")
        out.append({"from": format_rational(lo), "to": format_rational(hi), "rate": format_rational(v)})
    return out


def pieces_from_doc(doc: list) -> list:
    try:
        return [(p["from"], p["to"], p["rate"]) for p in doc]
    except (KeyError, TypeError) as exc:
        raise NetworkError(f"bad piece list: {exc}") from None


def network_from_dict(doc: Mapping) -> Network:
    try:
        nodes = [str(v) for v in doc["nodes"]]
        sink = str(doc["sink"])
        edges = [(str(e["tail"]), str(e["head"]), e["tau"], e["nu"]) for e in doc["edges"]]
        inflows = {}
        for item in doc.get("inflows", []):
            node = str(item["node"])
            if node in inflows:
                raise NetworkError(f"duplicate inflow entry for {node!r}")
            inflows[node] = pieces_from_doc(item["pieces"])
    except (KeyError, TypeError) as exc:
        raise NetworkError(f"schema error: {exc}") from None
    if "sinks" in doc:
        raise NetworkError("multi-sink instances are not supported")
    try:
        return build_network(nodes, sink, edges, inflows)
    except (ValueError, ZeroDivisionError) as exc:
        if isinstance(exc, NetworkError):
            raise
        raise NetworkError(str(exc)) from None


def network_to_dict(net: Network) -> dict:
    inflows = []
    for v, prof in enumerate(net.inflows):
        pieces = step_to_pieces(prof)
        if pieces:
            inflows.append({"node": net.node_names[v], "pieces": pieces})
    return {
        "nodes": list(net.node_names),
        "sink": net.node_names[net.sink],
        "edges": [
            {"tail": net.node_names[e.tail], "head": net.node_names[e.head],
             "tau": format_rational(e.tau), "nu": format_rational(e.nu)}
            for e in net.edges
        ],
        "inflows": inflows,
    }


def parse_network(document: str) -> Network:
    """Parse a JSON network document."""
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise NetworkError(f"not a JSON document: {exc}") from None
    if not isinstance(doc, dict):
        raise NetworkError("network document must be an object")
    return network_from_dict(doc)


def serialize_network(net: Network) -> str:
    return json.dumps(network_to_dict(net), indent=2) + "\n"
