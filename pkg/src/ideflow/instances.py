"""Generators for the oscillating instance, CNF reduction networks and random families."""
from __future__ import annotations

import heapq
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .network import Network, NetworkError, build_network
from .numerics import ZERO, to_rational


def gen_oscillator(U) -> Network:
    """Five-node network whose equilibrium keeps switching between two routes."""
    U = to_rational(U)
    if U <= 0:
        raise ValueError("U must be positive")
    return build_network(
        ["s", "v", "w", "x", "t"], "t",
        [("s", "v", 1, 2), ("s", "w", 1, 2), ("v", "t", 1, 1), ("w", "x", 1, 1), ("x", "t", 1, 1)],
        {"s": [(0, U, 2)]},
    )


# -- CNF formulas ------------------------------------------------------------------

class FormulaError(ValueError):
    pass


@dataclass(frozen=True)
class CnfFormula:
    num_vars: int
    clauses: Tuple[Tuple[int, int, int], ...]

    def __post_init__(self) -> None:
        if self.num_vars < 0:
            raise FormulaError("negative variable count")
        for c in self.clauses:
            if len(c) != 3:
                raise FormulaError(f"clause {c} does not have exactly 3 literals")
            for lit in c:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise FormulaError(f"literal {lit} out of range")

    def satisfied_by(self, assignment: Dict[int, bool]) -> bool:
        return all(any(assignment[abs(l)] == (l > 0) for l in c) for c in self.clauses)


def padded(num_vars: int, clauses: Sequence[Sequence[int]]) -> CnfFormula:
    """Repeat literals so every clause has three (keeps satisfiability)."""
    out = []
    for c in clauses:
        c = list(c)
        if not 1 <= len(c) <= 3:
            raise FormulaError(f"cannot pad clause {c} to 3 literals")
        while len(c) < 3:
            c.append(c[-1])
        out.append(tuple(c))
    return CnfFormula(num_vars, tuple(out))


def parse_dimacs(text: str) -> CnfFormula:
    """Parse DIMACS CNF; clauses with fewer than 3 literals are padded."""
    num_vars = None
    declared = None
    clauses: List[List[int]] = []
    current: List[int] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise FormulaError(f"bad header: {line!r}")
            num_vars, declared = int(parts[2]), int(parts[3])
            continue
        if num_vars is None:
            raise FormulaError("clause before the 'p cnf' header")
        for tok in line.split():
            lit = int(tok)
            if lit == 0:
                clauses.append(current)
                current = []
            else:
                current.append(lit)
    if current:
        clauses.append(current)
    if num_vars is None:
        raise FormulaError("missing 'p cnf' header")
    if declared is not None and declared != len(clauses):
        raise FormulaError(f"header declares {declared} clauses, found {len(clauses)}")
    return padded(num_vars, clauses)


def format_dimacs(phi: CnfFormula) -> str:
    lines = [f"p cnf {phi.num_vars} {len(phi.clauses)}"]
    lines += [" ".join(str(l) for l in c) + " 0" for c in phi.clauses]
    return "\n".join(lines) + "\n"


# -- reduction network -------------------------------------------------------------

CLAUSE_RATE = 12
ENTRY_DELAY = 2     # clause edge plus connector before a variable gadget is reached
DIVERSION_START = ENTRY_DELAY + 4   # diverted flow reaches s2 from here on


def _shortest(edges, src, dst) -> Optional[Fraction]:
    adj: Dict[str, List[Tuple[str, Fraction]]] = {}
    for tail, head, tau, _ in edges:
        adj.setdefault(tail, []).append((head, to_rational(tau)))
    dist = {src: ZERO}
    heap = [(ZERO, src)]
    while heap:
        d, v = heapq.heappop(heap)
        if d > dist[v]:
            continue
        if v == dst:
            return d
        for w, tau in adj.get(v, ()):
            if w not in dist or d + tau < dist[w]:
                dist[w] = d + tau
                heapq.heappush(heap, (d + tau, w))
    return None


def _indicator_source(ind: Network) -> Tuple[int, Fraction, Fraction]:
    sources = [v for v, u in enumerate(ind.inflows) if u.max_value() > 0]
    if len(sources) != 1:
        raise NetworkError("indicator network needs exactly one source with inflow")
    s = sources[0]
    pieces = [(lo, hi, r) for lo, hi, r in ind.inflows[s].pieces() if r != 0]
    if len(pieces) != 1 or pieces[0][0] != 0:
        raise NetworkError("indicator inflow must be constant on some interval [0, theta0]")
    _, theta0, rate = pieces[0]
    return s, theta0, rate


def resolve_capacities(nodes: Sequence[str], edges: Sequence[tuple],
                       inflows: Dict[str, list]) -> List[tuple]:
    """Replace ``None`` capacities by a bound no inflow rate can exceed.

    An edge's bound is the largest possible rate arriving at its tail: the
    sum of incoming capacities plus the peak network inflow there.
    """
    peak = {v: max((to_rational(r) for _, _, r in p), default=ZERO) for v, p in inflows.items()}
    incoming: Dict[str, List[int]] = {}
    for i, e in enumerate(edges):
        incoming.setdefault(e[1], []).append(i)
    bound: Dict[str, Fraction] = {}
    state: Dict[str, int] = {}

    def node_bound(v: str) -> Fraction:
        if v in bound:
            return bound[v]
        if state.get(v) == 1:
            raise NetworkError(f"capacity bounds depend on a cycle through {v}")
        state[v] = 1
        total = peak.get(v, ZERO)
        for i in incoming.get(v, ()):
            total += cap(i)
        bound[v] = total
        state[v] = 2
        return total

    caps: Dict[int, Fraction] = {}

    def cap(i: int) -> Fraction:
        if i not in caps:
            nu = edges[i][3]
            caps[i] = to_rational(nu) if nu is not None else max(node_bound(edges[i][0]), Fraction(1))
        return caps[i]

    return [(t, h, tau, cap(i)) for i, (t, h, tau, _) in enumerate(edges)]


def gen_3sat(phi: CnfFormula, indicator: Network) -> Network:
    """Network whose equilibria route flow into ``indicator`` unless the formula is satisfied.

    Node names: clause sources ``c{j}`` with literal nodes ``l{j}_{k}``; per
    variable ``x{i}``, ``nx{i}``, ``y{i}``, ``z{i}``, ``zp{i}`` plus bypass
    nodes ``a{i}``, ``b{i}`` and ``m{i}``; shared ``s1``, ``s2``, ``v``, ``t``;
    indicator nodes are prefixed with ``N.``.

    Connector lengths: ``y -> s2`` is 1, ``s2 -> v`` is 1 (capacity 1),
    ``v -> t`` is 2, so leaving ``y`` via ``s2`` takes one unit longer than
    via ``z``.  Flow reaches variable gadgets two time units after it enters
    a clause, so every gadget timing is shifted by that amount: ``s2`` gets
    inflow 1 on ``[6, 7 + theta0]`` and ``s1`` the indicator inflow shifted
    by 7.  ``s1 -> N.source`` has length ``theta0``; ``N.sink -> t`` has
    length ``max(1, 4 - d)`` where ``d`` is the indicator's source-sink
    distance, and ``s1 -> s2`` is chosen so the route through the indicator
    is exactly one unit longer than the route through ``s2``.
    """
    inf = None
    nodes: List[str] = []
    edges: List[tuple] = []
    inflows: Dict[str, list] = {}
    for i in range(1, phi.num_vars + 1):
        nodes += [f"x{i}", f"nx{i}", f"a{i}", f"b{i}", f"m{i}", f"y{i}", f"z{i}", f"zp{i}"]
        edges += [
            (f"x{i}", f"y{i}", 1, 1),
            (f"x{i}", f"a{i}", 1, inf), (f"a{i}", f"b{i}", 1, inf), (f"b{i}", f"y{i}", 1, inf),
            (f"nx{i}", f"m{i}", 1, inf), (f"m{i}", f"z{i}", 1, inf),
            (f"y{i}", f"z{i}", 1, inf),
            (f"z{i}", f"zp{i}", 1, 1),
            (f"zp{i}", "t", 1, inf),
            (f"y{i}", "s2", 1, inf),
        ]
    for j, clause in enumerate(phi.clauses, start=1):
        nodes.append(f"c{j}")
        inflows[f"c{j}"] = [(0, 1, CLAUSE_RATE)]
        for k, lit in enumerate(clause, start=1):
            ln = f"l{j}_{k}"
            nodes.append(ln)
            edges.append((f"c{j}", ln, 1, CLAUSE_RATE))
            target = f"x{lit}" if lit > 0 else f"nx{-lit}"
            edges.append((ln, target, 1, inf))

    src, theta0, rate = _indicator_source(indicator)
    prefix = "N."
    sub_nodes = [prefix + name for name in indicator.node_names]
    sub_edges = [(prefix + indicator.node_names[e.tail], prefix + indicator.node_names[e.head], e.tau, e.nu)
                 for e in indicator.edges]
    src_name = sub_nodes[src]
    sink_name = sub_nodes[indicator.sink]
    dist = _shortest(sub_edges, src_name, sink_name)
    if dist is None:
        raise NetworkError("indicator sink unreachable from its source")
    exit_len = max(Fraction(1), 4 - dist)
    s1_s2 = theta0 + dist + exit_len - 4
    nodes += ["s1", "s2", "v"] + sub_nodes + ["t"]
    edges += [
        ("s2", "v", 1, 1),
        ("v", "t", 2, inf),
        ("s1", src_name, theta0, inf),
        ("s1", "s2", s1_s2, inf),
        (sink_name, "t", exit_len, inf),
    ] + sub_edges
    shift = DIVERSION_START + 1
    inflows["s1"] = [(shift, shift + theta0, rate)]
    inflows["s2"] = [(DIVERSION_START, shift + theta0, 1)]
    return build_network(nodes, "t", resolve_capacities(nodes, edges, inflows), inflows)


def assignment_hints(phi: CnfFormula, assignment: Dict[int, bool]) -> Dict[str, str]:
    """Per clause, send everything to the first literal the assignment satisfies."""
    hints = {}
    for j, clause in enumerate(phi.clauses, start=1):
        for k, lit in enumerate(clause, start=1):
            if assignment.get(abs(lit), False) == (lit > 0):
                hints[f"c{j}"] = f"l{j}_{k}"
                break
        else:
            raise FormulaError(f"assignment does not satisfy clause {j}")
    return hints


# -- random families -------------------------------------------------------------

def _random_params(rng: random.Random, rate_scale: int) -> Tuple[Fraction, Fraction]:
    tau = Fraction(rng.randint(1, 4), rng.choice((1, 2)))
    nu = Fraction(rng.randint(1, rate_scale), rng.choice((1, 1, 2)))
    return tau, nu


def _random_inflows(rng: random.Random, names: Sequence[str], rate_scale: int,
                    load: int = 1) -> Dict[str, list]:
    """One or two sources; ``load`` scales both rates and durations."""
    k = rng.randint(1, min(2, len(names)))
    inflows = {}
    for name in rng.sample(list(names), k):
        pieces = []
        t = Fraction(rng.randint(0, 2), 2)
        for _ in range(rng.randint(1, 2)):
            length = Fraction(rng.randint(1, 4), 2) * load
            pieces.append((t, t + length, rng.randint(1, rate_scale) * load))
            t += length + Fraction(rng.randint(0, 2), 2)
        inflows[name] = pieces
    return inflows


def gen_random_acyclic(seed: int, node_count: int, density: float = 0.4, rate_scale: int = 3) -> Network:
    """Random DAG; nodes ``n0..`` are topologically ordered towards the sink ``t``."""
    if node_count < 2:
        raise ValueError("need at least 2 nodes")
    rng = random.Random(seed)
    names = [f"n{i}" for i in range(node_count - 1)] + ["t"]
    edges = []
    for i in range(node_count - 1):
        later = list(range(i + 1, node_count))
        heads = [j for j in later if rng.random() < density]
        if not heads:
            heads = [rng.choice(later)]
        for j in heads:
            tau, nu = _random_params(rng, rate_scale)
            edges.append((names[i], names[j], tau, nu))
    inflows = _random_inflows(rng, names[:-1], rate_scale)
    return build_network(names, "t", edges, inflows)


def gen_random_cyclic(seed: int, node_count: int, density: float = 0.9, rate_scale: int = 3,
                      load: int = 4) -> Network:
    """Random single-sink network that contains at least one directed cycle.

    Defaults are tuned for heavy congestion so that routes through cycles
    actually get used.
    """
    if node_count < 3:
        raise ValueError("need at least 3 nodes for a cycle")
    rng = random.Random(seed)
    names = [f"n{i}" for i in range(node_count - 1)] + ["t"]
    edges = []
    for i in range(node_count - 1):
        heads = [j for j in range(node_count) if j != i and rng.random() < density / 2]
        forward = [j for j in heads if j > i]
        if not forward:
            heads.append(rng.randint(i + 1, node_count - 1))
        for j in heads:
            tau, nu = _random_params(rng, rate_scale)
            edges.append((names[i], names[j], tau, nu))
    if not any(names.index(h) < names.index(t) for t, h, _, _ in edges):
        tau, nu = _random_params(rng, rate_scale)
        i = rng.randint(1, node_count - 2)
        edges.append((names[i], names[rng.randint(0, i - 1)], tau, nu))
    net = build_network(names, "t", edges)
    if net.is_acyclic():
        # close a cycle by reversing some edge between two non-sink nodes
        inner = [(t, h) for t, h, _, _ in edges if "t" not in (t, h)]
        if inner:
            t, h = rng.choice(inner)
        else:
            t, h = names[0], names[1]
            tau, nu = _random_params(rng, rate_scale)
            edges.append((t, h, tau, nu))
        tau, nu = _random_params(rng, rate_scale)
        edges.append((h, t, tau, nu))
    inflows = _random_inflows(rng, names[:-1], rate_scale, load)
    return build_network(names, "t", edges, inflows)
