"""Splitting a node's gross inflow among its active out-edges by water filling."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, Optional, Sequence, Tuple

from .network import Network
from .numerics import ZERO, to_rational


@dataclass(frozen=True)
class MarginalFn:
    """k(z) = beta on [0, gamma], then beta + (z - gamma) / alpha."""

    edge: int
    alpha: Fraction
    beta: Fraction
    gamma: Fraction

    def __post_init__(self) -> None:
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")

    def __call__(self, z: Fraction) -> Fraction:
        if z <= self.gamma:
            return self.beta
        return self.beta + (z - self.gamma) / self.alpha

    def reach(self, level: Fraction) -> Fraction:
        """Largest z with k(z) <= level (0 when level is below the plateau)."""
        if level < self.beta:
            return ZERO
        return self.gamma + self.alpha * (level - self.beta)

    def cost(self, z: Fraction) -> Fraction:
        """Integral of k from 0 to z."""
        excess = max(z - self.gamma, ZERO)
        return self.beta * z + excess * excess / (2 * self.alpha)


@dataclass(frozen=True)
class Distribution:
    rates: Dict[int, Fraction]
    level: Fraction


def build_marginals(net: Network, v: int, active_out: Iterable[int], queues: Sequence[Fraction],
                    downstream_slopes: Sequence[Fraction]) -> list:
    out = []
    for eid in sorted(active_out):
        e = net.edges[eid]
        if e.tail != v:
            raise ValueError(f"edge {net.edge_label(eid)} does not leave node {net.node_names[v]}")
        slope = downstream_slopes[e.head]
        if queues[eid] > 0:
            out.append(MarginalFn(eid, e.nu, slope - 1, ZERO))
        else:
            out.append(MarginalFn(eid, e.nu, slope, e.nu))
    return out


def waterfill(b: Fraction, ms: Sequence[MarginalFn], preferred: Optional[int] = None) -> Distribution:
    """Minimize the summed marginal integrals subject to rates summing to ``b``.

    Edges are sorted by plateau level, then ``preferred`` first, then id.
    Among equal plateaus the earliest edge is filled first, so a preferred
    edge takes all flow a tie allows.
    """
    b = to_rational(b)
    if b < 0:
        raise ValueError("gross inflow must be nonnegative")
    if not ms:
        raise ValueError("need at least one edge")
    ms = sorted(ms, key=lambda m: (m.beta, m.edge != preferred, m.edge))
    rates = {m.edge: ZERO for m in ms}
    if b == 0:
        return Distribution(rates, ms[0].beta)

    def filled(r: int, level: Fraction) -> Fraction:
        return sum((ms[i].reach(level) for i in range(r)), ZERO)

    p = len(ms)
    r = 0
    while r < p and filled(r + 1, ms[r].beta) <= b:
        r += 1
    if r < p and filled(r, ms[r].beta) <= b:
        level = ms[r].beta
        for i in range(r):
            rates[ms[i].edge] = ms[i].reach(level)
        rates[ms[r].edge] = b - filled(r, level)
        return Distribution(rates, level)
    surplus = b - filled(r, ms[r - 1].beta)
    alpha_sum = sum((ms[i].alpha for i in range(r)), ZERO)
    level = ms[r - 1].beta + surplus / alpha_sum
    for i in range(r):
        rates[ms[i].edge] = ms[i].reach(level)
    return Distribution(rates, level)


def objective(ms: Sequence[MarginalFn], rates: Dict[int, Fraction]) -> Fraction:
    return sum((m.cost(rates.get(m.edge, ZERO)) for m in ms), ZERO)


def check_equal_level(dist: Distribution, ms: Sequence[MarginalFn]) -> bool:
    """Used edges sit at the common level, unused ones start at or above it."""
    for m in ms:
        z = dist.rates.get(m.edge, ZERO)
        if z < 0:
            return False
        if z > 0 and m(z) != dist.level:
            return False
        if z == 0 and m(ZERO) < dist.level:
            return False
    return True
