"""Exact rational scalars and the two function types used throughout the package.

Every number in the core is a :class:`fractions.Fraction`.  Time-dependent
quantities come in two shapes:

* :class:`StepFunction` -- right-constant, piecewise constant (rates).
* :class:`PWLinear` -- continuous, piecewise linear (queues, labels).
"""
from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Union

Rational = Fraction
RationalLike = Union[Fraction, int, str]

ZERO = Fraction(0)
ONE = Fraction(1)


class DomainError(ValueError):
    """Raised when a function is queried outside its domain."""


def to_rational(x: RationalLike) -> Fraction:
    """Convert ``x`` to a Fraction without ever going through a float."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"cannot convert {type(x).__name__} to an exact rational")


def format_rational(x: Fraction) -> str:
    """Serialize as ``"p/q"``, or ``"p"`` when the denominator is 1."""
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class StepFunction:
    """Right-constant step function.

    ``values[i]`` holds on ``[breakpoints[i], breakpoints[i+1])``.  With
    ``len(values) == len(breakpoints) - 1`` the domain ends at the last
    breakpoint; with ``len(values) == len(breakpoints)`` the last value
    extends to infinity.
    """

    breakpoints: tuple
    values: tuple

    def __post_init__(self) -> None:
        bps = tuple(to_rational(b) for b in self.breakpoints)
        vals = tuple(to_rational(v) for v in self.values)
        if not bps:
            raise ValueError("a step function needs at least a domain start")
        if any(b2 <= b1 for b1, b2 in zip(bps, bps[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if len(vals) not in (len(bps) - 1, len(bps)):
            raise ValueError("need one value per interval")
        bps, vals = _merge_steps(bps, vals)
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "values", vals)

    # -- construction -----------------------------------------------------

    @classmethod
    def constant(cls, value: RationalLike, start: RationalLike = 0,
                 end: Optional[RationalLike] = None) -> "StepFunction":
        if end is None:
            return cls((start,), (value,))
        if to_rational(end) == to_rational(start):
            return cls((start,), ())
        return cls((start, end), (value,))

    @classmethod
    def from_pieces(cls, pieces: Iterable[tuple], start: RationalLike = 0,
                    end: Optional[RationalLike] = None,
                    default: RationalLike = 0) -> "StepFunction":
        """Build from ``(from, to, rate)`` triples; gaps take ``default``.

        Pieces must be non-overlapping.  With ``end=None`` the function is
        ``default`` after the last piece.
        """
        start = to_rational(start)
        default = to_rational(default)
        items = sorted((to_rational(a), to_rational(b), to_rational(r)) for a, b, r in pieces)
        bps = [start]
        vals = []
        cur = start
        for a, b, r in items:
            if b <= a:
                if b == a:
                    continue
                raise ValueError(f"empty or reversed piece [{a}, {b})")
            if a < cur:
                raise ValueError("overlapping pieces or piece before domain start")
            if a > cur:
                vals.append(default)
                bps.append(a)
            vals.append(r)
            bps.append(b)
            cur = b
        if end is None:
            vals.append(default)
        else:
            end = to_rational(end)
            if end < cur:
                raise ValueError("pieces extend beyond the domain end")
            if end > cur:
                vals.append(default)
                bps.append(end)
        return cls(tuple(bps), tuple(vals))

    # -- queries ----------------------------------------------------------

    @property
    def domain_start(self) -> Fraction:
        return self.breakpoints[0]

    @property
    def domain_end(self) -> Optional[Fraction]:
        if len(self.values) == len(self.breakpoints):
            return None
        return self.breakpoints[-1]

    def _check(self, t: Fraction, closed_end: bool = False) -> None:
        end = self.domain_end
        if t < self.domain_start or (end is not None and (t > end or (t == end and not closed_end))):
            raise DomainError(f"{t} outside [{self.domain_start}, {end})")

    def __call__(self, t: RationalLike) -> Fraction:
        t = to_rational(t)
        self._check(t)
        return self.values[bisect_right(self.breakpoints, t) - 1]

    def left_limit(self, t: RationalLike) -> Fraction:
        """Value on the interval just before ``t``."""
        t = to_rational(t)
        if t <= self.domain_start:
            raise DomainError("no left limit at the domain start")
        self._check(t, closed_end=True)
        return self.values[bisect_left(self.breakpoints, t) - 1]

    def pieces(self) -> list:
        """``(from, to, value)`` triples; ``to`` is None for an unbounded tail."""
        out = []
        for i, v in enumerate(self.values):
            b = self.breakpoints[i + 1] if i + 1 < len(self.breakpoints) else None
            out.append((self.breakpoints[i], b, v))
        return out

    def interior_breakpoints(self) -> tuple:
        stop = len(self.values)
        return self.breakpoints[1:stop]

    def next_breakpoint(self, t: RationalLike) -> Optional[Fraction]:
        """Smallest interior breakpoint strictly after ``t``."""
        t = to_rational(t)
        inner = self.interior_breakpoints()
        i = bisect_right(inner, t)
        return inner[i] if i < len(inner) else None

    def integrate(self, a: RationalLike, b: RationalLike) -> Fraction:
        return step_integrate(self, a, b)

    def restrict(self, a: RationalLike, b: Optional[RationalLike]) -> "StepFunction":
        a = to_rational(a)
        self._check(a)
        if b is not None:
            b = to_rational(b)
            if b < a:
                raise ValueError("restrict needs a <= b")
            self._check(b, closed_end=True)
        pieces = []
        for lo, hi, v in self.pieces():
            lo2 = max(lo, a)
            hi2 = hi if b is None else (b if hi is None else min(hi, b))
            if hi2 is not None and hi2 <= lo2:
                continue
            pieces.append((lo2, hi2, v))
        bps = [a]
        vals = []
        for lo, hi, v in pieces:
            vals.append(v)
            if hi is not None:
                bps.append(hi)
        return StepFunction(tuple(bps), tuple(vals))

    def shift(self, dt: RationalLike) -> "StepFunction":
        dt = to_rational(dt)
        return StepFunction(tuple(b + dt for b in self.breakpoints), self.values)

    def max_value(self) -> Fraction:
        return max(self.values) if self.values else ZERO

    def __add__(self, other: "StepFunction") -> "StepFunction":
        return step_sum([self, other])


def _merge_steps(bps: tuple, vals: tuple) -> tuple:
    if len(vals) <= 1:
        return bps, vals
    out_b = [bps[0]]
    out_v = [vals[0]]
    for i in range(1, len(vals)):
        if vals[i] == out_v[-1]:
            continue
        out_b.append(bps[i])
        out_v.append(vals[i])
    if len(vals) == len(bps) - 1:
        out_b.append(bps[-1])
    return tuple(out_b), tuple(out_v)


def step_integrate(f: StepFunction, a: RationalLike, b: RationalLike) -> Fraction:
    """Exact integral of ``f`` over ``[a, b]``."""
    a = to_rational(a)
    b = to_rational(b)
    if b < a:
        raise DomainError("step_integrate needs a <= b")
    if a == b:
        f._check(a, closed_end=True)
        return ZERO
    f._check(a)
    f._check(b, closed_end=True)
    total = ZERO
    for lo, hi, v in f.pieces():
        if hi is not None and hi <= a:
            continue
        if lo >= b:
            break
        lo2 = max(lo, a)
        hi2 = b if hi is None else min(hi, b)
        total += v * (hi2 - lo2)
    return total


def step_min_breakpoint_after(fs: Sequence[StepFunction], start: RationalLike) -> Optional[Fraction]:
    """Earliest interior breakpoint strictly after ``start`` over all ``fs``."""
    best = None
    for f in fs:
        b = f.next_breakpoint(start)
        if b is not None and (best is None or b < best):
            best = b
    return best


def step_sum(fs: Sequence[StepFunction], start: Optional[RationalLike] = None,
             end: Optional[RationalLike] = None) -> StepFunction:
    """Pointwise sum on the common domain (optionally clipped to ``[start, end)``)."""
    if not fs:
        raise ValueError("step_sum needs at least one function")
    lo = max(f.domain_start for f in fs)
    ends = [f.domain_end for f in fs if f.domain_end is not None]
    hi = min(ends) if ends else None
    if start is not None:
        lo = max(lo, to_rational(start))
    if end is not None:
        end = to_rational(end)
        hi = end if hi is None else min(hi, end)
    if hi is not None and hi < lo:
        raise DomainError("empty common domain")
    cuts = {lo}
    for f in fs:
        for b in f.breakpoints:
            if b > lo and (hi is None or b < hi):
                cuts.add(b)
    cuts = sorted(cuts)
    vals = [sum((f(c) for f in fs), ZERO) for c in cuts]
    if hi is not None:
        if hi == lo:
            return StepFunction((lo,), ())
        cuts.append(hi)
    return StepFunction(tuple(cuts), tuple(vals))


@dataclass(frozen=True)
class PWLinear:
    """Continuous piecewise linear function.

    ``slopes[i]`` applies from ``breakpoints[i]`` up to the next breakpoint;
    the last slope extends to ``end`` (or forever when ``end`` is None).
    """

    breakpoints: tuple
    values: tuple
    slopes: tuple
    end: Optional[Fraction] = None

    def __post_init__(self) -> None:
        bps = tuple(to_rational(b) for b in self.breakpoints)
        vals = tuple(to_rational(v) for v in self.values)
        slopes = tuple(to_rational(s) for s in self.slopes)
        if not bps or not (len(bps) == len(vals) == len(slopes)):
            raise ValueError("need equally many breakpoints, values and slopes")
        if any(b2 <= b1 for b1, b2 in zip(bps, bps[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        for i in range(len(bps) - 1):
            if vals[i] + slopes[i] * (bps[i + 1] - bps[i]) != vals[i + 1]:
                raise ValueError(f"discontinuity at {bps[i + 1]}")
        end = None if self.end is None else to_rational(self.end)
        if end is not None and end < bps[-1]:
            raise ValueError("domain end before last breakpoint")
        out_b, out_v, out_s = [bps[0]], [vals[0]], [slopes[0]]
        for b, v, s in zip(bps[1:], vals[1:], slopes[1:]):
            if s == out_s[-1]:
                continue
            out_b.append(b)
            out_v.append(v)
            out_s.append(s)
        object.__setattr__(self, "breakpoints", tuple(out_b))
        object.__setattr__(self, "values", tuple(out_v))
        object.__setattr__(self, "slopes", tuple(out_s))
        object.__setattr__(self, "end", end)

    @classmethod
    def constant(cls, value: RationalLike, start: RationalLike = 0,
                 end: Optional[RationalLike] = None) -> "PWLinear":
        return cls((start,), (value,), (0,), end)

    @property
    def domain_start(self) -> Fraction:
        return self.breakpoints[0]

    def _index(self, t: Fraction) -> int:
        if t < self.breakpoints[0] or (self.end is not None and t > self.end):
            raise DomainError(f"{t} outside [{self.breakpoints[0]}, {self.end}]")
        return bisect_right(self.breakpoints, t) - 1

    def __call__(self, t: RationalLike) -> Fraction:
        t = to_rational(t)
        i = self._index(t)
        return self.values[i] + self.slopes[i] * (t - self.breakpoints[i])

    def right_slope(self, t: RationalLike) -> Fraction:
        return self.slopes[self._index(to_rational(t))]

    def left_limit_slope(self, t: RationalLike) -> Fraction:
        t = to_rational(t)
        if t <= self.breakpoints[0]:
            raise DomainError("no left slope at the domain start")
        i = bisect_right(self.breakpoints, t) - 1
        if self.breakpoints[i] == t:
            i -= 1
        return self.slopes[i]

    def next_breakpoint(self, t: RationalLike) -> Optional[Fraction]:
        t = to_rational(t)
        i = bisect_right(self.breakpoints, t)
        return self.breakpoints[i] if i < len(self.breakpoints) else None

    def first_root_at_level(self, level: RationalLike, start: RationalLike) -> Optional[Fraction]:
        return pwl_first_root_at_level(self, level, start)


def pwl_first_root_at_level(g: PWLinear, level: RationalLike, start: RationalLike) -> Optional[Fraction]:
    """Smallest ``t >= start`` with ``g(t) == level``, or None."""
    level = to_rational(level)
    start = to_rational(start)
    i = g._index(start)
    n = len(g.breakpoints)
    lo = start
    while i < n:
        hi = g.breakpoints[i + 1] if i + 1 < n else g.end
        v0 = g(lo)
        if v0 == level:
            return lo
        s = g.slopes[i]
        if s != 0:
            root = lo + (level - v0) / s
            if root > lo and (hi is None or root <= hi):
                return root
        if hi is None:
            return None
        lo = hi
        i += 1
    return None
