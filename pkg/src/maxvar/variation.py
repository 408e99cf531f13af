"""Total, q-, sup-variation and the weak quasi-norm of sampled signals.

total_variation on a StepFunction is the exact sum of |jumps|.  On a sampled
signal it is the supremum of sum |v(x_{i+1}) - v(x_i)| over subsequences,
which is attained on the local extrema of the value sequence; sampling only
ever lower-bounds the variation of the underlying function, and refinement
never decreases it.

q_variation maximizes sum |increments|^q over increasing subsequences and
then takes the 1/q power.  For q > 1 an interior point of a monotone run can
be moved to the run's endpoint without decreasing the objective (the map
t -> |t-a|^q + |b-t|^q is convex), so the dynamic program only needs the
local extrema plus the two endpoints; q_variation_bruteforce enumerates all
subsequences and is kept as the testing oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

from .errors import InvalidExponent, TooLarge
from .pwl import StepFunction

__all__ = [
    "SampledSignal",
    "total_variation",
    "q_variation",
    "q_variation_bruteforce",
    "sup_variation",
    "weak_quasi_norm",
]

_BRUTE_FORCE_LIMIT = 20


@dataclass(frozen=True)
class SampledSignal:
    """Values sampled at strictly increasing abscissae."""

    abscissae: tuple
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "abscissae", tuple(self.abscissae))
        object.__setattr__(self, "values", tuple(self.values))
        if len(self.abscissae) != len(self.values):
            raise ValueError("abscissae and values must have equal length")
        for lo, hi in zip(self.abscissae, self.abscissae[1:]):
            if not lo < hi:
                raise ValueError("abscissae must be strictly increasing")

    def __len__(self) -> int:
        return len(self.values)

    @cached_property
    def cell_widths(self) -> tuple:
        """Midpoint-rule cell width attributed to each sample."""
        x = self.abscissae
        n = len(x)
        if n == 1:
            return (0.0 * x[0],)
        widths = []
        for i in range(n):
            lo = x[0] if i == 0 else (x[i - 1] + x[i]) / 2
            hi = x[-1] if i == n - 1 else (x[i] + x[i + 1]) / 2
            widths.append(hi - lo)
        return tuple(widths)


def _extract_values(s):
    if isinstance(s, SampledSignal):
        return s.values
    if isinstance(s, StepFunction):
        return s.values
    return tuple(s)


def _extrema(values) -> list:
    """Endpoints plus direction changes, with plateau duplicates dropped."""
    vals = [values[0]]
    for v in values[1:]:
        if v != vals[-1]:
            vals.append(v)
    if len(vals) <= 2:
        return vals
    out = [vals[0]]
    for prev, cur, nxt in zip(vals, vals[1:], vals[2:]):
        if (cur - prev > 0) != (nxt - cur > 0):
            out.append(cur)
    out.append(vals[-1])
    return out


def total_variation(s):
    """Sum of |jumps| (StepFunction) or the extremal jump sum (signal)."""
    values = _extract_values(s)
    if len(values) < 2:
        return 0.0
    if isinstance(s, StepFunction):
        increments = [abs(b - a) for a, b in zip(values, values[1:])]
    else:
        ext = _extrema(values)
        increments = [abs(b - a) for a, b in zip(ext, ext[1:])]
    if not increments:
        return 0.0
    if all(isinstance(v, float) for v in increments):
        return math.fsum(increments)
    acc = increments[0]
    for v in increments[1:]:
        acc = acc + v
    return acc


def q_variation(s, q):
    """(sup over increasing subsequences of sum |increments|^q)^(1/q)."""
    q = float(q)
    if not q >= 1.0:
        raise InvalidExponent(f"q-variation requires q >= 1, got {q}")
    values = _extract_values(s)
    if len(values) < 2:
        return 0.0
    if q == 1.0:
        # The extremal chain is optimal for q = 1; share the exact jump sum.
        return total_variation(s)
    cand = _extrema(values)
    n = len(cand)
    if n < 2:
        return 0.0
    best = [0.0 * cand[0]] * n
    overall = best[0]
    for j in range(1, n):
        bj = best[j]
        for i in range(j):
            trial = best[i] + abs(cand[j] - cand[i]) ** q
            if trial > bj:
                bj = trial
        best[j] = bj
        if bj > overall:
            overall = bj
    return overall ** (1.0 / q)


def q_variation_bruteforce(s, q):
    """Exhaustive enumeration of every increasing subsequence (oracle)."""
    q = float(q)
    if not q >= 1.0:
        raise InvalidExponent(f"q-variation requires q >= 1, got {q}")
    values = _extract_values(s)
    n = len(values)
    if n > _BRUTE_FORCE_LIMIT:
        raise TooLarge(f"brute force limited to {_BRUTE_FORCE_LIMIT} samples, got {n}")
    if n < 2:
        return 0.0
    if q == 1.0:
        power = [[abs(values[j] - values[i]) for j in range(n)] for i in range(n)]
    else:
        power = [[abs(values[j] - values[i]) ** q for j in range(n)] for i in range(n)]
    best = 0.0 * power[0][0]

    def extend(i, acc):
        nonlocal best
        if acc > best:
            best = acc
        row = power[i]
        for j in range(i + 1, n):
            extend(j, acc + row[j])

    for i in range(n - 1):
        extend(i, 0.0 * best)
    return best ** (1.0 / q)


def sup_variation(s):
    """Essential oscillation of the samples: max - min."""
    values = _extract_values(s)
    if not values:
        return 0.0
    return max(values) - min(values)


def weak_quasi_norm(values, widths):
    """Grid estimate of sup over lambda > 0 of lambda * |{|g| > lambda}|.

    The map lambda -> lambda * measure is piecewise linear between sample
    values with its maxima at (the left limits of) sample values, so only
    thresholds lambda = v_k need checking, each against the mass where the
    samples are >= v_k.
    """
    values = tuple(values)
    widths = tuple(widths)
    if len(values) != len(widths):
        raise ValueError("values and widths must have equal length")
    pairs = sorted(((v, w) for v, w in zip(values, widths) if v > 0), reverse=True)
    if not pairs:
        return 0.0
    best = 0.0 * pairs[0][0]
    # Accumulate the tail mass downward from the largest value: cell widths
    # can span hundreds of orders of magnitude, and a descending accumulator
    # seeded with their total would never feel the small ones again.
    tail_mass = 0.0 * pairs[0][1]
    i = 0
    n = len(pairs)
    while i < n:
        v = pairs[i][0]
        j = i
        while j < n and pairs[j][0] == v:
            tail_mass = tail_mass + pairs[j][1]
            j += 1
        cand = v * tail_mass
        if cand > best:
            best = cand
        i = j
    return best
