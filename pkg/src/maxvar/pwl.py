"""Continuous piecewise-linear functions with linear tails, and their calculus.

A function is stored as strictly increasing breakpoints x_0 < ... < x_m, the
value at x_0, and one slope per piece: the left tail on (-inf, x_0), the m
bounded pieces, and the right tail on (x_m, inf).  Values at the remaining
breakpoints are derived by integrating the slopes, so continuity holds by
construction and never needs checking.

Also defined here: the piecewise-constant StepFunction used to carry
derivatives, and single-peak classification with the two-sided difference
quotient bound K (1/K <= -sign(x+y)(f(y)-f(x))/(y-x) <= K on same-side
pairs, which pins the peak at the origin and forbids flat pieces).
"""

from __future__ import annotations

import bisect
import json
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence

from .errors import BreakpointContact, DegenerateInterval
from .scalars import FLOAT64, ScalarContext, get_context

__all__ = [
    "PwlFunction",
    "StepFunction",
    "ClassReport",
    "hat",
    "triangle_bump",
    "pinned_at_zero",
]


@dataclass(frozen=True)
class ClassReport:
    """Result of single-peak / difference-quotient classification.

    k_bound is None when no finite K works (some slope is zero, the peak is
    not at the origin, or the function is not single-peak at all).
    """

    single_peak: bool
    peak: Optional[object]
    k_bound: Optional[object]
    reasons: tuple[str, ...] = ()

    @property
    def strict(self) -> bool:
        return self.single_peak and self.k_bound is not None


@dataclass(frozen=True)
class PwlFunction:
    """Continuous piecewise-linear function with two infinite linear tails.

    anchor_value is the function value at breakpoints[value_index]
    (value_index defaults to 0, i.e. f(x_0)); every other breakpoint value
    is derived by slope integration, so continuity is structural.  Builders
    whose natural normalization lives at an interior breakpoint (a peak
    value pinned to zero, say) anchor there: integrating a value across many
    orders of magnitude of abscissae and back would otherwise destroy it in
    fixed precision.
    """

    breakpoints: tuple
    anchor_value: object
    slopes: tuple
    ctx: ScalarContext = FLOAT64
    value_index: int = 0

    def __post_init__(self):
        conv = self.ctx.convert
        bps = tuple(conv(b) for b in self.breakpoints)
        slopes = tuple(conv(s) for s in self.slopes)
        if not bps:
            raise ValueError("at least one breakpoint is required")
        if len(slopes) != len(bps) + 1:
            raise ValueError(
                f"{len(bps)} breakpoints require {len(bps) + 1} slopes, got {len(slopes)}"
            )
        for lo, hi in zip(bps, bps[1:]):
            if not lo < hi:
                raise ValueError("breakpoints must be strictly increasing")
        if not 0 <= self.value_index < len(bps):
            raise ValueError("value_index out of range")
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "slopes", slopes)
        object.__setattr__(self, "anchor_value", conv(self.anchor_value))

    # -- derived data ------------------------------------------------------

    @cached_property
    def values(self) -> tuple:
        """Function values at the breakpoints, integrated from the anchor."""
        k = self.value_index
        vals = [None] * len(self.breakpoints)
        vals[k] = self.anchor_value
        for i in range(k + 1, len(self.breakpoints)):
            w = self.breakpoints[i] - self.breakpoints[i - 1]
            vals[i] = vals[i - 1] + self.slopes[i] * w
        for i in range(k, 0, -1):
            w = self.breakpoints[i] - self.breakpoints[i - 1]
            vals[i - 1] = vals[i] - self.slopes[i] * w
        return tuple(vals)

    @cached_property
    def _anchor_index(self) -> int:
        """Breakpoint nearest the origin; integral prefixes anchor there so
        differences between nearby points do not cancel against the mass
        accumulated from a far-away first breakpoint."""
        best = 0
        for i, b in enumerate(self.breakpoints):
            if abs(b) < abs(self.breakpoints[best]):
                best = i
        return best

    @cached_property
    def _prefix(self) -> tuple:
        """Integrals from the anchor breakpoint to each breakpoint."""
        k = self._anchor_index
        out = [self.ctx.zero()] * len(self.breakpoints)
        acc = self.ctx.zero()
        for i in range(k + 1, len(self.breakpoints)):
            w = self.breakpoints[i] - self.breakpoints[i - 1]
            acc = acc + w * (self.values[i - 1] + self.values[i]) / 2
            out[i] = acc
        acc = self.ctx.zero()
        for i in range(k, 0, -1):
            w = self.breakpoints[i] - self.breakpoints[i - 1]
            acc = acc - w * (self.values[i - 1] + self.values[i]) / 2
            out[i - 1] = acc
        return tuple(out)

    @cached_property
    def classification(self) -> ClassReport:
        return self._classify()

    @property
    def peak(self):
        return self.classification.peak

    # -- evaluation --------------------------------------------------------

    def piece_index(self, x) -> int:
        """Index into slopes of the piece whose closure contains x.

        A point exactly on a breakpoint reports the piece to its left (the
        left tail for x_0); the right tail is len(slopes) - 1.
        """
        return bisect.bisect_left(self.breakpoints, x) if x <= self.breakpoints[-1] else len(self.slopes) - 1

    def __call__(self, x):
        x = self.ctx.convert(x)
        b = self.breakpoints
        i = bisect.bisect_left(b, x)
        if i < len(b) and b[i] == x:
            return self.values[i]
        if i == 0:
            return self.values[0] + self.slopes[0] * (x - b[0])
        if i == len(b):
            return self.values[-1] + self.slopes[-1] * (x - b[-1])
        return self.values[i - 1] + self.slopes[i] * (x - b[i - 1])

    def slope_at(self, x):
        """Slope of the open piece containing x; raises on a breakpoint."""
        x = self.ctx.convert(x)
        i = bisect.bisect_left(self.breakpoints, x)
        if i < len(self.breakpoints) and self.breakpoints[i] == x:
            raise BreakpointContact(f"f' is discontinuous at breakpoint {x}")
        return self.slopes[i]

    def is_breakpoint(self, x, rtol: float | None = None) -> bool:
        """Whether x sits on a breakpoint, up to a relative tolerance."""
        x = self.ctx.convert(x)
        if rtol is None:
            rtol = 64 * self.ctx.eps
        i = bisect.bisect_left(self.breakpoints, x)
        for j in (i - 1, i):
            if 0 <= j < len(self.breakpoints):
                b = self.breakpoints[j]
                scale = max(abs(b), abs(x), self.ctx.one())
                if abs(x - b) <= rtol * scale:
                    return True
        return False

    # -- integration -------------------------------------------------------

    def _antiderivative_at(self, t):
        """Integral of f from the anchor breakpoint to t (prefix sums plus
        one trapezoid); only ever used in differences."""
        b = self.breakpoints
        if t <= b[0]:
            return self._prefix[0] - (b[0] - t) * (self(t) + self.values[0]) / 2
        if t >= b[-1]:
            return self._prefix[-1] + (t - b[-1]) * (self.values[-1] + self(t)) / 2
        i = bisect.bisect_left(b, t)
        if b[i] == t:
            return self._prefix[i]
        return self._prefix[i - 1] + (t - b[i - 1]) * (self.values[i - 1] + self(t)) / 2

    def integral(self, y, x):
        """Signed integral of f from y to x, exact per-piece trapezoids.

        Piece contributions are accumulated from the largest magnitude
        downward; the counterexample pieces span many orders of magnitude
        and this keeps the small ones from being dropped before the
        cancellation between the dominant ones happens.
        """
        y = self.ctx.convert(y)
        x = self.ctx.convert(x)
        if y == x:
            return self.ctx.zero()
        sign = 1
        lo, hi = y, x
        if lo > hi:
            lo, hi = hi, lo
            sign = -1
        b = self.breakpoints
        cuts = [lo] + [t for t in b if lo < t < hi] + [hi]
        parts = []
        left_val = self(lo)
        for u, w in zip(cuts, cuts[1:]):
            right_val = self(w)
            parts.append((w - u) * (left_val + right_val) / 2)
            left_val = right_val
        parts.sort(key=abs, reverse=True)
        total = self.ctx.zero()
        for p in parts:
            total = total + p
        return sign * total

    def average(self, y, x):
        """A(y, x) = (1/(x-y)) * integral of f from y to x."""
        y = self.ctx.convert(y)
        x = self.ctx.convert(x)
        if y == x:
            raise DegenerateInterval(f"average needs y != x, got y = x = {x}")
        return self.integral(y, x) / (x - y)

    def _avg_fast(self, y, x):
        """Average via cached prefix integrals (solver hot path)."""
        return (self._antiderivative_at(x) - self._antiderivative_at(y)) / (x - y)

    # -- calculus / structure ----------------------------------------------

    def derivative(self) -> "StepFunction":
        return StepFunction(self.breakpoints, self.slopes)

    def _classify(self) -> ClassReport:
        zero = self.ctx.zero()
        slopes = self.slopes
        reasons = []
        # Single peak: no strictly positive slope after a strictly negative one.
        seen_negative = False
        single = True
        for s in slopes:
            if s < zero:
                seen_negative = True
            elif s > zero and seen_negative:
                single = False
                break
        if not single:
            return ClassReport(False, None, None, ("slope sign changes more than once",))
        # Peak: breakpoint of maximal value; ties resolve to smallest |b|.
        vals = self.values
        vmax = max(vals)
        peak = None
        for b, v in zip(self.breakpoints, vals):
            if v == vmax and (peak is None or abs(b) < abs(peak)):
                peak = b
        if self.slopes[0] < zero or self.slopes[-1] > zero:
            # A tail rising toward infinity; max not attained at a breakpoint.
            return ClassReport(False, None, None, ("unbounded tail above all breakpoints",))
        k_bound = None
        if peak != zero:
            reasons.append("peak not at the origin")
        elif any(s == zero for s in slopes):
            reasons.append("zero slope on some piece")
        else:
            mags = [abs(s) for s in slopes]
            k_bound = max(max(mags), self.ctx.one() / min(mags), self.ctx.one())
        return ClassReport(True, peak, k_bound, tuple(reasons))

    def classify(self) -> ClassReport:
        return self.classification

    @cached_property
    def reflected(self) -> "PwlFunction":
        """The function x -> f(-x)."""
        bps = tuple(-b for b in reversed(self.breakpoints))
        slopes = tuple(-s for s in reversed(self.slopes))
        k = len(bps) - 1 - self.value_index
        return PwlFunction(bps, self.anchor_value, slopes, self.ctx, value_index=k)

    # -- serialization -----------------------------------------------------

    def to_json_dict(self) -> dict:
        def enc(v):
            if self.ctx.name == "f64":
                return float(v)
            from mpmath import mp

            return mp.nstr(v, 42, strip_zeros=True)

        return {
            "breakpoints": [enc(b) for b in self.breakpoints],
            "anchor_value": enc(self.values[0]),
            "slopes": [enc(s) for s in self.slopes],
        }

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=1)
            fh.write("\n")

    @classmethod
    def from_json_dict(cls, data: dict, ctx: ScalarContext = FLOAT64) -> "PwlFunction":
        return cls(
            tuple(data["breakpoints"]),
            data["anchor_value"],
            tuple(data["slopes"]),
            ctx,
        )

    @classmethod
    def load(cls, path, ctx: ScalarContext = FLOAT64) -> "PwlFunction":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh), ctx)


@dataclass(frozen=True)
class StepFunction:
    """Piecewise-constant signal: one value per open piece including tails."""

    breakpoints: tuple
    values: tuple

    def __post_init__(self):
        if len(self.values) != len(self.breakpoints) + 1:
            raise ValueError("piece count must equal breakpoint count + 1")
        for lo, hi in zip(self.breakpoints, self.breakpoints[1:]):
            if not lo < hi:
                raise ValueError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", tuple(self.breakpoints))
        object.__setattr__(self, "values", tuple(self.values))

    def __call__(self, x):
        """Value of the piece containing x; breakpoints take the right piece."""
        return self.values[bisect.bisect_right(self.breakpoints, x)]

    @cached_property
    def _prefix(self) -> tuple:
        acc = 0 * self.values[0]
        out = [acc]
        for i in range(1, len(self.breakpoints)):
            acc = acc + self.values[i] * (self.breakpoints[i] - self.breakpoints[i - 1])
            out.append(acc)
        return tuple(out)

    def _antiderivative_at(self, t):
        b = self.breakpoints
        if t <= b[0]:
            return self.values[0] * (t - b[0])
        if t >= b[-1]:
            return self._prefix[-1] + self.values[-1] * (t - b[-1])
        i = bisect.bisect_left(b, t)
        if b[i] == t:
            return self._prefix[i]
        return self._prefix[i - 1] + self.values[i] * (t - b[i - 1])

    def integral(self, y, x):
        return self._antiderivative_at(x) - self._antiderivative_at(y)

    def average(self, y, x):
        if y == x:
            raise DegenerateInterval("average needs y != x")
        return self.integral(y, x) / (x - y)

    def jumps(self) -> tuple:
        return tuple(b - a for a, b in zip(self.values, self.values[1:]))


def pinned_at_zero(breakpoints, slopes, ctx: ScalarContext = FLOAT64) -> PwlFunction:
    """Build a PwlFunction whose value at the breakpoint 0 is exactly 0."""
    conv = ctx.convert
    bps = tuple(conv(b) for b in breakpoints)
    idx = bps.index(conv(0))
    return PwlFunction(bps, 0, tuple(slopes), ctx, value_index=idx)


def hat(a, b, ctx: ScalarContext = FLOAT64) -> PwlFunction:
    """The two-slope peak: a*x for x <= 0 and -b*x for x >= 0 (a, b > 0)."""
    return PwlFunction((0,), 0, (a, -b), ctx)


def triangle_bump(ctx: ScalarContext = FLOAT64) -> PwlFunction:
    """max(0, 1 - |x|): single-peak but with flat tails (K unbounded)."""
    return PwlFunction((-1, 0, 1), 0, (0, 1, -1, 0), ctx)
