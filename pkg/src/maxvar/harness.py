"""Executable checks for the proof machinery behind the variation bound.

Each operation turns one quantitative lemma into a runnable predicate:

* zero_partition realizes the compact-set skeleton construction (points of
  the set with two-step gaps above 1 and single steps either below 3 or
  crossing an empty stretch);
* check_two_zeros_bound exercises the algebraic bound on w solving
  u v = w^2 + 2 w v under w <= D v;
* check_decay exercises the exponential lower bound on -(Mf)' along
  dyadic-ish abscissa ratios;
* check_low_speed exercises the bound on |(Mf)'(x_1) - (Mf)'(x_0)| between
  inflection points with bounded contact speed;
* radial_experiment samples random even strictly-decreasing instances and
  reports the observed variation ratios (the theory only promises some
  finite constant, so the asserted ceiling is an empirical sanity bound).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ClassViolation, EmptySet, NotApplicable
from .maximal import GridSpec, evaluate, profile
from .pwl import PwlFunction, pinned_at_zero
from .variation import SampledSignal, total_variation

__all__ = [
    "IntervalSet",
    "zero_partition",
    "partition_violations",
    "random_interval_set",
    "compute_w",
    "check_two_zeros_bound",
    "decay_margin",
    "check_decay",
    "check_low_speed",
    "random_even_single_peak",
    "even_variation_ratio",
    "RadialReport",
    "radial_experiment",
    "ZeroScan",
    "find_second_derivative_zeros",
]


@dataclass(frozen=True)
class IntervalSet:
    """Finite union of disjoint closed intervals [l_i, r_i], sorted."""

    intervals: tuple

    def __post_init__(self):
        ivs = tuple((float(l), float(r)) for l, r in self.intervals)
        for l, r in ivs:
            if r < l:
                raise ValueError(f"interval [{l}, {r}] is empty")
        for (_, r), (l2, _) in zip(ivs, ivs[1:]):
            if not r < l2:
                raise ValueError("intervals must be disjoint and sorted")
        object.__setattr__(self, "intervals", ivs)

    @property
    def inf(self) -> float:
        return self.intervals[0][0]

    @property
    def sup(self) -> float:
        return self.intervals[-1][1]

    def __contains__(self, x) -> bool:
        return any(l <= x <= r for l, r in self.intervals)


def _point_in_window(z: IntervalSet, lo: float, hi: float, target: float) -> Optional[float]:
    """Point of Z strictly inside (lo, hi), as close to target as possible."""
    best, best_d = None, None
    for l, r in z.intervals:
        a, b = max(l, lo), min(r, hi)
        if b < a:
            continue
        c = min(max(target, a), b)
        if c <= lo or c >= hi:
            c = (a + b) / 2.0
            if c <= lo or c >= hi:
                continue
        d = abs(c - target)
        if best_d is None or d < best_d:
            best, best_d = c, d
    return best


def zero_partition(z: IntervalSet) -> tuple:
    """Skeleton points u_1 < ... < u_N of a compact set.

    Guarantees: u_1 = inf Z, u_N = sup Z, u_k + 1 < u_{k+2}, and each step
    satisfies u_{k+1} < u_k + 3 or (u_k, u_{k+1}) disjoint from Z.  Built by
    cutting out every gap of length >= 2 and chaining the remaining
    stretches with steps in (1, 3) plus one closing step in (0, 3).
    """
    if not z.intervals:
        raise EmptySet("zero_partition needs a nonempty set")
    # Stretch boundaries: set extremes plus endpoints of gaps of length >= 2.
    bounds = [z.inf]
    for (_, r), (l2, _) in zip(z.intervals, z.intervals[1:]):
        if l2 - r >= 2.0:
            bounds.extend((r, l2))
    bounds.append(z.sup)
    points: list[float] = []
    for s, e in zip(bounds[0::2], bounds[1::2]):
        if not points or points[-1] != s:
            points.append(s)
        u = s
        while e - u >= 3.0:
            nxt = _point_in_window(z, u + 1.0, u + 3.0, u + 2.0)
            if nxt is None:
                raise AssertionError(
                    "stretch with an internal gap of length 2; construction invariant broken"
                )
            points.append(nxt)
            u = nxt
        if e > u:
            points.append(e)
    return tuple(points)


def partition_violations(z: IntervalSet, points: Sequence[float]) -> list[str]:
    """Exact checks of the skeleton conditions; empty list means all hold."""
    bad = []
    if points[0] != z.inf:
        bad.append(f"first point {points[0]} is not inf Z = {z.inf}")
    if points[-1] != z.sup:
        bad.append(f"last point {points[-1]} is not sup Z = {z.sup}")
    for u in points:
        if u not in z:
            bad.append(f"point {u} not in Z")
    for a, b in zip(points, points[1:]):
        if not a < b:
            bad.append(f"points not increasing at {a}, {b}")
    for a, b in zip(points, points[2:]):
        if not a + 1.0 < b:
            bad.append(f"two-step gap {b} - {a} not above 1")
    for a, b in zip(points, points[1:]):
        if b < a + 3.0:
            continue
        crossing = any(a < l < b or a < r < b or (l <= a and b <= r) for l, r in z.intervals)
        if crossing:
            bad.append(f"step ({a}, {b}) is >= 3 long yet meets Z")
    return bad


def random_interval_set(seed: int, index: int) -> IntervalSet:
    """Random disjoint closed intervals (some degenerate) for partition tests."""
    rng = _instance_rng(seed, index)
    k = int(rng.integers(1, 9))
    cursor = float(rng.uniform(-20.0, 20.0))
    out = []
    for _ in range(k):
        width = float(rng.uniform(0.0, 4.0)) if rng.random() < 0.7 else 0.0
        out.append((cursor, cursor + width))
        cursor += width + float(rng.uniform(0.05, 6.0))
    return IntervalSet(tuple(out))


def compute_w(u, v):
    """The positive solution of u v = w^2 + 2 w v, in cancellation-free form."""
    return v * (math.sqrt(1.0 + u / v) - 1.0)


def check_two_zeros_bound(u0, u1, v0, v1, d_cap, slack: float = 1e-12) -> bool:
    """|w_1 - w_0| <= 2 (2 + D)^2 (|u_1 - u_0| + |v_1 - v_0|) given w_i <= D v_i."""
    if min(u0, u1, v0, v1, d_cap) <= 0:
        raise NotApplicable("inputs must be positive")
    w0 = compute_w(u0, v0)
    w1 = compute_w(u1, v1)
    if w0 > d_cap * v0 or w1 > d_cap * v1:
        raise NotApplicable(f"w <= D v fails: w0/v0={w0 / v0:.3g}, w1/v1={w1 / v1:.3g}")
    bound = 2.0 * (2.0 + d_cap) ** 2 * (abs(u1 - u0) + abs(v1 - v0)) + slack
    return abs(w1 - w0) <= bound


def decay_margin(c: float, lam: float) -> float:
    """The explicit constant d_{c,lambda} = e^(-c-lambda(2+c)) (1-e^-lambda)/c
    below which the contact slope cannot stay on any ratio-e^lambda window."""
    return math.exp(-c - lam * (2.0 + c)) * (1.0 - math.exp(-lam)) / c


def check_decay(f: PwlFunction, x0, x1, c: Optional[float] = None, samples: int = 65) -> bool:
    """-(Mf)'(x1) >= e^-c (x0/x1)^(2+c) (-(Mf)'(x0)), with c at least the
    measured sup of -a(x)/x over [x0, x1]."""
    x0 = float(x0)
    x1 = float(x1)
    if not 0 < x0 <= x1:
        raise ValueError("need 0 < x0 <= x1")
    if x0 == x1:
        xs = [x0]
    else:
        xs = GridSpec(x0, x1, max(2, int(samples / max(1e-9, math.log10(x1 / x0))))).points()
        xs = [x0] + [x for x in xs if x0 < x < x1] + [x1]
    evals = [evaluate(f, x) for x in xs]
    c_hat = max(float(-r.a / r.x) for r in evals)
    if c is None:
        c = c_hat
    elif c < c_hat * (1.0 - 1e-12):
        raise ClassViolation(f"supplied c = {c} below measured sup -a(x)/x = {c_hat}")
    lhs = float(-evals[-1].dmf)
    try:
        factor = math.exp(-c) * (x0 / x1) ** (2.0 + c)
    except OverflowError:
        factor = 0.0
    rhs = factor * float(-evals[0].dmf) * (1.0 - 1e-9)
    return lhs >= rhs


def check_low_speed(
    f: PwlFunction,
    x0,
    x1,
    d_cap: Optional[float] = None,
    zero_rtol: float = 1e-4,
    slack_rtol: float = 1e-12,
) -> bool:
    """Between two (Mf)'' zeros with -a' <= D, the change of (Mf)' is
    controlled by the changes of f' at the points and at their contacts."""
    r0 = evaluate(f, x0)
    r1 = evaluate(f, x1)
    for r in (r0, r1):
        if r.ddmf is None or r.da is None:
            raise NotApplicable("second derivative not defined at an endpoint")
        scale = (abs(f.slope_at(r.x)) + (2.0 + abs(r.da)) * abs(r.dmf)) / (r.x - r.a)
        if abs(r.ddmf) > zero_rtol * scale:
            raise NotApplicable(f"(Mf)'' not zero at x = {r.x}: {r.ddmf}")
    speeds = [float(-r.da) for r in (r0, r1)]
    if d_cap is None:
        d_cap = max(speeds) * (1.0 + 1e-9)
    elif max(speeds) > d_cap:
        raise NotApplicable(f"-a' exceeds D = {d_cap}: {max(speeds)}")
    df = abs(f.slope_at(r1.x) - f.slope_at(r0.x))
    dfa = abs(f.slope_at(r1.a) - f.slope_at(r0.a))
    lhs = abs(float(r0.dmf) - float(r1.dmf))
    scale = max(1.0, abs(float(r0.dmf)), abs(float(r1.dmf)))
    return lhs <= 2.0 * (2.0 + d_cap) ** 2 * (df + dfa) + slack_rtol * scale


# ---------------------------------------------------------------------------
# random even instances and the variation-ratio experiment
# ---------------------------------------------------------------------------


def _instance_rng(seed: int, index: int) -> np.random.Generator:
    # Counter-based generator: instance index in the counter block makes the
    # stream splittable and order-independent.
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 0, index]))


def random_even_single_peak(seed: int, index: int) -> PwlFunction:
    """Even strict-class instance: 3-12 positive breakpoints log-uniform in
    [1e-2, 1e2], right-side slopes -10^U(-3, 3), mirrored, peak value 0."""
    rng = _instance_rng(seed, index)
    k = int(rng.integers(3, 13))
    while True:
        pos = sorted(10.0 ** rng.uniform(-2.0, 2.0, size=k))
        if all(b < c for b, c in zip(pos, pos[1:])):
            break
    right = [-(10.0 ** u) for u in rng.uniform(-3.0, 3.0, size=k + 1)]
    bps = [-b for b in reversed(pos)] + [0.0] + pos
    slopes = [-s for s in reversed(right)] + right
    return pinned_at_zero(bps, slopes)


def even_variation_ratio(f: PwlFunction, points_per_decade: int = 24, span: float = 30.0):
    """var((Mf)') / var(f') for an even single-peak f, from the x > 0 branch.

    (Mf)' is odd, so the full-line variation is twice the half-line one plus
    the jump 2 |(Mf)'(0+)| at the origin, estimated at the innermost grid
    point.  Returns (ratio, evaluations, restricted_violations) where the
    last counts failures of -a(x) <= x (there should be none: averaging past
    -x is never better for even single-peak functions).
    """
    pos = sorted(b for b in f.breakpoints if b > 0)
    if pos:
        lo, hi = float(pos[0]) / span, float(pos[-1]) * span
    else:
        # two-slope peak: (Mf)' is constant on each side, any window works
        lo, hi = 1.0 / span, span
    evals = profile(f, GridSpec(lo, hi, points_per_decade).points(), refine_contacts=True)
    xs = [float(r.x) for r in evals]
    dmfs = [float(r.dmf) for r in evals]
    tv_half = float(total_variation(SampledSignal(tuple(xs), tuple(dmfs))))
    jump0 = 2.0 * abs(dmfs[0])
    var_mfp = 2.0 * tv_half + jump0
    var_fp = float(total_variation(f.derivative()))
    violations = sum(1 for r in evals if float(-r.a) > float(r.x) * (1.0 + 1e-9))
    return var_mfp / var_fp, evals, violations


@dataclass(frozen=True)
class RadialReport:
    seed: int
    count: int
    ratios: tuple
    max_ratio: float
    mean_ratio: float
    histogram_counts: tuple
    histogram_edges: tuple
    restricted_violations: int


def radial_experiment(seed: int, count: int, points_per_decade: int = 24) -> RadialReport:
    if count < 1:
        raise ValueError("count must be >= 1")
    ratios = []
    violations = 0
    for i in range(count):
        f = random_even_single_peak(seed, i)
        ratio, _, bad = even_variation_ratio(f, points_per_decade)
        ratios.append(ratio)
        violations += bad
    counts, edges = np.histogram(ratios, bins=10)
    return RadialReport(
        seed=seed,
        count=count,
        ratios=tuple(ratios),
        max_ratio=max(ratios),
        mean_ratio=float(sum(ratios) / len(ratios)),
        histogram_counts=tuple(int(c) for c in counts),
        histogram_edges=tuple(float(e) for e in edges),
        restricted_violations=violations,
    )


# ---------------------------------------------------------------------------
# zeros of (Mf)''
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ZeroScan:
    zeros: IntervalSet
    identically_zero: bool


def _ddmf_scale(f: PwlFunction, r) -> float:
    da = abs(r.da) if r.da is not None else 0.0
    try:
        fpx = abs(f.slope_at(r.x))
    except Exception:
        fpx = 0.0
    return (fpx + (2.0 + da) * abs(float(r.dmf))) / float(r.x - r.a)


def find_second_derivative_zeros(
    f: PwlFunction,
    lo: float,
    hi: float,
    points_per_decade: int = 64,
    zero_rtol: float = 1e-9,
) -> ZeroScan:
    """Sign-change bisection for (Mf)'' = 0 on [lo, hi], x > 0.

    Grid points where |(Mf)''| falls below zero_rtol times its natural local
    scale count as zeros directly; if all do, the whole range is flagged as
    identically zero (the two-slope peak, for instance).
    """
    evals = profile(f, GridSpec(lo, hi, points_per_decade).points(), refine_contacts=True)
    usable = [r for r in evals if r.ddmf is not None]
    if not usable:
        return ZeroScan(IntervalSet(()), False)
    flat = [abs(float(r.ddmf)) <= zero_rtol * _ddmf_scale(f, r) for r in usable]
    if all(flat):
        return ZeroScan(IntervalSet(((float(lo), float(hi)),)), True)
    zeros = []
    for i, r in enumerate(usable):
        if flat[i]:
            zeros.append(float(r.x))
    for r1, r2, f1, f2 in zip(usable, usable[1:], flat, flat[1:]):
        if f1 or f2:
            continue
        if (float(r1.ddmf) > 0) == (float(r2.ddmf) > 0):
            continue
        a_, b_ = float(r1.x), float(r2.x)
        sa = float(r1.ddmf) > 0
        for _ in range(80):
            m = math.sqrt(a_ * b_) if a_ > 0 else (a_ + b_) / 2
            if m <= a_ or m >= b_:
                break
            rm = evaluate(f, m)
            if rm.ddmf is None:
                m *= 1.0 + 1e-9
                rm = evaluate(f, m)
                if rm.ddmf is None:
                    break
            if (float(rm.ddmf) > 0) == sa:
                a_ = m
            else:
                b_ = m
        zeros.append((a_ + b_) / 2)
    zeros = sorted(set(zeros))
    merged = []
    for z in zeros:
        if merged and z <= merged[-1][1] + 1e-12 * max(1.0, abs(z)):
            continue
        merged.append((z, z))
    return ZeroScan(IntervalSet(tuple(merged)), False)
