"""Uncentered maximal function, contact point, and derivative formulas.

For a single-peak function with its maximum at the origin and x > 0, the
best averaging interval is (a, x) with a < 0, and its left endpoint obeys
the contact condition f(a) = A(a, x) where A is the integral average.  On
each linear piece that condition is a quadratic with a closed-form root, so
the solver locates the sign change of phi(y) = A(y, x) - f(y) over the
piece endpoints (phi >= 0 left of the contact point, <= 0 right of it, with
a single crossing), solves the quadratic there in a cancellation-free form,
and falls back to bisection when the residual is out of tolerance.

With (mf, a) in hand the derivatives are pure formulas:

    (Mf)'(x)  = (f(x) - mf) / (x - a)
    a'(x)     = (Mf)'(x) / f'(a)
    (Mf)''(x) = (f'(x) - (2 - a'(x)) (Mf)'(x)) / (x - a)

the latter two inapplicable when a (or x) sits on a kink.  Negative x is
handled by reflection.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

from .errors import (
    BreakpointContact,
    DegenerateInterval,
    NotSinglePeak,
    SolverFailure,
    UnattainedSupremum,
)
from .pwl import PwlFunction, StepFunction

__all__ = [
    "MaximalEvaluation",
    "GridSpec",
    "maximal_value",
    "maximal_derivative",
    "a_prime",
    "maximal_second_derivative",
    "luiro_residual",
    "centered_maximal_value",
    "evaluate",
    "evaluate_at_contact",
    "inverse_contact",
    "profile",
    "solve_contact",
]


@dataclass(frozen=True)
class MaximalEvaluation:
    """Per-point record of M f and its first two derivatives.

    da and ddmf are None at contact events (a on a breakpoint of f) and at
    x on a breakpoint, where the corresponding formulas do not apply.
    """

    x: object
    mf: object
    a: object
    dmf: object
    da: Optional[object]
    ddmf: Optional[object]
    luiro_residual: object
    stationarity_residual: object


# ---------------------------------------------------------------------------
# contact-point solver (x > 0, peak at 0)
# ---------------------------------------------------------------------------


def _require_standard_peak(f: PwlFunction) -> None:
    rep = f.classification
    if not rep.single_peak:
        raise NotSinglePeak("; ".join(rep.reasons) or "not single-peak")
    if rep.peak != f.ctx.zero():
        raise NotSinglePeak(f"peak must sit at the origin, found {rep.peak}")


def _left_inverse(f: PwlFunction, v):
    """Smallest y <= 0 with f(y) >= v, or None when the flat left tail
    already sits at or above v (the set is then unbounded)."""
    ctx = f.ctx
    b = f.breakpoints
    vals = f.values
    pk = bisect.bisect_left(b, ctx.zero())
    if v <= vals[0]:
        s = f.slopes[0]
        if s == ctx.zero():
            return None
        return b[0] + (v - vals[0]) / s
    i = bisect.bisect_left(vals, v, 0, pk + 1)
    # first index with vals[i] >= v; i >= 1 here since vals[0] < v
    if vals[i] == v:
        return b[i]
    s = f.slopes[i]
    return b[i - 1] + (v - vals[i - 1]) / s


def _stationary_roots_in_piece(f: PwlFunction, x, lo, hi):
    """Roots of the contact condition inside the open piece (lo, hi).

    hi must be the right end of a linear piece of f (or a point inside
    one), lo the left end or None for the unbounded tail.
    """
    ctx = f.ctx
    s = f.slope_at((lo + hi) / 2 if lo is not None else hi - ctx.one())
    if s == ctx.zero():
        return []
    d = x - hi
    if d <= ctx.zero():
        return []
    phi_hi = f._avg_fast(hi, x) - f(hi)
    # (s/2) u^2 + s d u + d phi_hi = 0 with u = hi - y
    disc = d * d - 2 * d * phi_hi / s
    if disc < ctx.zero():
        return []
    root = ctx.sqrt(disc)
    out = []
    for u in (-d + root, -d - root):
        if u > ctx.zero():
            y = hi - u
            if (lo is None or y > lo) and y < hi:
                out.append(y)
    return out


def _solve_flat_tail(f: PwlFunction, x, fx):
    """Candidate sweep when the flat left tail sits at or above f(x).

    The y -> -inf limit of the average equals the tail level and may
    dominate strictly, in which case the supremum is not attained.
    """
    ctx = f.ctx
    zero = ctx.zero()
    b = f.breakpoints
    pk = bisect.bisect_left(b, zero)
    endpoints = list(b[: pk + 1])
    candidates = list(endpoints)
    for j, hi in enumerate(endpoints):
        lo = None if j == 0 else endpoints[j - 1]
        candidates.extend(_stationary_roots_in_piece(f, x, lo, hi))
    best_a = None
    best_v = None
    for y in candidates:
        v = f._avg_fast(y, x)
        if best_v is None or v > best_v or (v == best_v and abs(y) < abs(best_a)):
            best_a, best_v = y, v
    tail_level = f.values[0]
    tol = ctx.stationarity_rtol * max(ctx.one(), abs(tail_level), abs(best_v))
    if tail_level > best_v + tol:
        raise UnattainedSupremum(
            "averages approach the flat-tail level only as y -> -infinity"
        )
    res = abs(f(best_a) - best_v)
    return best_a, best_v, res


def _bisect_polish(f: PwlFunction, x, lo, hi, best):
    """Bisection on phi = A(., x) - f within [lo, hi], keeping the best
    stationarity residual seen."""
    ctx = f.ctx
    best_a, best_mf, best_res = best
    max_iter = 8 + 4 * int(-math.log2(ctx.eps))
    for _ in range(max_iter):
        mid = (lo + hi) / 2
        if mid <= lo or mid >= hi:
            break
        avg = f._avg_fast(mid, x)
        phi = avg - f(mid)
        res = abs(phi)
        if res < best_res:
            best_a, best_mf, best_res = mid, avg, res
        if phi >= ctx.zero():
            lo = mid
        else:
            hi = mid
    return best_a, best_mf, best_res


def _solve_pos(f: PwlFunction, x):
    """Contact point for x > 0: returns (a, mf, stationarity residual)."""
    ctx = f.ctx
    zero = ctx.zero()
    one = ctx.one()
    _require_standard_peak(f)
    fx = f(x)
    y0 = _left_inverse(f, fx)
    if y0 is None:
        return _solve_flat_tail(f, x, fx)
    b = f.breakpoints
    pk = bisect.bisect_left(b, zero)
    endpoints = [y0]
    for t in b[:pk]:
        if t > y0:
            endpoints.append(t)
    if endpoints[-1] != b[pk]:
        endpoints.append(b[pk])
    phis = {}

    def phi(k):
        if k not in phis:
            e = endpoints[k]
            phis[k] = f._avg_fast(e, x) - f(e)
        return phis[k]

    last = len(endpoints) - 1
    if last == 0 or phi(last) >= zero:
        # Average over (0, x) is not below the peak value: f is flat there.
        a = endpoints[last]
        mf = f._avg_fast(a, x)
        return a, mf, abs(f(a) - mf)
    lo_i, hi_i = 0, last
    while hi_i - lo_i > 1:
        mid = (lo_i + hi_i) // 2
        if phi(mid) >= zero:
            lo_i = mid
        else:
            hi_i = mid
    e_lo, e_hi = endpoints[lo_i], endpoints[hi_i]
    s = f.slope_at((e_lo + e_hi) / 2)
    phi_hi = phi(hi_i)
    if s == zero:
        # phi keeps its sign inside a flat piece, so the contact is at an
        # endpoint; ties resolve toward the origin (smallest |a|).
        a = e_hi if abs(phi_hi) <= abs(phi(lo_i)) else e_lo
    else:
        d = x - e_hi
        t = -2 * phi_hi / (s * d)
        if t < zero:
            t = zero
        u = d * t / (ctx.sqrt(one + t) + one)
        a = e_hi - u
        if a < e_lo:
            a = e_lo
        elif a > e_hi:
            a = e_hi
    mf = f._avg_fast(a, x)
    res = abs(f(a) - mf)
    tol = ctx.stationarity_rtol * max(one, abs(mf))
    if res > tol:
        a, mf, res = _bisect_polish(f, x, e_lo, e_hi, (a, mf, res))
    return a, mf, res


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def maximal_value(f: PwlFunction, x):
    """M f(x) and its contact point a(x); M f(0) = f(0) by convention."""
    ctx = f.ctx
    x = ctx.convert(x)
    if x == ctx.zero():
        return f(x), ctx.zero()
    if x > ctx.zero():
        a, mf, _ = _solve_pos(f, x)
        return mf, a
    a, mf, _ = _solve_pos(f.reflected, -x)
    return mf, -a


def maximal_derivative(f: PwlFunction, x, a, mf):
    """(Mf)'(x) = (f(x) - Mf(x)) / (x - a(x))."""
    return (f(x) - mf) / (x - a)


def a_prime(f: PwlFunction, x, dmf, a):
    """a'(x) = (Mf)'(x) / f'(a(x)); contact on a kink is an error."""
    if f.is_breakpoint(a):
        raise BreakpointContact(f"a(x) = {a} sits on a breakpoint of f")
    return dmf / f.slope_at(a)


def maximal_second_derivative(f: PwlFunction, x, dmf, a, da):
    """(Mf)''(x) = (f'(x) - (2 - a'(x)) (Mf)'(x)) / (x - a(x))."""
    if da is None:
        raise BreakpointContact("a'(x) unavailable (contact event)")
    if f.is_breakpoint(x):
        raise BreakpointContact(f"x = {x} sits on a breakpoint of f")
    if f.is_breakpoint(a):
        raise BreakpointContact(f"a(x) = {a} sits on a breakpoint of f")
    return (f.slope_at(x) - (2 - da) * dmf) / (x - a)


def luiro_residual(f: PwlFunction, x, a, dmf):
    """|(Mf)'(x) - average of f' over the optimal interval|.

    The step average is integrated independently of the mf route, so this
    doubles as a consistency check of the whole evaluation.
    """
    step = f.derivative()
    return abs(dmf - step.average(a, x))


def evaluate(f: PwlFunction, x) -> MaximalEvaluation:
    """Full per-point record; x = 0 is excluded from evaluation."""
    ctx = f.ctx
    x = ctx.convert(x)
    if x == ctx.zero():
        raise DegenerateInterval("x = 0 excluded from grids; M f(0) = f(0)")
    if x > ctx.zero():
        g, xi, sign = f, x, 1
    else:
        g, xi, sign = f.reflected, -x, -1
    a_g, mf, res = _solve_pos(g, xi)
    dmf_g = maximal_derivative(g, xi, a_g, mf)
    da = None
    ddmf = None
    try:
        da = a_prime(g, xi, dmf_g, a_g)
        ddmf = maximal_second_derivative(g, xi, dmf_g, a_g, da)
    except BreakpointContact:
        ddmf = None
    lr = luiro_residual(g, xi, a_g, dmf_g)
    return MaximalEvaluation(
        x=x,
        mf=mf,
        a=sign * a_g,
        dmf=sign * dmf_g,
        da=da,
        ddmf=ddmf,
        luiro_residual=lr,
        stationarity_residual=res,
    )


# ---------------------------------------------------------------------------
# contact-parametrized evaluation
# ---------------------------------------------------------------------------
#
# The curve x -> (M f, a, derivatives) is a monotone bijection between x and
# the contact point, so it can be swept in a just as well as in x.  That is
# essential for steep instances: the x-stretch where a crosses a low-slope
# piece can be narrower than one ulp of x, making those oscillations
# invisible to any x-grid, while in a-space they are perfectly resolved and
# x itself is recovered by one more closed-form quadratic.


def inverse_contact(f: PwlFunction, a):
    """The abscissa x > 0 whose optimal interval is (a, x), for a < 0.

    Solves the contact condition for x piece by piece on the right side;
    the root is unique because the average minus f(a) is strictly falling
    at every crossing.
    """
    ctx = f.ctx
    zero = ctx.zero()
    a = ctx.convert(a)
    if not a < zero:
        raise ValueError("inverse_contact needs a < 0")
    _require_standard_peak(f)
    fa = f(a)
    fl_a = f._antiderivative_at(a)
    b = f.breakpoints
    pk = bisect.bisect_left(b, zero)
    last = len(b) - 1
    for j in range(pk, last + 1):
        p0 = b[j]
        p1 = b[j + 1] if j < last else None
        width = None if p1 is None else p1 - p0
        s = f.slopes[j + 1]
        v0 = f.values[j]
        c0 = f._antiderivative_at(p0) - fl_a
        # (s/2) xi^2 + (v0 - fa) xi + c0 - (p0 - a) fa = 0,  xi = x - p0
        a1 = v0 - fa
        a0 = c0 - (p0 - a) * fa
        roots = []
        if s == zero:
            if a1 != zero:
                roots.append(-a0 / a1)
        else:
            half_s = s / 2
            disc = a1 * a1 - 4 * half_s * a0
            if disc >= zero:
                sq = ctx.sqrt(disc)
                if a1 >= zero:
                    qq = -(a1 + sq) / 2
                else:
                    qq = -(a1 - sq) / 2
                if qq != zero:
                    roots.append(a0 / qq)
                    roots.append(qq / half_s)
                else:
                    roots.append(zero)
        for xi in roots:
            if xi < zero:
                continue
            if width is not None and xi > width:
                continue
            x = p0 + xi
            if x > zero:
                return x
    raise SolverFailure(f"no abscissa found with contact point {a}")


def evaluate_at_contact(f: PwlFunction, a) -> MaximalEvaluation:
    """Full record at the x whose contact point is a (a != 0).

    M f(x) = f(a) by the contact condition; positive a addresses the x < 0
    branch through reflection.
    """
    ctx = f.ctx
    a = ctx.convert(a)
    if a > ctx.zero():
        r = evaluate_at_contact(f.reflected, -a)
        return MaximalEvaluation(
            x=-r.x,
            mf=r.mf,
            a=-r.a,
            dmf=-r.dmf,
            da=r.da,
            ddmf=r.ddmf,
            luiro_residual=r.luiro_residual,
            stationarity_residual=r.stationarity_residual,
        )
    x = inverse_contact(f, a)
    mf = f(a)
    dmf = maximal_derivative(f, x, a, mf)
    da = None
    ddmf = None
    try:
        da = a_prime(f, x, dmf, a)
        ddmf = maximal_second_derivative(f, x, dmf, a, da)
    except BreakpointContact:
        ddmf = None
    return MaximalEvaluation(
        x=x,
        mf=mf,
        a=a,
        dmf=dmf,
        da=da,
        ddmf=ddmf,
        luiro_residual=luiro_residual(f, x, a, dmf),
        stationarity_residual=abs(mf - f._avg_fast(a, x)),
    )


# ---------------------------------------------------------------------------
# grids, profiles, contact events
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    """Geometric grid over (lo, hi) with a fixed number of points per decade."""

    lo: object
    hi: object
    points_per_decade: int = 64

    def __post_init__(self):
        if self.points_per_decade < 1:
            raise ValueError("points_per_decade must be positive")

    def points(self, ctx=None) -> list:
        from .scalars import FLOAT64

        ctx = ctx or FLOAT64
        lo = ctx.convert(self.lo)
        hi = ctx.convert(self.hi)
        if not ctx.zero() < lo < hi:
            raise ValueError("GridSpec requires 0 < lo < hi")
        if ctx.name == "f64":
            ndec = math.log10(hi / lo)
        else:
            from mpmath import mp

            ndec = float(mp.log(hi / lo, 10))
        n = max(2, int(math.ceil(ndec * self.points_per_decade)) + 1)
        ratio = (hi / lo) ** (1.0 / (n - 1))
        pts = [lo]
        for _ in range(n - 2):
            pts.append(pts[-1] * ratio)
        pts.append(hi)
        return pts


def _contact_tolerance(f: PwlFunction, b):
    return 64 * f.ctx.eps * max(abs(b), f.ctx.one())


def _solve_contact_between(f: PwlFunction, b, x_lo, x_hi):
    """x with a(x) = b inside [x_lo, x_hi]; a is monotone there."""
    ctx = f.ctx
    tol = _contact_tolerance(f, b)
    lo, hi = x_lo, x_hi
    best_x, best_gap = None, None
    max_iter = 40 + 4 * int(-math.log2(ctx.eps))
    for _ in range(max_iter):
        if lo > ctx.zero() and hi > ctx.zero():
            mid = ctx.sqrt(lo * hi)
        else:
            mid = (lo + hi) / 2
        if mid <= lo or mid >= hi:
            break
        _, a_mid = maximal_value(f, mid)
        gap = abs(a_mid - b)
        if best_gap is None or gap < best_gap:
            best_x, best_gap = mid, gap
        if gap <= tol:
            break
        # |a| grows with x, so a small |a_mid| sends the bracket rightward.
        if abs(a_mid) < abs(b):
            lo = mid
        else:
            hi = mid
    if best_x is None:
        raise SolverFailure(f"contact bisection made no progress in [{x_lo}, {x_hi}]")
    return best_x


def solve_contact(f: PwlFunction, target_a, x_lo=None, x_hi=None):
    """Find x > 0 with a(x) = target_a (target_a < 0), expanding the bracket
    geometrically when one is not supplied."""
    ctx = f.ctx
    target_a = ctx.convert(target_a)
    if not target_a < ctx.zero():
        raise ValueError("target contact point must be negative")
    x_lo = ctx.convert(x_lo) if x_lo is not None else ctx.one()
    x_hi = ctx.convert(x_hi) if x_hi is not None else x_lo
    four = ctx.convert(4)
    budget = 600
    while True:
        _, a_lo = maximal_value(f, x_lo)
        if abs(a_lo) <= abs(target_a):
            break
        x_lo = x_lo / four
        budget -= 1
        if budget <= 0:
            raise SolverFailure("no lower bracket for the contact equation")
    if x_hi <= x_lo:
        x_hi = 4 * x_lo
    while True:
        _, a_hi = maximal_value(f, x_hi)
        if abs(a_hi) >= abs(target_a):
            break
        x_hi = x_hi * four
        budget -= 1
        if budget <= 0:
            raise SolverFailure("no upper bracket for the contact equation")
    return _solve_contact_between(f, target_a, x_lo, x_hi)


def profile(
    f: PwlFunction,
    grid: Sequence | GridSpec,
    refine_contacts: bool = True,
    map_fn: Callable[[Callable, Iterable], Iterable] = map,
) -> list[MaximalEvaluation]:
    """Evaluate along a grid, ordered by x, with contact-event refinement.

    When refine_contacts is set, every x where a(x) crosses a breakpoint of
    f between two consecutive grid points is located by monotone bisection
    and inserted, so the grid is guaranteed to contain all contact events.
    """
    ctx = f.ctx
    xs = sorted({ctx.convert(x) for x in grid})
    xs = [x for x in xs if x != ctx.zero()]
    evals = list(map_fn(lambda x: evaluate(f, x), xs))
    if not refine_contacts or len(evals) < 2:
        return evals
    inserts = []
    bps = f.breakpoints
    for r1, r2 in zip(evals, evals[1:]):
        if not (r1.x < r2.x) or (r1.x < ctx.zero()) != (r2.x < ctx.zero()):
            continue
        a_hi, a_lo = r1.a, r2.a  # a is nonincreasing in x on each side
        if a_lo > a_hi:
            a_lo, a_hi = a_hi, a_lo
        i = bisect.bisect_right(bps, a_lo)
        j = bisect.bisect_left(bps, a_hi)
        for b in bps[i:j]:
            tol = _contact_tolerance(f, b)
            if abs(r1.a - b) <= tol or abs(r2.a - b) <= tol:
                continue
            if r1.x > ctx.zero():
                x_star = _solve_contact_between(f, b, r1.x, r2.x)
            else:
                # mirror: a_g of the reflection crosses -b between -r2.x, -r1.x
                x_star = -_solve_contact_between(f.reflected, -b, -r2.x, -r1.x)
            inserts.append(x_star)
    if inserts:
        present = set(xs)
        for x_star in inserts:
            if x_star not in present:
                present.add(x_star)
                evals.append(evaluate(f, x_star))
        evals.sort(key=lambda r: r.x)
    return evals


# ---------------------------------------------------------------------------
# centered maximal function (point evaluation)
# ---------------------------------------------------------------------------


def centered_maximal_value(f: PwlFunction, x):
    """sup over r > 0 of the average of f on (x - r, x + r), with the r -> 0
    limit f(x) included.  Candidate radii are piece-boundary radii plus the
    stationary radii of the per-window quadratic."""
    ctx = f.ctx
    zero = ctx.zero()
    x = ctx.convert(x)
    radii = sorted({abs(b - x) for b in f.breakpoints if b != x})
    best = f(x)

    def avg(r):
        return (f._antiderivative_at(x + r) - f._antiderivative_at(x - r)) / (2 * r)

    def window_candidates(r_lo, r_hi):
        probe = (r_lo + r_hi) / 2 if r_hi is not None else r_lo + max(ctx.one(), abs(r_lo))
        s_r = f.slopes[f.piece_index(x + probe)]
        s_l = f.slopes[f.piece_index(x - probe)]
        beta = s_r - s_l
        out = []
        if r_hi is not None:
            out.append(r_hi)
        if beta != zero:
            alpha = f(x + r_lo) + f(x - r_lo) - beta * r_lo
            i_lo = f._antiderivative_at(x + r_lo) - f._antiderivative_at(x - r_lo)
            rhs = 2 * (i_lo - alpha * r_lo - beta * r_lo * r_lo / 2) / beta
            if rhs > zero:
                r_st = ctx.sqrt(rhs)
                if r_st > r_lo and (r_hi is None or r_st < r_hi):
                    out.append(r_st)
        return out, s_l, s_r

    bounds = [zero] + radii
    tail_slopes = None
    for k, r_lo in enumerate(bounds):
        r_hi = bounds[k + 1] if k + 1 < len(bounds) else None
        cands, s_l, s_r = window_candidates(r_lo, r_hi)
        if r_hi is None:
            tail_slopes = (s_l, s_r)
        for r in cands:
            v = avg(r)
            if v > best:
                best = v
    s_l, s_r = tail_slopes
    growth = s_r - s_l
    if growth > zero:
        raise UnattainedSupremum("averages grow without bound as r -> infinity")
    if growth == zero:
        r_ref = bounds[-1] + max(ctx.one(), abs(bounds[-1]))
        limit = (f(x + r_ref) - s_r * r_ref + f(x - r_ref) + s_l * r_ref) / 2
        tol = ctx.stationarity_rtol * max(ctx.one(), abs(limit), abs(best))
        if limit > best + tol:
            raise UnattainedSupremum("averages approach the tail mean only as r -> infinity")
    return best
