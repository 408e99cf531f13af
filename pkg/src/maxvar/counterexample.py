"""The slope-oscillation family whose maximal function blows up in variation.

For parameters (epsilon, M, N), N odd, the function is -x on the right and
climbs on the left with slope epsilon on even geometric blocks
(-M^(n+1), -M^n) and slope epsilon/M^(n+1) on odd ones, tail slope
epsilon/M^(N+1), normalized to vanish at the origin.  Its derivative has
about N jumps of size epsilon, while the maximal function's derivative dips
to about -sqrt(epsilon) each time the contact point crosses an odd block:
roughly N dips of depth sqrt(epsilon), so the derivative-variation ratio
grows like sqrt(epsilon) N / (1 + N epsilon), unbounded as epsilon shrinks.

The experiment sweeps the contact point rather than x.  The dip carved out
by an odd block occupies an x-stretch of absolute width about
sqrt(epsilon) (M - 1/M) / 2 at abscissa M^n sqrt(epsilon), far below one
ulp of x once n is moderately large, so no x-grid can see it; the sweep is
therefore generated in contact space (where every block spans a full
geometric decade), x is recovered in closed form, and cell widths for
superlevel measures come from the contact-speed formula 1/|a'| instead of
differences of nearly equal abscissae.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence

from .errors import InvalidParams, PrecisionExceeded
from .maximal import MaximalEvaluation, evaluate_at_contact
from .pwl import PwlFunction, pinned_at_zero
from .scalars import ScalarContext, get_context
from .variation import SampledSignal, q_variation, total_variation, weak_quasi_norm

__all__ = [
    "CounterexampleParams",
    "PiecewiseAffine",
    "PredictionRecord",
    "ExperimentReport",
    "build_f",
    "build_g",
    "predictions",
    "contact_sweep",
    "superlevel_cells",
    "run_experiment",
    "sweep",
    "REPORT_HEADER",
]

REPORT_HEADER = (
    "q",
    "var_q_fprime",
    "var_q_dmf",
    "ratio",
    "predicted_var_q_fprime",
    "predicted_ratio",
    "superlevel_measure",
    "predicted_superlevel",
    "weak_quasi_norm",
    "grid_size",
)


@dataclass(frozen=True)
class CounterexampleParams:
    """(epsilon, M, N) with N odd, plus the scalar mode to compute in."""

    epsilon: object
    M: int
    N: int
    scalar_mode: str = "f64"

    def __post_init__(self):
        ctx = self.ctx
        eps = ctx.convert(self.epsilon)
        object.__setattr__(self, "epsilon", eps)
        if not (isinstance(self.M, int) and self.M >= 4):
            raise InvalidParams(f"M must be an integer >= 4, got {self.M}")
        if not (isinstance(self.N, int) and self.N >= 1 and self.N % 2 == 1):
            raise InvalidParams(f"N must be an odd integer >= 1, got {self.N}")
        if not (ctx.zero() < eps < ctx.convert(0.25)):
            raise InvalidParams(f"epsilon must lie in (0, 0.25), got {self.epsilon}")
        if ctx.huge is not None:
            # Largest intermediate: an integral of order M^(2N) epsilon over
            # a window of width ~ M^(N+1).
            guard = self.M ** (2 * (self.N + 2))
            if float(eps) * guard >= ctx.huge:
                raise PrecisionExceeded(
                    f"epsilon * M^(2(N+2)) = {float(eps) * guard:.3g} exceeds the "
                    f"{self.scalar_mode} range; use scalar_mode='ext'"
                )

    @cached_property
    def ctx(self) -> ScalarContext:
        return get_context(self.scalar_mode)

    @property
    def sqrt_eps(self):
        return self.ctx.sqrt(self.epsilon)


def build_f(p: CounterexampleParams) -> PwlFunction:
    """The family member as an exact PwlFunction with f(0) = 0."""
    ctx = p.ctx
    eps = p.epsilon
    M, N = p.M, p.N
    bps = [-(M ** k) for k in range(N + 1, 0, -1)] + [-1, 0]
    slopes = [eps / ctx.convert(M ** (N + 1))]
    for n in range(N, -1, -1):
        if n % 2 == 0:
            slopes.append(eps)
        else:
            slopes.append(eps / ctx.convert(M ** (n + 1)))
    slopes.append(eps / ctx.convert(M))
    slopes.append(ctx.convert(-1))
    return pinned_at_zero(bps, slopes, ctx)


@dataclass(frozen=True)
class PiecewiseAffine:
    """Per-piece affine records (lo, hi, intercept, slope) on (lo, hi];
    lo/hi of None mark the tails.  Used for the discontinuous companion."""

    pieces: tuple

    def __call__(self, x):
        for lo, hi, c0, c1 in self.pieces:
            if (lo is None or x > lo) and (hi is None or x <= hi):
                return c0 + c1 * x
        raise ValueError(f"{x} not covered by any piece")

    def integral(self, y, x):
        """Exact signed integral; jump discontinuities carry no mass."""
        if y == x:
            return 0 * x
        sign = 1
        lo_t, hi_t = y, x
        if lo_t > hi_t:
            lo_t, hi_t = hi_t, lo_t
            sign = -1
        total = None
        for lo, hi, c0, c1 in self.pieces:
            a = lo_t if lo is None else max(lo_t, lo)
            b = hi_t if hi is None else min(hi_t, hi)
            if b <= a:
                continue
            part = c0 * (b - a) + c1 * (b * b - a * a) / 2
            total = part if total is None else total + part
        return sign * total


def build_g(p: CounterexampleParams) -> PiecewiseAffine:
    """The explicit companion: equal to f up to a relative 1/M error."""
    ctx = p.ctx
    eps = p.epsilon
    M, N = p.M, p.N
    one = ctx.one()
    pieces = [(ctx.zero(), None, ctx.zero(), -one)]
    pieces.append((ctx.convert(-1), ctx.zero(), ctx.zero(), eps / M))
    for n in range(0, N + 1):
        lo = ctx.convert(-(M ** (n + 1)))
        hi = ctx.convert(-(M ** n))
        if n % 2 == 0:
            # intercept (M^n - M^(n-1)) eps, slope eps; M^(n-1) is 1/M at n = 0
            c0 = (ctx.convert(M ** n) - ctx.convert(M) ** (n - 1)) * eps
            pieces.append((lo, hi, c0, eps))
        else:
            pieces.append((lo, hi, -ctx.convert(M ** n) * eps, ctx.zero()))
    pieces.append((None, ctx.convert(-(M ** (N + 1))), -ctx.convert(M ** N) * eps, ctx.zero()))
    return PiecewiseAffine(tuple(pieces))


@dataclass(frozen=True)
class PredictionRecord:
    """Leading-order quantities read off the family's structure."""

    q: float
    var_q_fprime: object          # exact finite jump q-sum, no asymptotics
    var_q_fprime_leading: object  # N^(1/q) epsilon
    ratio: object                 # N^(1/q) sqrt(eps) / exact jump q-sum
    contact_x: dict               # odd n -> M^n sqrt(eps)
    dmf_odd: object               # -sqrt(eps)
    dmf_even_scale: object        # sqrt(eps) / M
    superlevel_level: object      # M / 9
    superlevel_measure: object    # floor(N/2) sqrt(eps) / M


def _fprime_jumps(p: CounterexampleParams) -> list:
    """|jumps| of f' from the construction: 1 + eps/M at 0, eps - eps/M at
    -1, and eps - eps/M^(n+1) (n odd) or eps - eps/M^n (n even) at -M^n."""
    ctx = p.ctx
    eps = p.epsilon
    M, N = p.M, p.N
    jumps = [ctx.one() + eps / M, eps - eps / M]
    for n in range(1, N + 1):
        k = n + 1 if n % 2 == 1 else n
        jumps.append(eps - eps / ctx.convert(M ** k))
    return jumps


def predictions(p: CounterexampleParams, q: float = 1.0) -> PredictionRecord:
    ctx = p.ctx
    q = float(q)
    se = p.sqrt_eps
    acc = None
    for j in _fprime_jumps(p):
        term = j if q == 1.0 else j ** q
        acc = term if acc is None else acc + term
    var_exact = acc if q == 1.0 else acc ** (1.0 / q)
    nq = ctx.convert(p.N) ** (1.0 / q)
    return PredictionRecord(
        q=q,
        var_q_fprime=var_exact,
        var_q_fprime_leading=nq * p.epsilon,
        ratio=nq * se / var_exact,
        contact_x={n: ctx.convert(p.M ** n) * se for n in range(1, p.N + 1, 2)},
        dmf_odd=-se,
        dmf_even_scale=se / p.M,
        superlevel_level=ctx.convert(p.M) / 9,
        superlevel_measure=(p.N // 2) * se / p.M,
    )


# ---------------------------------------------------------------------------
# contact-space sweep
# ---------------------------------------------------------------------------


def _contact_magnitudes(p: CounterexampleParams, points_per_decade: int) -> list:
    """|a| sample set: geometric base grid over the whole contact range,
    every block boundary M^n and midpoint 1.5 M^n, and a linear window over
    [M^n, 2.6 M^n] for odd n where the superlevel set lives."""
    import math as _m

    ctx = p.ctx
    M, N = p.M, p.N
    lo_mag = 0.8
    # x = 2 M^N sqrt(eps) is reached at |a| ~ M^N sqrt(1 + 2M) on the last
    # odd block (integrating the contact speed across it).
    hi_mag_factor = _m.sqrt(1.0 + 2.0 * M) * 1.02
    decades = (N * _m.log10(M) + _m.log10(hi_mag_factor / lo_mag))
    n_base = max(2, int(_m.ceil(decades * points_per_decade)) + 1)
    mags = set()
    lo = ctx.convert(lo_mag)
    hi = ctx.convert(M ** N) * ctx.convert(hi_mag_factor)
    ratio = (hi / lo) ** (1.0 / (n_base - 1))
    cur = lo
    for _ in range(n_base - 1):
        mags.add(cur)
        cur = cur * ratio
    mags.add(hi)
    window_cells = max(96, points_per_decade)
    for n in range(0, N + 1):
        mn = ctx.convert(M ** n)
        if mn > hi:
            break
        mags.add(mn)
        mags.add(1.5 * mn)
        if n % 2 == 1:
            # superlevel window: -ddmf >= M/9 roughly while |a| <= 2.08 M^n
            top = 2.6 * mn
            step = (top - mn) / window_cells
            for k in range(1, window_cells + 1):
                mags.add(mn + k * step)
    return sorted(m for m in mags if lo <= m <= hi)


def contact_sweep(
    p: CounterexampleParams,
    f: PwlFunction,
    points_per_decade: int = 64,
) -> list[MaximalEvaluation]:
    """Evaluations along the x > 0 branch ordered by the curve parameter
    (|a| ascending, hence x nondecreasing)."""
    return [evaluate_at_contact(f, -m) for m in _contact_magnitudes(p, points_per_decade)]


def superlevel_cells(f: PwlFunction, evals: Sequence[MaximalEvaluation]):
    """(widths, |ddmf| values) per contact cell.

    The cell's x-width is integral of 1/|a'| = f'(a) (x - a)/(mf - f(x))
    over the cell in a, by trapezoid with the cell's own slope; differencing
    the two x values would cancel to nothing exactly where the cells are
    narrow.  Cells whose interior crosses a kink do not occur because every
    breakpoint is a sweep node.
    """
    widths = []
    values = []
    for r1, r2 in zip(evals, evals[1:]):
        da_len = abs(r2.a - r1.a)
        if da_len == 0:
            continue
        mid = (r1.a + r2.a) / 2
        s = f.slopes[f.piece_index(mid)]
        g1 = s * (r1.x - r1.a) / (r1.mf - f(r1.x))
        g2 = s * (r2.x - r2.a) / (r2.mf - f(r2.x))
        widths.append(da_len * (g1 + g2) / 2)
        vals = [abs(r.ddmf) for r in (r1, r2) if r.ddmf is not None]
        values.append(sum(vals) / len(vals) if vals else 0 * da_len)
    return widths, values


@dataclass(frozen=True)
class ExperimentReport:
    q: float
    var_q_fprime: object
    var_q_dmf: object
    ratio: object
    predicted_var_q_fprime: object
    predicted_ratio: object
    superlevel_measure: object
    predicted_superlevel: object
    weak_quasi_norm: object
    grid_size: int

    def row(self) -> tuple:
        return (
            self.q,
            self.var_q_fprime,
            self.var_q_dmf,
            self.ratio,
            self.predicted_var_q_fprime,
            self.predicted_ratio,
            self.superlevel_measure,
            self.predicted_superlevel,
            self.weak_quasi_norm,
            self.grid_size,
        )


def run_experiment(
    p: CounterexampleParams,
    q_list: Sequence[float] = (1.0,),
    points_per_decade: int = 64,
    refine_rtol: float = 1e-3,
    max_points_per_decade: int = 512,
) -> list[ExperimentReport]:
    """Measure variation blow-up, superlevel measure at level M/9, and the
    weak quasi-norm, pairing each with its structural prediction.

    The sweep density doubles until consecutive total-variation estimates
    of (Mf)' agree to refine_rtol (the variation is a supremum over
    partitions, so any finite sweep only lower-bounds it).
    """
    f = build_f(p)
    fprime = f.derivative()
    ppd = points_per_decade
    evals = contact_sweep(p, f, ppd)
    tv = total_variation(_dmf_signal(evals))
    while ppd * 2 <= max_points_per_decade:
        finer = contact_sweep(p, f, ppd * 2)
        tv_fine = total_variation(_dmf_signal(finer))
        gap = abs(tv_fine - tv)
        evals, tv, ppd = finer, tv_fine, ppd * 2
        if gap <= refine_rtol * abs(tv):
            break
    widths, vals = superlevel_cells(f, evals)
    level = p.ctx.convert(p.M) / 9
    measure = None
    for w, v in zip(widths, vals):
        if v >= level:
            measure = w if measure is None else measure + w
    if measure is None:
        measure = p.ctx.zero()
    wqn = weak_quasi_norm(vals, widths)
    reports = []
    for q in q_list:
        pred = predictions(p, q)
        var_dmf = q_variation(_dmf_signal(evals), q)
        var_fp = q_variation(fprime, q)
        reports.append(
            ExperimentReport(
                q=float(q),
                var_q_fprime=var_fp,
                var_q_dmf=var_dmf,
                ratio=var_dmf / var_fp,
                predicted_var_q_fprime=pred.var_q_fprime,
                predicted_ratio=pred.ratio,
                superlevel_measure=measure,
                predicted_superlevel=pred.superlevel_measure,
                weak_quasi_norm=wqn,
                grid_size=len(evals),
            )
        )
    return reports


def _dmf_signal(evals: Sequence[MaximalEvaluation]) -> SampledSignal:
    # |a| is strictly increasing along the sweep even where x collapses to
    # a single representable value, so it serves as the abscissa.
    return SampledSignal(tuple(abs(r.a) for r in evals), tuple(r.dmf for r in evals))


def sweep(
    params_list: Sequence[CounterexampleParams],
    q_list: Sequence[float],
    out_path,
    points_per_decade: int = 64,
) -> list[ExperimentReport]:
    """Batch of run_experiment rows written as CSV (header always emitted)."""
    from .formats import write_csv

    reports = []
    for p in params_list:
        reports.extend(run_experiment(p, q_list, points_per_decade))
    write_csv(out_path, REPORT_HEADER, (r.row() for r in reports))
    return reports
