"""Variable-bandwidth smoothing that keeps the peak of a single-peak function.

The smoothed value at x averages f against a fixed bump kernel whose
bandwidth is psi_t(x) = t^2 psi(x/t) with psi the kernel's own integral
ramp: quadratically small near the origin (so the peak survives) and frozen
at t^2 once |x| >= t.  A -|x|/sqrt(n) tilt is subtracted so the result is
strictly decreasing away from the origin even where f was flat:

    f_n(x) = (f * phi_{psi_{1/n}(x)})(x) - |x| / sqrt(n).

The kernel is the standard bump c exp(-1/(1-x^2)) on (-1, 1), normalized to
unit mass once by adaptive quadrature.  All smoothed-value integrals are
fixed-order Gauss-Legendre split at the kernel-window images of the
breakpoints of f, so the integrand is smooth on every subinterval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .maximal import maximal_value
from .pwl import PwlFunction, StepFunction
from .variation import total_variation

__all__ = [
    "MollifierConfig",
    "KernelConstants",
    "kernel_constants",
    "kernel",
    "psi",
    "psi_derivative",
    "mollified_value",
    "mollified_slope",
    "resample",
    "approximation_report",
    "ApproximationEntry",
    "ApproximationReport",
]


@dataclass(frozen=True)
class MollifierConfig:
    """Smoothing index n >= 2 and the Gauss-Legendre order per subinterval."""

    n: int
    quadrature_points: int = 48

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("mollifier index n must be >= 2")
        if self.quadrature_points < 16:
            raise ValueError("quadrature_points must be >= 16")


@dataclass(frozen=True)
class KernelConstants:
    norm: float      # c with integral of c exp(-1/(1-x^2)) equal to 1
    alpha0: float    # 2 sup phi
    alpha1: float    # 2 sup |phi'|


_KERNEL: Optional[KernelConstants] = None


def _raw_bump(u: float) -> float:
    if abs(u) >= 1.0:
        return 0.0
    return math.exp(-1.0 / (1.0 - u * u))


def kernel_constants() -> KernelConstants:
    global _KERNEL
    if _KERNEL is None:
        from scipy.integrate import quad

        mass, _ = quad(_raw_bump, -1, 1, epsabs=1e-15, epsrel=1e-15)
        c = 1.0 / mass
        # phi peaks at 0; |phi'| peaks strictly inside (0, 1), found by scan.
        us = np.linspace(0.0, 1.0 - 1e-9, 200001)
        with np.errstate(over="ignore"):
            w = 1.0 - us * us
            phi = c * np.exp(-1.0 / w)
            dphi = phi * (-2.0 * us / (w * w))
        _KERNEL = KernelConstants(
            norm=c,
            alpha0=2.0 * c * math.exp(-1.0),
            alpha1=2.0 * float(np.max(np.abs(dphi))),
        )
    return _KERNEL


def kernel(u: float) -> float:
    """The smoothing bump phi (unit mass, support [-1, 1], even)."""
    return kernel_constants().norm * _raw_bump(float(u))


@lru_cache(maxsize=8)
def _gauss(k: int):
    nodes, weights = np.polynomial.legendre.leggauss(k)
    return nodes, weights


def _integrate_kernel(fn, lo: float, hi: float, order: int) -> float:
    """Gauss-Legendre of fn over [lo, hi] (integrand smooth there)."""
    nodes, weights = _gauss(order)
    mid = (lo + hi) / 2.0
    half = (hi - lo) / 2.0
    return half * float(sum(w * fn(mid + half * t) for t, w in zip(nodes, weights)))


def _psi_ramp(u: float, order: int = 64) -> float:
    """psi(u) = 2 * integral of phi from 0 to |u| (1 once |u| >= 1)."""
    u = abs(float(u))
    if u >= 1.0:
        return 1.0
    if u == 0.0:
        return 0.0
    return 2.0 * _integrate_kernel(kernel, 0.0, u, order)


def psi(t, x) -> float:
    """psi_t(x) = t^2 psi(x/t); exactly t^2 for |x| >= t."""
    t = float(t)
    if not t > 0:
        raise ValueError("bandwidth parameter t must be positive")
    x = float(x)
    if abs(x) >= t:
        return t * t
    return t * t * _psi_ramp(x / t)


def psi_derivative(t, x) -> float:
    """d/dx psi_t(x) = sign(x) * 2 t phi(x/t) (zero for |x| >= t)."""
    t = float(t)
    x = float(x)
    if abs(x) >= t or x == 0.0:
        return 0.0
    return math.copysign(2.0 * t * kernel(x / t), x)


def _window_cuts(f: PwlFunction, x: float, h: float) -> list:
    cuts = [-1.0]
    for b in f.breakpoints:
        y = (float(b) - x) / h
        if -1.0 < y < 1.0:
            cuts.append(y)
    cuts.append(1.0)
    return sorted(cuts)


def mollified_value(f: PwlFunction, cfg: MollifierConfig, x) -> float:
    """f_n(x): bandwidth-psi average of f at x minus the |x|/sqrt(n) tilt."""
    x = float(x)
    n = cfg.n
    h = psi(1.0 / n, x)
    if h == 0.0:
        return float(f(x))
    cuts = _window_cuts(f, x, h)
    g = 0.0
    for lo, hi in zip(cuts, cuts[1:]):
        g += _integrate_kernel(
            lambda y: kernel(y) * float(f(x + h * y)), lo, hi, cfg.quadrature_points
        )
    return g - abs(x) / math.sqrt(n)


def mollified_slope(f: PwlFunction, cfg: MollifierConfig, x) -> float:
    """f_n'(x) by differentiating under the integral.

    The inner abscissa is u(y) = x + psi_{1/n}(x) y, so the slope picks up
    the factor 1 + psi' y alongside f' at the displaced point.
    """
    x = float(x)
    if x == 0.0:
        raise ValueError("f_n is not differentiable at the peak")
    n = cfg.n
    h = psi(1.0 / n, x)
    hp = psi_derivative(1.0 / n, x)
    fp = f.derivative()
    if h == 0.0:
        return float(fp(x)) - math.copysign(1.0, x) / math.sqrt(n)
    cuts = _window_cuts(f, x, h)
    g = 0.0
    for lo, hi in zip(cuts, cuts[1:]):
        g += _integrate_kernel(
            lambda y: kernel(y) * float(fp(x + h * y)) * (1.0 + hp * y),
            lo,
            hi,
            cfg.quadrature_points,
        )
    return g - math.copysign(1.0, x) / math.sqrt(n)


def _is_even(f: PwlFunction) -> bool:
    b = f.breakpoints
    s = f.slopes
    if not any(t == 0 for t in b):
        return False
    for t, u in zip(b, reversed(b)):
        if t != -u:
            return False
    for t, u in zip(s, reversed(s)):
        if t != -u:
            return False
    return True


def _sample_abscissae(f: PwlFunction, n: int, per_side: int) -> list:
    """Positive sample set: linear through the bandwidth-transition zone
    [0, 2/n], geometric out to past the kernel reach of the last breakpoint."""
    reach = max(abs(float(b)) for b in f.breakpoints) + 1.0 / (n * n) + 1.0
    inner = 2.0 / n
    k_lin = max(per_side // 2, 32)
    xs = [inner * (i + 1) / k_lin for i in range(k_lin)]
    k_geo = max(per_side // 2, 32)
    ratio = (reach / inner) ** (1.0 / k_geo)
    cur = inner
    for _ in range(k_geo):
        cur *= ratio
        xs.append(cur)
    return xs


def resample(
    f: PwlFunction,
    cfg: MollifierConfig,
    per_side: int = 512,
) -> PwlFunction:
    """Materialize f_n as a fine PwlFunction (peak value pinned exactly).

    Beyond the kernel reach of the outermost breakpoints f is affine on the
    whole window, the convolution reproduces it exactly (phi is even), and
    the tails continue with slope f' -/+ 1/sqrt(n); an even f is sampled on
    x > 0 and mirrored so the result is exactly even.
    """
    n = cfg.n
    tilt = 1.0 / math.sqrt(n)
    pos = _sample_abscissae(f, n, per_side)
    pos_vals = [mollified_value(f, cfg, x) for x in pos]
    peak_val = mollified_value(f, cfg, 0.0)
    if _is_even(f):
        neg, neg_vals = [-x for x in reversed(pos)], list(reversed(pos_vals))
    else:
        neg = [-x for x in reversed(pos)]
        neg_vals = [mollified_value(f, cfg, x) for x in neg]
    bps = neg + [0.0] + pos
    vals = neg_vals + [peak_val] + pos_vals
    slopes = [float(f.slopes[0]) + tilt]
    for i in range(1, len(bps)):
        slopes.append((vals[i] - vals[i - 1]) / (bps[i] - bps[i - 1]))
    slopes.append(float(f.slopes[-1]) - tilt)
    return PwlFunction(
        tuple(bps), peak_val, tuple(slopes), f.ctx, value_index=len(neg)
    )


@dataclass(frozen=True)
class ApproximationEntry:
    n: int
    sup_error: float
    var_fn_prime: float
    bandwidth_cap: float            # psi_{1/n} at |x| >= 1/n, exactly 1/n^2
    slope_window_violations: int
    contact_violations: int
    contact_checked: bool


@dataclass(frozen=True)
class ApproximationReport:
    var_f_prime: float
    entries: tuple


def approximation_report(
    f: PwlFunction,
    n_list: Sequence[int],
    grid: Sequence[float],
    quadrature_points: int = 48,
    per_side: int = 512,
) -> ApproximationReport:
    """Convergence diagnostics over a list of smoothing indices.

    Per n: the sup of |f_n - f| over the grid, the variation of the
    resampled derivative, the slope window -sign(x) f_n' in
    [1/(2 sqrt(n)), 2D + 1] with D the largest |slope| of f, and the
    contact-shrink comparison -a_n(x) <= max(-a(x), (x/2)(1 + delta_n))
    with delta_n from the explicit smoothing bounds (checked only once
    sqrt(n) clears D alpha0, where those bounds are meaningful).
    """
    kc = kernel_constants()
    d_sup = max(abs(float(s)) for s in f.slopes)
    var_fp = float(total_variation(f.derivative()))
    entries = []
    for n in n_list:
        cfg = MollifierConfig(n, quadrature_points)
        sup_err = 0.0
        slope_bad = 0
        for x in grid:
            x = float(x)
            err = abs(mollified_value(f, cfg, x) - float(f(x)))
            sup_err = max(sup_err, err)
            if x != 0.0:
                v = -math.copysign(1.0, x) * mollified_slope(f, cfg, x)
                if not (1.0 / (2.0 * math.sqrt(n)) <= v <= 2.0 * d_sup + 1.0):
                    slope_bad += 1
        fn = resample(f, cfg, per_side)
        var_fn = float(total_variation(fn.derivative()))
        rootn = math.sqrt(n)
        contact_checked = rootn > d_sup * kc.alpha0
        contact_bad = 0
        if contact_checked:
            kappa = (rootn + d_sup * kc.alpha0) / (2.0 * (rootn - d_sup * kc.alpha0))
            delta = 2.0 * kappa - 1.0 + 0.1
            for x in grid:
                x = float(x)
                if x <= 0.0:
                    continue
                _, a_orig = maximal_value(f, x)
                _, a_new = maximal_value(fn, x)
                bound = max(-float(a_orig), (x / 2.0) * (1.0 + delta))
                if -float(a_new) > bound * (1.0 + 1e-9):
                    contact_bad += 1
        entries.append(
            ApproximationEntry(
                n=n,
                sup_error=sup_err,
                var_fn_prime=var_fn,
                bandwidth_cap=psi(1.0 / n, 1.0 / n),
                slope_window_violations=slope_bad,
                contact_violations=contact_bad,
                contact_checked=contact_checked,
            )
        )
    return ApproximationReport(var_f_prime=var_fp, entries=tuple(entries))
