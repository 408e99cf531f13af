"""Scalar contexts: hardware binary64 and an mpmath-backed extended mode.

Every numeric module is generic over the scalar type.  A context bundles the
conversion into that type together with the few primitives the algorithms
need (sqrt, machine epsilon, overflow threshold, solver tolerance).  The
extended mode exists because the counterexample family spans a dynamic range
of epsilon * M^(2(N+2)), which exceeds binary64 for large N.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from typing import Callable

from mpmath import mp, mpf

# At least a 96-bit significand is required of the extended mode; 128 leaves
# headroom for the 1e-24 stationarity tolerance.  mpmath's precision is
# process-global; it is only ever raised here, never lowered.
EXTENDED_PREC = 128
if mp.prec < EXTENDED_PREC:
    mp.prec = EXTENDED_PREC


@dataclass(frozen=True)
class ScalarContext:
    """Arithmetic backend descriptor.

    huge is None when the exponent range is effectively unbounded (mpmath).
    """

    name: str
    convert: Callable = field(repr=False)
    sqrt: Callable = field(repr=False)
    eps: float
    huge: float | None
    stationarity_rtol: float

    def zero(self):
        return self.convert(0)

    def one(self):
        return self.convert(1)


def _to_float(v) -> float:
    if isinstance(v, str):
        return float(v)
    return float(v)


FLOAT64 = ScalarContext(
    name="f64",
    convert=_to_float,
    sqrt=math.sqrt,
    eps=sys.float_info.epsilon,
    huge=sys.float_info.max,
    stationarity_rtol=1e-12,
)

EXTENDED = ScalarContext(
    name="ext",
    convert=mpf,
    sqrt=mp.sqrt,
    eps=float(mpf(2) ** (1 - EXTENDED_PREC)),
    huge=None,
    stationarity_rtol=1e-24,
)

_BY_NAME = {"f64": FLOAT64, "ext": EXTENDED}


def get_context(name: str) -> ScalarContext:
    try:
        return _BY_NAME[name]
    except KeyError:
        raise ValueError(f"unknown scalar mode {name!r}; expected one of {sorted(_BY_NAME)}")
