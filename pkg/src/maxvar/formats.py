"""Scalar formatting and CSV emission shared by the CLI and the modules.

All floating output uses shortest round-trip decimal formatting (repr for
binary64, 42 significant digits for the extended scalar), so identical
inputs produce byte-identical files.
"""

from __future__ import annotations

import csv
from typing import Iterable, Optional, Sequence

from mpmath import mp, mpf

from .maximal import MaximalEvaluation
from .scalars import ScalarContext

PROFILE_HEADER = (
    "x",
    "mf",
    "a",
    "dmf",
    "da",
    "ddmf",
    "luiro_residual",
    "stationarity_residual",
)


def fmt_scalar(v) -> str:
    if v is None:
        return ""
    if isinstance(v, mpf):
        return mp.nstr(v, 42, strip_zeros=True)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def parse_scalar(text: str, ctx: ScalarContext):
    text = text.strip()
    if not text:
        return None
    return ctx.convert(text)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt_scalar(v) for v in row])


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows:
        return [], []
    return rows[0], rows[1:]


def profile_rows(evals: Iterable[MaximalEvaluation]):
    for r in evals:
        yield (r.x, r.mf, r.a, r.dmf, r.da, r.ddmf, r.luiro_residual, r.stationarity_residual)


def write_profile_csv(path, evals) -> None:
    write_csv(path, PROFILE_HEADER, profile_rows(evals))


def read_signal_csv(path, ctx: ScalarContext):
    """CSV with columns x,value -> (abscissae, values); a third `width`
    column, when present, is returned as well (weak quasi-norm input)."""
    header, rows = read_csv(path)
    if header[:2] != ["x", "value"]:
        raise ValueError(f"expected columns x,value[,width], got {header}")
    has_width = len(header) > 2 and header[2] == "width"
    xs, vals, widths = [], [], []
    for row in rows:
        xs.append(parse_scalar(row[0], ctx))
        vals.append(parse_scalar(row[1], ctx))
        if has_width:
            widths.append(parse_scalar(row[2], ctx))
    return xs, vals, (widths if has_width else None)


def write_signal_csv(path, xs, values, widths: Optional[Sequence] = None) -> None:
    if widths is None:
        write_csv(path, ("x", "value"), zip(xs, values))
    else:
        write_csv(path, ("x", "value", "width"), zip(xs, values, widths))
