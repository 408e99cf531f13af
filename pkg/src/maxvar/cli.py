"""Command-line entry point.

Subcommands: eval, profile, variation, counterexample, sweep, mollify,
verify, plot.  Exit codes: 0 success, 1 verification failures, 2 usage or
input errors, 3 numeric errors (precision or solver).  The MAXVAR_SCALAR
environment variable overrides the default of --scalar.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from .counterexample import REPORT_HEADER, CounterexampleParams, run_experiment, sweep
from .errors import (
    InvalidExponent,
    InvalidParams,
    MaxvarError,
    PrecisionExceeded,
    SolverFailure,
)
from .formats import (
    PROFILE_HEADER,
    fmt_scalar,
    read_csv,
    read_signal_csv,
    write_csv,
    write_profile_csv,
    write_signal_csv,
)
from .harness import (
    IntervalSet,
    check_decay,
    check_low_speed,
    check_two_zeros_bound,
    find_second_derivative_zeros,
    partition_violations,
    radial_experiment,
    random_even_single_peak,
    random_interval_set,
    zero_partition,
)
from .maximal import GridSpec, evaluate, profile
from .mollify import MollifierConfig, resample
from .pwl import PwlFunction, hat
from .scalars import get_context
from .variation import (
    SampledSignal,
    q_variation,
    sup_variation,
    total_variation,
    weak_quasi_norm,
)
from .errors import NotApplicable


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="maxvar", description=__doc__)
    sub = ap.add_subparsers(dest="subcommand", required=True)

    def common(p, *names):
        if "fn" in names:
            p.add_argument("--fn", required=True, help="input file path")
        if "grid" in names:
            p.add_argument("--grid", type=int, default=64, help="points per decade")
        if "range" in names:
            p.add_argument("--range", dest="range_", default=None, help="A:B abscissa range")
        if "scalar" in names:
            p.add_argument(
                "--scalar",
                choices=("f64", "ext"),
                default=os.environ.get("MAXVAR_SCALAR", "f64"),
            )
        if "out" in names:
            p.add_argument("--out", required=True, help="output file path")
        if "threads" in names:
            p.add_argument("--threads", type=int, default=os.cpu_count() or 1)

    p = sub.add_parser("eval", help="evaluate a function file on a grid")
    common(p, "fn", "grid", "range", "scalar", "out")

    p = sub.add_parser("profile", help="maximal-function profile along a grid")
    common(p, "fn", "grid", "range", "scalar", "out", "threads")

    p = sub.add_parser("variation", help="variation functionals of a sampled signal")
    common(p, "fn", "scalar", "out")
    p.add_argument("--q", default="1", help="comma-separated exponents")

    p = sub.add_parser("counterexample", help="variation blow-up experiment")
    for flag, typ in (("--epsilon", str), ("--M", int), ("--N", int)):
        p.add_argument(flag, required=True, type=typ)
    p.add_argument("--q", default="1")
    common(p, "grid", "scalar", "out", "threads")

    p = sub.add_parser("sweep", help="batch of experiments (comma-separated params)")
    p.add_argument("--epsilon", required=True, help="comma-separated list")
    p.add_argument("--M", required=True, help="comma-separated list")
    p.add_argument("--N", required=True, help="comma-separated list")
    p.add_argument("--q", default="1")
    common(p, "grid", "scalar", "out")

    p = sub.add_parser("mollify", help="variable-bandwidth smoothing to a function file")
    common(p, "fn", "scalar", "out")
    p.add_argument("--n", type=int, required=True, help="smoothing index")

    p = sub.add_parser("verify", help="run a lemma-check suite")
    p.add_argument(
        "--suite",
        required=True,
        choices=("two-zeros", "decay", "partition", "radial", "low-speed"),
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--out", default=None)

    p = sub.add_parser("plot", help="static plots of a profile CSV")
    common(p, "fn", "out")
    return ap


def _parse_range(text, default):
    if text is None:
        return default
    lo, _, hi = text.partition(":")
    return float(lo), float(hi)


def _load_function(path, ctx) -> PwlFunction:
    try:
        return PwlFunction.load(path, ctx)
    except (OSError, KeyError, ValueError, json.JSONDecodeError) as exc:
        raise InvalidParams(f"cannot read function file {path}: {exc}")


def _profile_chunk(payload):
    data, ctx_name, xs = payload
    ctx = get_context(ctx_name)
    f = PwlFunction.from_json_dict(data, ctx)
    return [evaluate(f, x) for x in xs]


def _cmd_eval(args) -> int:
    ctx = get_context(args.scalar)
    f = _load_function(args.fn, ctx)
    lo, hi = _parse_range(args.range_, _default_range(f))
    xs = GridSpec(lo, hi, args.grid).points(ctx)
    write_csv(args.out, ("x", "value"), ((x, f(x)) for x in xs))
    return 0


def _default_range(f) -> tuple:
    mags = [abs(float(b)) for b in f.breakpoints if b != 0]
    scale = max(mags) if mags else 1.0
    return scale * 1e-3, scale * 1e3


def _cmd_profile(args) -> int:
    ctx = get_context(args.scalar)
    f = _load_function(args.fn, ctx)
    lo, hi = _parse_range(args.range_, _default_range(f))
    xs = GridSpec(lo, hi, args.grid).points(ctx)
    threads = max(1, args.threads)
    if threads == 1 or len(xs) < 4 * threads:
        evals = profile(f, xs, refine_contacts=True)
    else:
        data = f.to_json_dict()
        chunks = [xs[i::threads] for i in range(threads)]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_profile_chunk, [(data, ctx.name, c) for c in chunks]))
        base = [r for part in parts for r in part]
        base.sort(key=lambda r: r.x)
        evals = profile(f, [r.x for r in base], refine_contacts=True)
    write_profile_csv(args.out, evals)
    return 0


def _cmd_variation(args) -> int:
    ctx = get_context(args.scalar)
    xs, vals, widths = read_signal_csv(args.fn, ctx)
    sig = SampledSignal(tuple(xs), tuple(vals))
    rows = [("total", "", total_variation(sig)), ("sup", "", sup_variation(sig))]
    for q in _parse_q(args.q):
        rows.append(("q", q, q_variation(sig, q)))
    if widths is not None:
        rows.append(("weak_quasi_norm", "", weak_quasi_norm([abs(v) for v in vals], widths)))
    write_csv(args.out, ("kind", "q", "value"), rows)
    return 0


def _parse_q(text) -> list:
    return [float(t) for t in str(text).split(",") if t.strip()]


def _cmd_counterexample(args) -> int:
    p = CounterexampleParams(args.epsilon, args.M, args.N, args.scalar)
    reports = run_experiment(p, _parse_q(args.q), points_per_decade=args.grid)
    write_csv(args.out, REPORT_HEADER, (r.row() for r in reports))
    return 0


def _cmd_sweep(args) -> int:
    eps_list = [t for t in args.epsilon.split(",") if t]
    m_list = [int(t) for t in args.M.split(",") if t]
    n_list = [int(t) for t in args.N.split(",") if t]
    if not len(eps_list) == len(m_list) == len(n_list):
        raise InvalidParams("--epsilon, --M, --N lists must have equal length")
    params = [
        CounterexampleParams(e, m, n, args.scalar)
        for e, m, n in zip(eps_list, m_list, n_list)
    ]
    sweep(params, _parse_q(args.q), args.out, points_per_decade=args.grid)
    return 0


def _cmd_mollify(args) -> int:
    ctx = get_context(args.scalar)
    f = _load_function(args.fn, ctx)
    fn = resample(f, MollifierConfig(args.n))
    fn.save(args.out)
    return 0


def _cmd_verify(args) -> int:
    seed, count = args.seed, args.count
    checks = []

    if args.suite == "two-zeros":
        import numpy as np

        rng = np.random.Generator(np.random.Philox(key=seed))
        applicable = 0
        while applicable < count:
            u0, u1, v0, v1 = (float(v) for v in rng.uniform(1e-9, 10.0, size=4))
            try:
                ok = check_two_zeros_bound(u0, u1, v0, v1, 5.0)
            except NotApplicable:
                continue
            applicable += 1
            if not ok:
                checks.append({"check": "two-zeros", "pass": False, "witness": [u0, u1, v0, v1]})
        checks.append({"check": "two-zeros", "pass": True, "applicable": applicable})
    elif args.suite == "partition":
        for i in range(count):
            z = random_interval_set(seed, i)
            pts = zero_partition(z)
            bad = partition_violations(z, pts)
            if bad:
                checks.append(
                    {"check": f"partition[{i}]", "pass": False, "witness": bad}
                )
        checks.append({"check": "partition", "pass": True, "count": count})
    elif args.suite == "decay":
        fns = [hat(1, 1), hat(1, 100), hat(0.01, 1)]
        fns += [random_even_single_peak(seed, i) for i in range(max(1, count // 25))]
        bad = 0
        for f in fns:
            pos = sorted(abs(float(b)) for b in f.breakpoints if b != 0) or [1.0]
            pairs = [(pos[0] / 3, pos[-1]), (pos[0], pos[-1] * 3), (pos[0] / 2, pos[0] * 2)]
            for x0, x1 in pairs:
                if not check_decay(f, x0, x1):
                    bad += 1
                    checks.append({"check": "decay", "pass": False, "witness": [x0, x1]})
        checks.append({"check": "decay", "pass": bad == 0, "functions": len(fns)})
    elif args.suite == "radial":
        rep = radial_experiment(seed, count)
        ok = rep.max_ratio <= 20.0 and rep.restricted_violations == 0
        checks.append(
            {
                "check": "radial",
                "pass": ok,
                "max_ratio": rep.max_ratio,
                "mean_ratio": rep.mean_ratio,
                "restricted_violations": rep.restricted_violations,
            }
        )
    elif args.suite == "low-speed":
        tried = 0
        bad = 0
        i = 0
        while tried < count and i < 4 * count + 16:
            f = random_even_single_peak(seed, i)
            i += 1
            pos = sorted(abs(float(b)) for b in f.breakpoints if b != 0)
            scan = find_second_derivative_zeros(f, pos[0] / 10, pos[-1] * 10, 32)
            zs = [l for l, _ in scan.zeros.intervals]
            if scan.identically_zero or len(zs) < 2:
                continue
            for z0, z1 in zip(zs, zs[1:]):
                if tried >= count:
                    break
                try:
                    ok = check_low_speed(f, z0, z1)
                except NotApplicable:
                    continue
                tried += 1
                if not ok:
                    bad += 1
                    checks.append(
                        {"check": "low-speed", "pass": False, "witness": [float(z0), float(z1)]}
                    )
        checks.append({"check": "low-speed", "pass": bad == 0, "pairs": tried})

    passed = all(c["pass"] for c in checks)
    report = {
        "suite": args.suite,
        "seed": seed,
        "count": count,
        "passed": passed,
        "checks": checks,
    }
    text = json.dumps(report, indent=1, sort_keys=True)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0 if passed else 1


def _cmd_plot(args) -> int:
    header, rows = read_csv(args.fn)
    if list(header) != list(PROFILE_HEADER) or not rows:
        raise InvalidParams(f"{args.fn} is not a non-empty profile CSV")
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    xs, mfs, dmfs, ddmfs = [], [], [], []
    for row in rows:
        x = float(row[0])
        if x <= 0:
            continue
        xs.append(x)
        mfs.append(float(row[1]))
        dmfs.append(float(row[3]))
        ddmfs.append(float(row[5]) if row[5] else None)
    fig, axes = plt.subplots(3, 1, sharex=True, figsize=(8, 9))
    axes[0].plot(xs, mfs, lw=0.8)
    axes[0].set_ylabel("M f")
    axes[1].plot(xs, dmfs, lw=0.8)
    axes[1].set_ylabel("(M f)'")
    pts = [(x, v) for x, v in zip(xs, ddmfs) if v is not None]
    if pts:
        axes[2].plot([p[0] for p in pts], [p[1] for p in pts], lw=0.8)
    axes[2].set_ylabel("(M f)''")
    axes[2].set_xlabel("x")
    axes[2].set_xscale("log")
    fig.tight_layout()
    fig.savefig(args.out, dpi=120)
    plt.close(fig)
    return 0


_COMMANDS = {
    "eval": _cmd_eval,
    "profile": _cmd_profile,
    "variation": _cmd_variation,
    "counterexample": _cmd_counterexample,
    "sweep": _cmd_sweep,
    "mollify": _cmd_mollify,
    "verify": _cmd_verify,
    "plot": _cmd_plot,
}


def dispatch(argv=None) -> int:
    ap = _build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.subcommand](args)
    except (InvalidParams, InvalidExponent) as exc:
        print(f"maxvar: {exc}", file=sys.stderr)
        return 2
    except (PrecisionExceeded, SolverFailure) as exc:
        print(f"maxvar: {exc}", file=sys.stderr)
        return 3
    except MaxvarError as exc:
        print(f"maxvar: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"maxvar: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
