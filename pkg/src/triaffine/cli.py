"""Command-line front end.

Subcommands: ``dim``, ``estimate``, ``sample``, ``check`` and ``sweep``.
Exit codes: 0 ok, 2 invalid input, 3 no theorem applies, 4 guard exceeded.
Payloads are deterministic: JSON is written with sorted keys and CSV floats
use ``repr``, so identical flags give identical bytes at any ``--threads``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict
from typing import Sequence

import numpy as np

from triaffine.dimension import DomainError, affinity_dimension, phase_transition_profile, theorem_dimension
from triaffine.estimate import (
    EstimationError,
    PointCloud,
    box_dimension,
    chaos_game,
    correlation_dimension,
    dyadic_scales,
    lq_density_diagnostics,
    read_cloud_binary,
    slice_dimension,
    write_cloud_binary,
    write_cloud_csv,
)
from triaffine.ifs_model import AffineIFS, SystemSyntaxError, ValidationError, load_system
from triaffine.projective import KINDS, DominationError, ScalarIFS, derive_scalar_ifs
from triaffine.registry import REGISTRY, get_example
from triaffine.separation import (
    GuardExceeded,
    count_intersecting_pairs,
    delta_n_exact,
    delta_n_symbolic_ifs,
    ssp_certificate,
)

EXIT_OK, EXIT_INVALID, EXIT_NO_THEOREM, EXIT_GUARD = 0, 2, 3, 4

DEFAULT_SCALES = "4:10"
DEFAULT_STRIP = 2.0**-10


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------------------
# argument helpers


def _scales(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(t) for t in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected k_min:k_max, got {text!r}") from None
    if lo < 0 or hi - lo < 3:
        raise argparse.ArgumentTypeError("need 0 <= k_min and at least 4 scales")
    return lo, hi


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _add_system(p: argparse.ArgumentParser, required: bool = True) -> None:
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--system", help="path to a JSON system document")
    g.add_argument("--example", choices=sorted(REGISTRY), help="registered example instance")


def _system(args) -> AffineIFS:
    if args.system:
        return load_system(args.system)
    return get_example(args.example)


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=True) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# commands


def cmd_dim(args) -> int:
    system = _system(args)
    aff = affinity_dimension(system)
    verdict = theorem_dimension(system)
    report = {"label": system.label, "N": system.N, "affinity": asdict(aff), "verdict": verdict.as_dict()}
    _emit(_dumps(report), args.out)
    return EXIT_OK if verdict.applies else EXIT_NO_THEOREM


def _cloud(args) -> PointCloud:
    if args.cloud:
        return read_cloud_binary(args.cloud, seed=args.seed)
    if args.points < 1:
        raise EstimationError("--points must be >= 1")
    return chaos_game(_system(args), args.points, seed=args.seed, burn_in=args.burn_in, threads=args.threads)


def cmd_estimate(args) -> int:
    if not args.cloud and not (args.system or args.example):
        raise UsageError("estimate needs --system, --example or --cloud")
    cloud = _cloud(args)
    if len(cloud) == 0:
        raise EstimationError("empty point cloud")
    if args.method == "lq":
        d = lq_density_diagnostics(cloud, args.q, args.bins)
        _emit(_dumps(asdict(d)), args.out)
        return EXIT_OK
    sc = dyadic_scales(*args.scales)
    if args.method == "box":
        rep = box_dimension(cloud, sc)
    elif args.method == "corr":
        rep = correlation_dimension(cloud, sc)
    else:
        rep = slice_dimension(cloud, args.strip_width, sc)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["scale", "statistic", "log_scale", "log_statistic"])
    for row in rep.csv_rows():
        w.writerow([repr(float(x)) for x in row])
    summary = (f"# method={rep.method} estimate={rep.estimate!r} slope_stderr={rep.slope_stderr!r} "
               f"r_squared={rep.r_squared!r} points={len(cloud)} seed={cloud.seed}\n")
    if args.out:
        _emit(buf.getvalue(), args.out)
        sys.stdout.write(summary)
    else:
        sys.stdout.write(buf.getvalue() + summary)
    return EXIT_OK


def cmd_sample(args) -> int:
    if args.points < 1:
        raise EstimationError("--points must be >= 1")
    cloud = chaos_game(_system(args), args.points, seed=args.seed, burn_in=args.burn_in, threads=args.threads)
    if args.out.endswith(".csv"):
        write_cloud_csv(cloud, args.out)
    else:
        write_cloud_binary(cloud, args.out)
    return EXIT_OK


def _delta(args) -> str:
    if args.scalar:
        s = ScalarIFS.parse(args.scalar)
    elif args.system or args.example:
        s = derive_scalar_ifs(_system(args), args.projection)
    else:
        raise UsageError("delta needs --scalar, --system or --example")
    if s.is_exact:
        value = delta_n_exact(s, args.n)
        return ("inf" if value == math.inf else str(value)) + "\n"
    return _dumps(delta_n_symbolic_ifs(s, args.n).as_dict())


def cmd_check(args) -> int:
    if args.kind == "delta":
        _emit(_delta(args), args.out)
        return EXIT_OK
    if not (args.system or args.example):
        raise UsageError(f"check --kind {args.kind} needs --system or --example")
    system = _system(args)
    if args.kind == "ssp":
        res = ssp_certificate(system, args.max_level, args.eps)
        report = {"found": res.found, "log": [[n, m] for n, m in res.log]}
        if res.found:
            report.update(level=res.level, margin=res.margin, eps=res.box[0], z_interval=list(res.box[1]))
        else:
            report.update(max_level=res.max_level, reason=res.reason)
    else:
        rep = count_intersecting_pairs(system, args.level, args.L)
        report = rep.as_dict()
        report["N"] = system.N
        report["bound"] = math.log(system.N**2 * system.c**2)
        report["even"] = rep.count % 2 == 0
    _emit(_dumps(report), args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    b_max = args.c / 2 if args.b_max is None else args.b_max
    if not 0 < args.b_min <= b_max:
        raise DomainError("need 0 < b_min <= b_max")
    grid = [args.b_min] if args.steps == 1 else np.linspace(args.b_min, b_max, args.steps).tolist()
    prof = phase_transition_profile(args.c, grid)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["b", "dim", "breakpoint"])
    for b, d in prof.points:
        w.writerow([repr(b), repr(d), repr(prof.breakpoint)])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="triaffine", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("dim", help="affinity dimension and theorem verdict (JSON)")
    _add_system(d)
    d.add_argument("--out")
    d.set_defaults(func=cmd_dim)

    def sampling(q, out_required=False):
        q.add_argument("--points", type=int, default=10**6)
        q.add_argument("--seed", type=int, default=0)
        q.add_argument("--burn-in", type=int, default=64)
        q.add_argument("--threads", type=_positive_int, default=1)
        q.add_argument("--out", required=out_required)

    e = sub.add_parser("estimate", help="dimension estimate from a chaos-game cloud (CSV)")
    _add_system(e, required=False)
    e.add_argument("--cloud", help="read points from a binary cloud file instead of sampling")
    e.add_argument("--method", choices=["box", "corr", "slice", "lq"], default="box")
    e.add_argument("--scales", type=_scales, default=_scales(DEFAULT_SCALES), help="k_min:k_max for r = 2^-k")
    e.add_argument("--strip-width", type=float, default=DEFAULT_STRIP)
    e.add_argument("--q", type=float, default=2.0)
    e.add_argument("--bins", type=int, default=1024)
    sampling(e)
    e.set_defaults(func=cmd_estimate)

    s = sub.add_parser("sample", help="write a chaos-game cloud (.csv or binary)")
    _add_system(s)
    sampling(s, out_required=True)
    s.set_defaults(func=cmd_sample)

    c = sub.add_parser("check", help="separation evidence: ssp, delta or pairs")
    _add_system(c, required=False)
    c.add_argument("--kind", choices=["ssp", "delta", "pairs"], required=True)
    c.add_argument("--scalar", help='scalar IFS as "ratio:offset,...", e.g. "1/2:0,1/2:1"')
    c.add_argument("--projection", choices=KINDS, default="H")
    c.add_argument("--n", type=_positive_int, default=5)
    c.add_argument("--max-level", type=_positive_int, default=8)
    c.add_argument("--eps", type=float, default=0.0)
    c.add_argument("--level", type=_positive_int, default=10)
    c.add_argument("--L", type=float, default=1.0)
    c.add_argument("--threads", type=_positive_int, default=1)
    c.add_argument("--out")
    c.set_defaults(func=cmd_check)

    w = sub.add_parser("sweep", help="phase-transition profile for the three-map family (CSV)")
    w.add_argument("--c", type=float, required=True)
    w.add_argument("--b-min", type=float, default=0.05)
    w.add_argument("--b-max", type=float)
    w.add_argument("--steps", type=_positive_int, default=50)
    w.add_argument("--out")
    w.set_defaults(func=cmd_sweep)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except GuardExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except ValidationError as exc:
        print("error: invalid system", file=sys.stderr)
        for v in exc.violations:
            print(f"  - {v}", file=sys.stderr)
        return EXIT_INVALID
    except (SystemSyntaxError, EstimationError, DomainError, DominationError, UsageError,
            ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
