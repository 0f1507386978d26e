"""Command-line interface: ``sosnorm {build,eval,verify,expand,bench,constants}``.

Exit codes: 0 success, 1 validation failure, 2 sandwich violated,
3 solver non-convergence, 4 dimension cap or overflow.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import approximant as ap
from . import bodies, verify
from .errors import ConvergenceError, DimensionCapError, DimensionOverflowError

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_VIOLATION = 2
EXIT_SOLVER = 3
EXIT_CAP = 4


def parse_points_csv(path) -> list[tuple[float, ...]]:
    """Read one point per row.  A first row with no numeric field is a header."""
    points = []
    width = None
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            fields = [f.strip() for f in row]
            if not any(fields):
                continue
            try:
                values = tuple(float(f) for f in fields)
            except ValueError:
                if lineno == 1 and not any(_is_number(f) for f in fields):
                    continue
                bad = next(f for f in fields if not _is_number(f))
                raise ValueError(f"{path}: line {lineno}: non-numeric field {bad!r}") from None
            if width is None:
                width = len(values)
            elif len(values) != width:
                raise ValueError(f"{path}: line {lineno}: expected {width} columns, got {len(values)}")
            points.append(values)
    return points


def _is_number(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


def _body_from_args(args) -> bodies.BodySpec:
    if args.body_file:
        return bodies.BodySpec.from_dict(json.loads(Path(args.body_file).read_text(encoding="utf-8")))
    if args.body is None:
        raise ValueError("one of --body or --body-file is required")
    if args.d is None:
        raise ValueError(f"--d is required for --body {args.body}")
    if args.body == "l1":
        return bodies.make_l1(args.d)
    if args.body == "linf":
        return bodies.make_linf(args.d)
    if args.body == "lp":
        if args.p is None:
            raise ValueError("--p is required for --body lp")
        return bodies.make_lp_sampled(args.d, args.p, args.samples or 64 * args.d, seed=args.seed)
    k = args.k or 2 * args.d + 1
    return bodies.make_random_polytope(args.d, k, symmetric=not args.nonsymmetric, seed=args.seed)


def _write(path, text):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def cmd_build(args):
    spec = _body_from_args(args)
    appr = ap.build(spec, args.n, eps=args.eps, cap=args.cap, seed=args.seed)
    ap.save(appr, args.out)
    print(
        f"wrote {args.out}: d={appr.d} n={appr.n} N={appr.N} dim_D={appr.dim_D} "
        f"effective={appr.constant_effective:.6g} theorem={appr.constant_theorem:.6g}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_eval(args):
    appr = ap.load(args.input)
    pts = parse_points_csv(args.points)
    lines = ["p,r,lower,upper"]
    if pts:
        X = np.array(pts)
        p = ap.eval_p(appr, X)
        r = ap.eval_r(appr, X)
        lo, hi = ap.norm_bounds(appr, X)
        lines += [f"{a!r},{b!r},{c!r},{e!r}" for a, b, c, e in zip(p.tolist(), r.tolist(), lo.tolist(), hi.tolist())]
    _write(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_verify(args):
    appr = ap.load(args.input)
    spec = _body_from_args(args) if (args.body or args.body_file) else appr.body
    workers = 1 if args.single_thread else args.workers
    report = verify.check_sandwich(appr, spec, args.m, args.seed, workers=workers)
    checks = [verify.check_homogeneity(appr, min(args.m, 1000), args.seed)]
    for group in ("permutations", "signed-permutations"):
        checks.append(verify.check_invariance(appr, group, min(args.m, 1000), args.seed))
    doc = {"sandwich": report.to_dict(), "checks": [c.to_dict() for c in checks]}
    _write(args.out, json.dumps(doc, indent=1) + "\n")
    if args.csv:
        Path(args.csv).write_text(verify.reports_to_csv(report, checks), encoding="utf-8")
    print(
        f"samples={report.samples} violations={report.violations} "
        f"max_ratio={report.max_ratio:.9g} effective={report.constant_effective:.9g}",
        file=sys.stderr,
    )
    return EXIT_OK if report.passed else EXIT_VIOLATION


def cmd_expand(args):
    appr = ap.load(args.input)
    coeffs = ap.expand_monomials(appr, cap=args.expand_cap)
    header = ",".join(f"a{i + 1}" for i in range(appr.d)) + ",coefficient"
    rows = [",".join(map(str, alpha)) + f",{c!r}" for alpha, c in coeffs.items()]
    _write(args.out, "\n".join([header] + rows) + "\n")
    return EXIT_OK


def cmd_bench(args):
    appr = ap.load(args.input)
    block = verify.bench_eval(appr, appr.body, args.m, args.seed)
    keys = list(block)
    text = ",".join(keys) + "\n" + ",".join(str(block[k]) for k in keys) + "\n"
    _write(args.out, text)
    return EXIT_OK


def cmd_constants(args):
    info = verify.constant_asymptotics(args.n, args.d, gamma=args.gamma)
    for key, value in info.items():
        print(f"{key}: {value:.12g}" if isinstance(value, float) else f"{key}: {value}")
    return EXIT_OK


def _add_body_args(p):
    p.add_argument("--body", choices=["l1", "linf", "lp", "random"], help="built-in body")
    p.add_argument("--body-file", help="body JSON {d, kind, generators, label}")
    p.add_argument("--d", type=int, help="dimension for built-in bodies")
    p.add_argument("--p", type=float, help="exponent for --body lp")
    p.add_argument("--samples", type=int, help="polar sample count for --body lp (default 64 d)")
    p.add_argument("--k", type=int, help="generator count for --body random (default 2 d + 1)")
    p.add_argument("--nonsymmetric", action="store_true", help="random body without central symmetry")


class _Parser(argparse.ArgumentParser):
    # usage errors are validation failures; status 2 is reserved for violations
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sosnorm", description="Sum-of-squares polynomial approximation of polytope norms")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="build an approximant file")
    _add_body_args(p)
    p.add_argument("--n", type=int, required=True, help="odd degree parameter (p has degree 2n)")
    p.add_argument("--eps", type=float, default=ap.DEFAULT_EPS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cap", type=int, default=ap.DEFAULT_CAP, help="maximum binom(n+d-1, n)")
    p.add_argument("--out", default="approximant.json")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("eval", help="evaluate p, r and the bounds at points from a CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--points", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("verify", help="sandwich, homogeneity and invariance checks")
    p.add_argument("--input", required=True)
    _add_body_args(p)
    p.add_argument("--m", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--single-thread", action="store_true")
    p.add_argument("--out", help="report JSON (default stdout)")
    p.add_argument("--csv", help="also write the flat CSV report here")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("expand", help="monomial coefficients of p as CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--out")
    p.add_argument("--expand-cap", type=int, default=ap.EXPAND_CAP)
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser("bench", help="timing of eval_p against the exact norm")
    p.add_argument("--input", required=True)
    p.add_argument("--m", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("constants", help="theorem constant and its asymptotic forms")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--gamma", type=float)
    p.set_defaults(func=cmd_constants)
    return parser


def run(argv=None) -> int:
    """Parse ``argv`` and dispatch; returns the process exit status."""
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DimensionCapError, DimensionOverflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
