"""Command-line entry point.

Every subcommand builds a list of rows (one dict per row, same keys for all
rows) and renders it as CSV (one ``#`` schema line, then data) or JSON.  Both
renderings carry the same formatted values.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import asdict
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Optional

from . import asymptotics, oracle, profile, sampler, series
from .series import Family, FamilySpec, Mark, TOTAL_LEAVES
from .terms import ParseError, render_debruijn, to_json

DOMAIN_ERRORS = (
    series.EmptySize, series.CapExceeded, series.InvalidMark,
    asymptotics.DegenerateBound, asymptotics.NoRootInRange, asymptotics.Unsupported,
    profile.NotBoundary, profile.LevelOutOfRange, ParseError,
)


class VerifyFailed(Exception):
    def __init__(self, mismatches: list):
        super().__init__(f"{len(mismatches)} mismatches between counting tables and enumeration")
        self.mismatches = mismatches


# ---------------------------------------------------------------------------
# formatting


def fmt_float(x: Optional[float]):
    if x is None:
        return None
    return float(f"{x:.10g}")


def fmt_decimal(q: Fraction) -> str:
    with localcontext() as ctx:
        ctx.prec = 15
        return str(Decimal(q.numerator) / Decimal(q.denominator))


def fmt_rational(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


def emit(rows: list[dict], columns: list[str], fmt: str, out=None, single: bool = False) -> None:
    out = out or sys.stdout
    if fmt == "json":
        payload = rows[0] if single else rows
        out.write(json.dumps(payload) + "\n")
        return
    out.write("# " + ",".join(columns) + "\n")
    writer = csv.writer(out, lineterminator="\n")
    for row in rows:
        writer.writerow([_csv_cell(row[c]) for c in columns])


# ---------------------------------------------------------------------------
# subcommands


def cmd_count(args) -> None:
    spec = args.spec
    if args.size is not None:
        rows = [{"n": args.size, "count": series.count_closed(spec, args.size)}]
    else:
        counts = series.count_row(spec, args.max_size)
        rows = [{"n": n, "count": c} for n, c in enumerate(counts) if c]
    emit(rows, ["n", "count"], args.format)


def cmd_moments(args) -> None:
    m = series.exact_moments(args.spec, args.mark, args.size)
    row = {
        "n": m.n, "count": m.count,
        "mean": fmt_rational(m.mean), "mean_decimal": fmt_decimal(m.mean),
        "variance": fmt_rational(m.variance), "variance_decimal": fmt_decimal(m.variance),
    }
    emit([row], list(row), args.format)


def cmd_dist(args) -> None:
    dist = series.distribution(args.spec, args.mark, args.size)
    emit([{"value": v, "count": c} for v, c in sorted(dist.items())], ["value", "count"], args.format)


def _report_row(report) -> dict:
    row = asdict(report)
    row["vanishing_indices"] = " ".join(map(str, report.vanishing_indices))
    constants = row.pop("constants")
    for key in ("u", "rho", "rho_prime", "rho_second", "B_prime_1", "sigma_sq"):
        row[key] = fmt_float(row[key])
    return row, constants


def cmd_singularity(args) -> None:
    system = asymptotics.RadicandSystem(args.spec, args.mark)
    report = asymptotics.singularity_report(system, args.u)
    if args.spec.family is Family.LEVELS and args.mark == TOTAL_LEAVES and not report.boundary:
        report.constants = asymptotics.expansion_constants(args.spec.k, report.rho)
    row, constants = _report_row(report)
    if args.format == "json":
        row["constants"] = {
            name: {str(i): fmt_float(v) for i, v in value.items()} if isinstance(value, dict) else fmt_float(value)
            for name, value in constants.items()
        }
        row["vanishing_indices"] = report.vanishing_indices
    emit([row], [c for c in row if c != "constants"], args.format, single=True)


def cmd_table1(args) -> None:
    rows = []
    for k in range(args.from_, args.to + 1):
        report = asymptotics.level_constants(k)
        rows.append({"k": k, "j_plus_1": report.j + 1,
                     "sigma_sq_expr": fmt_float(report.sigma_sq), "B_prime_1": fmt_float(report.B_prime_1)})
    emit(rows, ["k", "j_plus_1", "sigma_sq_expr", "B_prime_1"], args.format)


def cmd_profile(args) -> None:
    k = args.spec.k
    if args.emit_plot_data:
        sizes = args.sizes or sorted({max(2, args.size * f // 8) for f in (1, 2, 4, 8)})
        rows = [{"level": level, "kind": kind, "n": n, "mean": fmt_float(mean)}
                for level, kind, n, mean in profile.plot_data(k, sizes)]
        emit(rows, ["level", "kind", "n", "mean"], args.format)
        return
    report = profile.profile_report(k, args.size)
    columns = ["level", "kind", "n", "mean_numer", "mean_denom", "regime", "limit_constant"]
    rows = []
    for r in report.rows:
        rows.append({"level": r.level, "kind": r.kind, "n": r.n,
                     "mean_numer": r.mean.numerator, "mean_denom": r.mean.denominator,
                     "regime": r.regime, "limit_constant": fmt_float(r.limit_constant)})
    emit(rows, columns, args.format)


def cmd_sample(args) -> None:
    terms = sampler.sample_terms(args.spec, args.size, args.samples, args.seed, args.workers)
    if args.format == "json":
        sys.stdout.write(json.dumps([to_json(t) for t in terms]) + "\n")
        return
    sys.stdout.write("# term\n")
    for t in terms:
        sys.stdout.write(render_debruijn(t) + "\n")


def cmd_stats(args) -> None:
    stats = sampler.sample_batch_stats(args.spec, args.mark, args.size, args.samples, args.seed, args.workers)
    row = asdict(stats)
    for key in ("empirical_mean", "empirical_variance", "skewness", "excess_kurtosis", "exact_mean",
                "exact_skewness", "exact_excess_kurtosis"):
        row[key] = fmt_float(row[key])
    row["level_means"] = [[fmt_float(x) for x in r] for r in stats.level_means]
    if args.format == "csv":
        row["level_means"] = ";".join(" ".join(_csv_cell(x) for x in r) for r in row["level_means"])
    emit([row], list(row), args.format, single=True)


def verify(spec: FamilySpec, max_size: int) -> list:
    """Compare counts and every mark's histogram with brute-force enumeration up to ``max_size``."""
    marks = [TOTAL_LEAVES]
    if spec.family is Family.LEVELS:
        marks += [Mark(kind, level) for level in range(spec.k + 1) for kind in ("leaves", "unary", "binary")]
    if max_size > oracle.ORACLE_CAP:
        raise series.CapExceeded(f"oracle size {max_size} exceeds cap {oracle.ORACLE_CAP}")
    counts = series.count_row(spec, max_size)
    mismatches = []
    for n in range(1, max_size + 1):
        hists = oracle.oracle_histograms(spec, marks, n)
        found = sum(hists[TOTAL_LEAVES].values())
        if found != counts[n]:
            mismatches.append({"n": n, "mark": "none", "series": counts[n], "oracle": found})
        if not counts[n]:
            continue
        for mark in marks:
            dp = series.distribution(spec, mark, n)
            if dp != dict(hists[mark]):
                mismatches.append({"n": n, "mark": str(mark), "series": dp, "oracle": dict(hists[mark])})
    return mismatches


def cmd_verify(args) -> None:
    mismatches = verify(args.spec, args.max_size)
    if mismatches:
        raise VerifyFailed(mismatches)
    print("OK")


# ---------------------------------------------------------------------------
# parsing


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _mark(text: str) -> Mark:
    try:
        return Mark.parse(text)
    except series.InvalidMark as exc:
        raise argparse.ArgumentTypeError(str(exc))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="debruijn-census",
                                     description="Counting, statistics and sampling of bounded De Bruijn terms.")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--family", choices=[f.value for f in Family], default="index")
    common.add_argument("--bound", type=_positive, default=None)
    common.add_argument("--format", choices=["csv", "json"], default="csv")
    common.add_argument("--cache-dir", default=None)

    sized = argparse.ArgumentParser(add_help=False)
    sized.add_argument("--size", type=_positive)
    sized.add_argument("--max-size", type=_positive)

    marked = argparse.ArgumentParser(add_help=False)
    marked.add_argument("--mark", type=_mark, default=TOTAL_LEAVES,
                        help="total, leaves@L, unary@L or binary@L")

    sampled = argparse.ArgumentParser(add_help=False)
    sampled.add_argument("--seed", type=int, default=0)
    sampled.add_argument("--samples", type=_positive, default=1)
    sampled.add_argument("--workers", type=_positive, default=1)

    sub.add_parser("count", parents=[common, sized], help="number of closed terms per size")
    sub.add_parser("moments", parents=[common, sized, marked], help="exact mean and variance of a mark")
    sub.add_parser("dist", parents=[common, sized, marked], help="exact distribution of a mark")
    p = sub.add_parser("singularity", parents=[common, marked], help="dominant singularity report")
    p.add_argument("--u", type=float, default=1.0)
    p = sub.add_parser("table1", parents=[common], help="mean and variance constants for a range of level bounds")
    p.add_argument("--from", dest="from_", type=_positive, default=2)
    p.add_argument("--to", type=_positive, default=12)
    p = sub.add_parser("profile", parents=[common, sized], help="mean node counts per level")
    p.add_argument("--emit-plot-data", action="store_true")
    p.add_argument("--sizes", type=lambda s: [_positive(x) for x in s.split(",")], default=None)
    sub.add_parser("sample", parents=[common, sized, sampled], help="uniform random terms")
    sub.add_parser("stats", parents=[common, sized, marked, sampled], help="statistics over uniform samples")
    sub.add_parser("verify", parents=[common, sized], help="check counting tables against enumeration")
    return parser


_NEEDS_BOUND = {"count", "moments", "dist", "singularity", "profile", "sample", "stats", "verify"}
_NEEDS_SIZE = {"moments", "dist", "profile", "sample", "stats"}


def validate(parser: argparse.ArgumentParser, args) -> None:
    """Reject inconsistent flag combinations before any computation."""
    cmd = args.command
    if cmd in _NEEDS_BOUND and args.bound is None:
        parser.error(f"{cmd} requires --bound")
    if cmd == "table1":
        if args.from_ > args.to:
            parser.error("--from must not exceed --to")
        return
    args.spec = FamilySpec(Family(args.family), args.bound)
    if cmd == "profile" and args.spec.family is not Family.LEVELS:
        parser.error("profile requires --family levels")
    size, max_size = getattr(args, "size", None), getattr(args, "max_size", None)
    if cmd == "count":
        if (size is None) == (max_size is None):
            parser.error("count takes exactly one of --size or --max-size")
    elif cmd == "verify":
        if size is not None:
            parser.error("verify takes --max-size, not --size")
        if max_size is None:
            args.max_size = 10
    elif cmd in _NEEDS_SIZE:
        if max_size is not None:
            parser.error(f"{cmd} takes --size, not --max-size")
        if size is None:
            parser.error(f"{cmd} requires --size")
    if hasattr(args, "mark"):
        if cmd == "singularity" and args.mark.kind != "total":
            parser.error("singularity supports --mark total only")
        try:
            series.check_mark(args.spec, args.mark)
        except series.InvalidMark as exc:
            parser.error(str(exc))


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    validate(parser, args)
    if args.cache_dir:
        os.environ[series.CACHE_ENV] = args.cache_dir
    handler = globals()[f"cmd_{args.command}"]
    try:
        handler(args)
    except VerifyFailed as exc:
        sys.stderr.write(json.dumps({"error": "VerifyFailed", "message": str(exc),
                                     "mismatches": exc.mismatches[:20]}, default=str) + "\n")
        return 1
    except DOMAIN_ERRORS as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
