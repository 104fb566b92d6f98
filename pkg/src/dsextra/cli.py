"""Command line interface.

Subcommands map onto the library one-to-one; every command prints a
short deterministic report and optionally writes CSV via --out.
Exit codes: 0 success, 2 config/usage error, 3 precision-guard abort,
4 cap exceeded.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction

from .arith import factor_totient
from .errors import (
    CapExceededError,
    ConfigError,
    DomainError,
    DsextraError,
    PrecisionGuardError,
    UndefinedRatioError,
)
from .harness import (
    BC_CAP,
    PAIR_CAP_EXACT,
    PAIR_CAP_SAMPLED,
    borel_cantelli_ratio,
    divergence_table,
    load_config,
    run_experiment,
    sample_pairs,
    table_csv_row,
    write_csv,
    TABLE_COLUMNS,
)
from .overlap import (
    CSV_COLUMNS,
    averaged_sum,
    averaging_reference,
    decompose_pair,
    overlap_record,
)
from .psi import make_psi, normalize_psi
from .schedule import block_bounds, select_scale
from .harness import _frac_str as frac_str  # single rational formatting


def _parse_fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as e:
        raise argparse.ArgumentTypeError(str(e))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", metavar="PATH", help="write CSV here")
    common.add_argument(
        "--jobs", type=int, default=1, metavar="W", help="worker processes"
    )
    common.add_argument(
        "--precision", type=int, default=128, metavar="BITS",
        help="working precision for certified logs",
    )

    parser = argparse.ArgumentParser(
        prog="dsextra",
        description=(
            "Exact-arithmetic experiments on coprime approximation arcs: "
            "overlap ratios, sieve bounds, block scale selection, and "
            "Borel-Cantelli lower bounds."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phi", parents=[common], help="factor N and print phi(N)")
    p.add_argument("N", type=int)
    p.set_defaults(func=cmd_phi)

    p = sub.add_parser(
        "pair", parents=[common], help="prime-exponent decomposition of (M, N)"
    )
    p.add_argument("M", type=int)
    p.add_argument("N", type=int)
    p.add_argument("--psi", default="half", metavar="GEN")
    p.set_defaults(func=cmd_pair)

    p = sub.add_parser(
        "overlap", parents=[common],
        help="overlap ratio, product bound, and integral bound at scale k",
    )
    p.add_argument("M", type=int)
    p.add_argument("N", type=int)
    p.add_argument("--k", type=int, default=0)
    p.add_argument("--psi", default="half", metavar="GEN")
    p.set_defaults(func=cmd_overlap)

    p = sub.add_parser(
        "avgsum", parents=[common],
        help="scale-averaged overlap sum over k = 1..K",
    )
    p.add_argument("M", type=int)
    p.add_argument("N", type=int)
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--psi", default="half", metavar="GEN")
    p.set_defaults(func=cmd_avgsum)

    p = sub.add_parser(
        "block", parents=[common], help="scale selection on one block"
    )
    p.add_argument("--h", type=int, required=True)
    p.add_argument("--base", type=int, default=4)
    p.add_argument("--eps", type=_parse_fraction, required=True)
    p.add_argument("--sample", type=int, help="sampled pair count (big blocks)")
    p.add_argument("--seed", type=int, help="sampling seed")
    p.add_argument("--psi", default="half", metavar="GEN")
    p.set_defaults(func=cmd_block)

    p = sub.add_parser(
        "bc", parents=[common], help="Borel-Cantelli second-moment ratio"
    )
    p.add_argument("--psi", default="half", metavar="GEN")
    p.add_argument("--N", type=int, required=True)
    p.set_defaults(func=cmd_bc)

    p = sub.add_parser(
        "table", parents=[common], help="divergence series comparison table"
    )
    p.add_argument("--eps", type=_parse_fraction, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--psi", default="half", metavar="GEN")
    p.add_argument("--hpv-c", type=_parse_fraction, default=Fraction(1))
    p.set_defaults(func=cmd_table)

    p = sub.add_parser(
        "run", parents=[common], help="execute a JSON experiment config"
    )
    p.add_argument("CONFIG")
    p.set_defaults(func=cmd_run)

    return parser


def cmd_phi(args) -> int:
    if args.N < 1:
        raise DomainError("N must be >= 1")
    f, phi = factor_totient(args.N)
    if f.factors:
        text = " * ".join(
            f"{p}^{e}" if e > 1 else str(p) for p, e in f.factors
        )
    else:
        text = "1"
    print(f"{args.N} = {text}")
    print(f"phi({args.N}) = {phi}")
    return 0


def _normalized_psi(spec: str, n_max: int):
    return normalize_psi(make_psi(spec, n_max))


def cmd_pair(args) -> int:
    psi = _normalized_psi(args.psi, max(args.M, args.N))
    dec = decompose_pair(args.M, args.N, psi)
    print(f"pair ({dec.m}, {dec.n})  gcd = {dec.gcd}")
    print(f"r = {dec.r}  s = {dec.s}  t = {dec.t}   (m*n = r^2*s*t)")
    print(f"delta = {dec.delta}  Delta = {dec.Delta}")
    if args.out:
        rec = overlap_record(
            args.M, args.N, psi, 0, 0, args.precision, with_integral=True
        )
        write_csv(args.out, CSV_COLUMNS, [rec.csv_row()])
        print(f"wrote {args.out}")
    return 0


def cmd_overlap(args) -> int:
    if args.k < 0:
        raise DomainError("k must be >= 0")
    psi = _normalized_psi(args.psi, max(args.M, args.N))
    rec = overlap_record(
        args.M, args.N, psi, args.k, args.k, args.precision, with_integral=True
    )
    print(f"pair ({rec.m}, {rec.n})  k = {rec.k}  [{rec.threshold_class}]")
    print(f"cutoff D_k = {rec.cutoff}")
    print(f"product bound = {rec.pv_product}")
    print(f"P exact = {rec.p_exact}")
    assert rec.integral is not None
    print(f"integral bound = {rec.integral}")
    print(f"disjoint predicted = {'yes' if rec.disjoint_pred else 'no'}")
    if args.out:
        write_csv(args.out, CSV_COLUMNS, [rec.csv_row()])
        print(f"wrote {args.out}")
    return 0


def cmd_avgsum(args) -> int:
    if args.K < 1:
        raise DomainError("K must be >= 1")
    psi = _normalized_psi(args.psi, max(args.M, args.N))
    total, records, reference = averaged_sum(
        args.M, args.N, psi, args.K, args.precision, with_integral=True
    )
    for rec in records:
        print(
            f"k = {rec.k}: P = {rec.p_exact}  bound = {rec.pv_product}  "
            f"[{rec.threshold_class}]"
        )
    print(f"total = {total}  mean = {total / args.K}")
    print(f"reference ln(K)*ln(ln(n)) = {reference}")
    if args.out:
        write_csv(args.out, CSV_COLUMNS, [rec.csv_row() for rec in records])
        print(f"wrote {args.out}")
    return 0


def cmd_block(args) -> int:
    lo, hi = block_bounds(args.h, args.base)
    psi = _normalized_psi(args.psi, min(hi - 1, PAIR_CAP_SAMPLED))
    if hi - 1 <= PAIR_CAP_EXACT:
        pairs = [(m, n) for m in range(lo, hi) for n in range(m + 1, hi)]
        seed = None
    else:
        if args.sample is None or args.seed is None:
            raise ConfigError(
                f"block [{lo}, {hi}) is too large for exhaustive pairs; "
                f"pass --sample and --seed"
            )
        if lo >= PAIR_CAP_SAMPLED:
            raise CapExceededError(
                f"block starts at {lo}, beyond the sampled cap {PAIR_CAP_SAMPLED}"
            )
        pairs = sample_pairs(
            lo, min(hi, PAIR_CAP_SAMPLED + 1), args.sample, args.seed
        )
        seed = args.seed
    report = select_scale(
        args.h, psi, args.eps, pairs, args.base, args.precision, seed=seed
    )
    print(
        f"block h = {report.h} base = {report.base} range [{report.lo}, {report.hi})"
        f"  pairs = {report.pair_count}  K = {report.scale_count}"
    )
    for k, s1, s2 in report.per_k_sums:
        ratio = frac_str(s1 / s2) if s2 else "-"
        print(f"k = {k}: weighted = {frac_str(s1)}  ratio = {ratio}")
    print(f"chosen k = {report.chosen_k}")
    if args.out:
        rows = [
            [
                str(report.h), str(report.base), str(report.lo), str(report.hi),
                frac_str(report.epsilon), str(report.scale_count), str(k),
                frac_str(s1), frac_str(s2),
                frac_str(s1 / s2) if s2 else "",
                str(report.chosen_k),
            ]
            for k, s1, s2 in report.per_k_sums
        ]
        write_csv(
            args.out,
            ("h", "base", "lo", "hi", "epsilon", "K", "k",
             "weighted_intersections", "measure_products", "ratio", "chosen_k"),
            rows,
        )
        print(f"wrote {args.out}")
    return 0


def cmd_bc(args) -> int:
    if args.N < 1:
        raise DomainError("N must be >= 1")
    if args.N > BC_CAP:
        raise CapExceededError(
            f"bc series limited to N <= {BC_CAP} (harness.BC_CAP); "
            f"use a run config with max_n to go beyond"
        )
    psi = _normalized_psi(args.psi, args.N)
    ratio, rows = borel_cantelli_ratio(psi, args.N)
    n, ms, sm, _ = rows[-1]
    print(f"N = {n}  measure sum = {ms}  second moment = {sm}")
    print(f"ratio = {ratio} ({float(ratio):.6f})")
    if args.out:
        write_csv(
            args.out,
            ("n", "measure_sum", "second_moment", "ratio"),
            [
                [
                    str(n), frac_str(ms), frac_str(sm),
                    frac_str(rt) if rt is not None else "",
                ]
                for n, ms, sm, rt in rows
            ],
        )
        print(f"wrote {args.out}")
    return 0


def cmd_table(args) -> int:
    psi = make_psi(args.psi, args.N)  # divergence series uses psi as given
    rows = divergence_table(
        args.eps, args.N, psi, args.precision, args.hpv_c
    )
    for row in rows:
        print(
            f"N = {row.n}: plain = {float(row.plain):.6f}  "
            f"damped = {float(row.damped.value):.6f}  "
            f"hpv = {float(row.hpv.value):.6f}  "
            f"bhhv = {float(row.bhhv.value):.6f}"
        )
    if args.out:
        write_csv(args.out, TABLE_COLUMNS, [table_csv_row(r) for r in rows])
        print(f"wrote {args.out}")
    return 0


def _print_summary(summary: dict, indent: str = ""):
    for key, value in summary.items():
        if isinstance(value, dict):
            print(f"{indent}{key}:")
            _print_summary(value, indent + "  ")
        elif isinstance(value, Fraction):
            print(f"{indent}{key} = {value} ({float(value):.6g})")
        elif (
            isinstance(value, tuple)
            and value
            and all(isinstance(x, Fraction) or x is None for x in value)
        ):
            parts = [
                f"{float(x):.6g}" if x is not None else "-" for x in value
            ]
            print(f"{indent}{key} = [{', '.join(parts)}]")
        else:
            print(f"{indent}{key} = {value}")


def cmd_run(args) -> int:
    cfg = load_config(args.CONFIG)
    overrides = {}
    if args.out:
        overrides["out"] = args.out
    if args.jobs != 1:
        overrides["jobs"] = args.jobs
    if args.precision != 128:
        overrides["precision"] = args.precision
    if overrides:
        from dataclasses import replace

        cfg = replace(cfg, **overrides)
    result = run_experiment(cfg)
    _print_summary(result.summary)
    for path in result.csv_paths:
        print(f"wrote {path}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PrecisionGuardError as e:
        print(f"precision guard: {e}", file=sys.stderr)
        return 3
    except CapExceededError as e:
        print(f"cap exceeded: {e}", file=sys.stderr)
        return 4
    except (ConfigError, DomainError, UndefinedRatioError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except DsextraError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
