#!/usr/bin/env python3
"""
Command-line front end: build finite and infinite Sidon sets, verify set
files, and run the alpha-grid experiments.

Exit codes: 0 ok, 1 verification failure, 2 input error, 3 precision cap.
"""

import argparse
import logging
import math
import os
import sys

from models.alpha_lab import (
    CSV_COLUMNS,
    AlphaGrid,
    congruence_measure,
    congruence_pairs,
    convergence_report,
    rows_to_frame,
    sector_bound_check,
    summarize,
    sweep,
)
from models.finite_constructions import METHODS, build, theoretical_size
from models.infinite_construction import (
    SLOPE_TARGET,
    ConstructionParams,
    build_sidon_set,
    counting,
    k_index,
    size_exponent_bounds,
    slope_report,
)
from models.verifier import check_sidon, check_sidon_exact
from utils.config import CONGRUENCE_CEILING, DEFAULT_K_MAX, K_MIN, NO_VERIFY_K_MAX, get_data_dir
from utils.errors import (
    InvalidParameter,
    PrecisionCapExceeded,
    RangeEmpty,
    ResolutionTooCoarse,
    SetFileError,
    SidonError,
)
from utils.gaussian import phi_of, two_squares
from utils.manifest import RunManifest, write_manifest
from utils.setfile import read_set, write_set

EXIT_OK = 0
EXIT_NOT_SIDON = 1
EXIT_INPUT = 2
EXIT_PRECISION = 3

logger = logging.getLogger("sidon")


def _default_out(name):
    return os.path.join(get_data_dir(), name)


def _params_from(args):
    return ConstructionParams.default(
        alpha_num=args.alpha_num,
        alpha_bits=args.alpha_bits,
        k_max=args.k_max,
        precision_cap=args.precision_cap,
    )


def cmd_gen_finite(args):
    manifest = RunManifest(command=args.argv, params={"method": args.method, "n": args.n})
    with manifest.timed("construct"):
        result = build(args.method, args.n)
    with manifest.timed("verify"):
        report = check_sidon(result.elements)
    if not report.ok:
        print(f"❌ {args.method} construction is not Sidon: {report.describe()}")
        return EXIT_NOT_SIDON

    out = args.out or _default_out(f"{args.method}_{args.n}.txt")
    write_set(out, result.elements, args.method, result.params())
    manifest.counts = {"elements": len(result)}
    manifest.params["provenance"] = list(result.provenance or [])
    write_manifest(out, manifest)

    print(f"✅ {args.method} construction: {len(result)} elements, Sidon verified")
    if args.method != "greedy":
        print(f"📊 Asymptotic size estimate: {theoretical_size(args.method, args.n):.2f}")
    print(f"💾 Saved to {out}")
    return EXIT_OK


def cmd_gen_infinite(args):
    if args.k_max >= NO_VERIFY_K_MAX and not args.no_verify:
        print(f"❌ k_max >= {NO_VERIFY_K_MAX} needs --no-verify")
        return EXIT_INPUT
    params = _params_from(args)
    manifest = RunManifest(command=args.argv, params=params.describe())
    with manifest.timed("construct"):
        result, bad, records = build_sidon_set(
            params,
            prune_bad=not args.no_prune,
            verify=not args.no_verify,
            prefilter=not args.no_prefilter,
            workers=args.workers,
        )

    tag = f"a{params.alpha.numerator}_b{params.alpha.denominator_log2}_k{params.k_max}"
    out = args.out or _default_out(f"infinite_{tag}.txt")
    write_set(out, result.values, "infinite", params.describe())
    manifest.counts = {
        "elements": len(records),
        "bad_tuples": len(bad),
        "removed": len(result.removed),
        "duplicates": result.duplicate_count,
        "kept": len(result),
    }
    manifest.removed = [rec.p for rec in result.removed]
    write_manifest(out, manifest)

    print(f"✅ Built {len(records)} elements for alpha = {params.alpha}, K <= {params.k_max}")
    if bad:
        print(f"⚠️ {len(bad)} bad tuples found")
    if args.no_prune:
        print("⚠️ Pruning skipped; the file may fail verify")
    else:
        print(f"📊 Removed {len(result.removed)}, kept {len(result)}")
        if result.verified:
            print("✅ Pruned set verified Sidon")
    print(f"💾 Saved to {out}")
    return EXIT_OK


def cmd_verify(args):
    loaded = read_set(args.file)
    checker = check_sidon_exact if args.exact else check_sidon
    report = checker(loaded.values)
    if report.ok:
        print(f"✅ Sidon set: {len(loaded.values)} elements, {report.pairs_checked} pair sums distinct")
        return EXIT_OK
    print(f"❌ Not a Sidon set: {report.describe()}")
    return EXIT_NOT_SIDON


def cmd_sweep(args):
    params = _params_from(args)
    grid = AlphaGrid.strided(args.grid_bits, args.stride)
    manifest = RunManifest(command=args.argv, params={**params.describe(), "grid_bits": args.grid_bits, "stride": args.stride})
    with manifest.timed("sweep"):
        rows = sweep(params, grid, prefilter=not args.no_prefilter, workers=args.workers)

    out = args.out or _default_out(f"sweep_k{params.k_max}_b{args.grid_bits}.csv")
    directory = os.path.dirname(out)
    if directory:
        os.makedirs(directory, exist_ok=True)
    rows_to_frame(rows)[CSV_COLUMNS].to_csv(out, index=False)
    summary = summarize(rows)
    manifest.counts = {
        "alpha_points": len(grid),
        "rows": len(rows),
        "failed_rows": sum(1 for row in rows if row.error),
        "necessary_violations": sum(1 for row in rows if not row.necessary_ok),
    }
    convergence = None
    if args.convergence:
        with manifest.timed("convergence"):
            convergence = convergence_report(
                params, grid, prefilter=not args.no_prefilter, workers=args.workers, rows=rows
            )
        convergence.to_csv(f"{out}.convergence.csv", index=False)
    write_manifest(out, manifest)

    print(f"📊 Sweep over {len(grid)} alpha values, K <= {params.k_max}")
    for row in summary.itertuples():
        flag = "✅" if row.within_ceiling else "⚠️"
        print(
            f"{flag} K={row.K} L={row.L}: mean T={row.mean_T:.3f}, bound={row.bound_value:.3g}, "
            f"ratio={row.ratio:.3g}, normalised A={row.normalised:.3g}"
        )
    if convergence is not None:
        print(f"📊 Convergence, grid 2^-{args.grid_bits} vs 2^-{args.grid_bits + 1}")
        for row in convergence.itertuples():
            print(f"   K={row.K} L={row.L}: mean T {row.mean_T_b:.3f} -> {row.mean_T_b1:.3f}, ratio {row.ratio_b:.3g} -> {row.ratio_b1:.3g}")
    print(f"💾 Saved to {out}")
    return EXIT_OK


def cmd_phi(args):
    angle = phi_of(args.p, args.bits)
    digits = max(1, int(args.bits * math.log10(2)))
    print(f"phi_{args.p} in {angle.enclosure.to_decimal(digits)}")
    return EXIT_OK


def cmd_factor(args):
    dec = two_squares(args.p)
    print(f"{dec.p} = {dec.a}^2 + {dec.b}^2")
    return EXIT_OK


def cmd_count(args):
    loaded = read_set(args.file)
    print(f"S({args.x}) = {counting(loaded.values, args.x)}")
    return EXIT_OK


def cmd_congruence(args):
    params = _params_from(args)
    grid = AlphaGrid.strided(args.grid_bits, args.stride)
    if args.p is not None and args.r is not None:
        K = k_index(args.p, params)
        pairs = [(args.p, args.r, "given")]
    elif args.p is None and args.r is None and args.K is not None:
        K = args.K
        participation = None
        if args.participation_bits is not None:
            participation = AlphaGrid.full(args.participation_bits)
        pairs = congruence_pairs(K, args.L, params, limit=args.limit, participation_grid=participation)
    else:
        raise InvalidParameter("congruence needs either --p and --r, or --K")
    if not pairs:
        raise RangeEmpty(f"Class {K} has fewer than two primes")

    ceiling = CONGRUENCE_CEILING * 2.0 ** (args.L * args.L - K * K)
    print(f"📊 K={K} L={args.L}: {len(grid)} alpha values, ceiling {ceiling:.6g}")
    for p, r, tag in pairs:
        fraction = congruence_measure(p, r, args.L, grid, params)
        flag = "✅" if fraction <= ceiling else "⚠️"
        print(f"{flag} p={p} r={r} ({tag}): fraction {float(fraction):.6g}")
    return EXIT_OK


def cmd_sector(args):
    params = _params_from(args)
    report = sector_bound_check(args.K, args.L, params, samples=args.samples)
    flag = "✅" if report["ok"] else "❌"
    print(
        f"{flag} K={args.K} L={args.L}: max count {report['max_count']} over {report['pairs_checked']} pairs, "
        f"bound theta R^2 + 1 = {report['bound']:.4f}"
    )
    return EXIT_OK if report["ok"] else EXIT_NOT_SIDON


def cmd_report(args):
    params = _params_from(args)
    result, bad, _ = build_sidon_set(params, workers=args.workers)
    print(f"📊 alpha = {params.alpha}, K <= {params.k_max}: {len(result)} elements, {len(bad)} bad tuples")
    for row in slope_report(result, range(K_MIN + 1, params.k_max + 1)):
        print(f"   K={row['K']}: S(2^{row['x_log2']}) = {row['S']}, slope {row['slope']:.4f}")
    for K in range(K_MIN + 1, params.k_max + 1):
        lower, upper = size_exponent_bounds(K, params)
        print(f"   K={K}: log2 a_p / log2 p in ({float(lower):.3f}, {float(upper):.3f})")
    print(f"📊 Asymptotic counting exponent sqrt(2) - 1 = {SLOPE_TARGET:.4f}")
    return EXIT_OK


def _add_alpha_args(parser, k_max=DEFAULT_K_MAX):
    parser.add_argument("--alpha-num", type=int, default=1, help="alpha numerator A")
    parser.add_argument("--alpha-bits", type=int, default=0, help="alpha = A / 2^bits")
    parser.add_argument("--k-max", type=int, default=k_max)
    parser.add_argument("--precision-cap", type=int, default=None, help="override SIDON_PRECISION_CAP")
    parser.add_argument("--workers", type=int, default=None, help="worker processes")


def build_parser():
    parser = argparse.ArgumentParser(prog="sidon", description="Sidon set constructions and experiments")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-finite", help="build a finite Sidon set")
    p.add_argument("--method", choices=METHODS, required=True)
    p.add_argument("--n", type=int, required=True, help="term count (greedy) or range (log, gauss)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen_finite)

    p = sub.add_parser("gen-infinite", help="build the infinite construction up to a class")
    _add_alpha_args(p)
    p.add_argument("--no-prune", action="store_true")
    p.add_argument("--no-verify", action="store_true")
    p.add_argument("--no-prefilter", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen_infinite)

    p = sub.add_parser("verify", help="check a set file")
    p.add_argument("file")
    p.add_argument("--exact", action="store_true", help="use the sorted all-pairs checker")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="bad-tuple statistics over an alpha grid")
    _add_alpha_args(p, k_max=5)
    p.add_argument("--grid-bits", type=int, required=True)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--no-prefilter", action="store_true")
    p.add_argument("--convergence", action="store_true", help="also sweep at twice the resolution and compare")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("phi", help="certified enclosure of phi_p")
    p.add_argument("p", type=int)
    p.add_argument("--bits", type=int, default=64)
    p.set_defaults(func=cmd_phi)

    p = sub.add_parser("factor", help="write p = a^2 + b^2")
    p.add_argument("p", type=int)
    p.set_defaults(func=cmd_factor)

    p = sub.add_parser("count", help="counting function S(x) of a set file")
    p.add_argument("file")
    p.add_argument("--x", type=int, required=True)
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("congruence", help="grid frequency of m_p = m_r mod 2^(K^2 - L^2)")
    _add_alpha_args(p)
    p.add_argument("--p", type=int, help="first prime; with --r measures one pair")
    p.add_argument("--r", type=int, help="second prime, same class as --p")
    p.add_argument("--K", type=int, help="class to draw pairs from when --p/--r are omitted")
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--grid-bits", type=int, required=True)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--limit", type=int, default=5, help="pairs per population")
    p.add_argument("--participation-bits", type=int, default=None, help="grid used to find participating pairs")
    p.set_defaults(func=cmd_congruence)

    p = sub.add_parser("sector", help="lattice-sector count check")
    _add_alpha_args(p)
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--samples", type=int, default=None)
    p.set_defaults(func=cmd_sector)

    p = sub.add_parser("report", help="counting slopes and element-size bounds")
    _add_alpha_args(p)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_INPUT
    args.argv = argv

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (InvalidParameter, RangeEmpty, SetFileError, ResolutionTooCoarse) as e:
        print(f"❌ {e}")
        return EXIT_INPUT
    except PrecisionCapExceeded as e:
        print(f"❌ {e}")
        return EXIT_PRECISION
    except SidonError as e:
        print(f"❌ {e}")
        return EXIT_NOT_SIDON


if __name__ == "__main__":
    sys.exit(main())
