"""Command-line entry point.

Exit codes: 0 proven optimal, 3 time limit reached with valid bounds,
1 input or usage error.

Timings in reports depend on this machine; no hardware normalization is
attempted.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .core import SolverConfig, Status, SvmError
from .bench import (
    BenchSpec,
    load_instance,
    report_to_dict,
    run_bench,
    write_report,
)
from .bnb import solve
from .data import (
    SyntheticSpec,
    generate_synthetic,
    load_csv,
    load_libsvm,
    save_dataset,
)
from .oracle import brute_force_optimum

_ORACLE_CAP = 16


class _Parser(argparse.ArgumentParser):
    # usage problems are input errors: exit 1, not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        sys.exit(1)


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="hmsvm",
        description="Exact training of hard-margin (0/1) loss SVMs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="run the three-stage exact solve")
    ps.add_argument("--data", required=True, type=Path)
    ps.add_argument("--format", choices=("csv", "libsvm"), default="csv")
    ps.add_argument("-C", dest="C", type=float, required=True)
    ps.add_argument("--time-limit", type=float, default=600.0)
    ps.add_argument("--ts", type=float, default=30.0,
                    help="sampled cut-harvest budget in seconds")
    ps.add_argument("--tb", type=float, default=30.0,
                    help="full-set cut-harvest budget in seconds")
    ps.add_argument("--seed", type=int, default=0)
    ps.add_argument("--out", type=Path, default=None,
                    help="write the JSON report here")
    ps.add_argument("--label-column", type=int, default=-1)
    ps.add_argument("--no-cuts", action="store_true",
                    help="skip cut generation (plain big-M search)")
    ps.add_argument("--tight-wub", action="store_true",
                    help="use the sharper sqrt(2 ub) weight box")
    ps.add_argument("--single-thread", action="store_true",
                    help="accepted for reproducibility scripts; the solver "
                         "is single-threaded either way")

    pg = sub.add_parser("generate", help="write a synthetic benchmark instance")
    pg.add_argument("--family", choices=("A", "B"), required=True)
    pg.add_argument("--n", type=int, required=True)
    pg.add_argument("--m", type=int, required=True)
    pg.add_argument("--outliers", type=float, default=0.1)
    pg.add_argument("--seed", type=int, default=0)
    pg.add_argument("--out", type=Path, required=True)

    po = sub.add_parser("oracle", help="exhaustive optimum for small files")
    po.add_argument("--data", required=True, type=Path)
    po.add_argument("--format", choices=("csv", "libsvm"), default="csv")
    po.add_argument("-C", dest="C", type=float, required=True)

    pb = sub.add_parser("bench", help="run an instance grid and summarize")
    pb.add_argument("--family", default="",
                    help="comma-separated families, e.g. A,B")
    pb.add_argument("--n", default="", help="comma-separated sample counts")
    pb.add_argument("--m", default="", help="comma-separated feature counts")
    pb.add_argument("--replicates", type=int, default=1)
    pb.add_argument("-C", dest="C", default="1",
                    help="comma-separated penalty grid")
    pb.add_argument("--time-limit", type=float, default=600.0)
    pb.add_argument("--ts", type=float, default=30.0)
    pb.add_argument("--tb", type=float, default=30.0)
    pb.add_argument("--seed", type=int, default=0)
    pb.add_argument("--outliers", type=float, default=0.1)
    pb.add_argument("--out", type=Path, required=True)
    pb.add_argument("--ablation", action="store_true",
                    help="also run every instance without cuts")
    pb.add_argument("--data", nargs="*", type=Path, default=[])
    return parser


def cmd_solve(args) -> int:
    try:
        if args.format == "libsvm":
            dataset = load_libsvm(args.data)
        else:
            dataset = load_csv(args.data, label_column=args.label_column)
        cfg = SolverConfig(
            C=args.C,
            time_limit=args.time_limit,
            sampling_budget=0.0 if args.no_cuts else args.ts,
            full_cut_budget=0.0 if args.no_cuts else args.tb,
            seed=args.seed,
            use_cuts=not args.no_cuts,
            tight_weight_box=args.tight_wub,
        )
    except (SvmError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    report = solve(dataset, cfg)
    payload = report_to_dict(
        dataset, report, cfg,
        extra_config={"single_thread": bool(args.single_thread)},
    )
    if args.out is not None:
        write_report(args.out, payload)
    print(
        f"{dataset.name}: {report.status.value} "
        f"objective={report.upper_bound:.9g} "
        f"bound={report.lower_bound:.9g} gap={report.gap_percent:.4f}% "
        f"nodes={report.nodes_explored} cuts={report.cuts_generated}"
    )
    if report.status is Status.OPTIMAL:
        return 0
    if report.status is Status.TIME_LIMIT:
        return 3
    return 1


def cmd_generate(args) -> int:
    try:
        spec = SyntheticSpec(
            n=args.n, m=args.m, family=args.family,
            outlier_fraction=args.outliers, seed=args.seed,
        )
        dataset = generate_synthetic(spec)
        save_dataset(dataset, args.out)
    except (SvmError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {dataset.name} ({dataset.n} samples, {dataset.m} features) "
          f"to {args.out}")
    return 0


def cmd_oracle(args) -> int:
    try:
        dataset = load_instance(args.data, args.format)
    except SvmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if dataset.n > _ORACLE_CAP:
        print(
            f"error: {dataset.n} samples exceed the oracle cap "
            f"({_ORACLE_CAP}); enumeration of 2^n markings would not finish",
            file=sys.stderr,
        )
        return 1
    result = brute_force_optimum(dataset, args.C)
    marks = "".join(str(int(v)) for v in result.z)
    print(f"optimum {result.value:.12g}")
    print(f"marks {marks}")
    return 0


def _parse_list(text, conv):
    return tuple(conv(tok) for tok in text.split(",") if tok.strip())


def cmd_bench(args) -> int:
    try:
        spec = BenchSpec(
            families=_parse_list(args.family, str),
            ns=_parse_list(args.n, int),
            ms=_parse_list(args.m, int),
            replicates=args.replicates,
            c_grid=_parse_list(args.C, float),
            time_limit=args.time_limit,
            sampling_budget=args.ts,
            full_cut_budget=args.tb,
            seed=args.seed,
            out_dir=args.out,
            ablation=args.ablation,
            data_paths=tuple(args.data),
            outlier_fraction=args.outliers,
        )
    except (SvmError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print("note: times reflect this machine; no hardware normalization")
    try:
        run_bench(spec)
    except SvmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"summary written to {Path(args.out) / 'summary.csv'}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handler = {
        "solve": cmd_solve,
        "generate": cmd_generate,
        "oracle": cmd_oracle,
        "bench": cmd_bench,
    }[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
