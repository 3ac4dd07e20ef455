"""Command-line entry point: ``pirbreak {roundtrip,attack,analysis,simulate}``."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from . import harness
from .pir import SchemeParams, derive_params, desk_params, paper_params

# Paper-preset attacks run for minutes to hours; they need --long-run.
_PAPER_QUICK_N = 9


class _UsageError(Exception):
    pass


def _add_param_flags(p: argparse.ArgumentParser, default_preset: str | None = None):
    p.add_argument("--preset", choices=("paper", "desk"), default=default_preset,
                   help="parameter set (default: desk, or the recipe when --N is given)")
    p.add_argument("--n", type=int, default=None, help="number of files")
    p.add_argument("--N", type=int, default=None, help="file width (ignored by presets)")
    p.add_argument("--L", type=int, default=4, help="file height")
    p.add_argument("--k", type=int, default=None, help="extra window rows")
    p.add_argument("--threshold", type=int, default=None, help="hand-over block count t")
    p.add_argument("--embed-factor", type=int, default=None, help="embedding factor M")


def _add_run_flags(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=None, help="master seed (default $PIRBREAK_SEED or 0)")
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--i0", type=int, default=None, help="fix the requested file instead of drawing it")
    p.add_argument("--out", default=None, help="write the report here instead of stdout")
    p.add_argument("--format", choices=harness.FORMATS, default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pirbreak", description="Lattice attacks on a noisy-matrix PIR scheme.")
    sub = parser.add_subparsers(dest="command", required=True)

    rt = sub.add_parser("roundtrip", help="check that honest queries decode correctly")
    _add_param_flags(rt)
    _add_run_flags(rt)

    at = sub.add_parser("attack", help="recover the requested index from the queries")
    at.add_argument("--variant", choices=("original", "improved"), default="improved")
    at.add_argument("--long-run", action="store_true", help="allow paper-preset attacks beyond n=9")
    _add_param_flags(at)
    _add_run_flags(at)

    an = sub.add_parser("analysis", help="bounds and CVP-count formulas")
    _add_param_flags(an, default_preset="paper")
    an.add_argument("--n-grid", default=None, help='sizes, "a..b[:step]" or comma list')
    an.add_argument("--out", default=None)
    an.add_argument("--format", choices=harness.FORMATS, default="json")

    si = sub.add_parser("simulate", help="exact and approximate CVP counts over n (CSV)")
    si.add_argument("--t", type=int, default=6)
    si.add_argument("--n-grid", default="100..10000")
    si.add_argument("--out", default=None)
    si.add_argument("--format", choices=harness.FORMATS, default="csv")
    return parser


def params_from_args(args) -> SchemeParams:
    n = args.n if args.n is not None else 100
    if n < 1:
        raise _UsageError("--n must be positive")
    overrides = {}
    if args.k is not None:
        overrides["k"] = args.k
    if args.threshold is not None:
        overrides["t"] = args.threshold
    if args.embed_factor is not None:
        overrides["M"] = args.embed_factor
    try:
        if args.preset == "paper":
            params = paper_params(n, args.L)
        elif args.preset == "desk" or args.N is None:
            params = desk_params(n, args.L)
        else:
            params = derive_params(n, args.N, args.L, k=min(args.N, 7))
        return replace(params, **overrides) if overrides else params
    except ValueError as exc:
        raise _UsageError(str(exc)) from None


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _run_trials(args, mode: str) -> int:
    params = params_from_args(args)
    if args.trials < 1 or args.jobs < 1:
        raise _UsageError("--trials and --jobs must be positive")
    if args.i0 is not None and not 1 <= args.i0 <= params.n:
        raise _UsageError(f"--i0 must lie in 1..{params.n}")
    config = harness.ExperimentConfig(
        params=params,
        mode=mode,
        trials=args.trials,
        seed=harness.master_seed(args.seed),
        output_format=args.format,
        jobs=args.jobs,
        planted_index=args.i0,
    )
    agg = harness.run_trials(config)
    payload = agg.to_dict() if args.format == "json" else [agg.table_row()]
    _emit(harness.render(payload, args.format, harness.TABLE_COLUMNS), args.out)
    return 0 if agg.successes == len(agg.records) else 1


def _grid(spec: str) -> tuple[int, ...]:
    try:
        return harness.parse_grid(spec)
    except ValueError as exc:
        raise _UsageError(f"bad --n-grid: {exc}") from None


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse: 0 for --help, 2 for usage errors
        return int(exc.code or 0)
    try:
        if args.command == "roundtrip":
            return _run_trials(args, "roundtrip")
        if args.command == "attack":
            if args.preset == "paper" and (args.n or 100) > _PAPER_QUICK_N and not args.long_run:
                raise _UsageError("paper-preset attacks beyond n=9 take a long time; pass --long-run")
            return _run_trials(args, f"attack-{args.variant}")
        if args.command == "analysis":
            params = params_from_args(args)
            grid = _grid(args.n_grid) if args.n_grid else ()
            summary = harness.analysis_summary(params, grid)
            if args.format == "json":
                text = harness.render(summary, "json")
            else:
                text = harness.to_csv(summary["grid"], ("n", "l", "bound_holds", "worst_approx", "avg_approx"))
            _emit(text, args.out)
            return 0
        if args.command == "simulate":
            if args.t < 3:
                raise _UsageError("--t must be at least 3")
            rows = harness.simulate_rows(_grid(args.n_grid), args.t)
            payload = rows if args.format == "csv" else {"t": args.t, "rows": rows}
            _emit(harness.render(payload, args.format, harness.SIMULATE_COLUMNS), args.out)
            return 0
    except _UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"pirbreak: error: {exc}", file=sys.stderr)
        return 2
    return 2  # pragma: no cover


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
