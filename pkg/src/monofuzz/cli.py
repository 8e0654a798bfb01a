"""Command-line interface.

Subcommands mirror the pipeline stages; each runs everything up to its
stage and writes that stage's dump into the output directory:

    monofuzz graph      --corpus lib.json --out out/
    monofuzz solve      --corpus lib.json --out out/ --max-depth 2
    monofuzz prune      --corpus lib.json --out out/
    monofuzz sequences  --corpus lib.json --out out/
    monofuzz synth      --corpus lib.json --out out/
    monofuzz run        --corpus lib.json --out out/
    monofuzz report     --run-dir out/ --out report/
"""

from __future__ import annotations

import argparse
import sys

from .synth import RunConfig, StageError, run_pipeline

_STAGES = ["graph", "solve", "prune", "sequences", "synth", "run"]


def _add_pipeline_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--corpus", required=True, help="corpus JSON file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--max-depth", type=int, default=2, help="type nesting cap (default 2)")
    p.add_argument("--max-sequences", type=int, default=300, help="sequence cap (default 300)")
    p.add_argument("--max-seq-len", type=int, default=8, help="calls per sequence cap (default 8)")
    p.add_argument("--seed", type=int, default=None, help="seed for tie-breaking choices")
    p.add_argument("--no-prelude", action="store_true", help="skip the bundled prelude corpus")
    p.add_argument(
        "--allow-nongeneric",
        action="store_true",
        help="also emit sequences containing no monomorphic call",
    )
    p.add_argument("--bounds-fuel", type=int, default=4, help="bound-check recursion fuel")
    p.add_argument("--dot", action="store_true", help="also write graph.dot")


def _config(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        corpus_path=args.corpus,
        output_dir=args.out,
        max_depth=args.max_depth,
        max_sequences=args.max_sequences,
        max_seq_len=args.max_seq_len,
        seed=args.seed,
        prelude=not args.no_prelude,
        require_mono=not args.allow_nongeneric,
        bounds_fuel=args.bounds_fuel,
    )


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="monofuzz",
        description="Synthesize fuzz drivers for library APIs, generic ones included.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for stage in _STAGES:
        p = sub.add_parser(stage, help=f"run the pipeline through the {stage} stage")
        _add_pipeline_args(p)
    rp = sub.add_parser("report", help="render summary figures and CSV from a finished run")
    rp.add_argument("--run-dir", required=True, help="directory holding manifest.json/prune.json")
    rp.add_argument("--out", required=True, help="report output directory")

    args = parser.parse_args(argv)

    if args.command == "report":
        from .report import render_report

        try:
            written = render_report(args.run_dir, args.out)
        except (OSError, KeyError, ValueError) as e:
            print(f"report failed: {e}", file=sys.stderr)
            return 1
        for path in written:
            print(path)
        return 0

    cfg = _config(args)
    try:
        result = run_pipeline(cfg, write_dot=args.dot, stop_after=args.command)
    except StageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except ValueError as e:
        print(f"error: [config] {e}", file=sys.stderr)
        return 1

    if result.statistics is not None:
        stats = result.statistics
        print(
            f"{stats['apis']} APIs ({stats['generic_apis']} generic) -> "
            f"{stats['mono_apis']} instantiations -> {stats['reserved_apis']} reserved -> "
            f"{stats['sequences']} sequences -> {stats['drivers']} drivers"
        )
    else:
        print(f"wrote {args.command} stage outputs to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
