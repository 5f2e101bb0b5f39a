"""Command-line entry point.

Exit codes: 0 success, 1 input error, 2 oracle unavailable,
3 statistical-input error.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__, pipeline
from .analytics import render_report_markdown
from .errors import SofixError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sofix",
        description="Extract and analyze syntax-error/fix pairs from post edit histories",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    extract = sub.add_parser("extract", help="mine error/fix pairs from a dump")
    extract.add_argument("--posts", required=True, help="posts.jsonl path")
    extract.add_argument("--blocks", required=True, help="blocks.jsonl path")
    extract.add_argument("--tag-pattern", required=True, help="substring to match in post tags")
    extract.add_argument("--out", required=True, help="pairs.jsonl output path")
    extract.add_argument("--workers", type=int, default=1, help="oracle worker pool size")

    validate = sub.add_parser("validate", help="run corrected snippets through the interpreter")
    validate.add_argument("--pairs", required=True)
    validate.add_argument("--out", required=True)
    validate.add_argument("--timeout-secs", type=float, default=4.0)
    validate.add_argument("--workers", type=int, default=1)

    stats = sub.add_parser("stats", help="emit a distribution table")
    stats.add_argument("--pairs", required=True)
    stats.add_argument("--which", choices=["parse", "runtime"], required=True)
    stats.add_argument("--out", required=True, help="CSV output path")
    stats.add_argument("--message-cutoff", type=int, default=40,
                       help="distinct parse-error messages kept before collapsing into 'other'")

    compare = sub.add_parser("compare", help="chi-squared test against a reference distribution")
    compare.add_argument("--stats", required=True, help="stats CSV to compare")
    compare.add_argument("--dist", required=True,
                         help="builtin:mit, builtin:cscircles, or a reference JSON path")
    compare.add_argument("--mapping", default=None,
                         help='{"map": {...}, "default": "..."} category mapping JSON')
    compare.add_argument("--out", default=None, help="result JSON path")

    mutate = sub.add_parser("mutate", help="token-mutation error baseline")
    mutate.add_argument("--pairs", required=True, help="corpus supplying valid snippets")
    mutate.add_argument("--kind", choices=["delete", "insert", "replace"], required=True)
    mutate.add_argument("--trials", type=int, required=True)
    mutate.add_argument("--seed", type=int, required=True)
    mutate.add_argument("--out", required=True, help="CSV output path")

    audit = sub.add_parser("audit", help="draw a reviewable random sample of pairs")
    audit.add_argument("--pairs", required=True)
    audit.add_argument("--sample", type=int, required=True)
    audit.add_argument("--seed", type=int, required=True)
    audit.add_argument("--out", required=True)

    return parser


def _dispatch(args: argparse.Namespace) -> int:
    if args.command == "extract":
        counts, n_pairs = pipeline.run_extract(
            args.posts, args.blocks, args.tag_pattern, args.out, workers=args.workers
        )
        print(counts.render_table(args.tag_pattern))
        print(f"\nwrote {n_pairs} pairs to {args.out}")
    elif args.command == "validate":
        n_pairs = pipeline.run_validate(
            args.pairs, args.out, timeout_s=args.timeout_secs, workers=args.workers
        )
        print(f"validated {n_pairs} pairs into {args.out}")
    elif args.command == "stats":
        report = pipeline.run_stats(
            args.pairs, args.which, args.out, message_cutoff=args.message_cutoff
        )
        title = "Parse errors" if args.which == "parse" else "Runtime outcomes of corrected code"
        print(render_report_markdown(report, title))
    elif args.command == "compare":
        result = pipeline.run_compare(args.stats, args.dist, args.mapping, args.out)
        print(
            f"X² = {result.statistic:.6g}, df = {result.df}, "
            f"p = {result.p_value:.6g}, n = {result.n}"
        )
    elif args.command == "mutate":
        report, manifest = pipeline.run_mutate(
            args.pairs, args.kind, args.trials, args.seed, args.out
        )
        print(render_report_markdown(report, f"Parse outcomes of {args.kind} mutations"))
        print(f"\nmanifest: {manifest}")
    elif args.command == "audit":
        n_sampled = pipeline.run_audit(args.pairs, args.sample, args.seed, args.out)
        print(f"wrote {n_sampled} sampled pairs to {args.out}")
    else:  # pragma: no cover - argparse enforces choices
        raise AssertionError(args.command)
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except SofixError as exc:
        print(f"sofix: error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
