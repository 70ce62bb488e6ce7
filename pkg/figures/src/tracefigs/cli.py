"""Command line: render figures from a trace CSV into an output directory."""

from __future__ import annotations

import argparse
import sys

from .render import TraceSchemaError, render
from .spec import FIGURES


def parse_figure_ids(text: str) -> list[int]:
    """Ranges and singletons: "1-5", "4", "1,3,6-8"."""
    ids: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        lo, sep, hi = part.partition("-")
        try:
            if sep:
                span = range(int(lo), int(hi) + 1)
            else:
                span = range(int(lo), int(lo) + 1)
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad figure selection {part!r}")
        ids.extend(span)
    unknown = sorted(set(ids) - set(FIGURES))
    if unknown:
        raise argparse.ArgumentTypeError(f"unknown figure ids {unknown}; known: {sorted(FIGURES)}")
    if not ids:
        raise argparse.ArgumentTypeError("empty figure selection")
    return sorted(set(ids))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tracefigs", description="Render figures from simulation trace CSV files."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_render = sub.add_parser("render", help="render selected figures from one trace")
    p_render.add_argument("--trace", required=True, help="trace CSV file")
    p_render.add_argument("--figs", required=True, type=parse_figure_ids,
                          help="figure ids, e.g. 1-5 or 1,3,6-8")
    p_render.add_argument("--outdir", required=True, help="output directory for PNG files")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        for fid in args.figs:
            target = render(args.trace, fid, args.outdir)
            print(target)
    except (TraceSchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
