"""Command line for rendering oamlink sweep CSVs."""

from __future__ import annotations

import argparse
import sys

from .render import ANGLE_SURFACE, SNR_LINES, PlotDataError, PlotSpec, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="oamplots", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    cmd = sub.add_parser("render")
    cmd.add_argument("--csv", required=True, metavar="PATH")
    cmd.add_argument("--kind", required=True, choices=(SNR_LINES, ANGLE_SURFACE))
    cmd.add_argument("--out", required=True, metavar="PATH")
    cmd.add_argument("--se", choices=("paper", "sinr"), default=None)
    cmd.add_argument("--scheme", default="ma")
    cmd.add_argument("--title", default=None)
    args = parser.parse_args(argv)

    spec = PlotSpec(
        csv_path=args.csv,
        kind=args.kind,
        out_path=args.out,
        se_variant=args.se,
        scheme=args.scheme,
        title=args.title,
    )
    try:
        render(spec)
    except (PlotDataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
