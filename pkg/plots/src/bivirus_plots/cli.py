"""Command line for rendering simulator CSVs to PNG."""

from __future__ import annotations

import argparse
import sys

from .render import PlotSpec, SchemaError, render


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bivirus-plot",
        description="Render phase portraits, region maps, and threshold "
                    "curves from bivirus CSV outputs.")
    sub = parser.add_subparsers(dest="kind", required=True)

    phase = sub.add_parser("phase", help="avg X vs avg Y trajectory portrait")
    phase.add_argument("--traj", nargs="+", required=True,
                       help="trajectory CSV files")
    phase.add_argument("--out", required=True, help="output PNG path")
    phase.add_argument("--title")
    phase.add_argument("--xlim", nargs=2, type=float)
    phase.add_argument("--ylim", nargs=2, type=float)

    region = sub.add_parser("region", help="R1-R6 map of the tau plane")
    region.add_argument("--regions", required=True, help="regions CSV")
    region.add_argument("--curves", help="overlay threshold curves CSV")
    region.add_argument("--out", required=True)
    region.add_argument("--title")

    curves = sub.add_parser("curves", help="threshold curves alone")
    curves.add_argument("--curves", required=True)
    curves.add_argument("--out", required=True)
    curves.add_argument("--title")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    spec = PlotSpec(
        kind=args.kind,
        out_path=args.out,
        trajectory_paths=list(getattr(args, "traj", []) or []),
        regions_path=getattr(args, "regions", None),
        curves_path=getattr(args, "curves", None),
        title=args.title,
        xlim=tuple(args.xlim) if getattr(args, "xlim", None) else None,
        ylim=tuple(args.ylim) if getattr(args, "ylim", None) else None)
    try:
        render(spec)
    except (SchemaError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
