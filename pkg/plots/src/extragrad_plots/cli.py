"""Script entry point: plot curves|heatmap --in <glob> --out <png> [--title ...]."""

from __future__ import annotations

import argparse
import sys

from .render import PlotDataError, PlotSpec, render, resolve_glob


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plot",
                                     description="Render extragrad CSV outputs to PNG.")
    sub = parser.add_subparsers(dest="kind", required=True)

    curves = sub.add_parser("curves", help="log-scale convergence curves from run CSVs")
    curves.add_argument("--in", dest="pattern", required=True,
                        help="glob of run CSV files (t,dist_sq,op_norm[,gap])")
    curves.add_argument("--out", required=True, help="output PNG path")
    curves.add_argument("--title", default=None)
    curves.add_argument("--manifest", default=None,
                        help="run manifest for legend labels (default: sibling manifest.json)")
    curves.add_argument("--linear-y", action="store_true",
                        help="linear instead of logarithmic y axis")

    heat = sub.add_parser("heatmap", help="ratio heatmap with divergence mask")
    heat.add_argument("--in", dest="pattern", required=True,
                      help="the ratio matrix CSV (glob resolving to one file)")
    heat.add_argument("--out", required=True, help="output PNG path")
    heat.add_argument("--title", default=None)
    heat.add_argument("--mask", default=None,
                      help="mask CSV (default: <matrix>.mask.csv)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        inputs = resolve_glob(args.pattern)
        if args.kind == "curves":
            spec = PlotSpec(inputs=inputs, kind="curves", out=args.out, title=args.title,
                            manifest=args.manifest, logy=not args.linear_y)
        else:
            spec = PlotSpec(inputs=inputs, kind="heatmap", out=args.out, title=args.title,
                            mask=args.mask)
        render(spec)
    except PlotDataError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
