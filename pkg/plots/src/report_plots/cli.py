"""Command-line front end: render figures from run artifact directories.

Exit codes: 0 success, 2 bad arguments or malformed/missing artifacts.
"""

from __future__ import annotations

import argparse
import sys

from .figures import PlotSpec, render
from .schema import SchemaError

_KIND_BY_FLAG = {"state": "state_evolution", "compare": "comparison"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hyperlqr-plots",
        description="Render figures from simulation run artifacts (CSV in, image out)",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    render_parser = sub.add_parser("render", help="render one figure from 1 or 2 runs")
    render_parser.add_argument("--kind", required=True, choices=sorted(_KIND_BY_FLAG),
                               help="state: one-run state evolution; "
                               "compare: two-run overlay")
    render_parser.add_argument("--run", required=True, help="run artifact directory")
    render_parser.add_argument("--run2", default=None,
                               help="second run directory (compare only)")
    render_parser.add_argument("--out", required=True, help="output image path")
    render_parser.add_argument("--label", default=None, help="legend label for --run")
    render_parser.add_argument("--label2", default=None, help="legend label for --run2")
    render_parser.add_argument("--dpi", type=int, default=150)
    render_parser.add_argument("--title", default=None, help="figure title override")
    render_parser.add_argument("--quiet", action="store_true",
                               help="suppress the written-path line")
    return parser


def _spec_from_args(args) -> PlotSpec:
    kind = _KIND_BY_FLAG[args.kind]
    run_dirs = (args.run,) if args.run2 is None else (args.run, args.run2)
    labels = None
    if args.label is not None or args.label2 is not None:
        labels = tuple(
            given if given is not None else default
            for given, default in zip((args.label, args.label2)[: len(run_dirs)],
                                      run_dirs)
        )
    return PlotSpec(
        run_dirs=run_dirs,
        kind=kind,
        out_path=args.out,
        labels=labels,
        dpi=args.dpi,
        title=args.title,
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        out_path = render(_spec_from_args(args))
    except (SchemaError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if not args.quiet:
        print(f"[render] wrote {out_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
