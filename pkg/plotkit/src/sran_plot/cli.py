"""Command-line entry: sran-plot --in FILE --out FILE [--title STR].

Exit codes: 0 success, 2 malformed input.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import FormatError, PlotJob, render_sweep


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sran-plot",
        description="Render an sran-sim sweep CSV into a throughput chart.")
    parser.add_argument("--in", dest="input_csv", required=True,
                        help="sweep CSV produced by sran-sim")
    parser.add_argument("--out", dest="output_image", required=True,
                        help="output image path (.png, .svg, .pdf)")
    parser.add_argument("--title", default="")
    args = parser.parse_args(argv)

    job = PlotJob(input_csv=Path(args.input_csv),
                  output_image=Path(args.output_image), title=args.title)
    try:
        out = render_sweep(job)
    except FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


def run_main() -> None:
    raise SystemExit(main())
