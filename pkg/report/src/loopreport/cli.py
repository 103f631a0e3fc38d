"""Command line entry point: render one sweep directory into a report.

Expects the layout written by `coloop sweep`: a summary.csv and one
value_NNN/ directory per sweep value, in row order. Produces
trajectories.svg (feasible values only) and summary.txt.
"""

import argparse
import sys
from pathlib import Path

from . import __version__
from .figures import FigureSpec, ReportError, render_trajectories
from .tables import read_summary, render_summary_table


def build_parser():
    parser = argparse.ArgumentParser(
        prog="loopreport",
        description="Render figures and tables from coloop sweep output.")
    parser.add_argument("--in", dest="in_dir", required=True,
                        help="sweep output directory (summary.csv + value_*/)")
    parser.add_argument("--out", dest="out_dir", required=True,
                        help="directory to write trajectories.svg and summary.txt")
    parser.add_argument("--no-runs", action="store_true",
                        help="omit the faint per-run traces")
    parser.add_argument("--version", action="version", version=__version__)
    return parser


def _figure_spec(in_dir, rows, out_dir, show_runs):
    paths, labels = [], []
    for i, row in enumerate(rows):
        if row["feasible"] != "true":
            continue
        csv_path = in_dir / f"value_{i:03d}" / "trajectories.csv"
        paths.append(csv_path)
        # legend text reuses the CSV's own cells, keeping every printed
        # number traceable to the input
        labels.append(f"{row['parameter']}={row['value']}")
    if not paths:
        raise ReportError(f"{in_dir}: no feasible rows to plot")
    return FigureSpec(csv_paths=tuple(paths), labels=tuple(labels),
                      parameter=rows[0]["parameter"],
                      out_path=out_dir / "trajectories.svg",
                      show_runs=show_runs)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    in_dir = Path(args.in_dir)
    out_dir = Path(args.out_dir)
    try:
        rows = read_summary(in_dir / "summary.csv")
        spec = _figure_spec(in_dir, rows, out_dir, not args.no_runs)
        figure = render_trajectories(spec)
        table = render_summary_table(in_dir / "summary.csv",
                                     out_dir / "summary.txt")
    except ReportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {figure}")
    print(f"wrote {table}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
