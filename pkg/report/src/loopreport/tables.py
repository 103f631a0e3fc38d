"""Plain-text rendering of the sweep summary CSV.

Cells are echoed exactly as they appear in the file: the table aligns
and flags, it never reformats or recomputes. Rows whose feasible flag is
not "true" are marked with a leading "!".
"""

import csv
from pathlib import Path

from .figures import ReportError, check_header

SUMMARY_COLUMNS = ("parameter", "value", "n_runs", "status", "feasible",
                   "eps_c", "W_u_hz", "W_d_hz", "eps_u", "eps_d", "D_c_max_s",
                   "cost_J", "settled_fraction", "settle_time_mean_s",
                   "settle_time_ci95_s", "overshoot_mean_m", "overshoot_max_m",
                   "jitter_rms_m", "loss_rate", "loss_attempts",
                   "delta_final_abs_mean_m")


def read_summary(path):
    """Read a summary CSV into a list of row dicts of verbatim cell strings."""
    path = Path(path)
    try:
        raw = path.read_bytes().decode("utf-8")
    except OSError as exc:
        raise ReportError(f"cannot read {path}: {exc}") from None
    reader = csv.reader(raw.splitlines())
    header = next(reader, None)
    check_header(header, SUMMARY_COLUMNS, path)
    rows = []
    for line, row in enumerate(reader, start=2):
        if len(row) != len(SUMMARY_COLUMNS):
            raise ReportError(f"{path} line {line}: expected "
                              f"{len(SUMMARY_COLUMNS)} fields, got {len(row)}")
        rows.append(dict(zip(SUMMARY_COLUMNS, row)))
    if not rows:
        raise ReportError(f"{path}: no data rows")
    return rows


def render_summary_table(summary_csv, out_path) -> Path:
    """Write an aligned text table of the summary rows; returns the path."""
    rows = read_summary(summary_csv)
    widths = [max(len(col), *(len(row[col]) for row in rows))
              for col in SUMMARY_COLUMNS]
    lines = []

    def fmt(cells, flag):
        cols = "  ".join(cell.ljust(w) for cell, w in zip(cells, widths))
        return (flag + "  " + cols).rstrip()

    lines.append(fmt(SUMMARY_COLUMNS, " "))
    lines.append(fmt(tuple("-" * w for w in widths), " "))
    flagged = False
    for row in rows:
        infeasible = row["feasible"] != "true"
        flagged = flagged or infeasible
        lines.append(fmt(tuple(row[col] for col in SUMMARY_COLUMNS),
                         "!" if infeasible else " "))
    if flagged:
        lines.append("")
        lines.append("! marks rows the solver reported infeasible")
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return out_path
