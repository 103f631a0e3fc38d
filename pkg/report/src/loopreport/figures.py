"""Trajectory figures rendered as standalone SVG.

The input format is the trajectory CSV written by `coloop simulate` and
`coloop sweep`: one file per sweep value, rows keyed by (run_id, t_index).
Rendering is deterministic, and the only numbers that appear as figure
text are legend values copied verbatim from the caller (the CLI takes
them from the summary CSV). Axes are therefore unticked; the dashed
horizontal line marks the zero-error target.
"""

import csv
import math
from dataclasses import dataclass
from pathlib import Path

# column order of the simulator's trajectory CSV; the contract is the
# file format, not the simulator package, so it is restated here
TRAJECTORY_COLUMNS = ("run_id", "t_index", "time_s", "delta_m", "v_mps",
                      "a_mps2", "delta_hat_m", "command", "eta",
                      "delay_steps", "cum_cost")

_PALETTE = ("#0072b2", "#d55e00", "#009e73", "#cc79a7", "#e69f00",
            "#56b4e9", "#8c510a", "#444444")

_WIDTH, _HEIGHT = 880, 520
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 70, 26, 26, 58


class ReportError(Exception):
    """Input file missing, schema-invalid, or empty."""


@dataclass(frozen=True)
class FigureSpec:
    """One trajectory figure: a CSV and a legend label per sweep value."""

    csv_paths: tuple
    labels: tuple
    parameter: str
    out_path: Path
    x_label: str = "time (s)"
    y_label: str = "position error (m)"
    x_range: tuple | None = None
    y_range: tuple | None = None
    target_line: bool = True
    show_runs: bool = True

    def __post_init__(self):
        if not self.csv_paths:
            raise ReportError("figure needs at least one trajectory CSV")
        if len(self.labels) != len(self.csv_paths):
            raise ReportError(
                f"got {len(self.labels)} labels for "
                f"{len(self.csv_paths)} CSV paths")
        for path in self.csv_paths:
            if not Path(path).is_file():
                raise ReportError(f"trajectory CSV not found: {path}")
        for name, rng in (("x_range", self.x_range), ("y_range", self.y_range)):
            if rng is not None and not rng[0] < rng[1]:
                raise ReportError(f"{name} must be (low, high), got {rng}")


def check_header(header, expected, path):
    """Compare a CSV header to the schema, naming the offending column."""
    got = list(header or [])
    for col in expected:
        if col not in got:
            raise ReportError(f"{path}: missing column '{col}'")
    for col in got:
        if col not in expected:
            raise ReportError(f"{path}: unexpected column '{col}'")
    if tuple(got) != tuple(expected):
        raise ReportError(f"{path}: columns out of order, expected "
                          + ",".join(expected))


def _parse(row, idx, column, cast, path, line):
    cell = row[idx]
    try:
        return cast(cell)
    except ValueError:
        raise ReportError(
            f"{path} line {line}: column '{column}' has "
            f"non-numeric value {cell!r}") from None


def read_trajectories(path):
    """Read one trajectory CSV into {run_id: [(t_index, time_s, delta_m)]}."""
    path = Path(path)
    try:
        raw = path.read_bytes().decode("utf-8")
    except OSError as exc:
        raise ReportError(f"cannot read {path}: {exc}") from None
    reader = csv.reader(raw.splitlines())
    header = next(reader, None)
    check_header(header, TRAJECTORY_COLUMNS, path)
    i_run = TRAJECTORY_COLUMNS.index("run_id")
    i_t = TRAJECTORY_COLUMNS.index("t_index")
    i_time = TRAJECTORY_COLUMNS.index("time_s")
    i_delta = TRAJECTORY_COLUMNS.index("delta_m")
    runs = {}
    for line, row in enumerate(reader, start=2):
        if len(row) != len(TRAJECTORY_COLUMNS):
            raise ReportError(f"{path} line {line}: expected "
                              f"{len(TRAJECTORY_COLUMNS)} fields, got {len(row)}")
        run = _parse(row, i_run, "run_id", int, path, line)
        t = _parse(row, i_t, "t_index", int, path, line)
        time_s = _parse(row, i_time, "time_s", float, path, line)
        delta = _parse(row, i_delta, "delta_m", float, path, line)
        if not (math.isfinite(time_s) and math.isfinite(delta)):
            raise ReportError(f"{path} line {line}: non-finite sample")
        runs.setdefault(run, []).append((t, time_s, delta))
    if not runs:
        raise ReportError(f"{path}: no data rows")
    for samples in runs.values():
        samples.sort()
    return runs


def _mean_curve(runs):
    acc = {}
    for samples in runs.values():
        for t, time_s, delta in samples:
            total_t, total_d, count = acc.get(t, (0.0, 0.0, 0))
            acc[t] = (total_t + time_s, total_d + delta, count + 1)
    return [(total_t / count, total_d / count)
            for t, (total_t, total_d, count) in sorted(acc.items())]


def _ranges(spec, per_value):
    xs, ys = [], []
    for runs in per_value:
        for samples in runs.values():
            for _, time_s, delta in samples:
                xs.append(time_s)
                ys.append(delta)
    x_lo, x_hi = spec.x_range if spec.x_range else (min(xs), max(xs))
    if spec.y_range:
        y_lo, y_hi = spec.y_range
    else:
        y_lo, y_hi = min(ys), max(ys)
        if spec.target_line:
            y_lo, y_hi = min(y_lo, 0.0), max(y_hi, 0.0)
        pad = 0.05 * (y_hi - y_lo)
        y_lo, y_hi = y_lo - pad, y_hi + pad
    if x_hi <= x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if y_hi <= y_lo:
        y_lo, y_hi = y_lo - 1.0, y_hi + 1.0
    return x_lo, x_hi, y_lo, y_hi


def render_trajectories(spec: FigureSpec) -> Path:
    """Render the figure described by `spec`; returns the written path."""
    per_value = [read_trajectories(p) for p in spec.csv_paths]
    x_lo, x_hi, y_lo, y_hi = _ranges(spec, per_value)
    plot_w = _WIDTH - _MARGIN_L - _MARGIN_R
    plot_h = _HEIGHT - _MARGIN_T - _MARGIN_B

    def sx(v):
        return _MARGIN_L + plot_w * (v - x_lo) / (x_hi - x_lo)

    def sy(v):
        return _MARGIN_T + plot_h * (y_hi - v) / (y_hi - y_lo)

    def points(curve):
        return " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in curve)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" '
        f'height="{_HEIGHT}" viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        '<defs><clipPath id="plot">'
        f'<rect x="{_MARGIN_L}" y="{_MARGIN_T}" width="{plot_w}" '
        f'height="{plot_h}"/></clipPath></defs>',
        f'<rect x="{_MARGIN_L}" y="{_MARGIN_T}" width="{plot_w}" '
        f'height="{plot_h}" fill="none" stroke="#222" stroke-width="1"/>',
    ]
    out.append('<g clip-path="url(#plot)">')
    if spec.show_runs:
        for i, runs in enumerate(per_value):
            color = _PALETTE[i % len(_PALETTE)]
            for run in sorted(runs):
                curve = [(time_s, delta) for _, time_s, delta in runs[run]]
                out.append(f'<polyline class="run" fill="none" '
                           f'stroke="{color}" stroke-width="1" '
                           f'opacity="0.12" points="{points(curve)}"/>')
    if spec.target_line:
        out.append(f'<line class="target" x1="{_MARGIN_L}" '
                   f'x2="{_MARGIN_L + plot_w}" y1="{sy(0.0):.2f}" '
                   f'y2="{sy(0.0):.2f}" stroke="#444" stroke-width="1.5" '
                   'stroke-dasharray="6 4"/>')
    for i, runs in enumerate(per_value):
        color = _PALETTE[i % len(_PALETTE)]
        out.append(f'<polyline class="mean" fill="none" stroke="{color}" '
                   f'stroke-width="2.5" points="{points(_mean_curve(runs))}"/>')
    out.append('</g>')

    font = 'font-family="DejaVu Sans, sans-serif"'
    out.append(f'<text x="{_MARGIN_L + plot_w / 2:.0f}" y="{_HEIGHT - 16}" '
               f'text-anchor="middle" font-size="15" {font}>'
               f'{spec.x_label}</text>')
    out.append(f'<text x="20" y="{_MARGIN_T + plot_h / 2:.0f}" '
               f'text-anchor="middle" font-size="15" {font} '
               f'transform="rotate(-90 20 {_MARGIN_T + plot_h / 2:.0f})">'
               f'{spec.y_label}</text>')

    entries = list(spec.labels) + (["target"] if spec.target_line else [])
    box_w = 8 * max(len(e) for e in entries) + 52
    box_h = 20 * len(entries) + 12
    box_x = _MARGIN_L + plot_w - box_w - 10
    box_y = _MARGIN_T + 10
    out.append(f'<rect x="{box_x}" y="{box_y}" width="{box_w}" '
               f'height="{box_h}" fill="white" fill-opacity="0.85" '
               'stroke="#999" stroke-width="0.8"/>')
    for j, label in enumerate(spec.labels):
        color = _PALETTE[j % len(_PALETTE)]
        cy = box_y + 16 + 20 * j
        out.append(f'<line x1="{box_x + 8}" x2="{box_x + 36}" y1="{cy}" '
                   f'y2="{cy}" stroke="{color}" stroke-width="2.5"/>')
        out.append(f'<text class="legend" x="{box_x + 42}" y="{cy + 4}" '
                   f'font-size="13" {font}>{label}</text>')
    if spec.target_line:
        cy = box_y + 16 + 20 * len(spec.labels)
        out.append(f'<line x1="{box_x + 8}" x2="{box_x + 36}" y1="{cy}" '
                   f'y2="{cy}" stroke="#444" stroke-width="1.5" '
                   'stroke-dasharray="6 4"/>')
        out.append(f'<text class="legend" x="{box_x + 42}" y="{cy + 4}" '
                   f'font-size="13" {font}>target</text>')
    out.append('</svg>')

    out_path = Path(spec.out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text("\n".join(out) + "\n", encoding="utf-8")
    return out_path
