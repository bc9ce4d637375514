"""
Report Emission
Coefficient tables and error grids as CSV, structured JSON, and small SVG charts
"""

import json
import math
import os
from typing import Dict, List, Optional, Sequence, Union

import pandas as pd
from loguru import logger

from phsysid.core.errors import ConfigError

from .runner import ExperimentReport
from .sweeps import CELL_COLUMNS, SUMMARY_COLUMNS, SweepReport

FORMATS = ("csv", "json", "svg")
COEFFICIENT_COLUMNS = ["term", "truth", "learned", "abs_error"]
ERROR_COLUMNS = [
    "model", "mean", "median", "p25", "p75", "n_blowups", "extrapolation_error", "force_tracking_error",
]

SVG_WIDTH, SVG_HEIGHT, SVG_MARGIN = 640, 360, 40
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#17becf"]


def _write_csv(rows: List[Dict], columns: Sequence[str], path: str) -> None:
    frame = pd.DataFrame(rows, columns=list(columns))
    frame.to_csv(path, index=False, float_format="%.10g")


def _write_json(doc: Dict, path: str) -> None:
    with open(path, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True, allow_nan=False)
        f.write("\n")


def _grid_csv(grid: Dict, metric: str, path: str) -> None:
    header = f"{grid['row_name']}\\{grid['col_name']}"
    rows = [
        {header: row_value, **{str(col): value for col, value in zip(grid["cols"], values)}}
        for row_value, values in zip(grid["rows"], grid[metric])
    ]
    _write_csv(rows, [header] + [str(col) for col in grid["cols"]], path)


# SVG -----------------------------------------------------------------------


def _finite(values) -> List[float]:
    return [v for v in values if v is not None and math.isfinite(v)]


def _scale(lo: float, hi: float, size: float, flip: bool = False):
    span = hi - lo if hi > lo else 1.0
    inner = size - 2 * SVG_MARGIN

    def to_pixels(v: float) -> float:
        frac = (v - lo) / span
        return SVG_MARGIN + (1.0 - frac if flip else frac) * inner

    return to_pixels


def _svg(body: List[str], title: str) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" '
        f'viewBox="0 0 {SVG_WIDTH} {SVG_HEIGHT}">'
    )
    caption = f'<text x="{SVG_MARGIN}" y="{SVG_MARGIN / 2:.0f}" font-size="14">{title}</text>'
    return "\n".join([head, caption] + body + ["</svg>"]) + "\n"


def trajectory_svg(trajectory: Dict, title: str = "") -> str:
    """One polyline per state component for the true (solid) and the model (dashed) trajectory"""
    times = trajectory["times"]
    series = []
    for name, style in (("truth", ""), ("model", ' stroke-dasharray="6,3"')):
        states = trajectory[name]
        for i in range(len(trajectory["variables"])):
            series.append((name, i, [row[i] for row in states], style))
    values = _finite(v for _, _, column, _ in series for v in column)
    lo, hi = (min(values), max(values)) if values else (0.0, 1.0)
    x_of = _scale(times[0], times[-1], SVG_WIDTH)
    y_of = _scale(lo, hi, SVG_HEIGHT, flip=True)

    body = []
    for name, i, column, style in series:
        points = " ".join(
            f"{x_of(t):.2f},{y_of(v):.2f}" for t, v in zip(times, column) if v is not None and math.isfinite(v)
        )
        color = PALETTE[i % len(PALETTE)]
        label = f"{name} {trajectory['variables'][i]}"
        body.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{style} points="{points}">'
            f"<title>{label}</title></polyline>"
        )
    return _svg(body, title)


def bar_svg(labels: Sequence[str], values: Sequence[Optional[float]], title: str = "") -> str:
    """Bars for finite values; missing or infinite values are drawn as an empty slot"""
    finite = _finite(values)
    top = max(finite) if finite else 1.0
    y_of = _scale(0.0, top, SVG_HEIGHT, flip=True)
    width = (SVG_WIDTH - 2 * SVG_MARGIN) / max(1, len(values))
    body = []
    for k, (label, value) in enumerate(zip(labels, values)):
        x = SVG_MARGIN + k * width
        if value is not None and math.isfinite(value):
            y = y_of(value)
            body.append(
                f'<rect x="{x + 2:.2f}" y="{y:.2f}" width="{width - 4:.2f}" '
                f'height="{SVG_HEIGHT - SVG_MARGIN - y:.2f}" fill="{PALETTE[0]}"><title>{label}: {value:.4g}</title></rect>'
            )
        body.append(
            f'<text x="{x + width / 2:.2f}" y="{SVG_HEIGHT - SVG_MARGIN / 2:.0f}" font-size="9" '
            f'text-anchor="middle">{label}</text>'
        )
    return _svg(body, title)


def heatmap_svg(grid: Dict, metric: str, title: str = "") -> str:
    """Cells shaded by value (darker = larger), infinite or missing cells left white"""
    matrix = grid[metric]
    finite = _finite(v for row in matrix for v in row)
    lo, hi = (min(finite), max(finite)) if finite else (0.0, 1.0)
    n_rows, n_cols = len(matrix), len(grid["cols"])
    cell_w = (SVG_WIDTH - 2 * SVG_MARGIN) / max(1, n_cols)
    cell_h = (SVG_HEIGHT - 2 * SVG_MARGIN) / max(1, n_rows)
    body = []
    for i, row in enumerate(matrix):
        for j, value in enumerate(row):
            shade = 255
            if value is not None and math.isfinite(value):
                shade = int(round(255 - 200 * ((value - lo) / (hi - lo) if hi > lo else 0.0)))
            body.append(
                f'<rect x="{SVG_MARGIN + j * cell_w:.2f}" y="{SVG_MARGIN + i * cell_h:.2f}" width="{cell_w:.2f}" '
                f'height="{cell_h:.2f}" fill="rgb({shade},{shade},255)" stroke="#444">'
                f"<title>{grid['row_name']}={grid['rows'][i]}, {grid['col_name']}={grid['cols'][j]}: {value}</title></rect>"
            )
    return _svg(body, title)


# Emission --------------------------------------------------------------------


def _experiment_files(report: ExperimentReport, out_dir: str, formats: Sequence[str]) -> List[str]:
    written = []
    if "json" in formats:
        path = os.path.join(out_dir, "report.json")
        _write_json(report.to_dict(), path)
        written.append(path)
    if "csv" in formats:
        path = os.path.join(out_dir, "coefficients.csv")
        _write_csv([row.to_dict() for row in report.coefficients], COEFFICIENT_COLUMNS, path)
        written.append(path)
        path = os.path.join(out_dir, "errors.csv")
        errors = {
            "model": report.model_kind,
            **{k: report.errors.get(k) for k in ("mean", "median", "p25", "p75", "n_blowups")},
            "extrapolation_error": report.extrapolation_error,
            "force_tracking_error": report.force_tracking_error,
        }
        _write_csv([errors], ERROR_COLUMNS, path)
        written.append(path)
    if "svg" in formats and report.trajectory is not None:
        path = os.path.join(out_dir, "trajectories.svg")
        with open(path, "w") as f:
            f.write(trajectory_svg(report.trajectory, f"{report.name} ({report.model_kind})"))
        written.append(path)
    return written


def _sweep_files(report: SweepReport, out_dir: str, formats: Sequence[str]) -> List[str]:
    written = []
    if "json" in formats:
        path = os.path.join(out_dir, "sweep.json")
        _write_json(report.to_dict(), path)
        written.append(path)
    metrics = [k for k in ("error", "active_terms", "force_magnitude", "hamiltonian_error") if report.grid and k in report.grid]
    if "csv" in formats:
        if report.grid is None:
            for name, rows, columns in (("cells", report.cells, CELL_COLUMNS), ("summary", report.rows, SUMMARY_COLUMNS)):
                path = os.path.join(out_dir, f"{name}.csv")
                _write_csv(rows, columns, path)
                written.append(path)
        for metric in metrics:
            path = os.path.join(out_dir, f"{metric}_grid.csv")
            _grid_csv(report.grid, metric, path)
            written.append(path)
    if "svg" in formats:
        if report.grid is None:
            path = os.path.join(out_dir, "errors.svg")
            labels = [f"{row['integrator']} {row['budget']} s={row['sigma']:g}" for row in report.rows]
            with open(path, "w") as f:
                f.write(bar_svg(labels, [row["error_mean"] for row in report.rows], "mean trajectory error"))
            written.append(path)
        for metric in metrics:
            path = os.path.join(out_dir, f"{metric}_heatmap.svg")
            with open(path, "w") as f:
                f.write(heatmap_svg(report.grid, metric, metric))
            written.append(path)
    return written


def emit_report(
    report: Union[ExperimentReport, SweepReport],
    out_dir: str,
    formats: Sequence[str] = FORMATS,
) -> List[str]:
    """
    Write a report to a directory

    Wall-clock time goes to timing.json so the other files stay identical across reruns.

    Args:
        report: Experiment or sweep report
        out_dir: Output directory (created if missing)
        formats: Any of csv, json, svg

    Returns:
        Paths written
    """
    unknown = set(formats) - set(FORMATS)
    if unknown:
        raise ConfigError(f"unknown report formats {sorted(unknown)}, expected {FORMATS}")
    try:
        os.makedirs(out_dir, exist_ok=True)
        if isinstance(report, SweepReport):
            written = _sweep_files(report, out_dir, formats)
        else:
            written = _experiment_files(report, out_dir, formats)
        if report.wall_clock is not None:
            path = os.path.join(out_dir, "timing.json")
            _write_json({"wall_clock_seconds": report.wall_clock}, path)
            written.append(path)
    except OSError as exc:
        logger.error(f"Cannot write report to {out_dir}: {exc}")
        raise ConfigError(f"cannot write report to {out_dir}: {exc}") from exc
    logger.info(f"Wrote {len(written)} report files to {out_dir}")
    return written
