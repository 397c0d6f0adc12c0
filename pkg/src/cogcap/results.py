"""CSV/JSON result tables and SVG line plots.

Both writers are deterministic: identical rows and provenance give identical
bytes, which is what the reproducibility tests compare.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os

import numpy as np

from .errors import CogcapError, ParameterError
from .sir import ScenarioConfig

RESULT_COLUMNS = ("lambda_star_analytic", "lambda_star_mc", "ci_low", "ci_high",
                  "binding_constraint", "capacity", "trials", "master_seed", "wall_time_s")
SIGNIFICANT_DIGITS = 12


class OutputError(CogcapError, OSError):
    """An artifact could not be written."""


def columns() -> tuple[str, ...]:
    """Fixed column order: every ScenarioConfig field, then the result columns."""
    return tuple(ScenarioConfig.field_names()) + RESULT_COLUMNS


def format_number(value) -> str:
    """Text form used in CSV cells: 12 significant digits, empty for missing."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.{SIGNIFICANT_DIGITS}g}"
    return str(value)


def _json_value(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        # JSON has no nan/inf; null keeps the column present
        return float(f"{v:.{SIGNIFICANT_DIGITS}g}") if math.isfinite(v) else None
    return value


def _check_rows(rows):
    cols = columns()
    for i, row in enumerate(rows):
        unknown = set(row) - set(cols)
        if unknown:
            raise ParameterError(f"row {i} has unknown columns {sorted(unknown)}")
    return cols


def _provenance_lines(provenance):
    return [f"# {key}: {json.dumps(provenance[key], sort_keys=True, default=str)}"
            for key in sorted(provenance)]


def emit_results(rows, fmt: str, path, provenance: dict | None = None) -> str:
    """Write result rows as CSV or JSON.

    Parameters
    ----------
    rows : iterable of dicts keyed by :func:`columns`; missing keys are empty.
    fmt : ``"csv"`` or ``"json"``.
    path : destination file.
    provenance : written as ``# key: value`` comment lines (CSV) or under a
        ``"provenance"`` key (JSON).

    Returns
    -------
    The path written.
    """
    rows = list(rows)
    cols = _check_rows(rows)
    if fmt == "csv":
        buf = io.StringIO()
        for line in _provenance_lines(provenance or {}):
            buf.write(line + "\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(cols)
        for row in rows:
            writer.writerow([format_number(row.get(c)) for c in cols])
        text = buf.getvalue()
    elif fmt == "json":
        doc = {"provenance": provenance or {}, "columns": list(cols),
               "rows": [{c: _json_value(row.get(c)) for c in cols} for row in rows]}
        text = json.dumps(doc, indent=2, sort_keys=False, default=str) + "\n"
    else:
        raise ParameterError(f"unknown result format {fmt!r}")
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    return os.fspath(path)


def read_csv(path) -> list[dict]:
    """Rows of a CSV written by :func:`emit_results`, values left as strings."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def emit_plot(series, path, xlabel: str, ylabel: str, loglog: bool = False,
              title: str | None = None, provenance: dict | None = None) -> str:
    """Render line series to a standalone SVG.

    Parameters
    ----------
    series : list of ``(label, x, y)``; each needs at least two finite points.
    loglog : log axes; each series is annotated with its fitted slope.

    Raises
    ------
    ParameterError
        For empty input, too few points, a zero-width x range, or non-positive
        values on log axes.
    """
    import matplotlib

    matplotlib.use("Agg")
    from matplotlib.backends.backend_svg import FigureCanvasSVG
    from matplotlib.figure import Figure

    from .analytic import fit_scaling_exponent

    if not series:
        raise ParameterError("nothing to plot")
    cleaned = []
    for label, x, y in series:
        x, y = np.asarray(x, float), np.asarray(y, float)
        if x.shape != y.shape:
            raise ParameterError(f"series {label!r}: x and y lengths differ")
        keep = np.isfinite(x) & np.isfinite(y)
        if loglog:
            keep &= (x > 0) & (y > 0)
        if keep.sum() < 2:
            raise ParameterError(f"series {label!r} needs at least two plottable points")
        x, y = x[keep], y[keep]
        if np.ptp(x) == 0:
            raise ParameterError(f"series {label!r} has a degenerate x range")
        cleaned.append((str(label), x, y))

    with matplotlib.rc_context({"svg.hashsalt": "cogcap", "svg.fonttype": "none"}):
        fig = Figure(figsize=(6, 4.2))
        FigureCanvasSVG(fig)
        ax = fig.add_subplot()
        for label, x, y in cleaned:
            text = label
            if loglog and len(x) >= 3:
                slope = fit_scaling_exponent(np.column_stack((x, y)))[0]
                text = f"{label} (slope {slope:.2f})"
            ax.plot(x, y, marker="o", ms=3, label=text)
        if loglog:
            ax.set_xscale("log")
            ax.set_yscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=8)
        fig.tight_layout()
        meta = {"Date": None, "Creator": "cogcap"}
        if provenance:
            meta["Description"] = json.dumps(provenance, sort_keys=True, default=str)
        try:
            fig.savefig(path, format="svg", metadata=meta)
        except OSError as exc:
            raise OutputError(f"cannot write {path}: {exc}") from exc
    return os.fspath(path)
