"""CSV, manifest and plot-script output with all-or-nothing writes."""

from __future__ import annotations

import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np


def fmt(value) -> str:
    """Round-trip safe text for a CSV cell (17 significant digits for floats)."""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def atomic_write(path, data: bytes | str) -> Path:
    """Write to a temporary file next to ``path`` and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    raw = data.encode() if isinstance(data, str) else data
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(raw)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    return buf.getvalue()


def manifest_path(csv_path) -> Path:
    p = Path(csv_path)
    return p.with_name(p.name + ".manifest.json")


def plot_script_path(csv_path) -> Path:
    p = Path(csv_path)
    return p.with_name(p.name + ".gp")


def gnuplot_script(csv_path, x: str, ys: list[str], header: list[str], logy: bool = False,
                   group: str | None = None, groups: list[str] | None = None) -> str:
    """A gnuplot script that plots columns ``ys`` against ``x`` from the CSV."""
    name = Path(csv_path).name
    col = {h: i + 1 for i, h in enumerate(header)}
    lines = [
        "set datafile separator ','",
        "set key autotitle columnhead",
        f"set xlabel '{x}'",
        f"set terminal pngcairo size 800,600",
        f"set output '{Path(name).stem}.png'",
    ]
    if logy:
        lines.append("set logscale y")
    plots = []
    if group and groups:
        for g in groups:
            for y in ys:
                plots.append(
                    f"'{name}' using {col[x]}:(strcol({col[group]}) eq '{g}' ? ${col[y]} : 1/0) "
                    f"with linespoints title '{y} ({g})'"
                )
    else:
        plots = [f"'{name}' using {col[x]}:{col[y]} with linespoints title '{y}'" for y in ys]
    lines.append("plot " + ", \\\n     ".join(plots))
    return "\n".join(lines) + "\n"


def write_outputs(csv_path, header, rows, manifest: dict, plot: str | None = None) -> dict:
    """Write the CSV, its manifest and (optionally) its plot script.

    Everything is rendered in memory first so a failure leaves no file
    behind.
    """
    csv_path = Path(csv_path)
    text = csv_text(header, rows)
    paths = {"csv": str(csv_path), "manifest": str(manifest_path(csv_path))}
    if plot is not None:
        paths["plot"] = str(plot_script_path(csv_path))
    body = json.dumps({**manifest, "outputs": paths}, indent=2, sort_keys=True, default=str) + "\n"
    atomic_write(csv_path, text)
    if plot is not None:
        atomic_write(paths["plot"], plot)
    atomic_write(paths["manifest"], body)
    return paths
