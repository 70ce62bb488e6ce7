"""Read trace CSV files and render the catalogued figures as PNGs.

Rendering is read-only over the CSV and idempotent; the same trace and
figure id always produce the same image file name and content layout.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .spec import FIGURES, FigureSpec


class TraceSchemaError(ValueError):
    """The CSV is missing a column the requested figure needs."""


def read_trace_columns(path) -> dict[str, np.ndarray]:
    """Trace CSV as a column dict; vector columns keep their _i suffixes."""
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip()
    if not header:
        raise TraceSchemaError(f"{path}: empty trace file")
    names = header.split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != len(names):
        raise TraceSchemaError(
            f"{path}: header names {len(names)} columns, rows carry {data.shape[1]}"
        )
    return {name: data[:, j] for j, name in enumerate(names)}


def _series_components(columns: dict[str, np.ndarray], name: str):
    """All components of a signal: the bare column or its _0.._k expansion."""
    if name in columns:
        return [(name, columns[name])]
    expanded = []
    i = 0
    while f"{name}_{i}" in columns:
        expanded.append((f"{name}_{i}", columns[f"{name}_{i}"]))
        i += 1
    return expanded


def figure_spec(figure_id: int) -> FigureSpec:
    if figure_id not in FIGURES:
        raise KeyError(f"unknown figure id {figure_id}; known: {sorted(FIGURES)}")
    return FIGURES[figure_id]


def render(trace_csv, figure_id: int, out) -> Path:
    """Render one catalogued figure from a trace CSV to an image file."""
    spec = figure_spec(figure_id)
    columns = read_trace_columns(trace_csv)
    for required in spec.required_columns:
        if not _series_components(columns, required):
            raise TraceSchemaError(
                f"{trace_csv}: missing column {required!r} required by figure {figure_id}"
            )
    t = columns["t"]

    fig, ax = plt.subplots(figsize=(7.0, 3.6))
    for series in spec.series:
        components = _series_components(columns, series.column)
        for name, values in components:
            label = series.label if len(components) == 1 else f"{series.label}[{name}]"
            ax.plot(t, values, color=series.color, linestyle=series.linestyle,
                    linewidth=1.2, label=label)
    ax.set_xlabel("time [s]")
    ax.set_ylabel(spec.ylabel)
    ax.set_title(spec.title)
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best", framealpha=0.9)
    fig.tight_layout()

    out = Path(out)
    if out.suffix:  # explicit file target
        target = out
        target.parent.mkdir(parents=True, exist_ok=True)
    else:  # directory target: derive the conventional name
        out.mkdir(parents=True, exist_ok=True)
        target = out / f"fig{figure_id}_{spec.slug}.png"
    fig.savefig(target, dpi=150)
    plt.close(fig)
    return target
