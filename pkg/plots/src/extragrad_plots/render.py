"""Render extragrad CSV outputs to PNG figures.

Reads only the documented CSV schemas (run files: ``t,dist_sq,op_norm[,gap]``;
heatmaps: one header row of axis values, one leading column of row values,
plus a parallel 0/1 mask file).  Rendering is a pure function of the input
files and the spec: fixed styles, fixed dpi, pinned PNG metadata, no
timestamps, so identical inputs give byte-identical images.
"""

from __future__ import annotations

import csv
import glob as globmod
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

PNG_METADATA = {"Software": "extragrad-plots"}

STYLE = {
    "figure.figsize": (6.4, 4.2),
    "figure.dpi": 120,
    "savefig.dpi": 120,
    "axes.grid": True,
    "grid.color": "#cccccc",
    "grid.linestyle": "--",
    "grid.linewidth": 0.6,
    "legend.fontsize": 9,
    "axes.labelsize": 11,
    "axes.titlesize": 12,
}


class PlotDataError(ValueError):
    """Input files missing, malformed, or mutually inconsistent."""


@dataclass
class PlotSpec:
    """What to render: input files, kind, labels, output path."""

    inputs: list
    kind: str  # "curves" | "heatmap"
    out: str
    title: Optional[str] = None
    xlabel: Optional[str] = None
    ylabel: Optional[str] = None
    mask: Optional[str] = None  # heatmap only; defaults to <input>.mask.csv
    manifest: Optional[str] = None  # curves only; labels from the run manifest
    logy: bool = True

    def __post_init__(self):
        if self.kind not in ("curves", "heatmap"):
            raise PlotDataError(f"unknown plot kind {self.kind!r}")
        missing = [p for p in self.inputs if not Path(p).is_file()]
        if missing:
            raise PlotDataError(f"input files do not exist: {missing}")


def resolve_glob(pattern: str) -> list:
    paths = sorted(globmod.glob(pattern))
    if not paths:
        raise PlotDataError(f"no files match {pattern!r}")
    return paths


# ---------------------------------------------------------------------------
# run-file curves
# ---------------------------------------------------------------------------

def read_run_csv(path):
    """Parse one run CSV into (t, dist_sq) arrays, skipping empty cells."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise PlotDataError(f"{path}: empty file")
        if "t" not in header or "dist_sq" not in header:
            raise PlotDataError(f"{path}: need columns 't' and 'dist_sq', got {header}")
        t_col = header.index("t")
        d_col = header.index("dist_sq")
        ts, vals = [], []
        for row in reader:
            if not row or row[d_col] == "":
                continue
            ts.append(int(row[t_col]))
            vals.append(float(row[d_col]))
    if not ts:
        raise PlotDataError(f"{path}: no dist_sq values to plot")
    return np.asarray(ts), np.asarray(vals)


def labels_from_manifest(manifest_path, paths) -> dict:
    """Map csv file name -> 'method seed=k' using the run manifest."""
    labels = {}
    try:
        doc = json.loads(Path(manifest_path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise PlotDataError(f"cannot read manifest {manifest_path}: {e}")
    for entry in doc.get("runs", []):
        if "csv" in entry:
            labels[entry["csv"]] = f"{entry['method']} seed={entry['seed']}"
    return {p: labels.get(Path(p).name, Path(p).stem) for p in paths}


def plot_curves(spec: PlotSpec) -> dict:
    """Log-scale convergence curves, one per input CSV.

    Returns {label: (t, dist_sq)} of the plotted series; points with
    dist_sq <= 0 (underflow) are dropped from the drawing but kept in the
    returned arrays.
    """
    if spec.manifest is not None:
        labels = labels_from_manifest(spec.manifest, spec.inputs)
    else:
        candidate = Path(spec.inputs[0]).parent / "manifest.json"
        if candidate.is_file():
            labels = labels_from_manifest(candidate, spec.inputs)
        else:
            labels = {p: Path(p).stem for p in spec.inputs}
    series = {}
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for path in spec.inputs:
            ts, vals = read_run_csv(path)
            label = labels[path]
            series[label] = (ts, vals)
            pos = vals > 0
            ax.plot(ts[pos], vals[pos], linewidth=1.4, label=label)
        if spec.logy:
            ax.set_yscale("log")
        ax.set_xlabel(spec.xlabel or "iteration")
        ax.set_ylabel(spec.ylabel or "squared distance to solution")
        if spec.title:
            ax.set_title(spec.title)
        ax.legend(loc="best")
        fig.tight_layout()
        fig.savefig(spec.out, metadata=PNG_METADATA)
        plt.close(fig)
    return series


# ---------------------------------------------------------------------------
# heatmap
# ---------------------------------------------------------------------------

def read_matrix_csv(path):
    """Parse a heatmap CSV into (axis1_name, axis1, axis2_name, axis2, cells)."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or len(rows) < 2:
        raise PlotDataError(f"{path}: not a matrix CSV")
    corner = rows[0][0]
    if "\\" in corner:
        axis2_name, axis1_name = corner.split("\\", 1)
    else:
        axis2_name, axis1_name = "axis2", "axis1"
    try:
        axis1 = np.array([float(v) for v in rows[0][1:]])
        axis2 = np.array([float(r[0]) for r in rows[1:]])
        cells = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    except (ValueError, IndexError) as e:
        raise PlotDataError(f"{path}: malformed matrix CSV ({e})")
    if cells.shape != (len(axis2), len(axis1)):
        raise PlotDataError(f"{path}: ragged matrix")
    return axis1_name, axis1, axis2_name, axis2, cells


def plot_heatmap(spec: PlotSpec) -> dict:
    """Ratio colormap with divergent cells masked dark.

    Returns the parsed grid: axis names/values, ratio cells, and mask.
    """
    if len(spec.inputs) != 1:
        raise PlotDataError(f"heatmap takes exactly one matrix CSV, got {len(spec.inputs)}")
    matrix_path = Path(spec.inputs[0])
    mask_path = Path(spec.mask) if spec.mask else matrix_path.with_suffix(".mask.csv")
    if not mask_path.is_file():
        raise PlotDataError(f"mask file not found: {mask_path}")
    a1n, a1, a2n, a2, ratios = read_matrix_csv(matrix_path)
    _, m1, _, m2, mask_cells = read_matrix_csv(mask_path)
    if mask_cells.shape != ratios.shape:
        raise PlotDataError(
            f"mask shape {mask_cells.shape} does not match matrix {ratios.shape}")
    mask = mask_cells != 0
    shown = np.ma.masked_array(ratios, mask=mask)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        cmap = plt.get_cmap("viridis").copy()
        cmap.set_bad("black")
        mesh = ax.pcolormesh(a1, a2, shown, cmap=cmap, shading="nearest")
        fig.colorbar(mesh, ax=ax, label="spectral radius ratio vs beta = 0")
        ax.set_xlabel(spec.xlabel or a1n)
        ax.set_ylabel(spec.ylabel or a2n)
        if spec.title:
            ax.set_title(spec.title)
        fig.tight_layout()
        fig.savefig(spec.out, metadata=PNG_METADATA)
        plt.close(fig)
    return {"axis1_name": a1n, "axis1": a1, "axis2_name": a2n, "axis2": a2,
            "ratios": ratios, "mask": mask}


def render(spec: PlotSpec):
    if spec.kind == "curves":
        return plot_curves(spec)
    return plot_heatmap(spec)
