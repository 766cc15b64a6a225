"""Serialization of run records, spectral reports and heatmap grids.

All writers are deterministic: floats use Python's shortest round-trip repr,
JSON keys are sorted, and no timestamps are embedded, so identical inputs
produce byte-identical files.  CSV is UTF-8 with a header row, '.' decimal
and '\\n' line endings.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Optional

import numpy as np

from .solvers import MethodConfig, RunRecord
from .spectral import HeatmapGrid


def fmt_float(v) -> str:
    if v is None:
        return ""
    return repr(float(v))


def run_csv_header(record: RunRecord) -> str:
    cols = ["t", "dist_sq", "op_norm"]
    if "gap" in record.extras:
        cols.append("gap")
    return ",".join(cols)


def run_record_to_csv(record: RunRecord) -> str:
    lines = [run_csv_header(record)]
    has_gap = "gap" in record.extras
    for i, t in enumerate(record.ts):
        row = [str(int(t)),
               fmt_float(record.dist_sq[i]) if record.dist_sq is not None else "",
               fmt_float(record.op_norm[i])]
        if has_gap:
            row.append(fmt_float(record.extras["gap"][i]))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def _config_dict(cfg: MethodConfig) -> dict:
    return {
        "method": cfg.method.value,
        "eta1": cfg.eta1,
        "eta2": cfg.eta2,
        "beta1": cfg.beta1,
        "beta2": cfg.beta2,
        "k": cfg.k,
        "seed": cfg.seed,
        "iterations": cfg.iterations,
        "averaging": cfg.averaging,
    }


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=True)


def run_record_to_jsonl(record: RunRecord, problem_desc: Optional[dict] = None) -> str:
    """One header object with config and seed, then one object per checkpoint."""
    header = {
        "record": "header",
        "config": _config_dict(record.config),
        "diverged": record.diverged,
        "diverged_at": record.diverged_at,
    }
    if problem_desc is not None:
        header["problem"] = problem_desc
    lines = [_dumps(header)]
    has_gap = "gap" in record.extras
    for i, t in enumerate(record.ts):
        point = {"record": "point", "t": int(t), "op_norm": float(record.op_norm[i])}
        if record.dist_sq is not None:
            point["dist_sq"] = float(record.dist_sq[i])
        if has_gap:
            point["gap"] = float(record.extras["gap"][i])
        lines.append(_dumps(point))
    return "\n".join(lines) + "\n"


def write_run_files(record: RunRecord, base: Path, formats=("csv", "jsonl"),
                    problem_desc: Optional[dict] = None) -> dict:
    """Write <base>.csv / <base>.jsonl and return {format: path}."""
    base = Path(base)
    base.parent.mkdir(parents=True, exist_ok=True)
    out = {}
    if "csv" in formats:
        p = base.with_suffix(".csv")
        p.write_text(run_record_to_csv(record), encoding="utf-8")
        out["csv"] = p
    if "jsonl" in formats:
        p = base.with_suffix(".jsonl")
        p.write_text(run_record_to_jsonl(record, problem_desc), encoding="utf-8")
        out["jsonl"] = p
    return out


def sha256_of(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(path: Path, entries: list, config_dict: dict) -> Path:
    """Manifest of emitted files with content hashes."""
    path = Path(path)
    doc = {
        "schema": "extragrad-run-manifest-v1",
        "config": config_dict,
        "runs": entries,
    }
    path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# heatmap CSV
# ---------------------------------------------------------------------------

def heatmap_to_csv(grid: HeatmapGrid, values: np.ndarray, cell_fmt=fmt_float) -> str:
    """Matrix CSV: header row of axis1 values, first column of axis2 values."""
    corner = f"{grid.axis2_name}\\{grid.axis1_name}"
    lines = [",".join([corner] + [fmt_float(v) for v in grid.axis1])]
    for i, a2 in enumerate(grid.axis2):
        lines.append(",".join([fmt_float(a2)] + [cell_fmt(v) for v in values[i]]))
    return "\n".join(lines) + "\n"


def write_heatmap_files(grid: HeatmapGrid, base: Path) -> dict:
    """Write <base>.csv (ratios) and <base>.mask.csv (1 = diverges)."""
    base = Path(base)
    base.parent.mkdir(parents=True, exist_ok=True)
    ratio_path = base.with_suffix(".csv")
    ratio_path.write_text(heatmap_to_csv(grid, grid.ratios), encoding="utf-8")
    mask_path = base.with_suffix(".mask.csv")
    mask_path.write_text(
        heatmap_to_csv(grid, grid.diverges, cell_fmt=lambda v: str(int(v))),
        encoding="utf-8")
    return {"ratios": ratio_path, "mask": mask_path}
