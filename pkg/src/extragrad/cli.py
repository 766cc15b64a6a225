"""Command-line front end: run benchmarks, print spectral reports, emit
heatmap grids, execute the verification suites, and sweep parameter grids.

Outputs are deterministic for a fixed config and seed list; the manifest
records a sha256 per emitted file.  EXTRAGRAD_THREADS overrides --threads.
"""

from __future__ import annotations

import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click
import numpy as np

from .config import ConfigError, ExperimentConfig, build_problem, load_config
from .records import (
    fmt_float,
    run_record_to_csv,
    sha256_of,
    write_heatmap_files,
    write_manifest,
    write_run_files,
)
from .solvers import (
    Method,
    MethodConfig,
    RunRecord,
    StochasticObjective,
    fit_contraction_factor,
    nonconvex_eg_run,
    run,
)
from .spectral import (
    HEATMAP_MODES,
    corollary_stepsizes,
    default_heatmap_grid,
    eg_contraction_factor,
    heatmap_grid,
)
from . import verify as verify_mod


def _threads(value: int) -> int:
    env = os.environ.get("EXTRAGRAD_THREADS")
    if env is not None:
        try:
            value = int(env)
        except ValueError:
            raise click.UsageError(f"EXTRAGRAD_THREADS must be an integer, got {env!r}")
    return max(1, value)


def _parse_range(spec: str, name: str):
    parts = spec.split(":")
    if len(parts) != 3:
        raise click.UsageError(f"--{name} must look like lo:hi:steps, got {spec!r}")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise click.UsageError(f"--{name} must look like lo:hi:steps, got {spec!r}")
    if n < 2:
        raise click.UsageError(f"--{name} needs at least 2 steps")
    return lo, hi, n


@click.group()
def main():
    """Stochastic extragradient benchmark and verification toolkit."""


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------

def _execute_one(problem, method_cfg: MethodConfig, seed: int, stride: int) -> RunRecord:
    cfg = method_cfg.replace_seed(seed)
    if isinstance(problem, StochasticObjective):
        x0 = np.random.default_rng(seed).normal(size=problem.dim)
        rec = nonconvex_eg_run(problem, x0, eta=cfg.eta1, iterations=cfg.iterations,
                               seed=seed)
        return RunRecord(config=cfg, ts=list(range(len(rec.grad_norm_sq))),
                         dist_sq=None,
                         op_norm=[float(np.sqrt(v)) for v in rec.grad_norm_sq],
                         diverged=rec.diverged,
                         diverged_at=len(rec.grad_norm_sq) - 1 if rec.diverged else None,
                         x_final=rec.x_final)
    return run(problem, cfg, stride=stride)


@main.command("run")
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False), help="JSON experiment config.")
@click.option("--out", "out_dir", default=None, help="Output directory (overrides config).")
@click.option("--seeds", "seeds_opt", default=None,
              help="Comma-separated seed list (overrides config).")
@click.option("--threads", default=1, show_default=True, help="Worker threads for the run grid.")
@click.option("--format", "fmt", type=click.Choice(["csv", "jsonl", "both"]), default="both",
              show_default=True, help="Output formats (overrides config).")
def cmd_run(config_path, out_dir, seeds_opt, threads, fmt):
    """Run every configured method for every seed; emit data files + manifest."""
    try:
        cfg = load_config(config_path)
    except ConfigError as e:
        raise click.UsageError(str(e))
    if seeds_opt is not None:
        try:
            cfg.seeds = [int(s) for s in seeds_opt.split(",") if s.strip()]
        except ValueError:
            raise click.UsageError(f"--seeds must be comma-separated integers, got {seeds_opt!r}")
        if not cfg.seeds:
            raise click.UsageError("--seeds produced an empty list")
    if out_dir is not None:
        cfg.output.directory = out_dir
    if fmt != "both":
        cfg.output.formats = (fmt,)
    problem = build_problem(cfg.problem)
    if isinstance(problem, StochasticObjective):
        bad = [m.method.value for m in cfg.methods if m.method != Method.SEG_SAME]
        if bad:
            raise click.UsageError(
                f"nonconvex problems support only method 'seg_same' (extragradient on "
                f"gradients); got {bad}")
    directory = Path(cfg.output.directory)
    directory.mkdir(parents=True, exist_ok=True)

    jobs = [(mi, m, seed) for mi, m in enumerate(cfg.methods) for seed in cfg.seeds]
    workers = _threads(threads)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        records = list(pool.map(
            lambda job: _execute_one(problem, job[1], job[2], cfg.output.checkpoint_stride),
            jobs))

    entries = []
    for (mi, m, seed), rec in zip(jobs, records):
        base = directory / f"{m.method.value}-{mi:02d}_seed{seed}"
        paths = write_run_files(rec, base, formats=cfg.output.formats,
                                problem_desc=cfg.problem)
        entry = {"method": m.method.value, "method_index": mi, "seed": seed,
                 "diverged": rec.diverged}
        for kind, p in paths.items():
            entry[kind] = p.name
            entry[f"{kind}_sha256"] = sha256_of(p)
        entries.append(entry)
        status = "diverged" if rec.diverged else "ok"
        click.echo(f"{base.name}: {status} ({len(rec.ts)} checkpoints)")
    manifest = write_manifest(directory / "manifest.json", entries, cfg.to_dict())
    click.echo(f"manifest: {manifest}")


# ---------------------------------------------------------------------------
# spectra
# ---------------------------------------------------------------------------

def _load_matrix(path: str) -> np.ndarray:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(doc, dict):
        doc = doc.get("B")
    B = np.asarray(doc, dtype=float)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise click.UsageError(f"matrix file {path} must hold a square matrix")
    return B


@main.command("spectra")
@click.option("--sigma-max", type=float, default=None, help="Largest singular value of B.")
@click.option("--sigma-min", type=float, default=None, help="Smallest singular value of B.")
@click.option("--b-file", type=click.Path(exists=True, dir_okay=False), default=None,
              help="JSON file with the matrix B (inline row-major array).")
@click.option("--eta1", type=float, default=None, help="Extrapolation stepsize.")
@click.option("--eta2", type=float, default=None, help="Update stepsize.")
@click.option("--case", type=click.Choice(["1", "2"]), default=None,
              help="Corollary stepsize preset (instead of --eta1/--eta2).")
@click.option("--out", "out_path", default=None, help="Write the report JSON here.")
def cmd_spectra(sigma_max, sigma_min, b_file, eta1, eta2, case, out_path):
    """Contraction-factor report for a bilinear problem."""
    if b_file is not None:
        sigmas = _load_matrix(b_file)
    elif sigma_max is not None:
        if sigma_max <= 0:
            raise click.UsageError("--sigma-max must be positive")
        smin = sigma_max if sigma_min is None else sigma_min
        if smin < 0 or smin > sigma_max:
            raise click.UsageError("--sigma-min must lie in [0, sigma_max]")
        sigmas = (sigma_max, smin)
    else:
        raise click.UsageError("provide --b-file or --sigma-max")
    corollary_case = None
    if case is not None:
        corollary_case = int(case)
        eta1, eta2 = corollary_stepsizes(sigmas, corollary_case)
    if eta1 is None or eta2 is None:
        raise click.UsageError("provide --eta1 and --eta2, or --case")
    if eta1 < 0 or eta2 < 0:
        raise click.UsageError("stepsizes must be nonnegative")
    report = eg_contraction_factor(sigmas, eta1, eta2, corollary_case=corollary_case)
    for key, val in report.to_dict().items():
        click.echo(f"{key:>22}: {val}")
    payload = json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n"
    if out_path is not None:
        Path(out_path).write_text(payload, encoding="utf-8")
        click.echo(f"report: {out_path}")


# ---------------------------------------------------------------------------
# heatmap
# ---------------------------------------------------------------------------

@main.command("heatmap")
@click.option("--mode", type=click.Choice(HEATMAP_MODES), required=True)
@click.option("--axis1", default=None, help="lo:hi:steps for the first (beta) axis.")
@click.option("--axis2", default=None, help="lo:hi:steps for the second axis.")
@click.option("--steps", default=100, show_default=True,
              help="Grid size when axes are not given explicitly.")
@click.option("--fixed-etasigma", type=float, default=0.01, show_default=True,
              help="eta*sigma for the beta1-vs-beta2 mode.")
@click.option("--out", "out_base", required=True,
              help="Base path; writes <out>.csv and <out>.mask.csv.")
def cmd_heatmap(mode, axis1, axis2, steps, fixed_etasigma, out_base):
    """Spectral-radius ratio grid rho(T(.., beta)) / rho(T(.., 0)) as CSV + mask."""
    if axis1 is None and axis2 is None:
        grid = default_heatmap_grid(mode, steps=steps)
        prev_fixed = grid.fixed.get("etasigma")
        if mode == "beta1_vs_beta2_at_fixed_etasigma" and fixed_etasigma != prev_fixed:
            grid = heatmap_grid(mode, grid.axis1, grid.axis2, fixed_etasigma=fixed_etasigma)
    else:
        if axis1 is None or axis2 is None:
            raise click.UsageError("give both --axis1 and --axis2, or neither")
        a1 = np.linspace(*_parse_range(axis1, "axis1")[:2], _parse_range(axis1, "axis1")[2])
        a2 = np.linspace(*_parse_range(axis2, "axis2")[:2], _parse_range(axis2, "axis2")[2])
        grid = heatmap_grid(mode, a1, a2, fixed_etasigma=fixed_etasigma)
    paths = write_heatmap_files(grid, Path(out_base))
    n_div = int(grid.diverges.sum())
    click.echo(f"grid {grid.ratios.shape[0]}x{grid.ratios.shape[1]}, "
               f"{n_div} divergent cells")
    click.echo(f"ratios: {paths['ratios']}")
    click.echo(f"mask:   {paths['mask']}")


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

@main.command("verify")
@click.option("--suite", default="all", show_default=True,
              help=f"One of {sorted(verify_mod.SUITES)} or 'all'.")
@click.option("--out", "out_dir", default="verification", show_default=True,
              help="Directory for the JSONL + text reports.")
@click.option("--quick", is_flag=True, help="Scaled-down instances for a fast smoke pass.")
def cmd_verify(suite, out_dir, quick):
    """Run the theorem verification suites; exit nonzero if any check fails."""
    if suite == "all":
        names = list(verify_mod.SUITES)
    elif suite in verify_mod.SUITES:
        names = [suite]
    else:
        raise click.UsageError(
            f"unknown suite {suite!r}; choose from {sorted(verify_mod.SUITES)} or 'all'")
    reports = []
    for name in names:
        click.echo(f"running {name} ...", nl=False)
        rep = verify_mod.run_suite(name, quick=quick)
        click.echo(" pass" if rep.passed else " FAIL")
        reports.append(rep)
    path = verify_mod.write_reports(reports, Path(out_dir))
    click.echo("")
    click.echo(verify_mod.summary_table(reports))
    click.echo(f"\nreports: {path}")
    if not all(r.passed for r in reports):
        sys.exit(1)


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

@main.command("sweep")
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Experiment config; the first method entry is the sweep base.")
@click.option("--mode", type=click.Choice(["stepsize", "momentum"]), required=True)
@click.option("--a-range", required=True, help="lo:hi:steps for eta1 (or beta1).")
@click.option("--b-range", required=True, help="lo:hi:steps for eta2 (or beta2).")
@click.option("--log", "log_axes", is_flag=True,
              help="Geometric spacing (stepsize mode only).")
@click.option("--threads", default=1, show_default=True)
@click.option("--out", "out_path", default="sweep.csv", show_default=True)
def cmd_sweep(config_path, mode, a_range, b_range, log_axes, threads, out_path):
    """Grid a pair of stepsizes or momenta over a fixed problem; emit one CSV."""
    try:
        cfg = load_config(config_path)
    except ConfigError as e:
        raise click.UsageError(str(e))
    problem = build_problem(cfg.problem)
    if isinstance(problem, StochasticObjective):
        raise click.UsageError("sweep requires a VI or bilinear problem")
    base = cfg.methods[0]

    def axis(spec, name):
        lo, hi, n = _parse_range(spec, name)
        if log_axes:
            if mode != "stepsize":
                raise click.UsageError("--log applies to stepsize sweeps only")
            if lo <= 0 or hi <= 0:
                raise click.UsageError(f"--{name} must be positive for --log")
            return np.geomspace(lo, hi, n)
        return np.linspace(lo, hi, n)

    avals = axis(a_range, "a-range")
    bvals = axis(b_range, "b-range")

    def one(params):
        a, b = params
        if mode == "stepsize":
            if a <= 0 or b <= 0:
                raise click.UsageError("stepsizes must be positive in the sweep ranges")
            m = MethodConfig(method=base.method, eta1=a, eta2=b, beta1=base.beta1,
                             beta2=base.beta2, k=base.k, seed=base.seed,
                             iterations=base.iterations, averaging=base.averaging)
        else:
            if not (-1 < a < 1 and -1 < b < 1):
                raise click.UsageError("momenta must lie in (-1, 1) in the sweep ranges")
            m = MethodConfig(method=Method.MOMENTUM_EG, eta1=base.eta1, eta2=base.eta2,
                             beta1=a, beta2=b, seed=base.seed,
                             iterations=base.iterations, averaging=base.averaging)
        rec = run(problem, m)
        series = rec.dist_sq if rec.dist_sq is not None else rec.op_norm
        final = series[-1]
        try:
            factor = fit_contraction_factor(rec.ts, series)
        except ValueError:
            factor = None
        return a, b, final, factor, rec.diverged

    grid = [(a, b) for a in avals for b in bvals]
    workers = _threads(threads)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(one, grid))

    names = ("eta1", "eta2") if mode == "stepsize" else ("beta1", "beta2")
    lines = [f"{names[0]},{names[1]},final_dist_sq,fitted_factor,diverged"]
    for a, b, final, factor, diverged in rows:
        lines.append(",".join([fmt_float(a), fmt_float(b), fmt_float(final),
                               fmt_float(factor) if factor is not None else "",
                               "1" if diverged else "0"]))
    Path(out_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    click.echo(f"sweep: {len(rows)} cells -> {out_path}")


if __name__ == "__main__":
    main()
