"""Acceptance criteria, one test per criterion, with stated tolerances and
runtime budgets.  Each test prints a single pass/fail line; run with

    pytest tests/test_acceptance.py -v -s
"""

import json
import time
from pathlib import Path

import numpy as np
from click.testing import CliRunner

from extragrad.cli import main as cli_main
from extragrad.verify import (
    check_fig1,
    check_lemma1,
    check_momentum_rates,
    check_operator_properties,
    check_theorem1,
    check_theorem2,
    check_theorem3,
    check_theorem4,
    check_theorem5,
)


def _report(name: str, rep, elapsed: float, budget: float):
    verdict = "PASS" if (rep.passed and elapsed < budget) else "FAIL"
    print(f"criterion {name}: {verdict} ({elapsed:.1f}s / budget {budget:.0f}s)")
    for note in rep.notes:
        print(f"    {note}")
    failing = [c for c in rep.checkpoints if not c.get("ok")]
    assert rep.passed, f"criterion {name} failed checkpoints: {failing}"
    assert elapsed < budget, f"criterion {name} took {elapsed:.1f}s, budget {budget}s"


def test_criterion_1_theorem1_approximation():
    # 100 random affine monotone instances, d=8, etaL in {0.1, 0.5, 0.9}, k=1..5,
    # additive tolerance 1e-10, w from an independent direct linear solve
    t0 = time.perf_counter()
    rep = check_theorem1(n_instances=100, d=8, eta_l_targets=(0.1, 0.5, 0.9), k_max=5)
    _report("1 (theorem 1 suite)", rep, time.perf_counter() - t0, 5.0)


def test_criterion_2_theorem4_exactness():
    # 50 random bilinear instances (m <= 20), preset stepsizes: rate fit within
    # 1e-3, operator-norm oracle within 1e-9, planted case 0.75 +- 1e-6
    t0 = time.perf_counter()
    rep = check_theorem4(n_instances=50, m_max=20, fit_tol=1e-3, matrix_tol=1e-9)
    _report("2 (theorem 4 exactness)", rep, time.perf_counter() - t0, 30.0)


def test_criterion_3_theorem2_envelope():
    # eta = 1/(2L), 100 seeds, every checkpoint within bound + 3 SE; sigma^2 = 0
    # reaches dist^2 <= 1e-12 within 1e4 iterations
    t0 = time.perf_counter()
    rep = check_theorem2(n_seeds=100, zero_noise_iterations=10_000)
    _report("3 (theorem 2 envelope)", rep, time.perf_counter() - t0, 60.0)


def test_criterion_4_fig1_qualitative():
    # zero-noise finite-sum bilinear (n=10, joint dimension 20): same-sample
    # converges below 1e-12 while sgda and independent sampling blow up 10x
    t0 = time.perf_counter()
    rep = check_fig1(m=10, n=10, iterations=10_000)
    _report("4 (qualitative benchmark)", rep, time.perf_counter() - t0, 30.0)


def test_criterion_5_momentum_spectral_agreement():
    # 20 random draws with rho < 0.99 matched within 1e-2; beta = 0 ratio is
    # exactly 1.0; per-row optimal beta2 within 0.1 of -0.3 on [0.3, 0.7]
    t0 = time.perf_counter()
    rep = check_momentum_rates(n_draws=20, iterations=5000, rate_tol=1e-2)
    _report("5 (momentum spectral)", rep, time.perf_counter() - t0, 60.0)


def test_criterion_6_theorem5_bound():
    # quadratic + quartic, eta = 1/(4L), 50 seeds, T in {1e2, 1e3, 1e4};
    # slope -0.5 +- 0.15 under eta = 1/(4 L sqrt(T))
    t0 = time.perf_counter()
    rep = check_theorem5(T_values=(100, 1000, 10_000), n_seeds=50, slope_tol=0.15)
    _report("6 (theorem 5 bound)", rep, time.perf_counter() - t0, 60.0)


def test_criterion_7_theorem3_gap_decay():
    # ball radius 10, T in {1e2, 1e3, 1e4}, 30 seeds: gap decreasing and within
    # 4 * sup-term / (sqrt(T) L); measured constant reported
    t0 = time.perf_counter()
    rep = check_theorem3(T_values=(100, 1000, 10_000), n_seeds=30, radius=10.0, c_max=4.0)
    _report("7 (theorem 3 gap decay)", rep, time.perf_counter() - t0, 120.0)


def test_criterion_8_property_suites():
    # 200-trial prox inequality for every variant plus firm nonexpansiveness,
    # component monotonicity and Lipschitzness: zero violations
    t0 = time.perf_counter()
    rep_a = check_lemma1(n_trials=200)
    rep_b = check_operator_properties(n_trials=200)
    elapsed = time.perf_counter() - t0
    verdict = "PASS" if (rep_a.passed and rep_b.passed and elapsed < 5.0) else "FAIL"
    print(f"criterion 8 (property suites): {verdict} ({elapsed:.1f}s / budget 5s)")
    assert rep_a.passed, [c for c in rep_a.checkpoints if not c.get("ok")]
    assert rep_b.passed, [c for c in rep_b.checkpoints if not c.get("ok")]
    assert elapsed < 5.0


def test_criterion_9_determinism(tmp_path):
    # identical config + seed produce byte-identical CSV output on repeated runs
    t0 = time.perf_counter()
    doc = {
        "problem": {"kind": "bilinear",
                    "generator": {"name": "gaussian", "m": 5, "n": 4, "seed": 11,
                                  "noise_at_optimum": True}},
        "methods": [{"method": "seg_same", "eta1": 0.15, "iterations": 300},
                    {"method": "momentum_eg", "eta1": 0.15, "beta2": -0.3,
                     "iterations": 300}],
        "seeds": {"list": [3, 4]},
    }
    runner = CliRunner()
    blobs = {}
    for attempt in ("first", "second"):
        out = tmp_path / attempt
        doc["output"] = {"directory": str(out)}
        cfg = tmp_path / f"{attempt}.json"
        cfg.write_text(json.dumps(doc), encoding="utf-8")
        result = runner.invoke(cli_main, ["run", "--config", str(cfg)])
        assert result.exit_code == 0, result.output
        blobs[attempt] = {p.name: p.read_bytes() for p in sorted(out.glob("*.csv"))}
    assert blobs["first"].keys() == blobs["second"].keys()
    assert len(blobs["first"]) == 4
    identical = all(blobs["first"][k] == blobs["second"][k] for k in blobs["first"])
    elapsed = time.perf_counter() - t0
    print(f"criterion 9 (determinism): {'PASS' if identical else 'FAIL'} ({elapsed:.1f}s)")
    assert identical
