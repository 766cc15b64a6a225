"""Tests for the restricted gap, the oracles, and the check harness."""

import json

import numpy as np
import pytest

from extragrad.problems import (
    BilinearSaddle,
    FiniteSumOperator,
    SquaredL2Prox,
    L1Prox,
    VIProblem,
    ZeroProx,
    monotone_affine_instance,
    saddle_to_vi,
    strongly_monotone_problem,
)
from extragrad.solvers import Method, MethodConfig, run, seg_same_step
from extragrad import verify
from extragrad.verify import (
    GapEstimate,
    _batched_seg_same,
    check_theorem1,
    oracle_dense_sigma_sweep,
    oracle_implicit_affine,
    oracle_jacobi_svd_values,
    oracle_sup_term,
    oracle_update_matrix,
    reports_to_jsonl,
    restricted_gap,
    run_suite,
    summary_table,
)


def affine_problem(A, c, g=None, x_star=None):
    return VIProblem(operator=FiniteSumOperator(mats=np.asarray(A)[None],
                                                offs=np.asarray(c)[None]),
                     regularizer=g or ZeroProx(), x_star=x_star)


# ---------------------------------------------------------------- restricted gap

def test_gap_zero_at_solution_skew():
    # F(x) = A x with skew A vanishes nowhere except the origin; gap(x*) = 0
    A = np.array([[0.0, 1.0], [-1.0, 0.0]])
    p = affine_problem(A, np.zeros(2), x_star=np.zeros(2))
    est = restricted_gap(p, np.zeros(2), center=np.zeros(2), radius=2.0)
    assert est.method == "closed_form"
    assert abs(est.value) <= 1e-12


def test_gap_closed_form_rotation_example():
    # d=2, A = [[0,1],[-1,0]], c=0, x_hat=(1,0), unit ball at 0: gap = ||A^T x_hat|| = 1
    A = np.array([[0.0, 1.0], [-1.0, 0.0]])
    p = affine_problem(A, np.zeros(2))
    est = restricted_gap(p, np.array([1.0, 0.0]), center=np.zeros(2), radius=1.0)
    assert est.value == pytest.approx(1.0, abs=1e-12)


def test_gap_nonnegative_when_solution_in_ball():
    p = strongly_monotone_problem(d=4, n=3, mu=0.4, noise=0.3, seed=2)
    x_hat = np.random.default_rng(3).normal(size=4)
    est = restricted_gap(p, x_hat, center=p.x_star, radius=5.0)
    assert est.value >= -1e-12


def test_gap_dominates_feasible_probes():
    rng = np.random.default_rng(4)
    A, c = monotone_affine_instance(4, seed=5, psd_scale=0.5)
    p = affine_problem(A, c)
    x_hat = rng.normal(size=4)
    center = rng.normal(size=4) * 0.2
    radius = 3.0
    est = restricted_gap(p, x_hat, center=center, radius=radius)
    assert est.converged
    g = p.regularizer

    def phi(x):
        F = p.operator.evaluate_full(x)
        return g.value(x_hat) - g.value(x) + float(F @ (x_hat - x))

    for _ in range(200):
        u = rng.normal(size=4)
        u *= rng.uniform(0, radius) / np.linalg.norm(u)
        assert est.value >= phi(center + u) - 1e-8
    # the maximizer itself is feasible
    assert np.linalg.norm(est.maximizer - center) <= radius * (1 + 1e-12)


def test_gap_pga_matches_dense_sampling():
    A, c = monotone_affine_instance(3, seed=9, psd_scale=0.8)
    p = affine_problem(A, c, g=SquaredL2Prox(mu=0.2, dim=3))
    x_hat = np.array([0.5, -0.2, 1.0])
    est = restricted_gap(p, x_hat, center=np.zeros(3), radius=2.0)
    assert est.method == "pga" and est.converged
    rng = np.random.default_rng(10)
    g = p.regularizer
    best = -np.inf
    for _ in range(20000):
        u = rng.normal(size=3)
        u *= rng.uniform(0, 1) ** (1 / 3) * 2.0 / np.linalg.norm(u)
        x = u
        F = p.operator.evaluate_full(x)
        best = max(best, g.value(x_hat) - g.value(x) + float(F @ (x_hat - x)))
    assert est.value >= best - 1e-8
    assert est.value <= best + 0.05 * abs(best) + 1e-3  # dense sampling comes close


def test_gap_rejects_unsupported_regularizer():
    A, c = monotone_affine_instance(3, seed=11)
    p = affine_problem(A, c, g=L1Prox(0.1))
    with pytest.raises(ValueError, match="squared-l2"):
        restricted_gap(p, np.zeros(3))


def test_gap_reports_nonconvergence():
    A, c = monotone_affine_instance(6, seed=12, psd_scale=1.0)
    p = affine_problem(A, c)
    est = restricted_gap(p, np.ones(6), radius=4.0, max_iter=1)
    assert isinstance(est, GapEstimate)
    assert not est.converged


# ---------------------------------------------------------------- oracles

def test_oracle_jacobi_svd_matches_lapack():
    rng = np.random.default_rng(13)
    for n in (2, 5, 8):
        A = rng.normal(size=(n, n))
        got = oracle_jacobi_svd_values(A)
        want = np.linalg.svd(A, compute_uv=False)
        assert np.allclose(got, want, atol=1e-10)


def test_oracle_implicit_solves_fixed_point():
    rng = np.random.default_rng(14)
    A = rng.normal(size=(4, 4))
    c = rng.normal(size=4)
    x = rng.normal(size=4)
    for mu in (0.0, 0.5):
        center = rng.normal(size=4)
        w = oracle_implicit_affine(A, c, x, eta=0.3, mu=mu, center=center)
        g = SquaredL2Prox(mu=mu, center=center) if mu else ZeroProx()
        assert np.linalg.norm(w - g.prox(0.3, x - 0.3 * (A @ w + c))) < 1e-12


def test_oracle_update_matrix_shape_and_values():
    B = np.array([[2.0]])
    E = oracle_update_matrix(B, 0.25, 0.5)
    assert np.allclose(E, [[1 - 0.25 * 0.5 * 4, -1.0], [1.0, 1 - 0.25 * 0.5 * 4]])


def test_oracle_dense_sweep_brackets_endpoints():
    val = oracle_dense_sigma_sweep(0.5, 2.0, 0.1, 0.2, points=500)
    ends = max((1 - 0.1 * 0.2 * s * s) ** 2 + 0.04 * s * s for s in (0.5, 2.0))
    assert val == pytest.approx(ends, rel=1e-9)


def test_oracle_sup_term_close_to_denser_sampling():
    problem = strongly_monotone_problem(d=5, n=4, mu=0.2, noise=0.6, seed=15)
    op = problem.operator
    L = op.lipschitz_constant()
    x0 = np.random.default_rng(16).normal(size=5) * 0.3
    a = oracle_sup_term(op, L, x0, np.zeros(5), 8.0, n_samples=10_000, seed=1)
    b = oracle_sup_term(op, L, x0, np.zeros(5), 8.0, n_samples=60_000, seed=2)
    assert abs(a - b) <= 0.01 * max(a, b)


# ---------------------------------------------------------------- batched stepper

def test_batched_stepper_matches_seg_same_step():
    problem = strongly_monotone_problem(d=4, n=1, mu=0.6, noise=0.0, seed=17)
    op = problem.operator
    eta = 0.1
    mu = problem.regularizer.mu
    x0 = np.random.default_rng(18).normal(size=4)
    idx = np.zeros((20, 3), dtype=int)  # n = 1: every draw is component 0
    traj = _batched_seg_same(op, 1.0 / (1.0 + eta * mu), problem.regularizer.center,
                             eta, np.tile(x0, (3, 1)), idx)
    x = x0.copy()
    rng = np.random.default_rng(0)
    for t in range(20):
        _, x, _ = seg_same_step(problem, x, eta, eta, rng)
        assert np.allclose(traj[t + 1, 0], x, atol=1e-13)


# ---------------------------------------------------------------- check harness

def test_check_theorem1_passes_and_reports_ratio():
    rep = check_theorem1(n_instances=10)
    assert rep.passed
    assert any("worst ratio" in note for note in rep.notes)
    worst = float(rep.notes[0].split("=")[1])
    assert worst <= 1.0


@pytest.mark.parametrize("suite", sorted(verify.SUITES))
def test_suites_pass_quick(suite):
    rep = run_suite(suite, quick=True)
    failing = [c for c in rep.checkpoints if not c.get("ok")]
    assert rep.passed, f"{suite} failed: {failing}"


def test_unknown_suite_raises():
    with pytest.raises(KeyError):
        run_suite("bogus")


def test_reports_jsonl_and_table_round_trip():
    rep = run_suite("lemma1", quick=True)
    text = reports_to_jsonl([rep])
    lines = [json.loads(line) for line in text.strip().split("\n")]
    assert lines[0]["record"] == "summary" and lines[0]["theorem"] == "lemma1"
    assert any(l["record"] == "checkpoint" for l in lines)
    table = summary_table([rep])
    assert "lemma1" in table and "pass" in table


def test_reports_deterministic():
    a = reports_to_jsonl([run_suite("lemma1", quick=True)])
    b = reports_to_jsonl([run_suite("lemma1", quick=True)])
    assert a == b


def test_write_reports_creates_files(tmp_path):
    rep = run_suite("properties", quick=True)
    path = verify.write_reports([rep], tmp_path)
    assert path.exists()
    assert (tmp_path / "verification.txt").exists()
