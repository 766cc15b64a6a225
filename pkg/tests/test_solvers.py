"""Tests for the solver steps, the run loop, and the nonconvex runner."""

import numpy as np
import pytest

from extragrad.problems import (
    BilinearSaddle,
    FiniteSumOperator,
    L1Prox,
    SquaredL2Prox,
    VIProblem,
    ZeroProx,
    saddle_to_vi,
)
from extragrad.solvers import (
    Method,
    MethodConfig,
    IterState,
    QuadraticObjective,
    QuarticObjective,
    checkpoint_schedule,
    fit_contraction_factor,
    implicit_step,
    kstep_eg_step,
    momentum_eg_step,
    nonconvex_eg_run,
    run,
    seg_independent_step,
    seg_same_step,
    sgda_step,
)
from extragrad.spectral import momentum_block


def zero_problem(d=3, g=None):
    op = FiniteSumOperator(mats=np.zeros((1, d, d)), offs=np.zeros((1, d)))
    return VIProblem(operator=op, regularizer=g or ZeroProx())


def scalar_strongly_monotone():
    # F(x) = x in one dimension
    op = FiniteSumOperator(mats=np.ones((1, 1, 1)), offs=np.zeros((1, 1)))
    return VIProblem(operator=op, regularizer=ZeroProx(), x_star=np.zeros(1))


class CountingOperator(FiniteSumOperator):
    """Instrumented operator for sample/evaluation accounting."""

    def __post_init__(self):
        super().__post_init__()
        self.n_samples = 0
        self.n_evals = 0

    def sample_index(self, rng):
        self.n_samples += 1
        return super().sample_index(rng)

    def evaluate_component(self, i, x):
        self.n_evals += 1
        return super().evaluate_component(i, x)


def counting_problem(n=4, d=3, seed=0):
    rng = np.random.default_rng(seed)
    op = CountingOperator(mats=rng.normal(size=(n, d, d)) * 0.1,
                          offs=rng.normal(size=(n, d)) * 0.1)
    return VIProblem(operator=op, regularizer=ZeroProx())


# ---------------------------------------------------------------- fixed points

def test_steps_fix_zero_operator():
    p = zero_problem()
    x = np.array([1.0, -2.0, 0.5])
    rng = np.random.default_rng(0)
    y, xn, _ = seg_same_step(p, x, 0.3, 0.7, rng)
    assert np.array_equal(y, x) and np.array_equal(xn, x)
    y, xn, _, _ = seg_independent_step(p, x, 0.3, 0.7, rng)
    assert np.array_equal(y, x) and np.array_equal(xn, x)
    assert np.array_equal(sgda_step(p, x, 0.3, rng), x)
    y, xn, _ = kstep_eg_step(p, x, 0.3, 4, rng)
    assert np.array_equal(y, x) and np.array_equal(xn, x)


def test_seg_same_scalar_contraction():
    # A = I, eta1 = eta2 = 0.4: x+ = (1 - eta2 (1 - eta1)) x = 0.76 x
    p = scalar_strongly_monotone()
    x = np.array([1.0])
    _, xn, _ = seg_same_step(p, x, 0.4, 0.4, np.random.default_rng(0))
    assert abs(xn[0] - 0.76) < 1e-15


def test_sgda_contracts_strongly_monotone():
    p = scalar_strongly_monotone()
    xn = sgda_step(p, np.array([1.0]), 0.5, np.random.default_rng(0))
    assert abs(xn[0] - 0.5) < 1e-15


def test_sgda_expands_on_bilinear():
    # f = x*y: ||z+||^2 = (1 + eta^2) ||z||^2 exactly
    p = saddle_to_vi(BilinearSaddle.from_matrix(np.array([[1.0]])))
    rng = np.random.default_rng(1)
    for eta in (0.1, 0.5, 1.0):
        z = rng.normal(size=2)
        zn = sgda_step(p, z, eta, np.random.default_rng(0))
        assert abs(zn @ zn - (1 + eta ** 2) * (z @ z)) < 1e-12


# ---------------------------------------------------------------- one-step identities

def test_seg_same_matches_explicit_bilinear_block_matrix():
    rng = np.random.default_rng(3)
    B = rng.normal(size=(4, 4))
    s = BilinearSaddle.from_matrix(B)
    p = saddle_to_vi(s)
    eta1, eta2 = 0.21, 0.13
    E = np.block([
        [np.eye(4) - eta1 * eta2 * (B @ B.T), -eta2 * B],
        [eta2 * B.T, np.eye(4) - eta1 * eta2 * (B.T @ B)],
    ])
    for _ in range(5):
        z = rng.normal(size=8)
        _, zn, _ = seg_same_step(p, z, eta1, eta2, np.random.default_rng(0))
        assert np.max(np.abs(zn - E @ z)) < 1e-12


def test_momentum_step_matches_block_beta1_zero():
    # scalar sigma=1, eta1=eta2=eta, beta1=0, beta2=-0.3
    p = saddle_to_vi(BilinearSaddle.from_matrix(np.array([[1.0]])))
    eta = 0.4
    T = momentum_block(1.0, eta, eta, 0.0, -0.3).matrix
    rng = np.random.default_rng(4)
    z, z_prev = rng.normal(size=2), rng.normal(size=2)
    _, zn, _ = momentum_eg_step(p, z, z_prev, eta, eta, 0.0, -0.3, np.random.default_rng(0))
    state = np.array([z[0], z[1], z_prev[0], z_prev[1]])
    predicted = T @ state
    assert np.max(np.abs(np.array([zn[0], zn[1], z[0], z[1]]) - predicted)) < 1e-12


def test_momentum_step_matches_block_general_params():
    # nonzero beta1 exercises the corrected -eta2*beta1*sigma entry of the block
    sigma, eta1, eta2, b1, b2 = 1.7, 0.25, 0.18, 0.2, -0.35
    p = saddle_to_vi(BilinearSaddle.from_matrix(np.array([[sigma]])))
    T = momentum_block(sigma, eta1, eta2, b1, b2).matrix
    rng = np.random.default_rng(5)
    z, z_prev = rng.normal(size=2), rng.normal(size=2)
    _, zn, _ = momentum_eg_step(p, z, z_prev, eta1, eta2, b1, b2, np.random.default_rng(0))
    predicted = T @ np.array([z[0], z[1], z_prev[0], z_prev[1]])
    assert np.max(np.abs(np.array([zn[0], zn[1], z[0], z[1]]) - predicted)) < 1e-12


def test_momentum_requires_zero_regularizer():
    p = zero_problem(g=SquaredL2Prox(mu=1.0, dim=3))
    with pytest.raises(ValueError, match="g = 0"):
        momentum_eg_step(p, np.zeros(3), np.zeros(3), 0.1, 0.1, 0.1, 0.1,
                         np.random.default_rng(0))


def test_momentum_with_equal_prev_reduces_to_plain_eg():
    p = counting_problem(seed=8)
    x = np.random.default_rng(9).normal(size=3)
    y1, x1, _ = momentum_eg_step(p, x, x, 0.2, 0.3, 0.4, -0.2, np.random.default_rng(7))
    y2, x2, _ = seg_same_step(p, x, 0.2, 0.3, np.random.default_rng(7))
    assert np.array_equal(y1, y2) and np.array_equal(x1, x2)


# ---------------------------------------------------------------- reduction identities

def test_momentum_zero_betas_bitwise_equals_seg_same():
    p = counting_problem(seed=10)
    x = np.random.default_rng(11).normal(size=3)
    x_prev = np.random.default_rng(12).normal(size=3)
    y1, x1, i1 = momentum_eg_step(p, x, x_prev, 0.2, 0.3, 0.0, 0.0, np.random.default_rng(5))
    y2, x2, i2 = seg_same_step(p, x, 0.2, 0.3, np.random.default_rng(5))
    assert i1 == i2 and np.array_equal(y1, y2) and np.array_equal(x1, x2)


def test_kstep_one_bitwise_equals_seg_same():
    p = counting_problem(seed=13)
    x = np.random.default_rng(14).normal(size=3)
    y1, x1, i1 = kstep_eg_step(p, x, 0.25, 1, np.random.default_rng(6))
    y2, x2, i2 = seg_same_step(p, x, 0.25, 0.25, np.random.default_rng(6))
    assert i1 == i2 and np.array_equal(y1, y2) and np.array_equal(x1, x2)


def test_independent_equals_same_for_single_component():
    p = counting_problem(n=1, seed=15)
    x = np.random.default_rng(16).normal(size=3)
    y1, x1, _, _ = seg_independent_step(p, x, 0.2, 0.3, np.random.default_rng(1))
    y2, x2, _ = seg_same_step(p, x, 0.2, 0.3, np.random.default_rng(1))
    assert np.array_equal(y1, y2) and np.array_equal(x1, x2)


def test_independent_trajectory_bitwise_same_n1():
    saddle = BilinearSaddle.from_matrix(np.random.default_rng(2).normal(size=(3, 3)))
    x0 = np.random.default_rng(3).normal(size=6)
    recs = {}
    for method in (Method.SEG_SAME, Method.SEG_INDEPENDENT):
        cfg = MethodConfig(method=method, eta1=0.2, eta2=0.2, seed=77, iterations=50)
        recs[method] = run(saddle, cfg, x0=x0)
    assert recs[Method.SEG_SAME].dist_sq == recs[Method.SEG_INDEPENDENT].dist_sq


# ---------------------------------------------------------------- sample accounting

def test_sample_and_evaluation_counts_per_step():
    x = np.zeros(3)
    rng = np.random.default_rng(0)

    p = counting_problem()
    seg_same_step(p, x, 0.1, 0.1, rng)
    assert (p.operator.n_samples, p.operator.n_evals) == (1, 2)

    p = counting_problem()
    seg_independent_step(p, x, 0.1, 0.1, rng)
    assert (p.operator.n_samples, p.operator.n_evals) == (2, 2)

    p = counting_problem()
    sgda_step(p, x, 0.1, rng)
    assert (p.operator.n_samples, p.operator.n_evals) == (1, 1)

    for k in (1, 3, 5):
        p = counting_problem()
        kstep_eg_step(p, x, 0.1, k, rng)
        assert (p.operator.n_samples, p.operator.n_evals) == (1, k + 1)

    p = counting_problem()
    momentum_eg_step(p, x, x, 0.1, 0.1, 0.1, -0.1, rng)
    assert (p.operator.n_samples, p.operator.n_evals) == (1, 2)


# ---------------------------------------------------------------- implicit step

def test_implicit_zero_operator_is_prox():
    g = L1Prox(lam=1.0)
    p = zero_problem(g=g)
    x = np.array([2.0, -0.2, 0.6])
    w = implicit_step(p, x, 0.5)
    assert np.allclose(w, g.prox(0.5, x))


def test_implicit_identity_direct_solve():
    p = scalar_strongly_monotone()
    w = implicit_step(p, np.array([1.0]), 1.0)
    assert abs(w[0] - 0.5) < 1e-14


def test_implicit_residual_on_random_affine():
    rng = np.random.default_rng(20)
    for trial in range(10):
        A = rng.normal(size=(4, 4))
        c = rng.normal(size=4)
        g = SquaredL2Prox(mu=0.3, dim=4) if trial % 2 else ZeroProx()
        p = VIProblem(operator=FiniteSumOperator(mats=A[None], offs=c[None]), regularizer=g)
        x = rng.normal(size=4)
        eta = 0.2
        w = implicit_step(p, x, eta)
        res = np.linalg.norm(w - g.prox(eta, x - eta * (A @ x * 0 + A @ w + c)))
        assert res <= 1e-10


def test_implicit_fixed_point_plugback():
    rng = np.random.default_rng(22)
    A = rng.normal(size=(3, 3)) * 0.3
    c = rng.normal(size=3)
    op = FiniteSumOperator(mats=A[None], offs=c[None])
    p = VIProblem(operator=op, regularizer=L1Prox(lam=0.2))
    eta = 0.5 / op.lipschitz_constant()
    x = rng.normal(size=3)
    w = implicit_step(p, x, eta)
    assert np.linalg.norm(w - p.regularizer.prox(eta, x - eta * op.evaluate_full(w))) <= 1e-10


def test_implicit_refuses_large_stepsize_on_nonaffine_path():
    op = FiniteSumOperator(mats=np.eye(2)[None] * 3.0, offs=np.zeros((1, 2)))
    p = VIProblem(operator=op, regularizer=L1Prox(lam=0.1))
    with pytest.raises(ValueError, match="eta"):
        implicit_step(p, np.ones(2), 1.0)


def test_implicit_needs_index_for_stochastic_operator():
    p = counting_problem(n=3)
    with pytest.raises(ValueError, match="index"):
        implicit_step(p, np.zeros(3), 0.1)
    w = implicit_step(p, np.zeros(3), 0.1, index=1)
    assert w.shape == (3,)


def test_kstep_approximates_implicit():
    rng = np.random.default_rng(23)
    A = rng.normal(size=(5, 5))
    c = rng.normal(size=5)
    op = FiniteSumOperator(mats=A[None], offs=c[None])
    p = VIProblem(operator=op, regularizer=ZeroProx())
    L = op.lipschitz_constant()
    eta = 0.9 / L
    x = rng.normal(size=5)
    w = implicit_step(p, x, eta)
    base = np.linalg.norm(w - x)
    for k in (1, 2, 4, 6):
        y_k, _, _ = kstep_eg_step(p, x, eta, k, np.random.default_rng(0))
        assert np.linalg.norm(w - y_k) <= 0.9 ** k * base + 1e-10


# ---------------------------------------------------------------- run loop

def test_run_zero_iterations_records_initial_metric():
    p = scalar_strongly_monotone()
    rec = run(p, MethodConfig(method=Method.SEG_SAME, eta1=0.1, iterations=0, seed=1))
    assert rec.ts == [0] and len(rec.dist_sq) == 1 and len(rec.op_norm) == 1
    assert rec.x_avg is None


def test_run_deterministic_given_seed():
    p = counting_problem(seed=30)
    cfg = MethodConfig(method=Method.SEG_SAME, eta1=0.1, iterations=100, seed=42)
    r1, r2 = run(p, cfg), run(p, cfg)
    assert r1.op_norm == r2.op_norm
    assert np.array_equal(r1.x_final, r2.x_final)


def test_run_different_seed_differs():
    p = counting_problem(seed=30)
    r1 = run(p, MethodConfig(method=Method.SEG_SAME, eta1=0.1, iterations=50, seed=1))
    r2 = run(p, MethodConfig(method=Method.SEG_SAME, eta1=0.1, iterations=50, seed=2))
    assert r1.op_norm != r2.op_norm


def test_run_flags_divergence_and_truncates():
    p = saddle_to_vi(BilinearSaddle.from_matrix(np.eye(2) * 5.0))
    rec = run(p, MethodConfig(method=Method.SGDA, eta1=0.5, iterations=100_000, seed=3))
    assert rec.diverged and rec.diverged_at is not None
    assert len(rec.ts) < 100_001


def test_run_ergodic_average_is_mean_of_extrapolations():
    p = counting_problem(seed=31)
    cfg = MethodConfig(method=Method.SEG_SAME, eta1=0.15, eta2=0.2, iterations=25,
                       seed=5, averaging=True)
    rec = run(p, cfg)
    # replay with the same generator sequence
    rng = np.random.default_rng(5)
    x = rng.normal(size=3)
    ys = []
    for _ in range(25):
        y, x, _ = seg_same_step(p, x, 0.15, 0.2, rng)
        ys.append(y)
    assert np.allclose(rec.x_avg, np.mean(ys, axis=0), atol=1e-14)
    assert np.array_equal(rec.x_final, x)


def test_iter_state_running_sum_identity():
    state = IterState(x=np.zeros(2), x_prev=np.zeros(2), x_hat_sum=np.zeros(2))
    assert state.ergodic_average() is None
    ys = np.random.default_rng(0).normal(size=(7, 2))
    for y in ys:
        state.x_hat_sum += y
        state.t += 1
    assert np.allclose(state.ergodic_average(), ys.mean(axis=0), atol=1e-15)


def test_run_hooks_recorded_at_checkpoints():
    p = scalar_strongly_monotone()
    cfg = MethodConfig(method=Method.SEG_SAME, eta1=0.2, iterations=10, seed=0)
    rec = run(p, cfg, hooks={"gap": lambda x: float(np.abs(x).sum())})
    assert len(rec.extras["gap"]) == len(rec.ts)


def test_run_momentum_and_implicit_methods():
    saddle = BilinearSaddle.from_matrix(np.random.default_rng(7).normal(size=(3, 3)))
    mom = MethodConfig(method=Method.MOMENTUM_EG, eta1=0.2, eta2=0.2, beta2=-0.3,
                       seed=1, iterations=300)
    rec = run(saddle, mom)
    assert rec.dist_sq[-1] < rec.dist_sq[0]
    # implicit step on skew M contracts dist^2 by 1/(1 + eta^2 sigma^2) per iteration
    well_conditioned = BilinearSaddle.from_matrix(np.diag([1.0, 1.5, 2.0]))
    imp = MethodConfig(method=Method.IMPLICIT, eta1=0.5, seed=1, iterations=200)
    rec2 = run(well_conditioned, imp)
    assert rec2.dist_sq[-1] < 1e-6 * rec2.dist_sq[0]


def test_checkpoint_schedule_policies():
    assert list(checkpoint_schedule(5)) == [0, 1, 2, 3, 4, 5]
    ts = checkpoint_schedule(100, stride=30)
    assert list(ts) == [0, 30, 60, 90, 100]
    thin = checkpoint_schedule(100_000)
    assert len(thin) < 1000 and thin[0] == 0 and thin[-1] == 100_000


def test_method_config_validation():
    with pytest.raises(ValueError, match="eta1"):
        MethodConfig(method=Method.SEG_SAME, eta1=0.0)
    with pytest.raises(ValueError, match="beta1"):
        MethodConfig(method=Method.MOMENTUM_EG, eta1=0.1, beta1=1.0)
    with pytest.raises(ValueError, match="k"):
        MethodConfig(method=Method.KSTEP_EG, eta1=0.1, k=0)
    cfg = MethodConfig(method="seg_same", eta1=0.3)
    assert cfg.eta2 == 0.3 and cfg.method is Method.SEG_SAME


# ---------------------------------------------------------------- rate fitting

def test_fit_contraction_factor_exact_geometric():
    factor = 0.93
    ts = np.arange(200)
    d2 = 4.0 * factor ** ts
    assert abs(fit_contraction_factor(ts, d2) - factor) < 1e-12


def test_fit_contraction_factor_needs_points():
    with pytest.raises(ValueError):
        fit_contraction_factor([0, 1], [0.0, 0.0])


# ---------------------------------------------------------------- nonconvex runner

def test_nonconvex_at_minimizer_zero_noise():
    obj = QuadraticObjective.random(d=3, n=4, noise=0.0, seed=1)
    rec = nonconvex_eg_run(obj, obj.x_star, eta=1.0 / (4 * obj.lipschitz), iterations=100,
                           seed=0)
    assert rec.min_grad_norm_sq <= 1e-12 and rec.avg_grad_norm_sq <= 1e-12


def test_nonconvex_quadratic_noiseless_bound():
    obj = QuadraticObjective.random(d=4, n=3, noise=0.0, seed=2)
    x0 = obj.x_star + np.random.default_rng(3).normal(size=4)
    eta = 1.0 / (4 * obj.lipschitz)
    T = 500
    rec = nonconvex_eg_run(obj, x0, eta=eta, iterations=T, seed=4)
    bound = 5.0 * (obj.value(x0) - obj.f_star) / (eta * T)
    assert rec.min_grad_norm_sq <= bound
    assert rec.avg_grad_norm_sq <= bound
    # geometric decay of the gradient norm for the convex quadratic
    assert rec.grad_norm_sq[-1] < 1e-6 * rec.grad_norm_sq[0]


def test_nonconvex_record_shapes_and_sampling():
    obj = QuarticObjective.random(d=3, n=4, noise=0.3, seed=5)
    rec = nonconvex_eg_run(obj, np.zeros(3) + 0.5, eta=1e-3, iterations=50, seed=6)
    assert len(rec.grad_norm_sq) == 50
    assert rec.min_grad_norm_sq <= rec.sampled_grad_norm_sq
    assert rec.min_grad_norm_sq <= rec.avg_grad_norm_sq


def test_objective_noise_is_centered_and_exact():
    obj = QuadraticObjective.random(d=3, n=5, noise=0.7, seed=7)
    assert np.allclose(obj.noise.mean(axis=0), 0.0, atol=1e-15)
    assert abs(obj.sigma_sq - np.mean(np.sum(obj.noise ** 2, axis=1))) < 1e-15
    x = np.random.default_rng(8).normal(size=3)
    comps = np.array([obj.gradient_component(i, x) for i in range(5)])
    assert np.allclose(comps.mean(axis=0), obj.gradient(x), atol=1e-14)
