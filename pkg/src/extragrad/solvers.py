"""Iterative methods and the benchmark run loop.

The central update is the same-sample stochastic extragradient step: one
component index is drawn per iteration and reused for both the extrapolation
and the update, approximating the implicit (proximal-point) step of that
sampled operator.  Baselines (independent sampling, plain descent-ascent),
momentum and k-step variants, and the implicit update itself share a uniform
run loop that records metric trajectories.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Mapping, Optional, Union

import numpy as np

from .problems import (
    BilinearSaddle,
    FiniteSumOperator,
    ProxFunction,
    SquaredL2Prox,
    VIProblem,
    ZeroProx,
    as_vector,
    saddle_to_vi,
)

DIVERGENCE_THRESHOLD = 1e12


class Method(str, Enum):
    SEG_SAME = "seg_same"
    SEG_INDEPENDENT = "seg_independent"
    SGDA = "sgda"
    MOMENTUM_EG = "momentum_eg"
    KSTEP_EG = "kstep_eg"
    IMPLICIT = "implicit"


@dataclass
class MethodConfig:
    """Solver identity plus stepsizes, momenta, seed and run length.

    ``eta1`` is the extrapolation stepsize, ``eta2`` the update stepsize
    (``eta2=None`` copies ``eta1``, recovering the single-stepsize method).
    ``sgda`` and ``implicit`` use ``eta1`` only; ``kstep_eg`` uses ``eta1``
    with ``k`` inner extrapolations.
    """

    method: Method
    eta1: float
    eta2: Optional[float] = None
    beta1: float = 0.0
    beta2: float = 0.0
    k: int = 1
    seed: int = 0
    iterations: int = 1000
    averaging: bool = False

    def __post_init__(self):
        self.method = Method(self.method)
        if self.eta2 is None:
            self.eta2 = self.eta1
        if not (self.eta1 > 0):
            raise ValueError(f"eta1 must be positive, got {self.eta1}")
        if not (self.eta2 > 0):
            raise ValueError(f"eta2 must be positive, got {self.eta2}")
        for name, b in (("beta1", self.beta1), ("beta2", self.beta2)):
            if not (-1.0 < b < 1.0):
                raise ValueError(f"{name} must lie in (-1, 1), got {b}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.iterations < 0:
            raise ValueError("iterations must be nonnegative")

    def replace_seed(self, seed: int) -> "MethodConfig":
        return MethodConfig(method=self.method, eta1=self.eta1, eta2=self.eta2,
                            beta1=self.beta1, beta2=self.beta2, k=self.k, seed=seed,
                            iterations=self.iterations, averaging=self.averaging)


@dataclass
class IterState:
    """Mutable loop state: current iterate, previous iterate, running sum of y^k."""

    x: np.ndarray
    x_prev: np.ndarray
    x_hat_sum: np.ndarray
    t: int = 0

    def ergodic_average(self) -> Optional[np.ndarray]:
        if self.t == 0:
            return None
        return self.x_hat_sum / self.t


@dataclass
class RunRecord:
    """Per-iteration metric trajectory of one solver run."""

    config: MethodConfig
    ts: list
    dist_sq: Optional[list]
    op_norm: list
    extras: dict = field(default_factory=dict)
    diverged: bool = False
    diverged_at: Optional[int] = None
    wall_time: float = 0.0
    x_final: Optional[np.ndarray] = None
    x_avg: Optional[np.ndarray] = None


# ---------------------------------------------------------------------------
# single steps
# ---------------------------------------------------------------------------

def seg_same_step(p: VIProblem, x: np.ndarray, eta1: float, eta2: float,
                  rng: np.random.Generator):
    """Same-sample extragradient: one index, two component evaluations.

    y = prox_{eta1 g}(x - eta1 F(x; i)); x+ = prox_{eta2 g}(x - eta2 F(y; i)).
    """
    i = p.operator.sample_index(rng)
    y = p.regularizer.prox(eta1, x - eta1 * p.operator.evaluate_component(i, x))
    x_next = p.regularizer.prox(eta2, x - eta2 * p.operator.evaluate_component(i, y))
    return y, x_next, i


def seg_independent_step(p: VIProblem, x: np.ndarray, eta1: float, eta2: float,
                         rng: np.random.Generator):
    """Extragradient with two independently drawn samples (the Mirror-Prox baseline)."""
    i = p.operator.sample_index(rng)
    y = p.regularizer.prox(eta1, x - eta1 * p.operator.evaluate_component(i, x))
    j = p.operator.sample_index(rng)
    x_next = p.regularizer.prox(eta2, x - eta2 * p.operator.evaluate_component(j, y))
    return y, x_next, i, j


def sgda_step(p: VIProblem, x: np.ndarray, eta: float, rng: np.random.Generator):
    """Simultaneous (prox-)gradient descent-ascent: a single forward step."""
    i = p.operator.sample_index(rng)
    return p.regularizer.prox(eta, x - eta * p.operator.evaluate_component(i, x))


def momentum_eg_step(p: VIProblem, x: np.ndarray, x_prev: np.ndarray,
                     eta1: float, eta2: float, beta1: float, beta2: float,
                     rng: np.random.Generator):
    """Extragradient with two momentum terms, defined for unconstrained g = 0:

    y  = x - eta1 F(x; i) + beta1 (x - x_prev)
    x+ = x - eta2 F(y; i) + beta2 (x - x_prev)
    """
    if not isinstance(p.regularizer, ZeroProx):
        raise ValueError("momentum extragradient is defined only for g = 0")
    i = p.operator.sample_index(rng)
    mom = x - x_prev
    y = x - eta1 * p.operator.evaluate_component(i, x) + beta1 * mom
    x_next = x - eta2 * p.operator.evaluate_component(i, y) + beta2 * mom
    return y, x_next, i


def kstep_eg_step(p: VIProblem, x: np.ndarray, eta: float, k: int,
                  rng: np.random.Generator):
    """k-step extrapolation: y_0 = x, y_{m+1} = prox_{eta g}(x - eta F(y_m; i)).

    Returns (y_k, x+, i) where x+ = prox_{eta g}(x - eta F(y_k; i)); uses one
    index and k + 1 component evaluations.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    i = p.operator.sample_index(rng)
    y = x
    for _ in range(k):
        y = p.regularizer.prox(eta, x - eta * p.operator.evaluate_component(i, y))
    x_next = p.regularizer.prox(eta, x - eta * p.operator.evaluate_component(i, y))
    return y, x_next, i


def implicit_step(p: VIProblem, x: np.ndarray, eta: float,
                  index: Optional[int] = None) -> np.ndarray:
    """Solve the implicit update w = prox_{eta g}(x - eta F(w)).

    For affine F with g in {0, squared-l2} this is a direct linear solve;
    otherwise a fixed-point iteration requiring eta * L < 1.  ``index`` pins
    the update to one sampled component; by default the operator must be
    deterministic (a single component).
    """
    if index is None:
        if p.operator.n_components != 1:
            raise ValueError("implicit step on a stochastic operator needs an explicit index")
        index = 0
    A, c = p.operator.component(index)
    g = p.regularizer
    if isinstance(g, ZeroProx) or isinstance(g, SquaredL2Prox):
        mu = g.mu
        center = g.center if isinstance(g, SquaredL2Prox) else 0.0
        lhs = (1.0 + eta * mu) * np.eye(p.dim) + eta * A
        rhs = x - eta * c + eta * mu * center
        w = np.linalg.solve(lhs, rhs)
        res = np.linalg.norm(w - g.prox(eta, x - eta * (A @ w + c)))
        if res > 1e-12 * (1.0 + np.linalg.norm(w)):
            raise RuntimeError(f"implicit direct solve residual {res:.3e} too large")
        return w
    L = float(np.linalg.svd(A, compute_uv=False)[0])
    if eta * L >= 1.0:
        raise ValueError(f"fixed-point path requires eta * L < 1, got {eta * L:.3f}")
    w = np.array(x, dtype=float, copy=True)
    for _ in range(10_000):
        w_new = g.prox(eta, x - eta * (A @ w + c))
        if np.linalg.norm(w_new - w) <= 1e-12:
            return w_new
        w = w_new
    raise RuntimeError("implicit fixed-point iteration did not converge")


# ---------------------------------------------------------------------------
# run loop
# ---------------------------------------------------------------------------

def checkpoint_schedule(iterations: int, stride: int = 0) -> np.ndarray:
    """Recorded iteration indices. stride=0 picks the default policy:

    every iteration up to 1e4, logarithmic thinning (100 points per decade)
    beyond that.  0 and ``iterations`` are always included.
    """
    if stride < 0:
        raise ValueError("stride must be nonnegative")
    if stride == 0:
        if iterations <= 10_000:
            stride = 1
        else:
            decades = np.log10(max(iterations, 1))
            pts = np.unique(np.round(10 ** np.linspace(0, decades, int(100 * decades) + 1)).astype(int))
            return np.unique(np.concatenate([[0], pts[pts <= iterations], [iterations]]))
    ts = np.arange(0, iterations + 1, stride)
    if ts[-1] != iterations:
        ts = np.append(ts, iterations)
    return ts


def run(problem: Union[VIProblem, BilinearSaddle], cfg: MethodConfig,
        x0: Optional[np.ndarray] = None,
        hooks: Optional[Mapping[str, Callable[[np.ndarray], float]]] = None,
        stride: int = 1) -> RunRecord:
    """Iterate ``cfg.method`` for ``cfg.iterations`` steps, recording metrics.

    Deterministic given (config, x0, platform): the index stream and, when x0
    is omitted, the standard-normal starting point are drawn from a generator
    seeded with ``cfg.seed``.  Divergence (non-finite state or a metric above
    1e12) is a flagged outcome, not an error; the record is truncated at the
    first offending checkpoint.
    """
    if isinstance(problem, BilinearSaddle):
        problem = saddle_to_vi(problem)
    rng = np.random.default_rng(cfg.seed)
    if x0 is None:
        x0 = rng.normal(size=problem.dim)
    else:
        x0 = as_vector(x0, dim=problem.dim, name="x0")
    hooks = dict(hooks or {})
    record_ts = set(int(t) for t in checkpoint_schedule(cfg.iterations, stride))

    state = IterState(x=np.array(x0, copy=True), x_prev=np.array(x0, copy=True),
                      x_hat_sum=np.zeros(problem.dim))
    ts: list = []
    dist: Optional[list] = [] if problem.x_star is not None else None
    op_norm: list = []
    extras = {name: [] for name in hooks}
    diverged = False
    diverged_at = None

    def record(t: int) -> bool:
        """Append metrics at iteration t; returns False when divergence is hit."""
        vals = [float(np.linalg.norm(problem.operator.evaluate_full(state.x)))]
        if dist is not None:
            vals.append(float(np.sum((state.x - problem.x_star) ** 2)))
        ok = all(np.isfinite(v) and v <= DIVERGENCE_THRESHOLD for v in vals)
        ts.append(t)
        op_norm.append(vals[0])
        if dist is not None:
            dist.append(vals[-1])
        for name, fn in hooks.items():
            extras[name].append(float(fn(state.x)))
        return ok

    t_start = time.perf_counter()
    alive = record(0)
    for t in range(cfg.iterations):
        if not alive:
            diverged, diverged_at = True, ts[-1]
            break
        x = state.x
        if cfg.method == Method.SEG_SAME:
            y, x_next, _ = seg_same_step(problem, x, cfg.eta1, cfg.eta2, rng)
        elif cfg.method == Method.SEG_INDEPENDENT:
            y, x_next, _, _ = seg_independent_step(problem, x, cfg.eta1, cfg.eta2, rng)
        elif cfg.method == Method.SGDA:
            x_next = sgda_step(problem, x, cfg.eta1, rng)
            y = x_next
        elif cfg.method == Method.MOMENTUM_EG:
            y, x_next, _ = momentum_eg_step(problem, x, state.x_prev, cfg.eta1, cfg.eta2,
                                            cfg.beta1, cfg.beta2, rng)
        elif cfg.method == Method.KSTEP_EG:
            y, x_next, _ = kstep_eg_step(problem, x, cfg.eta1, cfg.k, rng)
        elif cfg.method == Method.IMPLICIT:
            idx = None if problem.operator.n_components == 1 else problem.operator.sample_index(rng)
            x_next = implicit_step(problem, x, cfg.eta1, index=idx)
            y = x_next
        else:  # pragma: no cover
            raise ValueError(f"unknown method {cfg.method}")
        state.x_prev = x
        state.x = x_next
        state.x_hat_sum += y
        state.t += 1
        if not np.all(np.isfinite(state.x)):
            diverged, diverged_at = True, t + 1
            ts.append(t + 1)
            op_norm.append(float("inf"))
            if dist is not None:
                dist.append(float("inf"))
            for name in hooks:
                extras[name].append(float("inf"))
            break
        if (t + 1) in record_ts:
            alive = record(t + 1)
    else:
        if not alive:
            diverged, diverged_at = True, ts[-1]
    wall = time.perf_counter() - t_start

    return RunRecord(config=cfg, ts=ts, dist_sq=dist, op_norm=op_norm, extras=extras,
                     diverged=diverged, diverged_at=diverged_at, wall_time=wall,
                     x_final=state.x,
                     x_avg=state.ergodic_average() if cfg.averaging else None)


def fit_contraction_factor(ts, dist_sq, burn_frac: float = 0.5,
                           floor: float = 1e-280) -> float:
    """Least-squares per-step multiplier of dist^2 over the post-burn-in window.

    Fits log(dist^2) against t on the last (1 - burn_frac) of the recorded
    points, skipping values at or below ``floor`` (denormal territory).
    """
    ts = np.asarray(ts, dtype=float)
    vals = np.asarray(dist_sq, dtype=float)
    lo = int(len(ts) * burn_frac)
    ts, vals = ts[lo:], vals[lo:]
    mask = np.isfinite(vals) & (vals > floor)
    if mask.sum() < 2:
        raise ValueError("not enough usable points to fit a rate")
    A = np.vstack([ts[mask], np.ones(int(mask.sum()))]).T
    slope = np.linalg.lstsq(A, np.log(vals[mask]), rcond=None)[0][0]
    return float(np.exp(slope))


# ---------------------------------------------------------------------------
# nonconvex minimization via extragradient
# ---------------------------------------------------------------------------

class StochasticObjective:
    """Smooth objective with a finite family of stochastic gradients.

    Components are linear perturbations grad f(x) + z_i with the z_i centered,
    so the gradient-noise variance is the same at every point and equals
    sigma_sq = mean ||z_i||^2 exactly.
    """

    f_star: float
    lipschitz: float

    def __init__(self, noise: np.ndarray):
        noise = np.asarray(noise, dtype=float)
        if noise.ndim != 2:
            raise ValueError("noise must be (n, d)")
        self.noise = noise - noise.mean(axis=0)
        self.sigma_sq = float(np.mean(np.sum(self.noise ** 2, axis=1)))

    @property
    def n_components(self) -> int:
        return self.noise.shape[0]

    @property
    def dim(self) -> int:
        return self.noise.shape[1]

    def value(self, x) -> float:
        raise NotImplementedError

    def gradient(self, x) -> np.ndarray:
        raise NotImplementedError

    def gradient_component(self, i: int, x) -> np.ndarray:
        return self.gradient(x) + self.noise[i]


class QuadraticObjective(StochasticObjective):
    """f(x) = 0.5 (x - x*)^T Q (x - x*) with Q symmetric PSD; f* = 0."""

    def __init__(self, Q: np.ndarray, x_star: np.ndarray, noise: np.ndarray):
        super().__init__(noise)
        self.Q = np.asarray(Q, dtype=float)
        self.x_star = as_vector(x_star, dim=self.dim, name="x_star")
        self.lipschitz = float(np.linalg.eigvalsh((self.Q + self.Q.T) / 2).max())
        self.f_star = 0.0

    def value(self, x) -> float:
        d = np.asarray(x, dtype=float) - self.x_star
        return 0.5 * float(d @ self.Q @ d)

    def gradient(self, x) -> np.ndarray:
        return self.Q @ (np.asarray(x, dtype=float) - self.x_star)

    @classmethod
    def random(cls, d: int, n: int, noise: float, seed: int, mu: float = 0.5):
        rng = np.random.default_rng(seed)
        G = rng.normal(size=(d, d))
        Q = G @ G.T / d + mu * np.eye(d)
        z = rng.normal(size=(n, d)) * noise
        x_star = rng.normal(size=d)
        return cls(Q=Q, x_star=x_star, noise=z)


class QuarticObjective(StochasticObjective):
    """f(x) = sum_i (x_i^2 - 1)^2, the separable double well; f* = 0.

    Not globally smooth: ``lipschitz`` is the Hessian bound 12 R^2 - 4 valid on
    the box |x_i| <= R, which contains every trajectory started inside it with
    conservative stepsizes.
    """

    def __init__(self, noise: np.ndarray, box_radius: float = 2.0):
        super().__init__(noise)
        self.box_radius = float(box_radius)
        self.lipschitz = max(12.0 * self.box_radius ** 2 - 4.0, 8.0)
        self.f_star = 0.0

    def value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(np.sum((x ** 2 - 1.0) ** 2))

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return 4.0 * x * (x ** 2 - 1.0)

    @classmethod
    def random(cls, d: int, n: int, noise: float, seed: int, box_radius: float = 2.0):
        rng = np.random.default_rng(seed)
        z = rng.normal(size=(n, d)) * noise
        return cls(noise=z, box_radius=box_radius)


@dataclass
class NonconvexRunRecord:
    """Gradient-norm trajectory of the unconstrained extragradient run."""

    eta: float
    iterations: int
    seed: int
    grad_norm_sq: np.ndarray  # ||grad f(x^t)||^2 for t = 0 .. T-1
    min_grad_norm_sq: float
    avg_grad_norm_sq: float   # exact expectation of the uniformly sampled iterate
    sampled_grad_norm_sq: float
    x_final: np.ndarray
    diverged: bool = False


def nonconvex_eg_run(obj: StochasticObjective, x0, eta: float, iterations: int,
                     seed: int = 0) -> NonconvexRunRecord:
    """Extragradient on min E f(x; xi): y = x - eta grad f(x; i), x+ = x - eta grad f(y; i).

    Records the full-gradient norm squared at every iterate x^0 .. x^{T-1};
    the running average is the exact expectation over a uniformly sampled
    iterate, and one uniformly sampled value is reported alongside.
    """
    x = as_vector(x0, dim=obj.dim, name="x0")
    rng = np.random.default_rng(seed)
    gsq = np.empty(iterations)
    diverged = False
    t = 0
    for t in range(iterations):
        g_full = obj.gradient(x)
        gsq[t] = float(g_full @ g_full)
        if not np.isfinite(gsq[t]) or gsq[t] > DIVERGENCE_THRESHOLD:
            diverged = True
            gsq = gsq[: t + 1]
            break
        i = int(rng.integers(obj.n_components))
        y = x - eta * (g_full + obj.noise[i])
        x = x - eta * (obj.gradient(y) + obj.noise[i])
    pick = int(rng.integers(len(gsq))) if len(gsq) else 0
    return NonconvexRunRecord(
        eta=eta, iterations=iterations, seed=seed, grad_norm_sq=gsq,
        min_grad_norm_sq=float(gsq.min()) if len(gsq) else float("nan"),
        avg_grad_norm_sq=float(gsq.mean()) if len(gsq) else float("nan"),
        sampled_grad_norm_sq=float(gsq[pick]) if len(gsq) else float("nan"),
        x_final=x, diverged=diverged)
