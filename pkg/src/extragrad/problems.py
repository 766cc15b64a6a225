"""Problem definitions with exact constants.

Stochastic operators are finite families of affine maps F(x; i) = A_i x + c_i
sampled uniformly, so the Lipschitz constant L, the strong-convexity modulus mu
of the regularizer, and the noise level sigma^2 at any point are all exactly
computable.  Every rate check in this package relies on those exact constants.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np


def as_vector(x, dim: Optional[int] = None, name: str = "x") -> np.ndarray:
    """Coerce to a finite 1-d float array, raising on bad shape or NaN/Inf."""
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"{name} must be a 1-d vector, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise ValueError(f"{name} has dimension {v.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    return v


def power_iteration_sigma_max(A: np.ndarray, tol: float = 1e-10,
                              max_iter: int = 100_000) -> float:
    """Largest singular value of A by power iteration on A^T A.

    Stops when the eigenvalue estimate changes by less than ``tol`` relative;
    raises RuntimeError if the cap is hit, which signals ill-conditioned input.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError("expected a matrix")
    if not np.any(A):
        return 0.0
    rng = np.random.default_rng(0x5EED)
    v = rng.normal(size=A.shape[1])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = A.T @ (A @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            # started inside the null space, restart
            v = rng.normal(size=A.shape[1])
            v /= np.linalg.norm(v)
            continue
        lam_new = float(v @ w)  # Rayleigh quotient for A^T A
        v = w / nw
        if abs(lam_new - lam) <= tol * max(abs(lam_new), 1e-300):
            return float(np.sqrt(max(lam_new, 0.0)))
        lam = lam_new
    raise RuntimeError("power iteration did not converge; input may be ill-conditioned")


# ---------------------------------------------------------------------------
# stochastic operator
# ---------------------------------------------------------------------------

@dataclass
class FiniteSumOperator:
    """F(x; i) = A_i x + c_i with i uniform on {0..n-1}; F(x) = (1/n) sum_i (A_i x + c_i).

    Treated as immutable after construction; safe to share across threads.
    """

    mats: np.ndarray  # (n, d, d)
    offs: np.ndarray  # (n, d)

    def __post_init__(self):
        self.mats = np.asarray(self.mats, dtype=float)
        self.offs = np.asarray(self.offs, dtype=float)
        if self.mats.ndim != 3 or self.mats.shape[1] != self.mats.shape[2]:
            raise ValueError(f"mats must have shape (n, d, d), got {self.mats.shape}")
        if self.offs.shape != self.mats.shape[:2]:
            raise ValueError(f"offs shape {self.offs.shape} does not match mats {self.mats.shape}")
        if self.mats.shape[0] < 1:
            raise ValueError("need at least one component")
        if not (np.all(np.isfinite(self.mats)) and np.all(np.isfinite(self.offs))):
            raise ValueError("components contain non-finite entries")
        self._mean_matrix = self.mats.mean(axis=0)
        self._mean_offset = self.offs.mean(axis=0)
        self._lipschitz: Optional[float] = None

    @property
    def n_components(self) -> int:
        return self.mats.shape[0]

    @property
    def dim(self) -> int:
        return self.mats.shape[1]

    @property
    def mean_matrix(self) -> np.ndarray:
        return self._mean_matrix

    @property
    def mean_offset(self) -> np.ndarray:
        return self._mean_offset

    def component(self, i: int):
        return self.mats[i], self.offs[i]

    def evaluate_component(self, i: int, x: np.ndarray) -> np.ndarray:
        return self.mats[i] @ x + self.offs[i]

    def evaluate_full(self, x) -> np.ndarray:
        """Exact average F(x); never sampled."""
        x = as_vector(x, dim=self.dim)
        return self._mean_matrix @ x + self._mean_offset

    def sample_index(self, rng: np.random.Generator) -> int:
        return int(rng.integers(self.n_components))

    def sample_component(self, rng: np.random.Generator):
        i = self.sample_index(rng)
        return i, self.component(i)

    def component_lipschitz(self) -> np.ndarray:
        """Per-component largest singular value sigma_max(A_i)."""
        return np.array([power_iteration_sigma_max(A) for A in self.mats])

    def lipschitz_constant(self) -> float:
        """L = max_i sigma_max(A_i); the almost-sure Lipschitz constant of F(.; i)."""
        if self._lipschitz is None:
            self._lipschitz = float(self.component_lipschitz().max())
        return self._lipschitz

    def variance_at(self, x) -> float:
        """Exact sigma_x^2 = (1/n) sum_i ||F(x; i) - F(x)||^2 under uniform sampling."""
        x = as_vector(x, dim=self.dim)
        full = self.evaluate_full(x)
        dev = np.einsum("nij,j->ni", self.mats, x) + self.offs - full
        return float(np.mean(np.sum(dev ** 2, axis=1)))


# ---------------------------------------------------------------------------
# proximal functions
# ---------------------------------------------------------------------------

class ProxFunction:
    """Convex regularizer g with an exact proximal map.

    ``prox(eta, v)`` returns argmin_z eta*g(z) + 0.5*||z - v||^2 and ``mu`` is
    the strong-convexity modulus of g (zero for all variants but SquaredL2).
    """

    mu: float = 0.0

    def value(self, x) -> float:
        raise NotImplementedError

    def prox(self, eta: float, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _check_eta(self, eta: float):
        if eta <= 0:
            raise ValueError(f"prox stepsize must be positive, got {eta}")


class ZeroProx(ProxFunction):
    """g = 0; prox is the identity."""

    def value(self, x) -> float:
        return 0.0

    def prox(self, eta, v):
        self._check_eta(eta)
        return v


class SquaredL2Prox(ProxFunction):
    """g(x) = (mu/2) ||x - center||^2, the mu-strongly convex quadratic."""

    def __init__(self, mu: float, center=None, dim: Optional[int] = None):
        if mu < 0:
            raise ValueError("mu must be nonnegative")
        self.mu = float(mu)
        if center is None:
            if dim is None:
                raise ValueError("need center or dim")
            center = np.zeros(dim)
        self.center = as_vector(center, name="center")

    def value(self, x) -> float:
        x = as_vector(x)
        return 0.5 * self.mu * float(np.sum((x - self.center) ** 2))

    def prox(self, eta, v):
        self._check_eta(eta)
        return (v + eta * self.mu * self.center) / (1.0 + eta * self.mu)


class L1Prox(ProxFunction):
    """g(x) = lam * ||x||_1; prox is soft-thresholding."""

    def __init__(self, lam: float):
        if lam < 0:
            raise ValueError("lam must be nonnegative")
        self.lam = float(lam)

    def value(self, x) -> float:
        return self.lam * float(np.sum(np.abs(x)))

    def prox(self, eta, v):
        self._check_eta(eta)
        t = eta * self.lam
        return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


class BallIndicatorProx(ProxFunction):
    """Indicator of the Euclidean ball ||x - center|| <= radius; prox is the projection.

    Value convention: 0 on the set, +inf off it (small feasibility slack for
    points produced by the projection itself).
    """

    def __init__(self, radius: float, center=None, dim: Optional[int] = None):
        if radius <= 0:
            raise ValueError("radius must be positive")
        self.radius = float(radius)
        if center is None:
            if dim is None:
                raise ValueError("need center or dim")
            center = np.zeros(dim)
        self.center = as_vector(center, name="center")

    def value(self, x) -> float:
        x = as_vector(x)
        r = float(np.linalg.norm(x - self.center))
        return 0.0 if r <= self.radius * (1 + 1e-9) + 1e-12 else float("inf")

    def prox(self, eta, v):
        self._check_eta(eta)
        dev = v - self.center
        r = np.linalg.norm(dev)
        if r <= self.radius:
            return np.array(v, dtype=float, copy=True)
        return self.center + dev * (self.radius / r)


class BoxIndicatorProx(ProxFunction):
    """Indicator of the box lower <= x <= upper; prox is the componentwise clamp."""

    def __init__(self, lower, upper):
        self.lower = as_vector(lower, name="lower")
        self.upper = as_vector(upper, dim=self.lower.shape[0], name="upper")
        if np.any(self.lower > self.upper):
            raise ValueError("lower must not exceed upper")

    def value(self, x) -> float:
        x = as_vector(x, dim=self.lower.shape[0])
        tol = 1e-12
        inside = np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol)
        return 0.0 if inside else float("inf")

    def prox(self, eta, v):
        self._check_eta(eta)
        return np.clip(v, self.lower, self.upper)


# ---------------------------------------------------------------------------
# bilinear saddle problems
# ---------------------------------------------------------------------------

@dataclass
class BilinearSaddle:
    """min_x max_y  x^T B y + a^T x + b^T y  with full-rank B and known equilibrium.

    The equilibrium satisfies B y* + a = 0 and B^T x* + b = 0 (equivalently
    a = -B y*, b = -B^T x*).  Condition number kappa = sigma_min^2 / sigma_max^2.
    """

    B: np.ndarray
    a: np.ndarray
    b: np.ndarray
    x_star: np.ndarray
    y_star: np.ndarray
    sigma_max: float = field(init=False)
    sigma_min: float = field(init=False)

    def __post_init__(self):
        self.B = np.asarray(self.B, dtype=float)
        m = self.B.shape[0]
        if self.B.ndim != 2 or self.B.shape != (m, m):
            raise ValueError("B must be a square matrix")
        if not np.all(np.isfinite(self.B)):
            raise ValueError("B contains non-finite entries")
        self.a = as_vector(self.a, dim=m, name="a")
        self.b = as_vector(self.b, dim=m, name="b")
        self.x_star = as_vector(self.x_star, dim=m, name="x_star")
        self.y_star = as_vector(self.y_star, dim=m, name="y_star")
        sv = np.linalg.svd(self.B, compute_uv=False)
        self.sigma_max = float(sv[0])
        self.sigma_min = float(sv[-1])
        if self.sigma_min < 1e-12 * self.sigma_max:
            raise ValueError("B is rank deficient (sigma_min below 1e-12 * sigma_max)")
        scale = max(1.0, float(np.linalg.norm(self.x_star)), float(np.linalg.norm(self.y_star)),
                    self.sigma_max)
        res_x = np.linalg.norm(self.B @ self.y_star + self.a)
        res_y = np.linalg.norm(self.B.T @ self.x_star + self.b)
        if max(res_x, res_y) > 1e-10 * scale:
            raise ValueError("equilibrium residual exceeds 1e-10 relative")

    @property
    def m(self) -> int:
        return self.B.shape[0]

    @property
    def kappa(self) -> float:
        return self.sigma_min ** 2 / self.sigma_max ** 2

    def grad_x(self, x, y) -> np.ndarray:
        return self.B @ y + self.a

    def grad_y(self, x, y) -> np.ndarray:
        return self.B.T @ x + self.b

    @classmethod
    def from_matrix(cls, B, a=None, b=None) -> "BilinearSaddle":
        """Build from B and linear terms; solves for the equilibrium."""
        B = np.asarray(B, dtype=float)
        m = B.shape[0]
        a = np.zeros(m) if a is None else as_vector(a, dim=m, name="a")
        b = np.zeros(m) if b is None else as_vector(b, dim=m, name="b")
        sv = np.linalg.svd(B, compute_uv=False)
        if sv[-1] < 1e-12 * sv[0]:
            raise ValueError("B is rank deficient (sigma_min below 1e-12 * sigma_max)")
        y_star = np.linalg.solve(B, -a)
        x_star = np.linalg.solve(B.T, -b)
        return cls(B=B, a=a, b=b, x_star=x_star, y_star=y_star)

    @classmethod
    def planted(cls, B, x_star, y_star) -> "BilinearSaddle":
        """Plant an equilibrium via a = -B y*, b = -B^T x*."""
        B = np.asarray(B, dtype=float)
        x_star = as_vector(x_star, name="x_star")
        y_star = as_vector(y_star, name="y_star")
        return cls(B=B, a=-B @ y_star, b=-B.T @ x_star, x_star=x_star, y_star=y_star)

    @classmethod
    def gaussian(cls, m: int, seed: int, scale: float = 1.0) -> "BilinearSaddle":
        rng = np.random.default_rng(seed)
        B = rng.normal(size=(m, m)) * scale
        return cls.from_matrix(B)


# ---------------------------------------------------------------------------
# variational inequality problem
# ---------------------------------------------------------------------------

@dataclass
class VIProblem:
    """Find x* with g(x) - g(x*) + <F(x*), x - x*> >= 0 for all x."""

    operator: FiniteSumOperator
    regularizer: ProxFunction
    x_star: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.x_star is not None:
            self.x_star = as_vector(self.x_star, dim=self.operator.dim, name="x_star")
            eta = 1.0 / (2.0 * max(self.operator.lipschitz_constant(), 1e-300))
            res = self.residual(self.x_star, eta)
            if res > 1e-8:
                raise ValueError(f"claimed solution has VI residual {res:.3e} > 1e-8")

    @property
    def dim(self) -> int:
        return self.operator.dim

    def residual(self, x, eta: float) -> float:
        """||x - prox_{eta g}(x - eta F(x))||, zero exactly at solutions."""
        x = as_vector(x, dim=self.dim)
        return float(np.linalg.norm(x - self.regularizer.prox(eta, x - eta * self.operator.evaluate_full(x))))


def saddle_to_vi(p: BilinearSaddle) -> VIProblem:
    """Joint VI on R^{2m}: F(x, y) = (B y + a, -B^T x - b), g = 0.

    The linear part [[0, B], [-B^T, 0]] is skew-symmetric, hence monotone.
    """
    m = p.m
    A = np.zeros((2 * m, 2 * m))
    A[:m, m:] = p.B
    A[m:, :m] = -p.B.T
    c = np.concatenate([p.a, -p.b])
    op = FiniteSumOperator(mats=A[None, :, :], offs=c[None, :])
    z_star = np.concatenate([p.x_star, p.y_star])
    return VIProblem(operator=op, regularizer=ZeroProx(), x_star=z_star)


# ---------------------------------------------------------------------------
# generated problem families
# ---------------------------------------------------------------------------

def _joint_bilinear_component(B: np.ndarray) -> np.ndarray:
    m = B.shape[0]
    A = np.zeros((2 * m, 2 * m))
    A[:m, m:] = B
    A[m:, :m] = -B.T
    return A


def finite_sum_bilinear(m: int, n: int, seed: int, scale: float = 1.0,
                        noise_at_optimum: bool = False,
                        noise_scale: float = 1.0) -> VIProblem:
    """min_x max_y (1/n) sum_i x^T B_i y (+ optional per-component linear terms).

    Components are Gaussian B_i / sqrt(m).  The equilibrium is the origin: the
    linear terms are centered across components, so the mean operator vanishes
    there.  With ``noise_at_optimum`` off, every F(0; i) = 0 and the noise at
    the solution is exactly zero; with it on, sigma^2 at the solution is
    (1/n) sum_i ||c_i||^2 > 0.
    """
    if n < 1 or m < 1:
        raise ValueError("need m >= 1 and n >= 1")
    rng = np.random.default_rng(seed)
    Bs = rng.normal(size=(n, m, m)) * (scale / np.sqrt(m))
    mats = np.array([_joint_bilinear_component(B) for B in Bs])
    if noise_at_optimum:
        offs = rng.normal(size=(n, 2 * m)) * noise_scale
        offs -= offs.mean(axis=0)
    else:
        offs = np.zeros((n, 2 * m))
    op = FiniteSumOperator(mats=mats, offs=offs)
    return VIProblem(operator=op, regularizer=ZeroProx(), x_star=np.zeros(2 * m))


def strongly_monotone_problem(d: int, n: int, mu: float, noise: float, seed: int,
                              psd_scale: float = 1.0, skew_scale: float = 1.0,
                              shift=None) -> VIProblem:
    """Finite sum of monotone affine components with a mu-strongly convex regularizer.

    Each A_i = psd_scale * G_i G_i^T / d + skew_scale * skew(K_i) is monotone
    almost surely.  The solution is planted at ``shift`` (origin by default):
    offsets are centered so that F(x*; i) = z_i with mean zero, and the
    regularizer g = (mu/2) ||x - x*||^2 has zero gradient there, so x* solves
    the VI exactly and sigma^2 = mean ||z_i||^2 is the exact noise at the
    optimum.
    """
    if mu < 0:
        raise ValueError("mu must be nonnegative")
    rng = np.random.default_rng(seed)
    mats = []
    for _ in range(n):
        G = rng.normal(size=(d, d)) / np.sqrt(d)
        K = rng.normal(size=(d, d))
        mats.append(psd_scale * (G @ G.T) + skew_scale * 0.5 * (K - K.T))
    mats = np.array(mats)
    z = rng.normal(size=(n, d)) * noise
    z -= z.mean(axis=0)
    x_star = np.zeros(d) if shift is None else as_vector(shift, dim=d, name="shift")
    # F(x*; i) = z_i so the mean operator vanishes at x*, and -F(x*) = 0 is the
    # gradient of g = (mu/2)||x - x*||^2 there: x* solves the VI exactly.
    offs = z - np.einsum("nij,j->ni", mats, x_star)
    op = FiniteSumOperator(mats=mats, offs=offs)
    g = SquaredL2Prox(mu=mu, center=x_star)
    return VIProblem(operator=op, regularizer=g, x_star=x_star)


def monotone_affine_instance(d: int, seed: int, psd_scale: float = 0.5,
                             skew_scale: float = 1.0, offset_scale: float = 1.0):
    """One deterministic monotone affine map (A, c) for approximation checks."""
    rng = np.random.default_rng(seed)
    G = rng.normal(size=(d, d)) / np.sqrt(d)
    K = rng.normal(size=(d, d))
    A = psd_scale * (G @ G.T) + skew_scale * 0.5 * (K - K.T)
    c = rng.normal(size=d) * offset_scale
    return A, c
