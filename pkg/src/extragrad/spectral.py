"""Exact rate predictions for bilinear problems.

For the two-stepsize extragradient update on min_x max_y x^T B y the squared
distance to the equilibrium contracts per iteration by

    h(sigma) = (1 - eta1*eta2*sigma^2)^2 + eta2^2*sigma^2

maximized over the singular values of B; since h is an upward parabola in
sigma^2 the maximum sits at an endpoint.  With momentum the dynamics are
governed by a 4x4 block per singular value whose spectral radius replaces
sqrt(h).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np

SQRT2 = float(np.sqrt(2.0))


@dataclass
class SpectralReport:
    """Per-step squared-distance multiplier for one (B, eta1, eta2) choice.

    ``per_step_sq_factor`` multiplies ||z^t - z*||^2 each iteration, so the
    squared distance after t steps is bounded by factor**t times the initial
    one.  ``corollary_bound`` is the simplified (1 - kappa/6)^2-style factor
    reported for the preset stepsizes; it is informational, not asserted,
    since it is violated by the exact factor near kappa = 1.
    """

    sigma_max: float
    sigma_min: float
    eta1: float
    eta2: float
    per_step_sq_factor: float
    converges: bool
    corollary_bound: Optional[float] = None
    corollary_case: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "sigma_max": self.sigma_max,
            "sigma_min": self.sigma_min,
            "eta1": self.eta1,
            "eta2": self.eta2,
            "per_step_sq_factor": self.per_step_sq_factor,
            "converges": self.converges,
            "corollary_bound": self.corollary_bound,
            "corollary_case": self.corollary_case,
        }


def _sq_factor_at(s_sq: float, eta1: float, eta2: float) -> float:
    return (1.0 - eta1 * eta2 * s_sq) ** 2 + eta2 ** 2 * s_sq


def _resolve_sigmas(B_or_sigmas) -> Tuple[float, float]:
    if isinstance(B_or_sigmas, tuple):
        smax, smin = float(B_or_sigmas[0]), float(B_or_sigmas[1])
    else:
        sv = np.linalg.svd(np.asarray(B_or_sigmas, dtype=float), compute_uv=False)
        smax, smin = float(sv[0]), float(sv[-1])
    if smax < smin:
        raise ValueError("sigma_max must be >= sigma_min")
    if smin < 0:
        raise ValueError("singular values are nonnegative")
    return smax, smin


def eg_contraction_factor(B_or_sigmas: Union[np.ndarray, Tuple[float, float]],
                          eta1: float, eta2: float,
                          corollary_case: Optional[int] = None) -> SpectralReport:
    """Worst per-step squared-distance multiplier over sigma in [sigma_min, sigma_max].

    Endpoints suffice because h is an upward parabola in sigma^2; the interior
    critical point (a minimum) is still evaluated as a safety check.
    """
    if eta1 < 0 or eta2 < 0:
        raise ValueError("stepsizes must be nonnegative")
    smax, smin = _resolve_sigmas(B_or_sigmas)
    cands = [_sq_factor_at(smax ** 2, eta1, eta2), _sq_factor_at(smin ** 2, eta1, eta2)]
    prod = eta1 * eta2
    if prod > 0:
        s_sq_crit = (1.0 - eta2 / (2.0 * eta1)) / prod
        if smin ** 2 < s_sq_crit < smax ** 2:
            cands.append(_sq_factor_at(s_sq_crit, eta1, eta2))
    factor = float(max(cands))
    bound = None
    kappa = (smin / smax) ** 2 if smax > 0 else 1.0
    if corollary_case == 1:
        bound = (1.0 - kappa / 6.0) ** 2
    elif corollary_case == 2:
        bound = (1.0 - kappa / 4.0) ** 2
    return SpectralReport(sigma_max=smax, sigma_min=smin, eta1=eta1, eta2=eta2,
                          per_step_sq_factor=factor, converges=factor < 1.0,
                          corollary_bound=bound, corollary_case=corollary_case)


def corollary_stepsizes(B_or_sigmas, case: int) -> Tuple[float, float]:
    """Preset stepsize pairs guaranteeing contraction.

    Case 1: eta1 = eta2 = 1 / (sqrt(2) sigma_max).
    Case 2: eta1 = 1 / (sqrt(2) kappa sigma_max), eta2 = kappa / (sqrt(2) sigma_max)
    with kappa = sigma_min^2 / sigma_max^2 (a large extrapolation step paired
    with a small update step; the product is always 1 / (2 sigma_max^2), and
    both cases coincide at kappa = 1).  Case 2 requires sigma_min > 0.
    """
    smax, smin = _resolve_sigmas(B_or_sigmas)
    if smax <= 0:
        raise ValueError("sigma_max must be positive")
    if case == 1:
        eta = 1.0 / (SQRT2 * smax)
        return eta, eta
    if case == 2:
        if smin <= 0:
            raise ValueError("case 2 requires sigma_min > 0")
        kappa = (smin / smax) ** 2
        return 1.0 / (SQRT2 * kappa * smax), kappa / (SQRT2 * smax)
    raise ValueError(f"case must be 1 or 2, got {case}")


# ---------------------------------------------------------------------------
# momentum blocks
# ---------------------------------------------------------------------------

@dataclass
class MomentumBlock:
    """4x4 per-singular-value block of the extragradient-with-momentum dynamics.

    Acting on (u^t, v^t, u^{t-1}, v^{t-1}) in the SVD coordinates of B with
    singular value sigma:

        [ 1 + b2 - e1*e2*s^2   -e2*(1+b1)*s   -b2        e2*b1*s ]
        [ e2*(1+b1)*s           1 + b2 - e1*e2*s^2   -e2*b1*s   -b2 ]
        [ 1                     0              0          0       ]
        [ 0                     1              0          0       ]
    """

    sigma: float
    eta1: float
    eta2: float
    beta1: float
    beta2: float
    matrix: np.ndarray = field(init=False)

    def __post_init__(self):
        s, e1, e2 = self.sigma, self.eta1, self.eta2
        b1, b2 = self.beta1, self.beta2
        self.matrix = np.array([
            [1 + b2 - e1 * e2 * s ** 2, -e2 * (1 + b1) * s, -b2, e2 * b1 * s],
            [e2 * (1 + b1) * s, 1 + b2 - e1 * e2 * s ** 2, -e2 * b1 * s, -b2],
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
        ])

    def spectral_radius(self) -> float:
        return spectral_radius(self.matrix)


def momentum_block(sigma: float, eta1: float, eta2: float,
                   beta1: float, beta2: float) -> MomentumBlock:
    return MomentumBlock(sigma=sigma, eta1=eta1, eta2=eta2, beta1=beta1, beta2=beta2)


# ---------------------------------------------------------------------------
# spectral radius
# ---------------------------------------------------------------------------

def _char_poly_coeffs(M: np.ndarray) -> np.ndarray:
    """Monic characteristic polynomial coefficients via Faddeev-LeVerrier."""
    n = M.shape[0]
    coeffs = np.empty(n + 1)
    coeffs[0] = 1.0
    N = np.eye(n)
    for k in range(1, n + 1):
        N = M @ N
        c = -np.trace(N) / k
        coeffs[k] = c
        N = N + c * np.eye(n)
    return coeffs


def _refine_roots(coeffs: np.ndarray, roots: np.ndarray,
                  iters: int = 30, tol: float = 1e-14) -> np.ndarray:
    """Newton-polish polynomial roots, stopping at the evaluation noise floor.

    Near multiple roots, Horner evaluation of p is pure cancellation noise; a
    step is attempted only while |p(r)| exceeds the running-error bound
    ~ eps * sum |c_i| |r|^i, and accepted only if it reduces |p(r)|.
    Otherwise the eigensolver estimate is already at the attainable accuracy.
    """
    dcoeffs = np.polyder(coeffs)
    abs_coeffs = np.abs(coeffs)
    eps = np.finfo(float).eps
    out = roots.astype(complex)
    for i, r in enumerate(out):
        best = r
        best_res = abs(np.polyval(coeffs, r))
        scale = max(1.0, abs(r))
        for _ in range(iters):
            noise = 4.0 * len(coeffs) * eps * float(np.polyval(abs_coeffs, abs(r)))
            res = abs(np.polyval(coeffs, r))
            if res <= noise:
                break
            dp = np.polyval(dcoeffs, r)
            if dp == 0:
                break
            step = np.polyval(coeffs, r) / dp
            if not np.isfinite(step.real) or not np.isfinite(step.imag):
                break
            r = r - step
            res = abs(np.polyval(coeffs, r))
            if res < best_res:
                best, best_res = r, res
            if abs(step) <= tol * scale:
                break
        out[i] = best
    return out


def spectral_radius(M: np.ndarray) -> float:
    """Largest eigenvalue modulus of a small dense matrix (size <= 64).

    For 4x4 and smaller, eigenvalue estimates are polished by Newton
    iterations on the exact characteristic polynomial (Faddeev-LeVerrier
    coefficients); root-finding purely in coefficient space cannot reach the
    1e-10 tolerance at multiple roots, so the dense eigensolver anchors the
    estimates.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("expected a square matrix")
    if M.shape[0] > 64:
        raise ValueError("spectral_radius is restricted to matrices of size <= 64")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix contains non-finite entries")
    n = M.shape[0]
    if n == 1:
        return float(abs(M[0, 0]))
    roots = np.linalg.eigvals(M)
    if n <= 4:
        roots = _refine_roots(_char_poly_coeffs(M), roots)
    return float(np.max(np.abs(roots)))


# ---------------------------------------------------------------------------
# heatmap grids
# ---------------------------------------------------------------------------

HEATMAP_MODES = ("beta1_vs_etasigma", "beta2_vs_etasigma", "beta1_vs_beta2_at_fixed_etasigma")


@dataclass
class HeatmapGrid:
    """Grid of spectral-radius ratios rho(T(params, beta)) / rho(T(params, beta=0)).

    ``ratios[i, j]`` corresponds to axis2 value i (rows) and axis1 value j
    (columns); ``diverges[i, j]`` flags cells with rho >= 1.  Axis values are
    the raw parameters (beta2 is negative for negative momentum).
    """

    mode: str
    axis1_name: str
    axis1: np.ndarray
    axis2_name: str
    axis2: np.ndarray
    ratios: np.ndarray
    diverges: np.ndarray
    fixed: dict = field(default_factory=dict)


def _parse_range(rng_spec, steps: Optional[int] = None) -> np.ndarray:
    if isinstance(rng_spec, np.ndarray):
        return rng_spec.astype(float)
    lo, hi = float(rng_spec[0]), float(rng_spec[1])
    n = int(rng_spec[2]) if len(rng_spec) > 2 else steps
    if n is None or n < 2:
        raise ValueError("grid axes need at least 2 steps")
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise ValueError("grid bounds must be finite")
    return np.linspace(lo, hi, n)


def heatmap_grid(mode: str, axis1, axis2, fixed_etasigma: float = 0.01) -> HeatmapGrid:
    """Ratio grid for one of three momentum heatmap modes (eta1 = eta2 throughout).

    beta1_vs_etasigma: axis1 = beta1, axis2 = eta*sigma, beta2 = 0.
    beta2_vs_etasigma: axis1 = beta2, axis2 = eta*sigma, beta1 = 0.
    beta1_vs_beta2_at_fixed_etasigma: axis1 = beta1, axis2 = beta2.

    Cells where rho(T) >= 1 are flagged divergent but keep their ratio value.
    """
    if mode not in HEATMAP_MODES:
        raise ValueError(f"unknown heatmap mode {mode!r}")
    ax1 = _parse_range(axis1)
    ax2 = _parse_range(axis2)
    ratios = np.empty((len(ax2), len(ax1)))
    mask = np.zeros((len(ax2), len(ax1)), dtype=bool)

    def rho_of(es: float, b1: float, b2: float) -> float:
        # the block depends on the stepsizes and sigma only through eta * sigma
        return momentum_block(es, 1.0, 1.0, b1, b2).spectral_radius()

    for i, a2 in enumerate(ax2):
        if mode == "beta1_vs_etasigma":
            base = rho_of(a2, 0.0, 0.0)
            for j, a1 in enumerate(ax1):
                r = rho_of(a2, a1, 0.0)
                ratios[i, j] = r / base
                mask[i, j] = r >= 1.0
        elif mode == "beta2_vs_etasigma":
            base = rho_of(a2, 0.0, 0.0)
            for j, a1 in enumerate(ax1):
                r = rho_of(a2, 0.0, a1)
                ratios[i, j] = r / base
                mask[i, j] = r >= 1.0
        else:
            base = rho_of(fixed_etasigma, 0.0, 0.0)
            for j, a1 in enumerate(ax1):
                r = rho_of(fixed_etasigma, a1, a2)
                ratios[i, j] = r / base
                mask[i, j] = r >= 1.0

    names = {
        "beta1_vs_etasigma": ("beta1", "etasigma"),
        "beta2_vs_etasigma": ("beta2", "etasigma"),
        "beta1_vs_beta2_at_fixed_etasigma": ("beta1", "beta2"),
    }[mode]
    fixed = {}
    if mode == "beta1_vs_beta2_at_fixed_etasigma":
        fixed["etasigma"] = fixed_etasigma
    return HeatmapGrid(mode=mode, axis1_name=names[0], axis1=ax1,
                       axis2_name=names[1], axis2=ax2, ratios=ratios,
                       diverges=mask, fixed=fixed)


def default_heatmap_grid(mode: str, steps: int = 200) -> HeatmapGrid:
    """Default axes matching the momentum heatmap figures: beta in [0, 1) or
    beta2 in (-1, 0], eta*sigma in (0, 1]."""
    es = np.linspace(1.0 / steps, 1.0, steps)
    if mode == "beta1_vs_etasigma":
        return heatmap_grid(mode, np.linspace(0.0, 1.0 - 1.0 / steps, steps), es)
    if mode == "beta2_vs_etasigma":
        return heatmap_grid(mode, np.linspace(-(1.0 - 1.0 / steps), 0.0, steps), es)
    if mode == "beta1_vs_beta2_at_fixed_etasigma":
        b = np.linspace(-(1.0 - 1.0 / steps), 1.0 - 1.0 / steps, steps)
        return heatmap_grid(mode, b, b, fixed_etasigma=0.01)
    raise ValueError(f"unknown heatmap mode {mode!r}")
