"""Exact Gaussian-process posterior inference and function sampling.

The posterior state caches a Cholesky factor of the noisy covariance and is
immutable: conditioning returns a new state, so states can be shared across
threads.  Objective functions are drawn in feature space, either as GP
samples (i.i.d. standard-normal weights) or as fixed-norm elements of the
kernel's function space (uniform on the norm sphere).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from . import linalg
from .errors import InsufficientSpectrum, NumericalInstability, UnboundedTail
from .kernels import KernelSpec, Spectrum, _as_points, gram, gram_diag, tail_mass

VARIANCE_HEALTH_TOL = -1e-6


@dataclass(frozen=True, eq=False)
class GPState:
    """Posterior over accumulated observations with noise variance ``noise``."""

    kernel: KernelSpec
    noise: float
    points: np.ndarray          # (t, d)
    responses: np.ndarray       # (t,)
    factor: linalg.PosDefFactor  # chol of K + noise*I
    solved: np.ndarray          # (K + noise*I)^{-1} responses

    @property
    def num_observations(self) -> int:
        return int(self.points.shape[0])


def empty_state(kernel: KernelSpec, noise: float) -> GPState:
    if noise <= 0:
        raise ValueError("noise variance must be positive")
    d = kernel.domain.dim
    return GPState(
        kernel=kernel,
        noise=noise,
        points=np.zeros((0, d)),
        responses=np.zeros(0),
        factor=linalg.PosDefFactor(0, np.zeros((0, 0)), 0.0),
        solved=np.zeros(0),
    )


def condition(state: GPState, x, y: float) -> GPState:
    """New state with the observation (x, y) appended.

    The factor is extended incrementally, so a length-t history costs O(t^2)
    per step; the result agrees with a from-scratch rebuild.
    """
    pt = state.kernel.domain.require(x)
    new_diag = float(gram_diag(state.kernel, pt)[0]) + state.noise
    if state.num_observations == 0:
        new_row = np.zeros(0)
    else:
        new_row = gram(state.kernel, state.points, pt)[:, 0]
    factor = linalg.extend_factor(state.factor, new_row, new_diag)
    points = np.vstack([state.points, pt])
    responses = np.append(state.responses, float(y))
    solved = linalg.solve_factored(factor, responses)
    return GPState(state.kernel, state.noise, points, responses, factor, solved)


def fit_state(kernel: KernelSpec, noise: float, points, responses) -> GPState:
    """Batch construction from a full observation set."""
    if noise <= 0:
        raise ValueError("noise variance must be positive")
    pts = kernel.domain.require(points)
    ys = np.asarray(responses, dtype=float).ravel()
    if ys.shape[0] != pts.shape[0]:
        raise ValueError("points and responses must have equal length")
    cov = gram(kernel, pts) + noise * np.eye(pts.shape[0])
    factor = linalg.cholesky(cov)
    solved = linalg.solve_factored(factor, ys)
    return GPState(kernel, noise, pts, ys, factor, solved)


def _clamp_variance(var: np.ndarray, prior: np.ndarray) -> np.ndarray:
    worst = float(np.min(var)) if var.size else 0.0
    if worst < VARIANCE_HEALTH_TOL:
        raise NumericalInstability(f"posterior variance {worst:.3e} below health threshold")
    return np.clip(var, 0.0, prior)


def posterior_grid(state: GPState, x) -> tuple[np.ndarray, np.ndarray]:
    """Posterior means and variances at a batch of query points."""
    pts = state.kernel.domain.require(x)
    prior = gram_diag(state.kernel, pts)
    if state.num_observations == 0:
        return np.zeros(pts.shape[0]), prior.copy()
    k_cross = gram(state.kernel, state.points, pts)  # (t, n)
    mean = k_cross.T @ state.solved
    v = solve_triangular(state.factor.lower, k_cross, lower=True)
    var = prior - np.sum(v**2, axis=0)
    return mean, _clamp_variance(var, prior)


def posterior(state: GPState, x) -> tuple[float, float]:
    """Posterior mean and variance at a single point."""
    mean, var = posterior_grid(state, _as_points(x))
    return float(mean[0]), float(var[0])


def posterior_cov_grid(state: GPState, x) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean vector and full covariance over a batch of points."""
    pts = state.kernel.domain.require(x)
    prior = gram(state.kernel, pts)
    if state.num_observations == 0:
        return np.zeros(pts.shape[0]), prior
    k_cross = gram(state.kernel, state.points, pts)
    mean = k_cross.T @ state.solved
    v = solve_triangular(state.factor.lower, k_cross, lower=True)
    return mean, prior - v.T @ v


# ---------------------------------------------------------------------------
# Sampled objective functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Feature-space function ``sum_m weights[m] sqrt(lam_m) phi_m``."""

    spectrum: Spectrum
    rank: int
    weights: np.ndarray
    norm_sq: float  # sum of squared weights (function-space norm for sphere draws)

    def __call__(self, x) -> np.ndarray:
        feats = self.spectrum.feature_map(_as_points(x))[:, : self.rank]
        coeff = self.weights * np.sqrt(self.spectrum.eigenvalues[: self.rank])
        return feats @ coeff


def _check_rank(spectrum: Spectrum, rank: int):
    if rank < 1 or rank > spectrum.size:
        raise InsufficientSpectrum(
            f"need 1 <= rank <= {spectrum.size} stored eigenpairs, got {rank}"
        )


def sample_gp(spectrum: Spectrum, rank: int, rng_seed) -> SampledFunction:
    """Draw a GP sample in feature space, truncated to the leading ``rank`` terms.

    Weights are i.i.d. standard normal from the seeded generator; the
    covariance of the result is the rank-truncated kernel (truncation error
    bounded by the tail mass).  ``rng_seed`` may be an int or a Generator.
    """
    _check_rank(spectrum, rank)
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    w = rng.standard_normal(rank)
    return SampledFunction(spectrum, rank, w, float(w @ w))


def sample_rkhs(spectrum: Spectrum, rank: int, norm_bound: float, rng_seed) -> SampledFunction:
    """Draw a function of exactly the given norm, uniform on the norm sphere."""
    _check_rank(spectrum, rank)
    if norm_bound <= 0:
        raise ValueError("norm bound must be positive")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    g = rng.standard_normal(rank)
    while float(g @ g) == 0.0:  # essentially impossible, but keep the draw valid
        g = rng.standard_normal(rank)
    w = g * (norm_bound / np.linalg.norm(g))
    return SampledFunction(spectrum, rank, w, norm_bound**2)


def sampling_rank(spectrum: Spectrum, tol_fraction: float = 1e-6) -> int:
    """Smallest stored rank whose tail mass is below ``tol_fraction * kbar``.

    Falls back to the full stored rank when the analytic tail cannot be
    brought under the tolerance with the stored terms (the draw is then a
    sample from the stored expansion itself).
    """
    kbar = spectrum.diag_sup
    if kbar is None:
        kbar = float(np.sum(spectrum.eigenvalues)) * spectrum.feature_bound**2
    target = tol_fraction * kbar
    for rank in range(1, spectrum.size + 1):
        try:
            if tail_mass(spectrum, rank) <= target:
                return rank
        except UnboundedTail:
            break
    return spectrum.size
