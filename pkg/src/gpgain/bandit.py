"""Upper-confidence-bound and posterior-sampling policies with regret accounting.

Policies act on a fixed finite candidate grid shared with the regret
reference: per step, UCB maximizes mean plus scaled standard deviation, TS
maximizes one joint posterior sample over the grid.  Confidence widths
follow the union-bound schedule in the Bayesian setting and the
norm/noise-scale expression in the frequentist setting.  Traces are fully
determined by the seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import linalg
from .errors import EmptyGrid, MismatchedHorizons, MissingGamma, NumericalInstability
from .gp import GPState, posterior_cov_grid, posterior_grid
from .kernels import KernelSpec, gram
from .rng import substream

ALGORITHMS = ("ucb", "ts")
SETTINGS = ("bayesian", "frequentist")


@dataclass(frozen=True)
class PolicyConfig:
    """Which policy to run and how to size its confidence width."""

    algorithm: str = "ucb"
    setting: str = "bayesian"
    delta: float = 0.1
    norm_bound: float | None = None   # frequentist only
    noise_scale: float | None = None  # frequentist only
    width_constant: float = 1.0

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}")
        if self.setting not in SETTINGS:
            raise ValueError(f"setting must be one of {SETTINGS}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.width_constant <= 0:
            raise ValueError("width_constant must be positive")
        if self.setting == "frequentist":
            if self.norm_bound is None or self.norm_bound <= 0:
                raise ValueError("frequentist setting needs norm_bound > 0")
            if self.noise_scale is None or self.noise_scale <= 0:
                raise ValueError("frequentist setting needs noise_scale > 0")


def bayesian_width(t: int, delta: float, width_constant: float = 1.0) -> float:
    """Union-bound confidence width ``c * sqrt(2 log(pi^2 t^2 / (3 delta)))``."""
    if t < 1:
        raise ValueError("t must be at least 1")
    return width_constant * math.sqrt(2.0 * math.log(math.pi**2 * t**2 / (3.0 * delta)))


def frequentist_width(norm_bound: float, noise_scale: float, gain: float,
                      delta: float) -> float:
    """Width ``B + R sqrt(2 (gain + 1 + log(1/delta)))`` for norm-bounded objectives."""
    if gain < 0:
        raise ValueError("gain must be nonnegative")
    return norm_bound + noise_scale * math.sqrt(2.0 * (gain + 1.0 + math.log(1.0 / delta)))


def beta_schedule(config: PolicyConfig, t: int, gain_prev: float | None = None) -> float:
    """Confidence width at step ``t`` for the configured setting.

    Frequentist widths need the information gain accumulated before step t
    (``gain_prev``); Bayesian widths ignore it.
    """
    if config.setting == "bayesian":
        return bayesian_width(t, config.delta, config.width_constant)
    if gain_prev is None:
        raise MissingGamma("frequentist width needs the running information gain")
    return frequentist_width(config.norm_bound, config.noise_scale, gain_prev, config.delta)


# ---------------------------------------------------------------------------
# Selection rules
# ---------------------------------------------------------------------------


def _argmax_ucb(mean: np.ndarray, var: np.ndarray, alpha: float) -> int:
    return int(np.argmax(mean + alpha * np.sqrt(np.maximum(var, 0.0))))


def _ts_draw(mean: np.ndarray, cov: np.ndarray, alpha: float,
             rng: np.random.Generator) -> int:
    if alpha == 0.0:
        return int(np.argmax(mean))
    factor = linalg.cholesky(cov)
    sample = mean + alpha * (factor.lower @ rng.standard_normal(mean.shape[0]))
    return int(np.argmax(sample))


def ucb_select(state: GPState, alpha: float, grid) -> int:
    """Index of the grid point maximizing mean + alpha * std (ties: lowest index)."""
    pts = state.kernel.domain.require(grid)
    if pts.shape[0] == 0:
        raise EmptyGrid("candidate grid is empty")
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    mean, var = posterior_grid(state, pts)
    return _argmax_ucb(mean, var, alpha)


def ts_select(state: GPState, alpha: float, grid, rng_seed) -> int:
    """Index of the argmax of one joint posterior sample over the grid.

    The sample has mean equal to the posterior mean and covariance
    ``alpha^2`` times the posterior covariance; deterministic given the seed.
    """
    pts = state.kernel.domain.require(grid)
    if pts.shape[0] == 0:
        raise EmptyGrid("candidate grid is empty")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    mean, cov = posterior_cov_grid(state, pts)
    return _ts_draw(mean, cov, alpha, rng)


# ---------------------------------------------------------------------------
# Policy runner
# ---------------------------------------------------------------------------


class _GridPosterior:
    """Posterior mean/covariance restricted to the grid, updated in O(n^2).

    Equivalent to conditioning the full GP and evaluating on the grid:
    observing grid index s with noise variance tau applies the rank-one
    update with the covariance column at s.
    """

    def __init__(self, kernel: KernelSpec, grid_pts: np.ndarray, tau: float):
        self.tau = tau
        self.mean = np.zeros(grid_pts.shape[0])
        self.cov = gram(kernel, grid_pts)

    @property
    def var(self) -> np.ndarray:
        return np.diag(self.cov)

    def update(self, idx: int, y: float):
        col = self.cov[:, idx].copy()
        denom = col[idx] + self.tau
        self.mean = self.mean + col * ((y - self.mean[idx]) / denom)
        self.cov = self.cov - np.outer(col, col) / denom
        d = np.diag(self.cov)
        worst = float(np.min(d))
        if worst < -1e-6:
            raise NumericalInstability(f"grid posterior variance {worst:.3e} went negative")
        if worst < 0:
            self.cov[np.diag_indices_from(self.cov)] = np.maximum(d, 0.0)


@dataclass(frozen=True, eq=False)
class RegretTrace:
    """Per-step policy record against the grid-restricted optimum."""

    seed: int
    horizon: int
    chosen_indices: np.ndarray
    points: np.ndarray            # (T, d)
    objective_values: np.ndarray  # f(x_t)
    instant_regret: np.ndarray
    cumulative_regret: np.ndarray
    widths: np.ndarray            # alpha_t actually used
    variances: np.ndarray         # sigma^2_{t-1}(x_t)
    cumulative_gain: np.ndarray   # telescoped I(y_t; f) of the run
    best_value: float

    @property
    def final_regret(self) -> float:
        return float(self.cumulative_regret[-1])

    @property
    def final_gain(self) -> float:
        return float(self.cumulative_gain[-1])


def run_policy(
    config: PolicyConfig,
    objective: Callable,
    kernel: KernelSpec,
    tau: float,
    grid,
    horizon: int,
    rng_seed: int,
    gamma_bound: Callable[[int], float] | None = None,
) -> RegretTrace:
    """Run the configured policy for ``horizon`` steps on a fixed grid.

    ``objective`` maps an (n, d) batch to values; regret is accounted
    against its grid argmax.  Observation noise is Gaussian with scale
    sqrt(tau) (Bayesian) or the configured noise scale (frequentist).  For
    frequentist widths, ``gamma_bound(t)`` supplies an upper bound on the
    information gain after t steps; without it the policy's own running
    gain is used (a lower surrogate).
    """
    pts = kernel.domain.require(grid)
    n = pts.shape[0]
    if n == 0:
        raise EmptyGrid("candidate grid is empty")
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    if tau <= 0:
        raise ValueError("tau must be positive")

    f_vals = np.asarray(objective(pts), dtype=float).ravel()
    if f_vals.shape[0] != n:
        raise ValueError("objective must return one value per grid point")
    best = float(np.max(f_vals))

    noise_sd = math.sqrt(tau) if config.setting == "bayesian" else float(config.noise_scale)
    noise_rng = substream(rng_seed, "noise")
    ts_rng = substream(rng_seed, "ts")

    post = _GridPosterior(kernel, pts, tau)
    chosen = np.zeros(horizon, dtype=int)
    widths = np.zeros(horizon)
    variances = np.zeros(horizon)
    gains = np.zeros(horizon)
    running_gain = 0.0
    for t in range(1, horizon + 1):
        if config.setting == "frequentist":
            gain_prev = gamma_bound(t - 1) if gamma_bound is not None else running_gain
        else:
            gain_prev = None
        alpha = beta_schedule(config, t, gain_prev)
        if config.algorithm == "ucb":
            idx = _argmax_ucb(post.mean, post.var, alpha)
        else:
            idx = _ts_draw(post.mean, post.cov, alpha, ts_rng)
        var_before = max(float(post.cov[idx, idx]), 0.0)
        y = f_vals[idx] + noise_sd * float(noise_rng.standard_normal())
        chosen[t - 1] = idx
        widths[t - 1] = alpha
        variances[t - 1] = var_before
        running_gain += 0.5 * math.log1p(var_before / tau)
        gains[t - 1] = running_gain
        post.update(idx, y)

    f_chosen = f_vals[chosen]
    inst = best - f_chosen
    return RegretTrace(
        seed=int(rng_seed),
        horizon=horizon,
        chosen_indices=chosen,
        points=pts[chosen],
        objective_values=f_chosen,
        instant_regret=inst,
        cumulative_regret=np.cumsum(inst),
        widths=widths,
        variances=variances,
        cumulative_gain=gains,
        best_value=best,
    )


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RegretSummary:
    """Per-step distribution of cumulative regret across seeds."""

    horizon: int
    median: np.ndarray
    mean: np.ndarray
    q25: np.ndarray
    q75: np.ndarray


def regret_summary(traces: list[RegretTrace]) -> RegretSummary:
    """Median / mean / interquartile range of cumulative regret per step."""
    if not traces:
        raise MismatchedHorizons("need at least one trace")
    horizon = traces[0].horizon
    if any(tr.horizon != horizon for tr in traces):
        raise MismatchedHorizons("traces have different horizons")
    stacked = np.stack([tr.cumulative_regret for tr in traces], axis=0)
    return RegretSummary(
        horizon=horizon,
        median=np.median(stacked, axis=0),
        mean=np.mean(stacked, axis=0),
        q25=np.quantile(stacked, 0.25, axis=0),
        q75=np.quantile(stacked, 0.75, axis=0),
    )
