"""Release-gate verification: the package's numerical identities as named checks.

Each check draws deterministic random instances from a master seed, runs an
independent oracle against the production path, and reports its worst
error.  ``run_verification`` returns a list of check results; any failure
is a release blocker.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import gp, infogain, linalg
from .bandit import PolicyConfig, run_policy
from .errors import GPGainError
from .kernels import (
    Domain,
    KernelSpec,
    PolynomialDecay,
    UNIT_INTERVAL,
    fourier_spectrum,
    gram,
    normalized_poly_coefficient,
    projected_split,
    tail_mass,
)
from .rng import substream


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    max_error: float
    detail: str

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name} (max_err={self.max_error:.3e}) {self.detail}"


def _random_pd(rng, dim: int) -> np.ndarray:
    a = rng.standard_normal((dim, dim))
    return a @ a.T + (0.1 + rng.uniform()) * np.eye(dim)


def _check_cholesky_reconstruction(seed, fault=None) -> CheckResult:
    rng = substream(seed, "verify", "cholesky")
    rec_worst = 0.0
    ld_worst = 0.0
    for i in range(1000):
        dim = int(rng.integers(1, 21))
        m = _random_pd(rng, dim)
        if fault == "asymmetric" and i == 0:
            m[0, -1] += 1.0  # intentionally break symmetry
        factor = linalg.cholesky(m)
        scale = max(1.0, float(np.max(np.abs(m))))
        rec = float(np.max(np.abs(factor.reconstruct() - m - factor.jitter_used * np.eye(dim))))
        rec_worst = max(rec_worst, rec / scale)
        ld_worst = max(ld_worst, abs(linalg.logdet(factor)
                                     - float(np.sum(np.log(np.linalg.eigvalsh(m))))))
    ok = rec_worst <= 1e-10 and ld_worst <= 1e-8
    return CheckResult("cholesky_reconstruction", ok, max(rec_worst, ld_worst),
                       "reconstruct<=1e-10 rel, logdet vs eigenvalue oracle<=1e-8")


def _check_logdet_trace_inequality(seed) -> CheckResult:
    rng = substream(seed, "verify", "trace_bound")
    worst = 0.0
    for _ in range(1000):
        dim = int(rng.integers(1, 21))
        m = _random_pd(rng, dim)
        ld, bound = linalg.logdet_trace_bound(m)
        worst = max(worst, ld - bound)
    # Equality case: equal eigenvalues.
    c = float(rng.uniform(0.5, 2.0))
    ld, bound = linalg.logdet_trace_bound(c * np.eye(5))
    eq_gap = abs(ld - bound)
    ok = worst <= 1e-10 and eq_gap <= 1e-12
    return CheckResult("logdet_trace_inequality", ok, max(worst, eq_gap),
                       "logdet <= n log(tr/n) on 1000 random PD matrices")


def _check_incremental_factorization(seed) -> CheckResult:
    rng = substream(seed, "verify", "extend")
    worst = 0.0
    for _ in range(100):
        dim = int(rng.integers(2, 12))
        m = _random_pd(rng, dim)
        factor = linalg.cholesky(m[:1, :1])
        for j in range(1, dim):
            factor = linalg.extend_factor(factor, m[j, :j], m[j, j])
        full = linalg.cholesky(m)
        scale = max(1.0, float(np.max(np.abs(full.lower))))
        worst = max(worst, float(np.max(np.abs(factor.lower - full.lower))) / scale)
    ok = worst <= 1e-9
    return CheckResult("incremental_factorization", ok, worst,
                       "rank-extension equals batch factorization")


def _check_determinant_identity(seed) -> CheckResult:
    rng = substream(seed, "verify", "detident")
    spectrum = fourier_spectrum(PolynomialDecay(1.0, 2.0), 32)
    worst = 0.0
    for _ in range(100):
        t = int(rng.integers(1, 12))
        rank = int(rng.integers(1, 9))
        pts = rng.uniform(0.0, 1.0, size=(t, 1))
        tau = float(rng.uniform(0.3, 2.0))
        lhs, rhs = infogain.weinstein_aronszajn_check(spectrum, rank, pts, tau)
        worst = max(worst, abs(lhs - rhs) / max(lhs, 1.0))
    ok = worst <= 1e-8
    return CheckResult("determinant_identity", ok, worst,
                       "feature-space and function-space determinants agree")


def _check_posterior_inverse_oracle(seed) -> CheckResult:
    rng = substream(seed, "verify", "posterior")
    domain = Domain(np.array([0.0]), np.array([1.0]))
    worst = 0.0
    for _ in range(200):
        kernel = KernelSpec("se", domain, lengthscale=float(rng.uniform(0.05, 0.5)))
        t = int(rng.integers(1, 51))
        pts = rng.uniform(0.0, 1.0, size=(t, 1))
        y = rng.standard_normal(t)
        tau = float(rng.uniform(0.01, 1.0))
        state = gp.fit_state(kernel, tau, pts, y)
        queries = rng.uniform(0.0, 1.0, size=(5, 1))
        mean, var = gp.posterior_grid(state, queries)
        k_mat = gram(kernel, pts)
        inv = np.linalg.inv(k_mat + tau * np.eye(t))
        k_cross = gram(kernel, pts, queries)
        mean_o = k_cross.T @ inv @ y
        var_o = np.clip(np.full(5, kernel.variance) - np.sum(k_cross * (inv @ k_cross), axis=0),
                        0.0, None)
        worst = max(worst, float(np.max(np.abs(mean - mean_o))),
                    float(np.max(np.abs(var - var_o))))
    # Incremental conditioning vs batch.
    kernel = KernelSpec("se", domain, lengthscale=0.2)
    state = gp.empty_state(kernel, 0.1)
    pts = rng.uniform(0.0, 1.0, size=(10, 1))
    y = rng.standard_normal(10)
    for p, v in zip(pts, y):
        state = gp.condition(state, p, v)
    batch = gp.fit_state(kernel, 0.1, pts, y)
    queries = rng.uniform(0.0, 1.0, size=(8, 1))
    m1, v1 = gp.posterior_grid(state, queries)
    m2, v2 = gp.posterior_grid(batch, queries)
    worst = max(worst, float(np.max(np.abs(m1 - m2))), float(np.max(np.abs(v1 - v2))))
    ok = worst <= 1e-8
    return CheckResult("posterior_inverse_oracle", ok, worst,
                       "Cholesky posterior equals explicit-inverse oracle")


def _normalized_kernel(beta: float, num_terms: int = 128) -> KernelSpec:
    profile = PolynomialDecay(normalized_poly_coefficient(beta), beta)
    return KernelSpec("mercer", UNIT_INTERVAL, spectrum=fourier_spectrum(profile, num_terms))


def _check_telescoping_identity(seed) -> CheckResult:
    worst = 0.0
    grid = UNIT_INTERVAL.grid(128)
    for beta, horizon in ((1.5, 60), (2.0, 120)):
        kernel = _normalized_kernel(beta)
        trace = infogain.greedy_gamma(kernel, grid, horizon, tau=1.0)
        resum = 0.5 * np.sum(np.log1p(trace.variances / trace.tau))
        exact = infogain.info_gain(kernel, trace.chosen_points, trace.tau)
        worst = max(worst, abs(trace.final_gain - resum), abs(trace.final_gain - exact))
    ok = worst <= 1e-6
    return CheckResult("telescoping_identity", ok, worst,
                       "greedy gain equals variance telescoping and exact log-det")


def _check_cumulative_variance_bound(seed) -> CheckResult:
    worst = -np.inf
    grid = UNIT_INTERVAL.grid(128)
    kernel = _normalized_kernel(2.0)
    trace = infogain.greedy_gamma(kernel, grid, 120, tau=1.0)
    d_t, bound = infogain.cumulative_variance_check(trace.variances, trace.tau, trace.final_gain)
    worst = max(worst, d_t - bound)
    config = PolicyConfig(algorithm="ucb", setting="bayesian", delta=0.1)
    objective = gp.sample_gp(kernel.spectrum, kernel.spectrum.size, substream(seed, "verify", "obj"))
    tr = run_policy(config, objective, kernel, 0.05, UNIT_INTERVAL.grid(64), 80, rng_seed=seed)
    d_t, bound = infogain.cumulative_variance_check(tr.variances, 0.05, tr.final_gain)
    worst = max(worst, d_t - bound)
    ok = worst <= 1e-8
    return CheckResult("cumulative_variance_bound", ok, worst,
                       "cumulative variance within 2/log(1+1/tau) times the gain")


def _check_tail_mass_monotonicity(seed) -> CheckResult:
    spectrum = fourier_spectrum(PolynomialDecay(1.0, 2.0), 64)
    values = [tail_mass(spectrum, d) for d in range(0, 65, 4)]
    diffs = np.diff(values)
    worst = float(np.max(diffs)) if diffs.size else 0.0
    shrunk = values[-1] < 0.05 * values[0]
    ok = worst <= 1e-12 and shrunk
    return CheckResult("tail_mass_monotonicity", ok, max(worst, 0.0),
                       "tail mass nonincreasing in rank and vanishing")


def _check_projection_split_consistency(seed) -> CheckResult:
    rng = substream(seed, "verify", "split")
    spectrum = fourier_spectrum(PolynomialDecay(1.0, 2.0), 64)
    rank = 8
    k_p, k_o = projected_split(spectrum, rank)
    pts = rng.uniform(0.0, 1.0, size=(40, 1))
    full = (spectrum.feature_map(pts) * spectrum.eigenvalues) @ spectrum.feature_map(pts).T
    recomposed = k_p(pts, pts) + k_o(pts, pts)
    worst = float(np.max(np.abs(recomposed - full)))
    ko_mat = k_o(pts, pts)
    neg_diag = -float(np.min(np.diag(ko_mat)))
    # Stored-expansion tail only: the analytic remainder is not in k_o.
    cap = float(np.sum(spectrum.eigenvalues[rank:])) * spectrum.feature_bound**2
    overshoot = float(np.max(ko_mat)) - cap
    worst = max(worst, neg_diag, overshoot)
    ok = worst <= 1e-10
    return CheckResult("projection_split_consistency", ok, worst,
                       "k_p + k_o recomposes k; k_o within its tail cap")


def _check_gp_sample_covariance(seed, num_samples: int) -> CheckResult:
    spectrum = fourier_spectrum(PolynomialDecay(1.0, 2.0), 16)
    rank = 8
    rng = substream(seed, "verify", "mc_pairs")
    pts = rng.uniform(0.0, 1.0, size=(20, 1))
    feats = spectrum.feature_map(pts)[:, :rank]
    coeff = feats * np.sqrt(spectrum.eigenvalues[:rank])
    weights = np.empty((num_samples, rank))
    for i in range(num_samples):
        weights[i] = gp.sample_gp(spectrum, rank, i).weights
    values = weights @ coeff.T  # (N, 20)
    k_p, _ = projected_split(spectrum, rank)
    worst = 0.0
    for j in range(10):
        a, b = 2 * j, 2 * j + 1
        prod = values[:, a] * values[:, b]
        est = float(np.mean(prod))
        se = float(np.std(prod, ddof=1)) / math.sqrt(num_samples)
        target = float(k_p(pts[a], pts[b])[0, 0])
        worst = max(worst, abs(est - target) - 3.0 * se)
    mean_worst = 0.0
    for j in range(20):
        se = float(np.std(values[:, j], ddof=1)) / math.sqrt(num_samples)
        mean_worst = max(mean_worst, abs(float(np.mean(values[:, j]))) - 3.0 * se)
    worst = max(worst, mean_worst)
    ok = worst <= 0.0
    return CheckResult("gp_sample_covariance", ok, max(worst, 0.0),
                       f"covariance and mean within 3 MC standard errors (N={num_samples})")


def run_verification(master_seed: int = 0, fault: str | None = None,
                     mc_samples: int = 100_000) -> list[CheckResult]:
    """Run every named check; returns their results in a fixed order."""
    checks = [
        ("cholesky_reconstruction", lambda: _check_cholesky_reconstruction(master_seed, fault=fault)),
        ("logdet_trace_inequality", lambda: _check_logdet_trace_inequality(master_seed)),
        ("incremental_factorization", lambda: _check_incremental_factorization(master_seed)),
        ("determinant_identity", lambda: _check_determinant_identity(master_seed)),
        ("posterior_inverse_oracle", lambda: _check_posterior_inverse_oracle(master_seed)),
        ("telescoping_identity", lambda: _check_telescoping_identity(master_seed)),
        ("cumulative_variance_bound", lambda: _check_cumulative_variance_bound(master_seed)),
        ("tail_mass_monotonicity", lambda: _check_tail_mass_monotonicity(master_seed)),
        ("projection_split_consistency", lambda: _check_projection_split_consistency(master_seed)),
        ("gp_sample_covariance", lambda: _check_gp_sample_covariance(master_seed, mc_samples)),
    ]
    results = []
    for name, check in checks:
        try:
            results.append(check())
        except GPGainError as exc:
            results.append(CheckResult(name, False, float("inf"),
                                       f"{type(exc).__name__}: {exc}"))
    return results
