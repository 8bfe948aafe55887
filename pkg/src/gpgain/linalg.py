"""Dense positive-definite linear algebra.

Cholesky factorization with a jitter schedule, log-determinants, incremental
rank-extension of factors, and the log-det/trace inequality used as a
numerical oracle.  Everything here is a pure function of its inputs;
``PosDefFactor`` values are immutable and safe to share.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import AsymmetricInput, NotPositiveDefinite

# Relative jitter levels, scaled by the mean diagonal of the input.
DEFAULT_JITTER_SCHEDULE = (0.0, 1e-10, 1e-8, 1e-6)

SYMMETRY_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class PosDefFactor:
    """Lower-triangular Cholesky factor of ``matrix + jitter_used * I``."""

    dimension: int
    lower: np.ndarray
    jitter_used: float

    def reconstruct(self) -> np.ndarray:
        """The factored matrix ``L @ L.T`` (input plus applied jitter)."""
        return self.lower @ self.lower.T


def cholesky(matrix: np.ndarray, jitter_schedule=DEFAULT_JITTER_SCHEDULE) -> PosDefFactor:
    """Factor a symmetric matrix, escalating through the jitter schedule.

    Schedule entries are relative levels: the additive term actually tried is
    ``level * mean(diag(matrix))`` (or ``level`` itself when the mean diagonal
    is not positive).  The first level that yields a successful factorization
    is recorded in ``jitter_used`` as the absolute value applied.

    Raises
    ------
    AsymmetricInput
        If ``max|M - M.T|`` exceeds 1e-8.
    NotPositiveDefinite
        If every jitter level in the schedule fails.
    """
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise AsymmetricInput(f"expected a square matrix, got shape {m.shape}")
    n = m.shape[0]
    if n == 0:
        return PosDefFactor(0, np.zeros((0, 0)), 0.0)
    asym = float(np.max(np.abs(m - m.T)))
    if asym > SYMMETRY_TOL:
        raise AsymmetricInput(f"max asymmetry {asym:.3e} exceeds {SYMMETRY_TOL:.0e}")
    m = 0.5 * (m + m.T)

    mean_diag = float(np.mean(np.diag(m)))
    scale = mean_diag if mean_diag > 0 else 1.0
    for level in jitter_schedule:
        jitter = float(level) * scale
        try:
            lower = np.linalg.cholesky(m + jitter * np.eye(n) if jitter else m)
        except np.linalg.LinAlgError:
            continue
        return PosDefFactor(n, lower, jitter)
    raise NotPositiveDefinite(
        f"factorization failed for every jitter level in {tuple(jitter_schedule)}"
    )


def logdet(factor: PosDefFactor) -> float:
    """Log-determinant of the factored matrix, ``2 * sum(log(diag(L)))``."""
    if factor.dimension == 0:
        return 0.0
    return float(2.0 * np.sum(np.log(np.diag(factor.lower))))


def extend_factor(factor: PosDefFactor, new_row: np.ndarray, new_diag: float) -> PosDefFactor:
    """Factor of the matrix extended by one bordering row/column.

    The extension keeps the jitter already applied to the existing block and
    applies the same amount to the new diagonal entry.  If the bordered pivot
    is not strictly positive, the extended matrix is refactorized from
    scratch through the default jitter schedule.
    """
    r = np.asarray(new_row, dtype=float).ravel()
    n = factor.dimension
    if r.shape[0] != n:
        raise ValueError(f"new_row has length {r.shape[0]}, expected {n}")
    if n == 0:
        return cholesky(np.array([[new_diag]]))
    v = solve_triangular(factor.lower, r, lower=True)
    pivot_sq = new_diag + factor.jitter_used - float(v @ v)
    if pivot_sq > 0.0:
        lower = np.zeros((n + 1, n + 1))
        lower[:n, :n] = factor.lower
        lower[n, :n] = v
        lower[n, n] = np.sqrt(pivot_sq)
        return PosDefFactor(n + 1, lower, factor.jitter_used)
    # Degenerate pivot: rebuild the extended matrix and let the schedule retry.
    base = factor.reconstruct() - factor.jitter_used * np.eye(n)
    extended = np.zeros((n + 1, n + 1))
    extended[:n, :n] = base
    extended[n, :n] = r
    extended[:n, n] = r
    extended[n, n] = new_diag
    return cholesky(extended)


def solve_factored(factor: PosDefFactor, b: np.ndarray) -> np.ndarray:
    """Solve ``(L @ L.T) x = b`` by two triangular solves."""
    y = solve_triangular(factor.lower, b, lower=True)
    return solve_triangular(factor.lower.T, y, lower=False)


def logdet_trace_bound(matrix: np.ndarray) -> tuple[float, float]:
    """Log-det of a PD matrix and its trace bound ``n * log(tr/n)``.

    The first value never exceeds the second (arithmetic-geometric mean
    inequality on the eigenvalues), with equality exactly when all
    eigenvalues coincide.
    """
    m = np.asarray(matrix, dtype=float)
    factor = cholesky(m, jitter_schedule=(0.0,))
    n = m.shape[0]
    bound = n * float(np.log(np.trace(m) / n))
    return logdet(factor), bound
