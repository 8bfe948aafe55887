"""Covariance functions and their eigenvalue structure.

Stationary kernels (squared-exponential, Matern, constant) on
hyper-rectangles, explicit finite-expansion kernels built from an
eigenvalue/eigenfeature list, polynomial and exponential eigendecay
profiles, tail-mass accounting, the projected/orthogonal kernel split, and
empirical spectrum estimation on quadrature grids (Nystrom).

Specs and spectra are immutable after construction; all evaluations are
pure functions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import gamma as gamma_fn
from scipy.special import gammaincc, kv, zeta

from .errors import (
    DomainViolation,
    GridTooSmall,
    InsufficientData,
    InsufficientSpectrum,
    InvalidProfile,
    UnboundedTail,
)

FAMILIES = ("se", "matern", "constant", "mercer")


def _as_points(x) -> np.ndarray:
    """Coerce a point or batch of points to a 2-d (n, d) array."""
    a = np.asarray(x, dtype=float)
    if a.ndim == 0:
        return a.reshape(1, 1)
    if a.ndim == 1:
        return a.reshape(1, -1)
    return a


# ---------------------------------------------------------------------------
# Domain
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Domain:
    """Axis-aligned hyper-rectangle search space."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape or np.any(hi <= lo):
            raise ValueError("domain bounds must satisfy lower < upper componentwise")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def contains(self, x) -> bool:
        pts = _as_points(x)
        if pts.shape[1] != self.dim:
            return False
        return bool(np.all(pts >= self.lower - 1e-12) and np.all(pts <= self.upper + 1e-12))

    def require(self, x) -> np.ndarray:
        pts = _as_points(x)
        if not self.contains(pts):
            raise DomainViolation(
                f"point outside [{self.lower.tolist()}, {self.upper.tolist()}]"
            )
        return pts

    def grid(self, points_per_dim: int) -> np.ndarray:
        """Uniform grid with ``points_per_dim`` points per axis, endpoints included."""
        axes = [
            np.linspace(self.lower[i], self.upper[i], points_per_dim)
            for i in range(self.dim)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def quadrature_grid(self, points_per_dim: int) -> np.ndarray:
        """Midpoint-rule nodes: cell centers matching uniform weights 1/n."""
        axes = []
        for i in range(self.dim):
            width = (self.upper[i] - self.lower[i]) / points_per_dim
            axes.append(self.lower[i] + width * (np.arange(points_per_dim) + 0.5))
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


UNIT_INTERVAL = Domain(np.array([0.0]), np.array([1.0]))


# ---------------------------------------------------------------------------
# Eigendecay profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PolynomialDecay:
    """Eigenvalue envelope ``coefficient * m**(-exponent)`` with exponent > 1."""

    coefficient: float
    exponent: float

    def __post_init__(self):
        if self.exponent <= 1.0:
            raise InvalidProfile(f"polynomial decay exponent must exceed 1, got {self.exponent}")
        if self.coefficient <= 0.0:
            raise InvalidProfile("polynomial decay coefficient must be positive")

    def value(self, m) -> np.ndarray:
        return self.coefficient * np.asarray(m, dtype=float) ** (-self.exponent)

    def tail_sum(self, n: int) -> float:
        """Exact ``sum_{m>n} value(m)`` via the Hurwitz zeta function."""
        return float(self.coefficient * zeta(self.exponent, n + 1))


@dataclass(frozen=True)
class ExponentialDecay:
    """Eigenvalue envelope ``amplitude * exp(-rate * m**exponent)``."""

    amplitude: float
    rate: float
    exponent: float

    def __post_init__(self):
        if self.exponent <= 0.0:
            raise InvalidProfile(f"exponential decay exponent must be positive, got {self.exponent}")
        if self.amplitude <= 0.0 or self.rate <= 0.0:
            raise InvalidProfile("exponential decay constants must be positive")

    def value(self, m) -> np.ndarray:
        m = np.asarray(m, dtype=float)
        return self.amplitude * np.exp(-self.rate * m**self.exponent)

    def _integral_tail(self, n: float) -> float:
        # int_n^inf amplitude*exp(-rate*z^b) dz via the upper incomplete gamma.
        b = self.exponent
        a = 1.0 / b
        x = self.rate * n**b
        return float(
            self.amplitude * a * self.rate ** (-a) * gammaincc(a, x) * gamma_fn(a)
        )

    def tail_sum(self, n: int, tol: float = 1e-12) -> float:
        """Upper bound on ``sum_{m>n} value(m)``, tight to within ``tol``.

        Geometric series (exact) when exponent == 1; otherwise explicit terms
        are accumulated until the remaining integral envelope drops below
        ``tol``.
        """
        if self.exponent == 1.0:
            q = math.exp(-self.rate)
            return self.amplitude * q ** (n + 1) / (1.0 - q)
        total = 0.0
        m = n
        while True:
            rest = self._integral_tail(m)
            if rest <= tol or m - n > 100_000:
                return total + rest
            m += 1
            total += float(self.value(m))


DecayProfile = PolynomialDecay | ExponentialDecay


# ---------------------------------------------------------------------------
# Spectrum
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Ordered Mercer eigenpairs with a uniform feature bound.

    ``feature_map(X)`` returns the (n, M) matrix of eigenfeature values at
    the rows of X.  ``finite_rank`` marks spectra whose stored eigenpairs
    constitute the entire kernel (no tail beyond the last stored index);
    spectra with a ``decay`` profile account for the un-stored remainder
    analytically.
    """

    eigenvalues: np.ndarray
    feature_map: Callable[[np.ndarray], np.ndarray]
    feature_bound: float
    decay: DecayProfile | None = None
    finite_rank: bool = False
    diag_sup: float | None = field(default=None)

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float)
        if lam.ndim != 1 or lam.size == 0:
            raise InvalidProfile("spectrum needs a nonempty 1-d eigenvalue array")
        if np.any(lam < 0):
            raise InvalidProfile("eigenvalues must be nonnegative")
        if np.any(np.diff(lam) > 1e-12 * max(1.0, lam[0])):
            raise InvalidProfile("eigenvalues must be nonincreasing")
        if self.feature_bound <= 0:
            raise InvalidProfile("feature bound must be positive")
        if self.decay is not None:
            m = np.arange(1, lam.size + 1)
            envelope = self.decay.value(m)
            if np.any(lam > envelope * (1 + 1e-9) + 1e-15):
                raise InvalidProfile("stored eigenvalues exceed the declared decay envelope")
        object.__setattr__(self, "eigenvalues", lam)

    @property
    def size(self) -> int:
        return int(self.eigenvalues.size)

    def with_decay(self, profile: DecayProfile) -> "Spectrum":
        return replace(self, decay=profile)


def projected_split(spectrum: Spectrum, rank: int):
    """Split the kernel into its leading-``rank`` part and the remainder.

    Returns two gram functions ``(k_p, k_o)``; each accepts single points or
    (n, d) batches and returns the corresponding covariance block.  The
    remainder is the stored expansion beyond ``rank`` (the full kernel must
    be covered by the stored eigenpairs).
    """
    if rank < 1 or rank > spectrum.size:
        raise InsufficientSpectrum(
            f"need 1 <= rank <= {spectrum.size} stored eigenpairs, got {rank}"
        )
    lam = spectrum.eigenvalues

    def _block(x, y, lo, hi):
        fx = spectrum.feature_map(_as_points(x))[:, lo:hi]
        fy = spectrum.feature_map(_as_points(y))[:, lo:hi]
        out = (fx * lam[lo:hi]) @ fy.T
        return out

    def k_p(x, y):
        return _block(x, y, 0, rank)

    def k_o(x, y):
        return _block(x, y, rank, spectrum.size)

    return k_p, k_o


def tail_mass(spectrum: Spectrum, rank: int, truncation_tol: float = 1e-10) -> float:
    """Covariance mass outside the leading ``rank`` eigendirections.

    Sum of ``eigenvalue * feature_bound**2`` over all indices beyond
    ``rank``: stored eigenvalues are summed exactly and the un-stored
    remainder is added from the decay profile (upper bound, tight to within
    ``truncation_tol``).  Finite-rank spectra have no remainder.
    """
    if rank < 0:
        raise ValueError("rank must be nonnegative")
    psi_sq = spectrum.feature_bound**2
    lam = spectrum.eigenvalues
    stored = float(np.sum(lam[rank:])) if rank < lam.size else 0.0
    start = max(rank, lam.size)
    if spectrum.finite_rank:
        remainder = 0.0
    elif spectrum.decay is not None:
        if isinstance(spectrum.decay, PolynomialDecay):
            remainder = spectrum.decay.tail_sum(start)
        else:
            remainder = spectrum.decay.tail_sum(start, tol=truncation_tol / max(psi_sq, 1e-300))
    else:
        # No profile: certify convergence from the empirical decay ratio.
        if lam.size < 2 or lam[-1] <= 0:
            remainder = 0.0
        else:
            tail = lam[-min(5, lam.size) :]
            ratios = tail[1:] / tail[:-1]
            rho = float(np.max(ratios)) if ratios.size else 1.0
            if rho >= 1.0 or lam[-1] * rho / (1.0 - rho) * psi_sq > truncation_tol:
                raise UnboundedTail(
                    "no decay profile and stored eigenvalues have not converged "
                    f"below {truncation_tol:.1e}"
                )
            remainder = lam[-1] * rho / (1.0 - rho)
    return (stored + remainder) * psi_sq


# ---------------------------------------------------------------------------
# Cosine eigenbasis on [0, 1]
# ---------------------------------------------------------------------------


def _cosine_features(num_terms: int) -> Callable[[np.ndarray], np.ndarray]:
    # phi_1 = 1, phi_m(x) = sqrt(2) cos((m-1) pi x): orthonormal in L2([0,1]).
    def feature_map(x: np.ndarray) -> np.ndarray:
        pts = _as_points(x)[:, 0]
        m = np.arange(num_terms)
        out = np.sqrt(2.0) * np.cos(np.pi * np.outer(pts, m))
        out[:, 0] = 1.0
        return out

    return feature_map


def _cosine_diag_sup(eigenvalues: np.ndarray, analytic_tail: float) -> float:
    # k(x,x) is maximized at x = 0 where every cosine equals 1.
    lam = np.asarray(eigenvalues, dtype=float)
    return float(lam[0] + 2.0 * (np.sum(lam[1:]) + analytic_tail))


def fourier_spectrum(profile, num_terms: int) -> Spectrum:
    """Synthetic Mercer spectrum on [0, 1] with prescribed eigendecay.

    ``profile`` is either a decay profile or a bare polynomial exponent
    (coefficient 1).  Eigenvalues equal the profile values exactly; features
    are the cosine basis, uniformly bounded by sqrt(2).
    """
    if isinstance(profile, (int, float)):
        profile = PolynomialDecay(1.0, float(profile))
    if not isinstance(profile, (PolynomialDecay, ExponentialDecay)):
        raise InvalidProfile(f"unsupported profile {profile!r}")
    if num_terms < 1:
        raise InvalidProfile("num_terms must be at least 1")
    m = np.arange(1, num_terms + 1)
    lam = profile.value(m)
    analytic_tail = profile.tail_sum(num_terms)
    return Spectrum(
        eigenvalues=lam,
        feature_map=_cosine_features(num_terms),
        feature_bound=np.sqrt(2.0),
        decay=profile,
        finite_rank=False,
        diag_sup=_cosine_diag_sup(lam, analytic_tail),
    )


def explicit_cosine_spectrum(eigenvalues, decay: DecayProfile | None = None) -> Spectrum:
    """Finite-rank spectrum with the cosine eigenbasis and given eigenvalues.

    The kernel is exactly the stored expansion; an optional decay profile may
    be attached as a (valid) envelope for the bound calculators.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    return Spectrum(
        eigenvalues=lam,
        feature_map=_cosine_features(lam.size),
        feature_bound=np.sqrt(2.0),
        decay=decay,
        finite_rank=True,
        diag_sup=_cosine_diag_sup(lam, 0.0),
    )


def normalized_poly_coefficient(exponent: float) -> float:
    """Coefficient making the cosine-basis polynomial kernel satisfy sup k(x,x) = 1."""
    return 1.0 / (1.0 + 2.0 * (float(zeta(exponent, 1)) - 1.0))


# ---------------------------------------------------------------------------
# Kernel specifications
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """Declarative covariance function: family plus hyperparameters.

    ``mercer`` kernels are defined by an explicit spectrum (the kernel IS the
    stored expansion); stationary families use ``lengthscale`` (and ``nu``
    for Matern) with unit variance by default.
    """

    family: str
    domain: Domain
    lengthscale: float | None = None
    nu: float | None = None
    variance: float = 1.0
    spectrum: Spectrum | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.family in ("se", "matern"):
            if self.lengthscale is None or self.lengthscale <= 0:
                raise ValueError(f"{self.family} kernel needs a positive lengthscale")
        if self.family == "matern":
            if self.nu is None or self.nu <= 0.5:
                raise ValueError("matern kernel needs smoothness nu > 1/2")
        if self.variance <= 0:
            raise ValueError("variance scale must be positive")
        if self.family == "mercer" and self.spectrum is None:
            raise ValueError("mercer kernel needs a spectrum")

    @property
    def kbar(self) -> float:
        """Uniform bound on |k(x, x')|."""
        if self.family == "mercer":
            s = self.spectrum
            if s.diag_sup is not None:
                return s.diag_sup
            return float(np.sum(s.eigenvalues)) * s.feature_bound**2
        return self.variance


def _matern_values(r: np.ndarray, lengthscale: float, nu: float) -> np.ndarray:
    s = np.sqrt(2.0 * nu) * r / lengthscale
    if nu == 1.5:
        return (1.0 + s) * np.exp(-s)
    if nu == 2.5:
        return (1.0 + s + s**2 / 3.0) * np.exp(-s)
    out = np.ones_like(s)
    pos = s > 0
    sp = s[pos]
    out[pos] = (2.0 ** (1.0 - nu) / gamma_fn(nu)) * sp**nu * kv(nu, sp)
    return out


def gram(spec: KernelSpec, x, y=None) -> np.ndarray:
    """Covariance block ``[k(x_i, y_j)]`` for row batches of points."""
    xp = spec.domain.require(x)
    yp = xp if y is None else spec.domain.require(y)
    if spec.family == "constant":
        return np.full((xp.shape[0], yp.shape[0]), spec.variance)
    if spec.family == "mercer":
        s = spec.spectrum
        fx = s.feature_map(xp)
        fy = fx if y is None else s.feature_map(yp)
        return (fx * s.eigenvalues) @ fy.T
    r = cdist(xp, yp)
    if spec.family == "se":
        return spec.variance * np.exp(-0.5 * (r / spec.lengthscale) ** 2)
    return spec.variance * _matern_values(r, spec.lengthscale, spec.nu)


def gram_diag(spec: KernelSpec, x) -> np.ndarray:
    """Prior variances ``k(x_i, x_i)`` for a batch of points."""
    xp = spec.domain.require(x)
    if spec.family == "mercer":
        s = spec.spectrum
        fx = s.feature_map(xp)
        return np.sum(fx**2 * s.eigenvalues, axis=1)
    return np.full(xp.shape[0], spec.variance)


def evaluate(spec: KernelSpec, x, y) -> float:
    """Kernel value at a single pair of points."""
    return float(gram(spec, _as_points(x), _as_points(y))[0, 0])


# ---------------------------------------------------------------------------
# Nystrom spectrum estimation
# ---------------------------------------------------------------------------


def nystrom_spectrum(
    spec: KernelSpec,
    grid: np.ndarray,
    num_eigs: int,
    weights: np.ndarray | None = None,
) -> Spectrum:
    """Estimate the leading eigenpairs of the kernel's integral operator.

    Solves the symmetrized quadrature eigenproblem W^{1/2} K W^{1/2} and
    extends the eigenvectors off-grid through the kernel.  Weights default
    to the uniform rule 1/n.  Eigenfunctions for (numerically) zero
    eigenvalues are the zero function.
    """
    pts = spec.domain.require(grid)
    n = pts.shape[0]
    if num_eigs > n:
        raise GridTooSmall(f"requested {num_eigs} eigenvalues from a {n}-point grid")
    w = np.full(n, 1.0 / n) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != (n,) or np.any(w <= 0):
        raise ValueError("weights must be positive, one per grid point")
    sqrt_w = np.sqrt(w)
    k_grid = gram(spec, pts)
    sym = sqrt_w[:, None] * k_grid * sqrt_w[None, :]
    eigvals, eigvecs = np.linalg.eigh(0.5 * (sym + sym.T))
    order = np.argsort(eigvals)[::-1][:num_eigs]
    lam = np.clip(eigvals[order], 0.0, None)
    vecs = eigvecs[:, order]

    floor = max(lam[0], 1.0) * 1e-12
    usable = lam > floor
    # Nystrom extension: phi_i(x) = sum_j sqrt(w_j) u_ji k(x, x_j) / lambda_i.
    coeff = np.zeros((n, num_eigs))
    coeff[:, usable] = (sqrt_w[:, None] * vecs[:, usable]) / lam[usable]

    def feature_map(x: np.ndarray) -> np.ndarray:
        return gram(spec, _as_points(x), pts) @ coeff

    on_grid = vecs / sqrt_w[:, None]
    on_grid[:, ~usable] = 0.0
    psi = float(np.max(np.abs(on_grid))) if num_eigs else 1.0
    diag_sup = float(np.max(np.sum(on_grid**2 * lam, axis=1)))
    return Spectrum(
        eigenvalues=lam,
        feature_map=feature_map,
        feature_bound=max(psi, 1e-12),
        decay=None,
        finite_rank=False,
        diag_sup=diag_sup,
    )


# ---------------------------------------------------------------------------
# Decay-profile fitting
# ---------------------------------------------------------------------------

EXP_EXPONENT_GRID = tuple(round(0.1 * i, 1) for i in range(1, 21))


def fit_decay_profile(spectrum: Spectrum, fit_range: tuple[int, int],
                      family: str = "auto") -> DecayProfile:
    """Least-squares eigendecay fit over 1-based index interval ``fit_range``.

    Fits ``log lam`` against ``log m`` (polynomial) and against ``m**b`` for
    each exponent b on a fixed grid (exponential), keeps the candidate with
    the smaller residual, and inflates its coefficient so the envelope
    dominates every fitted eigenvalue.  ``family`` restricts the candidates
    to one profile family ("polynomial" or "exponential").
    """
    if family not in ("auto", "polynomial", "exponential"):
        raise ValueError(f"unknown profile family {family!r}")
    lo, hi = fit_range
    lam_all = spectrum.eigenvalues
    if lo < 1 or hi > lam_all.size or hi - lo + 1 < 5:
        raise InsufficientData(
            f"need at least 5 stored eigenvalues in [{lo}, {hi}] (have {lam_all.size})"
        )
    m = np.arange(lo, hi + 1, dtype=float)
    lam = lam_all[lo - 1 : hi]
    if np.any(lam <= 0):
        raise InsufficientData("fit range contains nonpositive eigenvalues")
    y = np.log(lam)

    def _lstsq(x):
        a = np.stack([x, np.ones_like(x)], axis=1)
        sol, *_ = np.linalg.lstsq(a, y, rcond=None)
        resid = float(np.sum((a @ sol - y) ** 2))
        return sol, resid

    candidates = []
    if family in ("auto", "polynomial"):
        (slope, intercept), resid = _lstsq(np.log(m))
        if -slope > 1.0:
            prof = PolynomialDecay(math.exp(intercept), -slope)
            candidates.append((resid, prof))
    if family in ("auto", "exponential"):
        for b in EXP_EXPONENT_GRID:
            (slope, intercept), resid = _lstsq(m**b)
            if -slope > 0.0:
                prof = ExponentialDecay(math.exp(intercept), -slope, b)
                candidates.append((resid, prof))
    if not candidates:
        raise InsufficientData("no valid decay profile fits the given range")
    _, best = min(candidates, key=lambda c: c[0])
    inflate = float(np.max(lam / best.value(m)))
    if inflate > 1.0:
        if isinstance(best, PolynomialDecay):
            best = PolynomialDecay(best.coefficient * inflate, best.exponent)
        else:
            best = ExponentialDecay(best.amplitude * inflate, best.rate, best.exponent)
    return best


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def profile_to_dict(profile: DecayProfile | None):
    if profile is None:
        return None
    if isinstance(profile, PolynomialDecay):
        return {"type": "polynomial", "coefficient": profile.coefficient,
                "exponent": profile.exponent}
    return {"type": "exponential", "amplitude": profile.amplitude,
            "rate": profile.rate, "exponent": profile.exponent}


def profile_from_dict(d) -> DecayProfile | None:
    if d is None:
        return None
    if d["type"] == "polynomial":
        return PolynomialDecay(float(d["coefficient"]), float(d["exponent"]))
    if d["type"] == "exponential":
        return ExponentialDecay(float(d["amplitude"]), float(d["rate"]), float(d["exponent"]))
    raise InvalidProfile(f"unknown profile type {d['type']!r}")


def kernel_to_dict(spec: KernelSpec) -> dict:
    """JSON-safe description; mercer kernels store profile/eigenvalues, not code."""
    out = {
        "family": spec.family,
        "variance": spec.variance,
        "domain": {"lower": spec.domain.lower.tolist(), "upper": spec.domain.upper.tolist()},
    }
    if spec.lengthscale is not None:
        out["lengthscale"] = spec.lengthscale
    if spec.nu is not None:
        out["nu"] = spec.nu
    if spec.family == "mercer":
        s = spec.spectrum
        out["num_terms"] = s.size
        out["profile"] = profile_to_dict(s.decay)
        if s.finite_rank:
            out["eigenvalues"] = s.eigenvalues.tolist()
    return out


def kernel_from_dict(d: dict) -> KernelSpec:
    family = d["family"]
    dom = d.get("domain", {"lower": [0.0], "upper": [1.0]})
    domain = Domain(np.asarray(dom["lower"], dtype=float), np.asarray(dom["upper"], dtype=float))
    variance = float(d.get("variance", 1.0))
    if family == "mercer":
        profile = profile_from_dict(d.get("profile"))
        if "eigenvalues" in d:
            spectrum = explicit_cosine_spectrum(np.asarray(d["eigenvalues"], dtype=float),
                                                decay=profile)
        elif profile is not None:
            spectrum = fourier_spectrum(profile, int(d["num_terms"]))
        else:
            raise InvalidProfile("mercer kernel needs 'profile' or 'eigenvalues'")
        return KernelSpec(family="mercer", domain=domain, variance=variance, spectrum=spectrum)
    return KernelSpec(
        family=family,
        domain=domain,
        lengthscale=d.get("lengthscale"),
        nu=d.get("nu"),
        variance=variance,
    )


def kernel_to_json(spec: KernelSpec) -> str:
    return json.dumps(kernel_to_dict(spec), indent=2, sort_keys=True)


def kernel_from_json(text: str) -> KernelSpec:
    return kernel_from_dict(json.loads(text))
