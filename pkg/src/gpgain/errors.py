"""Exception types shared across the package."""


class GPGainError(Exception):
    """Base class for all package errors."""


class NotPositiveDefinite(GPGainError):
    """Matrix could not be factorized even after the full jitter schedule."""


class AsymmetricInput(GPGainError):
    """Matrix failed the symmetry check."""


class NumericalInstability(GPGainError):
    """A quantity left its mathematically valid range by more than round-off."""


class DomainViolation(GPGainError):
    """Query point lies outside the kernel's domain."""


class InsufficientSpectrum(GPGainError):
    """Fewer stored eigenpairs than the operation requires."""


class UnboundedTail(GPGainError):
    """Eigenvalue tail cannot be certified below the requested tolerance."""


class InvalidProfile(GPGainError):
    """Eigendecay profile parameters violate their validity constraints."""


class GridTooSmall(GPGainError):
    """Quadrature grid has fewer points than requested eigenvalues."""


class InsufficientData(GPGainError):
    """Not enough (positive) eigenvalues to fit a decay profile."""


class EmptyGrid(GPGainError):
    """Candidate set is empty."""


class MissingGamma(GPGainError):
    """Frequentist width requested without an information-gain value."""


class MismatchedHorizons(GPGainError):
    """Traces passed to an aggregate have different horizons."""


class ConfigError(GPGainError):
    """Invalid experiment configuration; message names the offending field."""
