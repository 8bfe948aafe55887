"""Gaussian-process bandits, empirical information gain, and gain bounds.

Building blocks: positive-definite linear algebra (``linalg``), covariance
functions and eigendecay profiles (``kernels``), exact GP inference and
function sampling (``gp``), greedy information gain plus its closed-form
upper bounds (``infogain``), UCB/TS policies with regret accounting
(``bandit``), and the experiment harness (``cli``).
"""

from .bandit import (
    PolicyConfig,
    RegretSummary,
    RegretTrace,
    bayesian_width,
    beta_schedule,
    frequentist_width,
    regret_summary,
    run_policy,
    ts_select,
    ucb_select,
)
from .errors import (
    AsymmetricInput,
    ConfigError,
    DomainViolation,
    EmptyGrid,
    GPGainError,
    GridTooSmall,
    InsufficientData,
    InsufficientSpectrum,
    InvalidProfile,
    MismatchedHorizons,
    MissingGamma,
    NotPositiveDefinite,
    NumericalInstability,
    UnboundedTail,
)
from .gp import (
    GPState,
    SampledFunction,
    condition,
    empty_state,
    fit_state,
    posterior,
    posterior_grid,
    sample_gp,
    sample_rkhs,
    sampling_rank,
)
from .infogain import (
    InfoGainTrace,
    cumulative_variance_check,
    decay_gain_bound,
    effective_dimension,
    exp_decay_gain_bound,
    greedy_gamma,
    info_gain,
    poly_decay_gain_bound,
    projected_gain_bound,
    weinstein_aronszajn_check,
)
from .kernels import (
    Domain,
    ExponentialDecay,
    KernelSpec,
    PolynomialDecay,
    Spectrum,
    UNIT_INTERVAL,
    evaluate,
    explicit_cosine_spectrum,
    fit_decay_profile,
    fourier_spectrum,
    gram,
    gram_diag,
    kernel_from_dict,
    kernel_from_json,
    kernel_to_dict,
    kernel_to_json,
    normalized_poly_coefficient,
    nystrom_spectrum,
    projected_split,
    tail_mass,
)
from .linalg import (
    PosDefFactor,
    cholesky,
    extend_factor,
    logdet,
    logdet_trace_bound,
)
from .rng import substream

__version__ = "0.1.0"
