"""Hierarchical Bayesian inference for linear inverse problems with skew-t noise.

Library layout:
    special      log-gamma, regularized incomplete beta, Student-t pdf/cdf
    skewt        skew-t density, latent reparameterization, seeded sampling
    model        hierarchical state, priors, joint log-density oracle
    forward      linear forward operators (deconvolution, Cauchy-Laplace)
    sampler      Metropolis-within-Gibbs chain runner
    diagnostics  ESS, Geweke, Heidelberger-Welch, autocorrelation, WAIC
    config       JSON run configuration
    tables       CSV serialization of all artifacts
    cli          command-line front end
"""

from .diagnostics import (
    DiagnosticsReport,
    HWResult,
    ParameterDiagnostics,
    WaicResult,
    autocorrelation,
    diagnose_chain,
    diagnose_draws,
    ess,
    geweke,
    heidelberger_welch,
    waic,
)
from .exceptions import (
    ChainAbortError,
    ConfigError,
    DataError,
    DecompositionError,
    DegenerateVarianceError,
)
from .forward import (
    LinearForwardModel,
    apply_forward,
    cauchy_laplace_operator,
    deconvolution_operator,
    read_operator_csv,
    repeat_rows,
    write_operator_csv,
)
from .model import (
    HierarchicalState,
    ObservedData,
    PriorSpec,
    default_priors,
    df_log_prior,
    joint_log_density,
    residuals,
    smoothness_precision,
)
from .sampler import (
    ChainOutput,
    SamplerConfig,
    run_chain,
    run_multi,
)
from .skewt import (
    LatentParams,
    SkewTParams,
    delta_of_skew,
    from_latent,
    sample_skew_t,
    skew_t_logpdf,
    to_latent,
)
from .special import log_gamma, reg_inc_beta, t_cdf, t_logpdf, t_pdf

__version__ = "0.1.0"
