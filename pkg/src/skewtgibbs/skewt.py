"""Skew-t noise law: density, latent-scale reparameterization, seeded sampling.

Direct parameters are (scale, skew, df). The equivalent latent
parameterization (delta, loading, tau) with

    delta   = skew / sqrt(1 + skew^2)
    loading = scale * delta
    tau     = scale^2 * (1 - delta^2)

is what makes the Gibbs updates conjugate: a draw is built from
w ~ Gamma(df/2, df/2), z = |M| / sqrt(w), eps = loading*z + sqrt(tau/w)*N
with M, N independent standard normals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .special import t_cdf, t_logpdf

__all__ = [
    "SkewTParams",
    "LatentParams",
    "delta_of_skew",
    "to_latent",
    "from_latent",
    "latent_to_scale_skew",
    "skew_t_logpdf",
    "sample_skew_t",
]

# |delta| is clamped just inside (-1, 1) so from_latent never produces an
# infinite skew from rounding.
_DELTA_CLAMP = 1.0 - 1e-12

_LOG_TINY = math.log(np.finfo(float).tiny)


@dataclass(frozen=True)
class SkewTParams:
    """Direct parameterization of the skew-t law.

    scale > 0 (units of the observation), skew real (dimensionless),
    df > 0 degrees of freedom.
    """

    scale: float
    skew: float
    df: float

    def __post_init__(self):
        for name in ("scale", "skew", "df"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"SkewTParams.{name} must be finite")
        if self.scale <= 0.0:
            raise ValueError("SkewTParams.scale must be > 0")
        if self.df <= 0.0:
            raise ValueError("SkewTParams.df must be > 0")


@dataclass(frozen=True)
class LatentParams:
    """Working parameterization (delta, loading, tau); loading^2 + tau = scale^2."""

    delta: float
    loading: float
    tau: float

    def __post_init__(self):
        if not all(map(math.isfinite, (self.delta, self.loading, self.tau))):
            raise ValueError("LatentParams fields must be finite")
        if self.tau <= 0.0:
            raise ValueError("LatentParams.tau must be > 0")
        if abs(self.delta) >= 1.0:
            raise ValueError("LatentParams.delta must lie in (-1, 1)")


def delta_of_skew(skew):
    """Map the skewness parameter to delta = skew/sqrt(1+skew^2) in (-1, 1)."""
    skew_arr = np.asarray(skew, dtype=float)
    if not np.all(np.isfinite(skew_arr)):
        raise ValueError("skew must be finite")
    out = skew_arr / np.sqrt(1.0 + skew_arr * skew_arr)
    return float(out) if np.ndim(skew) == 0 else out


def to_latent(params: SkewTParams) -> LatentParams:
    """Convert direct parameters to the latent (delta, loading, tau) triple."""
    delta = delta_of_skew(params.skew)
    loading = params.scale * delta
    tau = params.scale**2 * (1.0 - delta**2)
    return LatentParams(delta=delta, loading=loading, tau=tau)


def from_latent(loading: float, tau: float, df: float) -> SkewTParams:
    """Invert the latent parameterization back to (scale, skew, df).

    tau <= 0 is a domain error; |delta| is clamped at 1 - 1e-12 before the
    skew is recovered, so near-degenerate inputs give a large finite skew.
    """
    if not (math.isfinite(loading) and math.isfinite(tau)):
        raise ValueError("loading and tau must be finite")
    if tau <= 0.0:
        raise ValueError("from_latent requires tau > 0")
    scale = math.sqrt(loading * loading + tau)
    delta = loading / scale
    delta = max(-_DELTA_CLAMP, min(_DELTA_CLAMP, delta))
    skew = delta / math.sqrt(1.0 - delta * delta)
    return SkewTParams(scale=scale, skew=skew, df=df)


def latent_to_scale_skew(loading, tau):
    """Vectorized from_latent for arrays, returning (scale, skew) only.

    Same clamp on |delta| as from_latent; every tau entry must be > 0.
    """
    loading_arr = np.asarray(loading, dtype=float)
    tau_arr = np.asarray(tau, dtype=float)
    if np.any(tau_arr <= 0.0) or not np.all(np.isfinite(tau_arr)):
        raise ValueError("latent_to_scale_skew requires finite tau > 0")
    if not np.all(np.isfinite(loading_arr)):
        raise ValueError("loading must be finite")
    scale = np.sqrt(loading_arr**2 + tau_arr)
    delta = np.clip(loading_arr / scale, -_DELTA_CLAMP, _DELTA_CLAMP)
    skew = delta / np.sqrt(1.0 - delta * delta)
    return scale, skew


def skew_t_logpdf(eps, params: SkewTParams):
    """Log-density of the skew-t law at eps (scalar or array).

    Density: (2/scale) * t(eps/scale; df)
             * T(skew * (eps/scale) * sqrt((df+1)/(df+(eps/scale)^2)); df+1).
    At skew = 0 the CDF factor is 1/2 and the Student-t is recovered exactly.
    """
    return _skew_t_logpdf_raw(eps, params.scale, params.skew, params.df)


def _skew_t_logpdf_raw(eps, scale, skew, df):
    """Broadcasting core of skew_t_logpdf; parameters may be arrays."""
    eps_arr = np.asarray(eps, dtype=float)
    if not np.all(np.isfinite(eps_arr)):
        raise ValueError("eps must be finite")
    s = eps_arr / scale
    core = t_logpdf(s, df) - np.log(scale)
    arg = skew * s * np.sqrt((df + 1.0) / (df + s * s))
    cdf = t_cdf(arg, df + 1.0)
    # The CDF factor underflows only ~700 log-units below the mode; flooring
    # it keeps the log finite without affecting any reachable value.
    log_cdf = np.log(np.maximum(cdf, np.finfo(float).tiny))
    out = np.log(2.0) + core + log_cdf
    if np.ndim(eps) == 0 and np.ndim(skew) == 0 and np.ndim(df) == 0:
        return float(out)
    return out


def sample_skew_t(n: int, params: SkewTParams, seed: int) -> np.ndarray:
    """Draw n skew-t variates through the latent representation.

    Deterministic for a fixed seed; the generator is private to the call.
    n = 0 yields an empty vector.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    rng = np.random.default_rng(seed)
    latent = to_latent(params)
    half_df = 0.5 * params.df
    w = rng.gamma(shape=half_df, scale=1.0 / half_df, size=n)
    z = np.abs(rng.standard_normal(n)) / np.sqrt(w)
    return latent.loading * z + np.sqrt(latent.tau / w) * rng.standard_normal(n)
