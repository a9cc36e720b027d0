"""Metropolis-within-Gibbs sampler over the hierarchical state.

One sweep updates, in fixed order, u -> z -> w -> loading -> tau -> df.
Every block except df is an exact conjugate draw; df moves by a random-walk
Metropolis step on log(df - df_min), which respects the open support of its
truncated-exponential prior. The `*_conditional` functions expose each
block's full-conditional parameters so tests can verify the derivations
against `joint_log_density` ratios.

Chains are deterministic given their seed: each chain owns one numpy
Generator consumed in sweep order, and multi-chain runs use seeds
seed+0 ... seed+(chains-1) whether executed sequentially or in parallel.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.special import ndtr, ndtri

from .exceptions import ChainAbortError, DecompositionError
from .model import (
    HierarchicalState,
    ObservedData,
    PriorSpec,
    df_log_prior,
    residuals,
)
from .skewt import latent_to_scale_skew, _skew_t_logpdf_raw
from .special import log_gamma

__all__ = [
    "SamplerConfig",
    "ChainOutput",
    "u_conditional",
    "z_conditional",
    "w_conditional",
    "loading_conditional",
    "tau_conditional",
    "df_log_target",
    "update_u",
    "update_z",
    "update_w",
    "update_loading",
    "update_tau",
    "update_df_metropolis",
    "initial_state",
    "run_chain",
    "run_multi",
]

# Beyond this many prior sds into the tail, truncated-normal sampling
# switches from CDF inversion to one-sided exponential rejection.
_TRUNCNORM_TAIL = 5.0

_CHOL_JITTER = 1e-10


@dataclass(frozen=True)
class SamplerConfig:
    """Chain-length, seeding, and df-step settings.

    df_mode is "sampled" (Metropolis step) or "fixed" (df pinned at
    df_fixed, which must exceed 2). loading_fixed pins the skewness loading
    (0.0 reproduces symmetric noise); None leaves it sampled.
    """

    iterations: int = 20000
    burn_in: int = 5000
    thin: int = 1
    chains: int = 4
    seed: int = 0
    df_proposal_sd: float = 0.5
    df_mode: str = "sampled"
    df_fixed: float | None = None
    loading_fixed: float | None = None

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not 0 <= self.burn_in < self.iterations:
            raise ValueError("burn_in must satisfy 0 <= burn_in < iterations")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if self.chains < 1:
            raise ValueError("chains must be >= 1")
        if self.df_proposal_sd < 0.0:
            raise ValueError("df_proposal_sd must be >= 0")
        if self.df_mode not in ("sampled", "fixed"):
            raise ValueError("df_mode must be 'sampled' or 'fixed'")
        if self.df_mode == "fixed":
            if self.df_fixed is None or not self.df_fixed > 2.0:
                raise ValueError("fixed df mode requires df_fixed > 2")


@dataclass(frozen=True)
class ChainOutput:
    """Kept draws plus the per-observation log-likelihood matrix.

    draws has one row per kept iteration and d+3 columns: u_1..u_d,
    loading, tau, df. pointwise_loglik scores each observation under the
    marginal skew-t law (latents integrated out) at the kept parameters,
    which is what WAIC needs. accept_rate_df is 0.0 when df is fixed.
    """

    draws: np.ndarray
    pointwise_loglik: np.ndarray
    accept_rate_df: float
    seed_used: int

    @property
    def n_kept(self) -> int:
        return self.draws.shape[0]

    @property
    def dim(self) -> int:
        return self.draws.shape[1] - 3


# -- full-conditional parameters ----------------------------------------------

def u_conditional(
    state: HierarchicalState, data: ObservedData, spec: PriorSpec
) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian conditional for u: returns (mean, precision)."""
    a = data.operator.matrix
    precision = spec.u_precision + (a.T @ (state.w[:, None] * a)) / state.tau
    shifted = data.y - state.loading * state.z
    rhs = spec.u_precision @ spec.u_mean + (a.T @ (state.w * shifted)) / state.tau
    factor = _chol_with_jitter(precision)
    mean = cho_solve((factor, True), rhs)
    return mean, precision


def z_conditional(
    state: HierarchicalState, data: ObservedData, spec: PriorSpec
) -> tuple[np.ndarray, np.ndarray]:
    """Per-coordinate Gaussian part of the [0, inf)-truncated conditional.

    Returns (means, sds) with mean_i = loading*eps_i/(tau + loading^2) and
    var_i = tau / (w_i (tau + loading^2)).
    """
    eps = residuals(state, data)
    denom = state.tau + state.loading**2
    means = state.loading * eps / denom
    sds = np.sqrt(state.tau / (state.w * denom))
    return means, sds


def w_conditional(
    state: HierarchicalState, data: ObservedData, spec: PriorSpec
) -> tuple[float, np.ndarray]:
    """Gamma conditional for each w_i: returns (shape, rates)."""
    eps = residuals(state, data)
    resid_sq = (eps - state.loading * state.z) ** 2
    shape = 0.5 * state.df + 1.0
    rates = 0.5 * (state.df + state.z**2 + resid_sq / state.tau)
    return shape, rates


def loading_conditional(
    state: HierarchicalState, data: ObservedData, spec: PriorSpec
) -> tuple[float, float]:
    """Gaussian conditional for the skewness loading: returns (mean, sd)."""
    eps = residuals(state, data)
    precision = 1.0 / spec.loading_sd**2 + float(np.sum(state.w * state.z**2)) / state.tau
    mean = float(np.sum(state.w * state.z * eps)) / state.tau / precision
    return mean, 1.0 / math.sqrt(precision)


def tau_conditional(
    state: HierarchicalState, data: ObservedData, spec: PriorSpec
) -> tuple[float, float]:
    """Inverse-gamma conditional for tau: returns (shape, rate)."""
    eps = residuals(state, data)
    shape = spec.tau_shape + 0.5 * data.n_obs
    rate = spec.tau_rate + 0.5 * float(
        np.sum(state.w * (eps - state.loading * state.z) ** 2)
    )
    return shape, rate


def df_log_target(df: float, w: np.ndarray, spec: PriorSpec) -> float:
    """Unnormalized log-conditional of df: prior plus the w likelihood."""
    prior = df_log_prior(df, spec)
    if prior == -math.inf:
        return -math.inf
    half = 0.5 * df
    n = w.shape[0]
    return (
        prior
        + n * (half * math.log(half) - log_gamma(half))
        + (half - 1.0) * float(np.sum(np.log(w)))
        - half * float(np.sum(w))
    )


# -- block updates -------------------------------------------------------------

def update_u(state, data, spec, rng) -> np.ndarray:
    """Exact draw from the Gaussian conditional of u."""
    mean, precision = u_conditional(state, data, spec)
    factor = _chol_with_jitter(precision)
    noise = solve_triangular(
        factor, rng.standard_normal(mean.shape[0]), trans="T", lower=True
    )
    return mean + noise


def update_z(state, data, spec, rng) -> np.ndarray:
    """Independent draws from the [0, inf)-truncated normal conditionals."""
    means, sds = z_conditional(state, data, spec)
    return _sample_truncnorm_nonneg(means, sds, rng)


def update_w(state, data, spec, rng) -> np.ndarray:
    """Independent Gamma draws (rate parameterization)."""
    shape, rates = w_conditional(state, data, spec)
    return rng.gamma(shape=shape, scale=1.0 / rates)


def update_loading(state, data, spec, rng) -> float:
    """Exact draw from the Gaussian conditional of the loading."""
    mean, sd = loading_conditional(state, data, spec)
    return mean + sd * rng.standard_normal()


def update_tau(state, data, spec, rng) -> float:
    """Exact inverse-gamma draw for tau."""
    shape, rate = tau_conditional(state, data, spec)
    return 1.0 / rng.gamma(shape=shape, scale=1.0 / rate)


def update_df_metropolis(state, spec, config, rng) -> tuple[float, bool]:
    """Random-walk Metropolis on eta = log(df - df_min).

    The acceptance probability carries the change-of-variable term
    eta' - eta, so the walk targets the df-scale conditional exactly.
    """
    eta = math.log(state.df - spec.df_min)
    eta_new = eta + config.df_proposal_sd * rng.standard_normal()
    if eta_new > 700.0:
        # exp would overflow; the prior mass out there is zero anyway
        return state.df, False
    df_new = spec.df_min + math.exp(eta_new)
    log_accept = (
        df_log_target(df_new, state.w, spec)
        - df_log_target(state.df, state.w, spec)
        + eta_new
        - eta
    )
    if log_accept >= 0.0:
        return df_new, True
    u = rng.random()
    if u > 0.0 and math.log(u) < log_accept:
        return df_new, True
    return state.df, False


# -- chain runner --------------------------------------------------------------

def initial_state(
    data: ObservedData, spec: PriorSpec, config: SamplerConfig
) -> HierarchicalState:
    """Deterministic starting point; fixed blocks honor their pinned values."""
    n = data.n_obs
    loading = 0.0 if config.loading_fixed is None else config.loading_fixed
    df = (
        spec.df_min + 1.0 / spec.df_rate
        if config.df_mode == "sampled"
        else float(config.df_fixed)
    )
    return HierarchicalState(
        u=spec.u_mean.copy(),
        z=np.full(n, math.sqrt(2.0 / math.pi)),
        w=np.ones(n),
        loading=loading,
        tau=1.0,
        df=df,
    )


def run_chain(
    data: ObservedData, spec: PriorSpec, config: SamplerConfig
) -> ChainOutput:
    """Run one seeded chain and collect post-burn-in, thinned draws.

    A numerical failure (non-SPD solve after the jitter retry) or a state
    invariant violation aborts with a ChainAbortError carrying a state dump.
    """
    if config.df_mode == "fixed" and config.df_fixed <= spec.df_min:
        raise ValueError("fixed df must exceed the prior support point")
    if spec.u_mean.shape[0] != data.operator.dim:
        raise ValueError("prior dimension does not match the operator")
    rng = np.random.default_rng(config.seed)
    state = initial_state(data, spec, config)
    d = data.operator.dim
    kept = range(config.burn_in, config.iterations, config.thin)
    n_kept = len(kept)
    u_draws = np.empty((n_kept, d))
    loading_draws = np.empty(n_kept)
    tau_draws = np.empty(n_kept)
    df_draws = np.empty(n_kept)

    sample_loading = config.loading_fixed is None
    sample_df = config.df_mode == "sampled"
    accepted = 0
    proposals = 0
    row = 0
    for it in range(config.iterations):
        try:
            state = replace(state, u=update_u(state, data, spec, rng))
            state = replace(state, z=update_z(state, data, spec, rng))
            state = replace(state, w=update_w(state, data, spec, rng))
            if sample_loading:
                state = replace(state, loading=update_loading(state, data, spec, rng))
            state = replace(state, tau=update_tau(state, data, spec, rng))
            if sample_df:
                df_new, acc = update_df_metropolis(state, spec, config, rng)
                state = replace(state, df=df_new)
                proposals += 1
                accepted += int(acc)
        except (DecompositionError, ValueError) as exc:
            # ValueError here means non-finite values reached a linear
            # solve; dimensions were validated before the loop
            raise ChainAbortError(
                f"chain {config.seed} aborted at iteration {it}: {exc}",
                iteration=it,
                state_dump=_dump_state(state),
            ) from exc
        if it >= config.burn_in and (it - config.burn_in) % config.thin == 0:
            _check_state(state, spec, it)
            u_draws[row] = state.u
            loading_draws[row] = state.loading
            tau_draws[row] = state.tau
            df_draws[row] = state.df
            row += 1

    draws = np.column_stack([u_draws, loading_draws, tau_draws, df_draws])
    loglik = pointwise_loglik(u_draws, loading_draws, tau_draws, df_draws, data)
    rate = accepted / proposals if proposals else 0.0
    return ChainOutput(
        draws=draws,
        pointwise_loglik=loglik,
        accept_rate_df=rate,
        seed_used=config.seed,
    )


def run_multi(
    data: ObservedData, spec: PriorSpec, config: SamplerConfig, workers: int = 1
) -> list[ChainOutput]:
    """Run config.chains independent chains with seeds seed+0..seed+chains-1.

    Results are identical whether chains execute sequentially (workers=1)
    or in a process pool, since every chain owns its generator.
    """
    configs = [replace(config, seed=config.seed + c) for c in range(config.chains)]
    if workers <= 1 or config.chains == 1:
        return [run_chain(data, spec, cfg) for cfg in configs]
    with ProcessPoolExecutor(max_workers=min(workers, config.chains)) as pool:
        futures = [pool.submit(run_chain, data, spec, cfg) for cfg in configs]
        return [f.result() for f in futures]


def pointwise_loglik(u_draws, loading_draws, tau_draws, df_draws, data) -> np.ndarray:
    """Marginal skew-t log-likelihood of each observation at each kept draw.

    The latents are integrated out analytically by evaluating the direct
    (scale, skew, df) density; evaluation is blocked over draws to bound
    temporary memory.
    """
    scale, skew = latent_to_scale_skew(loading_draws, tau_draws)
    n_draws = u_draws.shape[0]
    out = np.empty((n_draws, data.n_obs))
    block = max(1, 2_000_000 // max(1, data.n_obs))
    a_t = data.operator.matrix.T
    for start in range(0, n_draws, block):
        stop = min(start + block, n_draws)
        eps = data.y[None, :] - u_draws[start:stop] @ a_t
        out[start:stop] = _skew_t_logpdf_raw(
            eps,
            scale[start:stop, None],
            skew[start:stop, None],
            df_draws[start:stop, None],
        )
    return out


# -- internals -----------------------------------------------------------------

def _chol_with_jitter(precision: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor, retrying once with a 1e-10*I jitter.

    scipy reports non-finite entries as ValueError rather than
    LinAlgError; both mean the same thing here.
    """
    try:
        return cholesky(precision, lower=True)
    except np.linalg.LinAlgError:
        pass
    except ValueError as exc:
        raise DecompositionError(f"precision matrix is not usable: {exc}") from exc
    jittered = precision + _CHOL_JITTER * np.eye(precision.shape[0])
    try:
        return cholesky(jittered, lower=True)
    except np.linalg.LinAlgError as exc:
        raise DecompositionError("precision matrix is not SPD even after jitter") from exc


def _sample_truncnorm_nonneg(means, sds, rng) -> np.ndarray:
    """Vectorized draws from Normal(means, sds^2) truncated to [0, inf).

    Inversion through the upper-tail CDF handles moderate truncation; when
    the mass sits more than _TRUNCNORM_TAIL sds below zero, one-sided
    exponential rejection (Robert's method) takes over.
    """
    means = np.asarray(means, dtype=float)
    sds = np.asarray(sds, dtype=float)
    lower = -means / sds
    out = np.empty_like(means)

    easy = lower <= _TRUNCNORM_TAIL
    if np.any(easy):
        a = lower[easy]
        tail_mass = ndtr(-a)
        v = 1.0 - rng.random(a.shape[0])
        out[easy] = -ndtri(v * tail_mass)
    hard = ~easy
    if np.any(hard):
        out[hard] = _truncnorm_tail_rejection(lower[hard], rng)
    return means + sds * out


def _truncnorm_tail_rejection(a: np.ndarray, rng) -> np.ndarray:
    """Standard-normal draws conditioned on exceeding a (all entries > 5)."""
    rate = 0.5 * (a + np.sqrt(a * a + 4.0))
    samples = np.empty_like(a)
    pending = np.ones(a.shape[0], dtype=bool)
    while np.any(pending):
        idx = np.nonzero(pending)[0]
        x = a[idx] + rng.exponential(1.0, idx.shape[0]) / rate[idx]
        accept = rng.random(idx.shape[0]) <= np.exp(-0.5 * (x - rate[idx]) ** 2)
        samples[idx[accept]] = x[accept]
        pending[idx[accept]] = False
    return samples


def _check_state(state: HierarchicalState, spec: PriorSpec, iteration: int) -> None:
    ok = (
        np.all(np.isfinite(state.u))
        and np.all(state.z >= 0.0)
        and np.all(state.w > 0.0)
        and np.all(np.isfinite(state.z))
        and np.all(np.isfinite(state.w))
        and math.isfinite(state.loading)
        and state.tau > 0.0
        and math.isfinite(state.tau)
        and state.df > spec.df_min
        and math.isfinite(state.df)
    )
    if not ok:
        raise ChainAbortError(
            f"state invariant violated at iteration {iteration}",
            iteration=iteration,
            state_dump=_dump_state(state),
        )


def _dump_state(state: HierarchicalState) -> dict:
    return {
        "u": state.u.tolist(),
        "z": state.z.tolist(),
        "w": state.w.tolist(),
        "loading": state.loading,
        "tau": state.tau,
        "df": state.df,
    }
