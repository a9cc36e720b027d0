"""Shared oracles and builders used across the test modules."""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from skewtgibbs.model import (
    HierarchicalState,
    ObservedData,
    default_priors,
    gamma_logpdf,
    invgamma_logpdf,
    joint_log_density,
    mvnormal_logpdf_precision,
    normal_logpdf,
)
from skewtgibbs.forward import LinearForwardModel
from skewtgibbs.sampler import (
    df_log_target,
    loading_conditional,
    tau_conditional,
    u_conditional,
    w_conditional,
    z_conditional,
)


def random_problem(rng, n=9, d=4):
    a = rng.standard_normal((n, d))
    data = ObservedData(y=2.0 * rng.standard_normal(n), operator=LinearForwardModel(matrix=a))
    return data, default_priors(d)


def random_state(rng, n, d) -> HierarchicalState:
    return HierarchicalState(
        u=rng.standard_normal(d),
        z=np.abs(rng.standard_normal(n)),
        w=rng.gamma(2.0, 1.0, n) + 0.05,
        loading=2.0 * rng.standard_normal(),
        tau=rng.gamma(2.0, 1.0) + 0.1,
        df=2.0 + rng.gamma(2.0, 1.0),
    )


def conditional_ratio_errors(rng, data, spec, pairs):
    """Worst |conditional log-ratio - joint log-ratio| per update block.

    The returned dict maps block name to the largest absolute discrepancy
    over `pairs` random (state, proposal) pairs; every entry must vanish
    for a correctly derived Gibbs sweep.
    """
    n, d = data.n_obs, data.operator.dim
    worst = {key: 0.0 for key in ("u", "z", "w", "loading", "tau", "df")}
    for _ in range(pairs):
        state = random_state(rng, n, d)
        base = joint_log_density(state, data, spec)

        mean, precision = u_conditional(state, data, spec)
        u_new = rng.standard_normal(d)
        lhs = mvnormal_logpdf_precision(u_new, mean, precision) - mvnormal_logpdf_precision(
            state.u, mean, precision
        )
        rhs = joint_log_density(replace(state, u=u_new), data, spec) - base
        worst["u"] = max(worst["u"], abs(lhs - rhs))

        means, sds = z_conditional(state, data, spec)
        i = int(rng.integers(n))
        z_new = state.z.copy()
        z_new[i] = abs(rng.standard_normal())
        lhs = float(
            normal_logpdf(z_new[i], means[i], sds[i] ** 2)
            - normal_logpdf(state.z[i], means[i], sds[i] ** 2)
        )
        rhs = joint_log_density(replace(state, z=z_new), data, spec) - base
        worst["z"] = max(worst["z"], abs(lhs - rhs))

        shape, rates = w_conditional(state, data, spec)
        w_new = state.w.copy()
        w_new[i] = rng.gamma(2.0, 1.0) + 0.05
        lhs = float(
            gamma_logpdf(w_new[i], shape, rates[i])
            - gamma_logpdf(state.w[i], shape, rates[i])
        )
        rhs = joint_log_density(replace(state, w=w_new), data, spec) - base
        worst["w"] = max(worst["w"], abs(lhs - rhs))

        loc_mean, loc_sd = loading_conditional(state, data, spec)
        loading_new = 3.0 * rng.standard_normal()
        lhs = float(
            normal_logpdf(loading_new, loc_mean, loc_sd**2)
            - normal_logpdf(state.loading, loc_mean, loc_sd**2)
        )
        rhs = joint_log_density(replace(state, loading=loading_new), data, spec) - base
        worst["loading"] = max(worst["loading"], abs(lhs - rhs))

        tau_shape, tau_rate = tau_conditional(state, data, spec)
        tau_new = rng.gamma(2.0, 1.0) + 0.1
        lhs = float(
            invgamma_logpdf(tau_new, tau_shape, tau_rate)
            - invgamma_logpdf(state.tau, tau_shape, tau_rate)
        )
        rhs = joint_log_density(replace(state, tau=tau_new), data, spec) - base
        worst["tau"] = max(worst["tau"], abs(lhs - rhs))

        df_new = 2.0 + rng.gamma(2.0, 1.0)
        lhs = df_log_target(df_new, state.w, spec) - df_log_target(state.df, state.w, spec)
        rhs = joint_log_density(replace(state, df=df_new), data, spec) - base
        worst["df"] = max(worst["df"], abs(lhs - rhs))
    return worst


def ar1_chain(phi: float, n: int, seed: int, warmup: int = 500) -> np.ndarray:
    """Seeded AR(1) series x_t = phi x_{t-1} + e_t with unit innovations."""
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(n + warmup)
    out = np.empty(n + warmup)
    out[0] = noise[0] / np.sqrt(1.0 - phi * phi)
    for t in range(1, n + warmup):
        out[t] = phi * out[t - 1] + noise[t]
    return out[warmup:]


def numeric_cdf_grid(logpdf, lo: float, hi: float, points: int = 20001):
    """Trapezoid CDF of exp(logpdf) on a uniform grid, normalized to 1."""
    grid = np.linspace(lo, hi, points)
    dens = np.exp(logpdf(grid))
    cdf = np.concatenate(
        [[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(grid))]
    )
    return grid, cdf / cdf[-1]


def ecdf_sup_distance(samples: np.ndarray, grid: np.ndarray, cdf: np.ndarray) -> float:
    """Sup distance between the empirical CDF of samples and a grid CDF."""
    samples = np.sort(samples)
    ref = np.interp(samples, grid, cdf)
    n = samples.size
    upper = np.abs(np.arange(1, n + 1) / n - ref)
    lower = np.abs(np.arange(n) / n - ref)
    return float(max(upper.max(), lower.max()))


def gaussian_posterior_mean(operator, y, prior_precision, noise_var):
    """Closed-form conjugate posterior mean for zero prior mean."""
    a = operator.matrix
    lhs = prior_precision + (a.T @ a) / noise_var
    return np.linalg.solve(lhs, a.T @ y / noise_var)


def power_iteration_extreme_singular_values(matrix, iters: int = 500):
    """(sigma_max, sigma_min) of a square matrix by power iteration.

    sigma_max comes from iterating A'A; sigma_min from iterating (A'A)^-1
    realized through LU solves, never forming the inverse.
    """
    from scipy.linalg import lu_factor, lu_solve

    ata = matrix.T @ matrix
    rng = np.random.default_rng(1234)
    v = rng.standard_normal(ata.shape[0])
    v /= np.linalg.norm(v)
    for _ in range(iters):
        v = ata @ v
        v /= np.linalg.norm(v)
    sigma_max_sq = float(v @ ata @ v)

    factor = lu_factor(ata)
    v = rng.standard_normal(ata.shape[0])
    v /= np.linalg.norm(v)
    for _ in range(iters):
        v = lu_solve(factor, v)
        v /= np.linalg.norm(v)
    sigma_min_sq = float(v @ ata @ v)
    return np.sqrt(sigma_max_sq), np.sqrt(sigma_min_sq)
