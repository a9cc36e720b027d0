"""Numeric kernels for the Student-t density and CDF.

Log-gamma uses a fixed-coefficient Lanczos approximation (g=7, 9 terms);
the regularized incomplete beta uses the modified Lentz continued fraction
with the standard symmetry switch. All functions are pure, broadcast over
numpy arrays, and accept plain scalars.
"""

from __future__ import annotations

import numpy as np

__all__ = ["log_gamma", "reg_inc_beta", "t_logpdf", "t_pdf", "t_cdf"]

_LOG_2PI = 1.8378770664093453
_LOG_PI = 1.1447298858494002

# Lanczos coefficients for g=7 (Godfrey's set, ~15 significant digits).
_LANCZOS_G = 7.0
_LANCZOS = np.array([
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
])

_CF_MAX_ITER = 300
_CF_TOL = 1e-14
_CF_TINY = 1e-300


def _maybe_scalar(out, *inputs):
    if all(np.ndim(v) == 0 for v in inputs):
        return float(out)
    return out


def _lanczos_log_gamma(z):
    """Lanczos series, valid for z >= 0.5."""
    zm1 = np.asarray(z, dtype=float) - 1.0
    series = np.full_like(zm1, _LANCZOS[0])
    for k in range(1, len(_LANCZOS)):
        series = series + _LANCZOS[k] / (zm1 + k)
    t = zm1 + _LANCZOS_G + 0.5
    return 0.5 * _LOG_2PI + (zm1 + 0.5) * np.log(t) - t + np.log(series)


def log_gamma(x):
    """Natural log of the gamma function, ln Gamma(x), for x > 0.

    Absolute error stays below 1e-12 on [0.5, 100]. Arguments in (0, 0.5)
    go through the reflection formula.

    Raises ValueError for non-positive or non-finite input.
    """
    x_arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x_arr)) or np.any(x_arr <= 0.0):
        raise ValueError("log_gamma requires finite x > 0")
    small = x_arr < 0.5
    out = _lanczos_log_gamma(np.where(small, 1.0 - x_arr, x_arr))
    if np.any(small):
        # ln Gamma(x) = ln(pi / sin(pi x)) - ln Gamma(1 - x) on (0, 0.5)
        xs = np.where(small, x_arr, 0.5)
        out = np.where(small, _LOG_PI - np.log(np.sin(np.pi * xs)) - out, out)
    return _maybe_scalar(out, x)


def _beta_cont_frac(a, b, x):
    """Modified Lentz continued fraction for the incomplete beta.

    Assumes the caller already applied the symmetry switch, so x is on the
    rapidly-converging side. Vectorized; iterates until every element moves
    by less than _CF_TOL (at most _CF_MAX_ITER rounds).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    x = np.asarray(x, dtype=float)
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = np.ones_like(x)
    d = 1.0 - qab * x / qap
    d = np.where(np.abs(d) < _CF_TINY, _CF_TINY, d)
    d = 1.0 / d
    h = d.copy()
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        num = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + num * d
        d = np.where(np.abs(d) < _CF_TINY, _CF_TINY, d)
        c = 1.0 + num / c
        c = np.where(np.abs(c) < _CF_TINY, _CF_TINY, c)
        d = 1.0 / d
        h = h * d * c
        num = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + num * d
        d = np.where(np.abs(d) < _CF_TINY, _CF_TINY, d)
        c = 1.0 + num / c
        c = np.where(np.abs(c) < _CF_TINY, _CF_TINY, c)
        d = 1.0 / d
        delta = d * c
        h = h * delta
        if np.all(np.abs(delta - 1.0) < _CF_TOL):
            break
    return h


def reg_inc_beta(a, b, x):
    """Regularized incomplete beta function I_x(a, b).

    Parameters
    ----------
    a, b : positive reals (broadcastable)
    x : reals in [0, 1]

    The continued fraction is evaluated on whichever side of the symmetry
    point (a+1)/(a+b+2) converges quickly; the other side goes through
    I_x(a,b) = 1 - I_{1-x}(b,a).
    """
    a_arr = np.asarray(a, dtype=float)
    b_arr = np.asarray(b, dtype=float)
    x_arr = np.asarray(x, dtype=float)
    if not (np.all(np.isfinite(a_arr)) and np.all(np.isfinite(b_arr))):
        raise ValueError("reg_inc_beta requires finite a, b")
    if np.any(a_arr <= 0.0) or np.any(b_arr <= 0.0):
        raise ValueError("reg_inc_beta requires a > 0 and b > 0")
    if not np.all(np.isfinite(x_arr)) or np.any(x_arr < 0.0) or np.any(x_arr > 1.0):
        raise ValueError("reg_inc_beta requires x in [0, 1]")
    a_arr, b_arr, x_arr = np.broadcast_arrays(a_arr, b_arr, x_arr)

    swap = x_arr > (a_arr + 1.0) / (a_arr + b_arr + 2.0)
    aa = np.where(swap, b_arr, a_arr)
    bb = np.where(swap, a_arr, b_arr)
    xx = np.where(swap, 1.0 - x_arr, x_arr)

    interior = (xx > 0.0) & (xx < 1.0)
    xs = np.where(interior, xx, 0.5)
    log_front = (
        aa * np.log(xs)
        + bb * np.log1p(-xs)
        + log_gamma(aa + bb)
        - log_gamma(aa)
        - log_gamma(bb)
    )
    val = np.exp(log_front) * _beta_cont_frac(aa, bb, xs) / aa
    val = np.where(interior, val, np.where(xx <= 0.0, 0.0, 1.0))
    out = np.where(swap, 1.0 - val, val)
    return _maybe_scalar(out, a, b, x)


def _check_df(df):
    df_arr = np.asarray(df, dtype=float)
    if not np.all(np.isfinite(df_arr)) or np.any(df_arr <= 0.0):
        raise ValueError("degrees of freedom must be finite and > 0")
    return df_arr


def _check_x(x):
    x_arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x_arr)):
        raise ValueError("argument must be finite")
    return x_arr


def t_logpdf(x, df):
    """Log-density of the standard Student-t with `df` degrees of freedom."""
    x_arr = _check_x(x)
    df_arr = _check_df(df)
    out = (
        log_gamma(0.5 * (df_arr + 1.0))
        - log_gamma(0.5 * df_arr)
        - 0.5 * np.log(df_arr * np.pi)
        - 0.5 * (df_arr + 1.0) * np.log1p(x_arr * x_arr / df_arr)
    )
    return _maybe_scalar(out, x, df)


def t_pdf(x, df):
    """Density of the standard Student-t; symmetric in x."""
    out = np.exp(t_logpdf(x, df))
    return _maybe_scalar(out, x, df)


def t_cdf(x, df):
    """CDF of the standard Student-t, P(T <= x).

    Evaluates the smaller tail first: P(T <= -|x|) = I_u(df/2, 1/2) / 2 with
    u = df/(df + x^2), then reflects. This avoids cancellation for large |x|.
    """
    x_arr = _check_x(x)
    df_arr = _check_df(df)
    u = df_arr / (df_arr + x_arr * x_arr)
    tail = 0.5 * reg_inc_beta(0.5 * df_arr, 0.5, u)
    out = np.where(x_arr <= 0.0, tail, 1.0 - tail)
    return _maybe_scalar(out, x, df)
