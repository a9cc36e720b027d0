"""Chain convergence diagnostics and WAIC model comparison.

Implements the classical scalar-chain checks: autocorrelation (biased,
FFT-based), effective sample size with initial-positive-sequence
truncation, the Geweke early/late z-score, and the Heidelberger-Welch
stationarity plus halfwidth test. Spectral density at zero is estimated
everywhere by non-overlapping batch means with 20 batches, a simple and
testable stand-in for periodogram smoothing.

All functions are pure and operate on one scalar parameter's chain;
`diagnose_draws` assembles a per-parameter report for a draw matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.fft import next_fast_len
from scipy.special import kve

from .exceptions import DegenerateVarianceError

__all__ = [
    "HWResult",
    "ParameterDiagnostics",
    "DiagnosticsReport",
    "WaicResult",
    "autocorrelation",
    "ess",
    "geweke",
    "heidelberger_welch",
    "waic",
    "diagnose_chain",
    "diagnose_draws",
]

_N_BATCHES = 20

# Relative halfwidth is meaningless at a numerically zero mean; report
# failure instead of dividing.
_MEAN_FLOOR = 1e-8


@dataclass(frozen=True)
class HWResult:
    """Heidelberger-Welch outcome for one chain.

    stationary: whether some 10%-prefix discard (up to 50%) passes the
    Cramer-von Mises test at the requested level. p_value belongs to the
    window that passed (or the final failing window). discarded is the
    number of leading draws dropped by that window.
    """

    stationary: bool
    p_value: float
    halfwidth_ok: bool
    discarded: int

    def __post_init__(self):
        if not 0.0 <= self.p_value <= 1.0:
            raise ValueError("p_value must lie in [0, 1]")


@dataclass(frozen=True)
class ParameterDiagnostics:
    """Per-parameter diagnostic row; nan marks a statistic whose
    preconditions (length, nonzero variance) the chain did not meet."""

    name: str
    ess: float
    geweke_z: float
    hw: HWResult
    autocorrelations: np.ndarray


@dataclass(frozen=True)
class DiagnosticsReport:
    parameters: tuple[ParameterDiagnostics, ...]
    chain_length: int


@dataclass(frozen=True)
class WaicResult:
    """Widely applicable information criterion; lower waic is better."""

    lppd: float
    p_waic: float
    waic: float

    def __post_init__(self):
        if self.p_waic < 0.0:
            raise ValueError("p_waic must be nonnegative")
        if not math.isfinite(self.waic):
            raise ValueError("waic must be finite")


def _as_chain(chain) -> np.ndarray:
    x = np.asarray(chain, dtype=float)
    if x.ndim != 1:
        raise ValueError("chain must be one-dimensional")
    if not np.all(np.isfinite(x)):
        raise ValueError("chain must be finite")
    return x


def _autocorr_full(x: np.ndarray) -> np.ndarray:
    """Biased (divide-by-n) autocorrelation at lags 0..n-1 via FFT."""
    n = x.size
    centered = x - x.mean()
    m = next_fast_len(2 * n)
    f = np.fft.rfft(centered, m)
    acov = np.fft.irfft(f * np.conj(f), m)[:n] / n
    if acov[0] <= 0.0:
        raise DegenerateVarianceError("chain has zero variance")
    return acov / acov[0]


def autocorrelation(chain, max_lag: int) -> np.ndarray:
    """Autocorrelation estimates at lags 0..max_lag (lag 0 is exactly 1).

    Uses the biased divide-by-n normalization. Requires the chain to span
    at least two max_lag windows and to be nonconstant.
    """
    x = _as_chain(chain)
    if max_lag < 0:
        raise ValueError("max_lag must be >= 0")
    if x.size < 2 * max(max_lag, 1):
        raise ValueError("chain shorter than 2*max_lag")
    rho = _autocorr_full(x)[: max_lag + 1]
    rho[0] = 1.0
    return rho


def ess(chain) -> float:
    """Effective sample size n / (1 + 2 sum rho(k)).

    The lag sum runs over the initial positive sequence: it stops just
    before the first nonpositive estimate, which keeps the result in
    (0, n].
    """
    x = _as_chain(chain)
    if x.size < 100:
        raise ValueError("ess requires a chain of length >= 100")
    rho = _autocorr_full(x)
    positive = rho[1:] > 0.0
    cut = int(np.argmin(positive)) if not positive.all() else positive.size
    tail_sum = float(np.sum(rho[1 : cut + 1])) if cut else 0.0
    return x.size / (1.0 + 2.0 * tail_sum)


def _batch_mean_variance(segment: np.ndarray) -> float:
    """Estimated variance of the segment mean via 20 non-overlapping batches.

    Trailing draws that do not fill the last batch are dropped.
    """
    size = segment.size // _N_BATCHES
    if size < 1:
        raise ValueError("segment too short for batch means")
    batches = segment[: size * _N_BATCHES].reshape(_N_BATCHES, size).mean(axis=1)
    return float(np.var(batches, ddof=1)) / _N_BATCHES


def geweke(chain, first_frac: float = 0.1, last_frac: float = 0.5) -> float:
    """Early/late mean-comparison z-score.

    z = (mean_first - mean_last) / sqrt(v_first + v_last), where each v is
    the batch-means estimate of that segment's squared standard error
    (spectral density at zero divided by segment length).
    """
    x = _as_chain(chain)
    if not (0.0 < first_frac and 0.0 < last_frac and first_frac + last_frac <= 1.0):
        raise ValueError("segment fractions must be positive and non-overlapping")
    n1 = int(first_frac * x.size)
    n2 = int(last_frac * x.size)
    if n1 < 50 or n2 < 50:
        raise ValueError("geweke segments must each hold at least 50 draws")
    first = x[:n1]
    last = x[x.size - n2 :]
    v1 = _batch_mean_variance(first)
    v2 = _batch_mean_variance(last)
    if v1 + v2 <= 0.0:
        raise DegenerateVarianceError("both segments have zero batch variance")
    return float((first.mean() - last.mean()) / math.sqrt(v1 + v2))


def _cramer_von_mises_cdf(q: float) -> float:
    """CDF of the Cramer-von Mises limit law (integral of a squared
    Brownian bridge), via the Bessel-K series summed to convergence."""
    if q <= 0.0:
        return 0.0
    if q >= 80.0:
        # upper tail is below e^-40 here; the series would need hundreds
        # of terms to say "one"
        return 1.0
    total = 0.0
    for k in range(400):
        u = (4.0 * k + 1.0) ** 2 / (16.0 * q)
        if u >= 350.0:
            break
        z = (
            math.gamma(k + 0.5)
            * math.sqrt(4.0 * k + 1.0)
            / (math.gamma(k + 1.0) * math.pi**1.5 * math.sqrt(q))
        )
        # kve = exp(u)*K_{1/4}(u), so the factor below is exp(-2u)*K scaled
        # stably for large u.
        term = z * math.exp(-2.0 * u) * float(kve(0.25, u))
        total += term
        if term < 1e-14 * max(total, 1.0):
            break
    return min(1.0, max(0.0, total))


def heidelberger_welch(
    chain, alpha: float = 0.05, halfwidth_tol: float = 0.1
) -> HWResult:
    """Stationarity (Cramer-von Mises on the cumulative-sum bridge) plus
    the relative-halfwidth adequacy check.

    The test starts from the full chain and discards 10% prefixes, up to
    half the chain, until the stationarity p-value exceeds alpha. The
    halfwidth check then runs on the retained window: it passes when
    1.96 * se(mean) <= halfwidth_tol * |mean|, and is reported failed
    whenever stationarity failed or |mean| < 1e-8.
    """
    x = _as_chain(chain)
    if x.size < 500:
        raise ValueError("heidelberger_welch requires length >= 500")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if halfwidth_tol <= 0.0:
        raise ValueError("halfwidth_tol must be > 0")

    stationary = False
    p_value = 0.0
    start = 0
    window = x
    for frac in (0.0, 0.1, 0.2, 0.3, 0.4, 0.5):
        start = int(frac * x.size)
        window = x[start:]
        m = window.size
        var_mean = _batch_mean_variance(window)
        if var_mean <= 0.0:
            raise DegenerateVarianceError("window has zero batch variance")
        spectral0 = var_mean * m
        bridge = np.cumsum(window) - window.mean() * np.arange(1, m + 1)
        stat = float(np.sum(bridge * bridge)) / (m * m * spectral0)
        p_value = 1.0 - _cramer_von_mises_cdf(stat)
        if p_value > alpha:
            stationary = True
            break

    halfwidth_ok = False
    if stationary:
        mean = float(window.mean())
        halfwidth = 1.96 * math.sqrt(_batch_mean_variance(window))
        if abs(mean) >= _MEAN_FLOOR:
            halfwidth_ok = halfwidth <= halfwidth_tol * abs(mean)
    return HWResult(
        stationary=stationary,
        p_value=p_value,
        halfwidth_ok=halfwidth_ok,
        discarded=start if stationary else x.size // 2,
    )


def waic(pointwise_loglik) -> WaicResult:
    """WAIC from an S x n matrix of per-draw, per-observation log-likelihoods.

    lppd sums log mean exp over draws (max-shifted); p_waic sums the
    per-observation sample variances (ddof=1); waic = -2 (lppd - p_waic).
    """
    ll = np.asarray(pointwise_loglik, dtype=float)
    if ll.ndim != 2:
        raise ValueError("pointwise_loglik must be an S x n matrix")
    if ll.shape[0] < 2:
        raise ValueError("waic requires at least two draws")
    if not np.all(np.isfinite(ll)):
        raise ValueError("pointwise_loglik entries must be finite")
    colmax = ll.max(axis=0)
    lppd = float(np.sum(colmax + np.log(np.mean(np.exp(ll - colmax), axis=0))))
    p_waic = float(np.sum(np.var(ll, axis=0, ddof=1)))
    return WaicResult(lppd=lppd, p_waic=p_waic, waic=-2.0 * (lppd - p_waic))


def diagnose_chain(chain, name: str, max_lag: int = 50) -> ParameterDiagnostics:
    """All diagnostics for one scalar chain, never raising.

    A statistic whose preconditions fail (short chain, zero variance) is
    reported as nan, with hw flags False; this keeps report assembly
    robust for pinned parameters whose chain is constant.
    """
    x = _as_chain(chain)
    lag = min(max_lag, max((x.size - 1) // 2, 1))
    try:
        acf = autocorrelation(x, lag)[1:]
    except (ValueError, DegenerateVarianceError):
        acf = np.full(lag, math.nan)
    try:
        ess_value = ess(x)
    except (ValueError, DegenerateVarianceError):
        ess_value = math.nan
    try:
        z = geweke(x)
    except (ValueError, DegenerateVarianceError):
        z = math.nan
    try:
        hw = heidelberger_welch(x)
    except (ValueError, DegenerateVarianceError):
        hw = HWResult(stationary=False, p_value=0.0, halfwidth_ok=False, discarded=0)
    return ParameterDiagnostics(
        name=name, ess=ess_value, geweke_z=z, hw=hw, autocorrelations=acf
    )


def diagnose_draws(draws, names, max_lag: int = 50) -> DiagnosticsReport:
    """Column-wise diagnostics for a draws matrix (one name per column)."""
    mat = np.asarray(draws, dtype=float)
    if mat.ndim != 2:
        raise ValueError("draws must be a matrix")
    if mat.shape[1] != len(names):
        raise ValueError("one name per draw column is required")
    rows = tuple(
        diagnose_chain(mat[:, j], names[j], max_lag=max_lag)
        for j in range(mat.shape[1])
    )
    return DiagnosticsReport(parameters=rows, chain_length=mat.shape[0])
