"""Descriptive statistics and hypothesis tests for monthly return series.

Moments, Jarque-Bera normality, augmented Dickey-Fuller with intercept and
trend (AIC lag selection, MacKinnon response-surface p-values), correlogram
with exact significance bands, Ljung-Box Q and Breusch-Godfrey LM tests.
All functions are pure and operate on 1-d float arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import (
    DegenerateInputError,
    InsufficientDataError,
    ParameterError,
    SingularDesignError,
)

__all__ = [
    "MomentSummary",
    "TestResult",
    "CorrelogramRow",
    "moments",
    "jarque_bera",
    "jarque_bera_statistic",
    "adf_test",
    "acf",
    "pacf",
    "correlogram",
    "significance_threshold",
    "ljung_box",
    "breusch_godfrey",
]


@dataclass(frozen=True)
class MomentSummary:
    """First four moments of a sample.

    sd uses the n-1 denominator; skewness and excess kurtosis are the
    moment-ratio estimators m3/m2^1.5 and m4/m2^2 - 3 with n denominators.
    Both are NaN for a constant sample (m2 = 0).
    """

    n: int
    mean: float
    sd: float
    skewness: float
    excess_kurtosis: float


@dataclass(frozen=True)
class TestResult:
    """Outcome of a single hypothesis test."""

    test: str
    statistic: float
    p_value: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.p_value <= 1.0:
            raise ParameterError(f"p_value out of [0,1]: {self.p_value}")

    def to_json_dict(self) -> dict:
        return {
            "test": self.test,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "meta": dict(self.meta),
        }


@dataclass(frozen=True)
class CorrelogramRow:
    """One lag of the correlogram. sig values are 'none', '10%', '5%' or '1%'."""

    lag: int
    pac: float
    ac: float
    pac_sig: str
    ac_sig: str


def _as_vector(x, min_len: int, what: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ParameterError(f"{what} expects a 1-d vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ParameterError(f"{what} input contains non-finite values")
    if arr.shape[0] < min_len:
        raise InsufficientDataError(
            f"{what} needs at least {min_len} observations, got {arr.shape[0]}")
    return arr


def moments(x) -> MomentSummary:
    """Sample moments. Skewness/excess kurtosis are NaN for constant input."""
    arr = _as_vector(x, 2, "moments")
    n = arr.shape[0]
    mean = float(arr.mean())
    dev = arr - mean
    m2 = float(np.mean(dev ** 2))
    sd = float(np.sqrt(np.sum(dev ** 2) / (n - 1)))
    if m2 == 0.0:
        skew = float("nan")
        exkurt = float("nan")
    else:
        m3 = float(np.mean(dev ** 3))
        m4 = float(np.mean(dev ** 4))
        skew = m3 / m2 ** 1.5
        exkurt = m4 / m2 ** 2 - 3.0
    return MomentSummary(n=n, mean=mean, sd=sd, skewness=skew, excess_kurtosis=exkurt)


def jarque_bera_statistic(n: int, skewness: float, excess_kurtosis: float) -> float:
    """JB = n/6 * (S^2 + K^2/4) with K the excess kurtosis."""
    return n / 6.0 * (skewness ** 2 + excess_kurtosis ** 2 / 4.0)


def jarque_bera(x) -> TestResult:
    """Jarque-Bera normality test; p-value from chi-square with 2 df."""
    arr = _as_vector(x, 8, "jarque_bera")
    summary = moments(arr)
    if not (math.isfinite(summary.skewness) and math.isfinite(summary.excess_kurtosis)):
        raise DegenerateInputError("jarque_bera undefined for a constant series")
    statistic = jarque_bera_statistic(summary.n, summary.skewness, summary.excess_kurtosis)
    p_value = float(stats.chi2.sf(statistic, df=2))
    return TestResult(
        test="jarque_bera",
        statistic=statistic,
        p_value=p_value,
        meta={"n": summary.n, "skewness": summary.skewness,
              "excess_kurtosis": summary.excess_kurtosis, "df": 2},
    )


# MacKinnon (1994, 2010) response-surface constants for the Dickey-Fuller
# t-distribution with intercept and trend, single series. Small-p polynomial
# applies for statistics at or below tau_star; outside [tau_min, tau_max]
# the p-value saturates at 0 or 1.
_MACKINNON_CT = {
    "tau_star": -2.89,
    "tau_min": -16.18,
    "tau_max": 0.7,
    "small_p": (3.2512, 1.6047, 0.049588),
    "large_p": (2.5261, 0.61654, -0.37956, -0.060285),
}


def mackinnon_p_value(statistic: float) -> float:
    """Approximate p-value of an ADF t-statistic (intercept-and-trend case)."""
    c = _MACKINNON_CT
    if statistic > c["tau_max"]:
        return 1.0
    if statistic < c["tau_min"]:
        return 0.0
    coeffs = c["small_p"] if statistic <= c["tau_star"] else c["large_p"]
    z = sum(coef * statistic ** k for k, coef in enumerate(coeffs))
    return float(stats.norm.cdf(z))


def _ols_quick(y: np.ndarray, X: np.ndarray):
    """Least squares with coefficient covariance; raises on rank deficiency."""
    coef, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < X.shape[1]:
        raise SingularDesignError(
            f"design matrix rank {rank} < {X.shape[1]} columns")
    resid = y - X @ coef
    return coef, resid


def _adf_regression(level: np.ndarray, diff: np.ndarray, lag: int, start: int):
    """Fit the ADF regression for observations start..end of the diff series.

    Returns (aic, t_stat_on_level, nobs). Regressors: intercept, linear
    trend, lagged level, `lag` lagged differences.
    """
    t_idx = np.arange(start, diff.shape[0])
    nobs = t_idx.shape[0]
    cols = [np.ones(nobs), t_idx.astype(float), level[t_idx]]
    for j in range(1, lag + 1):
        cols.append(diff[t_idx - j])
    X = np.column_stack(cols)
    y = diff[t_idx]
    coef, resid = _ols_quick(y, X)
    ssr = float(resid @ resid)
    k = X.shape[1]
    if nobs <= k:
        raise InsufficientDataError("ADF regression has no residual degrees of freedom")
    if ssr <= 0.0:
        raise DegenerateInputError("ADF regression fits exactly; test undefined")
    llf = -0.5 * nobs * (math.log(2.0 * math.pi) + math.log(ssr / nobs) + 1.0)
    aic = -2.0 * llf + 2.0 * k
    sigma2 = ssr / (nobs - k)
    xtx_inv = np.linalg.inv(X.T @ X)
    se_level = math.sqrt(sigma2 * xtx_inv[2, 2])
    t_stat = float(coef[2] / se_level)
    return aic, t_stat, nobs


def adf_test(x, deterministic: str = "intercept_and_trend",
             max_lag: int | None = None) -> TestResult:
    """Augmented Dickey-Fuller unit-root test with intercept and linear trend.

    The lag order is chosen by minimizing AIC over 0..max_lag on a common
    estimation sample, then the statistic is recomputed on the longest
    sample available for the chosen lag. Default max_lag is the Schwert
    bound floor(12*(T/100)^0.25). The p-value uses the MacKinnon
    response-surface approximation (constants above, with citation).
    """
    if deterministic != "intercept_and_trend":
        raise ParameterError(
            f"only intercept_and_trend is supported, got {deterministic!r}")
    arr = _as_vector(x, 20, "adf_test")
    if np.ptp(arr) == 0.0:
        raise DegenerateInputError("adf_test undefined for a constant series")
    n = arr.shape[0]
    diff = np.diff(arr)
    bound = int(12.0 * (n / 100.0) ** 0.25) if max_lag is None else int(max_lag)
    if bound < 0:
        raise ParameterError(f"max_lag must be non-negative, got {bound}")
    # keep enough residual degrees of freedom at the largest candidate
    bound = min(bound, (diff.shape[0] - 8) // 2)
    bound = max(bound, 0)

    best_lag = 0
    best_aic = math.inf
    for lag in range(bound + 1):
        aic, _, _ = _adf_regression(arr, diff, lag, start=bound)
        if aic < best_aic:
            best_aic = aic
            best_lag = lag
    _, statistic, nobs = _adf_regression(arr, diff, best_lag, start=best_lag)
    p_value = mackinnon_p_value(statistic)
    return TestResult(
        test="adf",
        statistic=statistic,
        p_value=p_value,
        meta={"lags": best_lag, "max_lag": bound,
              "deterministic": "intercept_and_trend",
              "nobs": nobs, "lag_criterion": "aic"},
    )


def acf(x, max_lag: int) -> np.ndarray:
    """Sample autocorrelations r_1..r_max_lag (biased covariance estimator)."""
    arr = _as_vector(x, 2, "acf")
    n = arr.shape[0]
    if not 1 <= max_lag < n:
        raise ParameterError(f"max_lag must be in [1, {n - 1}], got {max_lag}")
    dev = arr - arr.mean()
    c0 = float(dev @ dev) / n
    if c0 == 0.0:
        raise DegenerateInputError("autocorrelation undefined for a constant series")
    out = np.empty(max_lag)
    for k in range(1, max_lag + 1):
        out[k - 1] = float(dev[k:] @ dev[:-k]) / n / c0
    return out


def pacf(x, max_lag: int) -> np.ndarray:
    """Partial autocorrelations via the Durbin-Levinson recursion."""
    r = acf(x, max_lag)
    out = np.empty(max_lag)
    out[0] = r[0]
    prev = np.array([r[0]])
    for k in range(2, max_lag + 1):
        num = r[k - 1] - float(prev @ r[k - 2::-1])
        den = 1.0 - float(prev @ r[:k - 1])
        if abs(den) < 1e-14:
            raise DegenerateInputError(
                f"Durbin-Levinson breakdown at lag {k}: series is perfectly predictable")
        phi_kk = num / den
        curr = np.empty(k)
        curr[:k - 1] = prev - phi_kk * prev[::-1]
        curr[k - 1] = phi_kk
        out[k - 1] = phi_kk
        prev = curr
    return out


_Z_BY_LEVEL = {0.10: 1.645, 0.05: 1.960, 0.01: 2.576}


def significance_threshold(n_obs: int, level: float) -> float:
    """Two-sided autocorrelation band z_{alpha/2}/sqrt(T).

    The canonical 10%/5%/1% levels use the conventional rounded z values
    1.645, 1.960, 2.576; any other level falls back to the exact quantile.
    """
    if n_obs < 1:
        raise ParameterError("n_obs must be positive")
    if not 0.0 < level < 1.0:
        raise ParameterError(f"level must be in (0,1), got {level}")
    for canonical, z in _Z_BY_LEVEL.items():
        if abs(level - canonical) < 1e-12:
            return z / math.sqrt(n_obs)
    return float(stats.norm.ppf(1.0 - level / 2.0)) / math.sqrt(n_obs)


def _sig_label(value: float, n_obs: int) -> str:
    v = abs(value)
    if v >= significance_threshold(n_obs, 0.01):
        return "1%"
    if v >= significance_threshold(n_obs, 0.05):
        return "5%"
    if v >= significance_threshold(n_obs, 0.10):
        return "10%"
    return "none"


def correlogram(x, max_lag: int) -> list[CorrelogramRow]:
    """PAC and AC per lag with significance marks against z/sqrt(T) bands."""
    arr = _as_vector(x, 4, "correlogram")
    n = arr.shape[0]
    if not 1 <= max_lag < n / 2:
        raise ParameterError(
            f"max_lag must be in [1, length/2) = [1, {n / 2:g}), got {max_lag}")
    ac_vals = acf(arr, max_lag)
    pac_vals = pacf(arr, max_lag)
    rows = []
    for k in range(1, max_lag + 1):
        rows.append(CorrelogramRow(
            lag=k,
            pac=float(pac_vals[k - 1]),
            ac=float(ac_vals[k - 1]),
            pac_sig=_sig_label(pac_vals[k - 1], n),
            ac_sig=_sig_label(ac_vals[k - 1], n),
        ))
    return rows


def correlogram_to_csv(rows: list[CorrelogramRow], path) -> None:
    import csv as _csv
    from pathlib import Path as _Path

    def _write(handle):
        writer = _csv.writer(handle, lineterminator="\n")
        writer.writerow(["lag", "pac", "ac", "pac_sig", "ac_sig"])
        for row in rows:
            writer.writerow([row.lag, format(row.pac, ".10g"),
                             format(row.ac, ".10g"), row.pac_sig, row.ac_sig])

    if isinstance(path, (str, _Path)):
        with open(path, "w", encoding="utf-8", newline="") as handle:
            _write(handle)
    else:
        _write(path)


def ljung_box(x, lags: int, fitted_params: int = 0) -> TestResult:
    """Ljung-Box portmanteau test.

    Q = T(T+2) sum_{k<=lags} r_k^2/(T-k); chi-square with lags - fitted_params
    degrees of freedom. fitted_params should count estimated ARMA coefficients
    when x is a residual series, zero for raw data.
    """
    arr = _as_vector(x, 3, "ljung_box")
    n = arr.shape[0]
    if lags <= fitted_params:
        raise ParameterError(
            f"lags ({lags}) must exceed fitted_params ({fitted_params})")
    if fitted_params < 0:
        raise ParameterError("fitted_params must be non-negative")
    if lags >= n:
        raise ParameterError(f"lags ({lags}) must be < length ({n})")
    r = acf(arr, lags)
    k = np.arange(1, lags + 1)
    statistic = float(n * (n + 2.0) * np.sum(r ** 2 / (n - k)))
    df = lags - fitted_params
    p_value = float(stats.chi2.sf(statistic, df=df))
    return TestResult(
        test="ljung_box",
        statistic=statistic,
        p_value=p_value,
        meta={"lags": lags, "fitted_params": fitted_params, "df": df, "nobs": n},
    )


def breusch_godfrey(residuals, regressors, lags: int = 2) -> TestResult:
    """Breusch-Godfrey LM test for serial correlation up to `lags`.

    Auxiliary regression of the residuals on the original regressors plus
    lagged residuals (zeros before the sample start); statistic = T * R^2
    of that regression, chi-square with `lags` degrees of freedom.
    """
    resid = _as_vector(residuals, 3, "breusch_godfrey")
    X = np.asarray(regressors, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] != resid.shape[0]:
        raise ParameterError("residuals and regressors differ in length")
    if lags < 1:
        raise ParameterError(f"lags must be >= 1, got {lags}")
    n = resid.shape[0]
    if n <= X.shape[1] + lags:
        raise InsufficientDataError(
            "breusch_godfrey needs more observations than regressors + lags")
    tss = float(np.sum((resid - resid.mean()) ** 2))
    if tss == 0.0:
        raise DegenerateInputError("breusch_godfrey undefined for constant residuals")
    lagged = np.zeros((n, lags))
    for j in range(1, lags + 1):
        lagged[j:, j - 1] = resid[:-j]
    design = np.column_stack([X, lagged])
    coef, aux_resid = _ols_quick(resid, design)
    r_squared = 1.0 - float(aux_resid @ aux_resid) / tss
    statistic = n * r_squared
    p_value = float(stats.chi2.sf(statistic, df=lags))
    return TestResult(
        test="breusch_godfrey",
        statistic=statistic,
        p_value=p_value,
        meta={"lags": lags, "df": lags, "nobs": n, "n_regressors": X.shape[1]},
    )
