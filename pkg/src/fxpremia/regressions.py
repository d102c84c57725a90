"""OLS engine and the four univariate forward-error regressions.

Two raw regressions share one regressor, the forward-spot differential:

    fit1:  fwd_err  ~ const + fs_diff
    fit2:  spot_chg ~ const + fs_diff

and two adjusted ones test the premium directly:

    fit3:  -fwd_err             ~ const + fs_diff
    fit4:  fwd_err - spot_chg   ~ const + fs_diff

Slopes obey beta3 = -beta1 and beta4 = beta1 - beta2 exactly, which the
test-variation verdict exploits: a significant beta3 shows a premium exists,
a significantly positive beta4 shows it moves more than expected
depreciation does.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .diagnostics import TestResult, adf_test
from .errors import InsufficientDataError, ParameterError, SingularDesignError
from .series import AlignedSeries

__all__ = [
    "OlsFit",
    "FamaFits",
    "AdjustedFits",
    "PremiaTimeVariationVerdict",
    "ols",
    "run_fama",
    "run_adjusted",
    "test_time_varying_premia",
]


@dataclass(frozen=True)
class OlsFit:
    """Intercept-and-slope least squares fit with classical inference."""

    alpha: float
    beta: float
    se_alpha: float
    se_beta: float
    t_alpha: float
    t_beta: float
    p_two_tail_beta: float
    residuals: np.ndarray
    r_squared: float
    n: int

    def __post_init__(self):
        resid = np.asarray(self.residuals, dtype=float)
        resid.setflags(write=False)
        object.__setattr__(self, "residuals", resid)


def ols(y, x, robust: bool = False) -> OlsFit:
    """Regress y on [1, x].

    Classical homoskedastic standard errors by default; robust=True switches
    to HC1 heteroskedasticity-consistent errors. Two-tail slope p-value from
    Student-t with n-2 degrees of freedom.
    """
    yv = np.asarray(y, dtype=float)
    xv = np.asarray(x, dtype=float)
    if yv.ndim != 1 or xv.ndim != 1:
        raise ParameterError("ols expects 1-d vectors")
    if yv.shape[0] != xv.shape[0]:
        raise ParameterError(
            f"length mismatch: y has {yv.shape[0]}, x has {xv.shape[0]}")
    n = yv.shape[0]
    if n < 3:
        raise InsufficientDataError(f"ols needs n >= 3, got {n}")
    if not (np.all(np.isfinite(yv)) and np.all(np.isfinite(xv))):
        raise ParameterError("ols input contains non-finite values")
    if np.ptp(xv) == 0.0:
        raise SingularDesignError("regressor is constant; design is singular")

    X = np.column_stack([np.ones(n), xv])
    coef, _, rank, _ = np.linalg.lstsq(X, yv, rcond=None)
    if rank < 2:
        raise SingularDesignError("design matrix is rank deficient")
    alpha, beta = float(coef[0]), float(coef[1])
    resid = yv - X @ coef
    ssr = float(resid @ resid)
    dof = n - 2
    xtx_inv = np.linalg.inv(X.T @ X)
    if robust:
        # HC1: (X'X)^-1 X' diag(e^2) X (X'X)^-1 scaled by n/(n-2)
        meat = X.T @ (X * (resid ** 2)[:, None])
        cov = xtx_inv @ meat @ xtx_inv * (n / dof)
    else:
        sigma2 = ssr / dof
        cov = sigma2 * xtx_inv
    se_alpha = math.sqrt(cov[0, 0])
    se_beta = math.sqrt(cov[1, 1])
    t_alpha = alpha / se_alpha
    t_beta = beta / se_beta
    p_two = 2.0 * float(stats.t.sf(abs(t_beta), df=dof))
    tss = float(np.sum((yv - yv.mean()) ** 2))
    r_squared = 1.0 - ssr / tss if tss > 0.0 else 1.0
    return OlsFit(alpha=alpha, beta=beta, se_alpha=se_alpha, se_beta=se_beta,
                  t_alpha=t_alpha, t_beta=t_beta, p_two_tail_beta=p_two,
                  residuals=resid, r_squared=r_squared, n=n)


@dataclass(frozen=True)
class FamaFits:
    fit1: OlsFit  # fwd_err on fs_diff
    fit2: OlsFit  # spot_chg on fs_diff


@dataclass(frozen=True)
class AdjustedFits:
    fit3: OlsFit  # -fwd_err on fs_diff
    fit4: OlsFit  # fwd_err - spot_chg on fs_diff


def run_fama(s: AlignedSeries, robust: bool = False) -> FamaFits:
    """The paired raw regressions. Their slopes sum to one by construction."""
    return FamaFits(
        fit1=ols(s.fwd_err, s.fs_diff, robust=robust),
        fit2=ols(s.spot_chg, s.fs_diff, robust=robust),
    )


def run_adjusted(s: AlignedSeries, robust: bool = False) -> AdjustedFits:
    """The sign-flipped and differenced regressions used for premium tests."""
    return AdjustedFits(
        fit3=ols(-s.fwd_err, s.fs_diff, robust=robust),
        fit4=ols(s.fwd_err - s.spot_chg, s.fs_diff, robust=robust),
    )


@dataclass(frozen=True)
class PremiaTimeVariationVerdict:
    """Joint reading of the two premium hypotheses plus residual unit-root checks."""

    beta3_fit: OlsFit
    beta4_fit: OlsFit
    p_beta3_two_tail: float
    p_beta4_one_tail: float
    resid_adf_beta3: TestResult
    resid_adf_beta4: TestResult
    reject_level: float
    premia_exist_and_vary: bool

    def to_json_dict(self) -> dict:
        def _fit_block(fit: OlsFit, adf: TestResult, p_label: str, p_val: float) -> dict:
            return {
                "alpha": fit.alpha,
                "beta": fit.beta,
                "se": fit.se_beta,
                "t": fit.t_beta,
                p_label: p_val,
                "r_squared": fit.r_squared,
                "resid_adf_stat": adf.statistic,
                "resid_adf_p": adf.p_value,
            }

        return {
            "beta3": _fit_block(self.beta3_fit, self.resid_adf_beta3,
                                "p_two_tail", self.p_beta3_two_tail),
            "beta4": _fit_block(self.beta4_fit, self.resid_adf_beta4,
                                "p_one_tail", self.p_beta4_one_tail),
            "level": self.reject_level,
            "premia_exist_and_vary": self.premia_exist_and_vary,
        }


def one_tail_p_positive(t_stat: float, p_two_tail: float) -> float:
    """P-value against H1: coefficient > 0, derived from the two-tail value."""
    return p_two_tail / 2.0 if t_stat > 0 else 1.0 - p_two_tail / 2.0


def test_time_varying_premia(s: AlignedSeries, level: float = 0.05) -> PremiaTimeVariationVerdict:
    """Do risk premia exist and vary over time?

    H1 for the sign-flipped slope is two-sided (a premium exists and moves);
    H1 for the differenced slope is one-sided positive (premium variance
    exceeds expected-depreciation variance). Both fitted residual series
    must also reject a unit root for the joint verdict to be true.
    """
    if not 0.0 < level < 1.0:
        raise ParameterError(f"level must be in (0,1), got {level}")
    adjusted = run_adjusted(s)
    fit3, fit4 = adjusted.fit3, adjusted.fit4
    p3 = fit3.p_two_tail_beta
    p4 = one_tail_p_positive(fit4.t_beta, fit4.p_two_tail_beta)
    adf3 = adf_test(fit3.residuals)
    adf4 = adf_test(fit4.residuals)
    verdict = (p3 < level) and (p4 < level) \
        and (adf3.p_value < level) and (adf4.p_value < level)
    return PremiaTimeVariationVerdict(
        beta3_fit=fit3,
        beta4_fit=fit4,
        p_beta3_two_tail=p3,
        p_beta4_one_tail=p4,
        resid_adf_beta3=adf3,
        resid_adf_beta4=adf4,
        reject_level=level,
        premia_exist_and_vary=verdict,
    )


# this is a library function, not a pytest case
test_time_varying_premia.__test__ = False
