"""Box-Jenkins order identification and candidate comparison for forward errors.

The correlogram suggests orders (PAC for p, AC for q), a small candidate set
is fitted as classical ARMA models through the state-space likelihood with
the observation noise pinned to zero, and information criteria pick the
winner. A separate mapping converts the chosen forward-error process into
the implied premium process.
"""

from __future__ import annotations

import csv as _csv
from dataclasses import dataclass
from pathlib import Path as _Path

import numpy as np

from .diagnostics import (
    CorrelogramRow,
    adf_test,
    breusch_godfrey,
    correlogram,
    ljung_box,
    significance_threshold,
)
from .errors import ParameterError, UnsupportedProcessError
from .state_space import information_criteria, kalman_filter, mle_fit

__all__ = [
    "IdentifiedOrders",
    "CandidateReport",
    "identify_orders",
    "fit_candidates",
    "map_fe_to_rp_process",
    "candidates_to_csv",
    "DEFAULT_CANDIDATES",
]

DEFAULT_CANDIDATES: tuple[tuple[int, int], ...] = ((1, 1), (1, 0), (0, 1))

_LB_LAGS = (12, 24, 36)


@dataclass(frozen=True)
class IdentifiedOrders:
    """Order suggestion read off the correlogram."""

    p_suggested: int
    q_suggested: int
    correlogram: tuple[CorrelogramRow, ...]


def _contiguous_significant(values, n_obs: int, level: float) -> int:
    threshold = significance_threshold(n_obs, level)
    run = 0
    for v in values:
        if abs(v) >= threshold:
            run += 1
        else:
            break
    return run


def identify_orders(fe, max_lag: int = 12, level: float = 0.05) -> IdentifiedOrders:
    """Suggest (p, q) from the longest run of significant PAC/AC lags.

    The run must start at lag 1; isolated spikes at higher lags are visible
    in the returned correlogram but do not raise the suggestion.
    """
    y = np.asarray(fe, dtype=float)
    if y.ndim != 1:
        raise ParameterError("fe must be a 1-d vector")
    if y.shape[0] <= 2 * max_lag:
        raise ParameterError(
            f"need more than {2 * max_lag} observations for max_lag={max_lag}, "
            f"got {y.shape[0]}")
    rows = correlogram(y, max_lag)
    n = y.shape[0]
    p_sug = _contiguous_significant([r.pac for r in rows], n, level)
    q_sug = _contiguous_significant([r.ac for r in rows], n, level)
    return IdentifiedOrders(p_suggested=p_sug, q_suggested=q_sug,
                            correlogram=tuple(rows))


@dataclass(frozen=True)
class CandidateReport:
    """One fitted candidate with criteria and residual diagnostics.

    Criteria count k = p + q + 2 free parameters: the ARMA coefficients, the
    innovation variance, and the intercept absorbed by demeaning.
    """

    p: int
    q: int
    aic: float
    sc: float
    hqc: float
    lb_p_values: dict[int, float]
    bg_p_value: float
    resid_adf_p: float
    selected_by: frozenset[str]
    converged: bool
    loglik: float
    k: int

    def to_json_dict(self) -> dict:
        return {
            "p": self.p,
            "q": self.q,
            "aic": self.aic,
            "sc": self.sc,
            "hqc": self.hqc,
            "loglik": self.loglik,
            "k": self.k,
            "lb_p_values": {str(lag): val for lag, val in sorted(self.lb_p_values.items())},
            "bg_p_value": self.bg_p_value,
            "resid_adf_p": self.resid_adf_p,
            "selected_by": sorted(self.selected_by),
            "converged": self.converged,
        }


def fit_candidates(fe, candidates=None, optimizer_opts: dict | None = None
                   ) -> list[CandidateReport]:
    """Fit each candidate ARMA order to the demeaned series and diagnose residuals.

    Estimation treats the series itself as the ARMA process: the state-space
    likelihood runs with observation noise fixed at zero so Q carries the
    single innovation source. Residuals are the one-step prediction errors.
    Ljung-Box runs at lags 12/24/36 with df reduced by p+q, Breusch-Godfrey
    at lag 2 against the intercept-only design, and ADF with intercept and
    trend. A candidate that fails to converge stays in the output, flagged.
    """
    y = np.asarray(fe, dtype=float)
    if y.ndim != 1:
        raise ParameterError("fe must be a 1-d vector")
    pairs = tuple(candidates) if candidates is not None else DEFAULT_CANDIDATES
    if not pairs:
        raise ParameterError("candidate set must be nonempty")
    centered = y - y.mean()

    partial = []
    for p, q in pairs:
        fitted = mle_fit(p, q, centered, constrain_C_zero=True,
                         optimizer_opts=optimizer_opts, fix_r_zero=True)
        k = fitted.k + 1  # + intercept
        crit = information_criteria(fitted.loglik, k, fitted.t_count) \
            if np.isfinite(fitted.loglik) else None
        resid = kalman_filter(fitted.spec, centered).innovation
        lb = {lag: ljung_box(resid, lag, fitted_params=p + q).p_value
              for lag in _LB_LAGS if lag < resid.shape[0] and lag > p + q}
        bg = breusch_godfrey(resid, np.ones((resid.shape[0], 1)), lags=2)
        adf = adf_test(resid)
        partial.append({
            "p": p, "q": q,
            "aic": crit.aic if crit else float("inf"),
            "sc": crit.sc if crit else float("inf"),
            "hqc": crit.hqc if crit else float("inf"),
            "lb": lb, "bg": bg.p_value, "adf": adf.p_value,
            "converged": fitted.converged,
            "loglik": fitted.loglik, "k": k,
        })

    selected: dict[int, set[str]] = {i: set() for i in range(len(partial))}
    for criterion in ("aic", "sc", "hqc"):
        values = [entry[criterion] for entry in partial]
        best = min(values)
        if np.isfinite(best):
            for i, v in enumerate(values):
                if abs(v - best) <= 1e-12:
                    selected[i].add(criterion)

    return [
        CandidateReport(
            p=entry["p"], q=entry["q"],
            aic=entry["aic"], sc=entry["sc"], hqc=entry["hqc"],
            lb_p_values=entry["lb"], bg_p_value=entry["bg"],
            resid_adf_p=entry["adf"],
            selected_by=frozenset(selected[i]),
            converged=entry["converged"],
            loglik=entry["loglik"], k=entry["k"],
        )
        for i, entry in enumerate(partial)
    ]


def map_fe_to_rp_process(fe_process: tuple[int, int]) -> tuple[int, int]:
    """Translate the forward-error ARMA orders into premium orders.

    A pure AR or pure MA forward error keeps its form; ARMA(1,1) collapses
    to an AR(1) premium (the MA part is absorbed by the expectation noise).
    No rule exists for other mixed orders.
    """
    try:
        p, q = int(fe_process[0]), int(fe_process[1])
    except (TypeError, ValueError, IndexError) as exc:
        raise ParameterError(f"fe_process must be an (p, q) pair, got {fe_process!r}") from exc
    if p < 0 or q < 0:
        raise ParameterError(f"orders must be non-negative, got ({p}, {q})")
    if q == 0 or p == 0:
        return (p, q)
    if (p, q) == (1, 1):
        return (1, 0)
    raise UnsupportedProcessError(
        f"no premium-process rule for a mixed ARMA({p},{q}) forward error")


def candidates_to_csv(reports: list[CandidateReport], path) -> None:
    """Serialize the candidate table, one row per (p, q)."""
    def _write(handle):
        writer = _csv.writer(handle, lineterminator="\n")
        writer.writerow(["p", "q", "aic", "sc", "hqc",
                         "lb12_p", "lb24_p", "lb36_p",
                         "bg_p", "adf_p", "selected_by", "converged"])
        for r in reports:
            writer.writerow([
                r.p, r.q,
                format(r.aic, ".10g"), format(r.sc, ".10g"), format(r.hqc, ".10g"),
                *(format(r.lb_p_values[lag], ".10g") if lag in r.lb_p_values else ""
                  for lag in _LB_LAGS),
                format(r.bg_p_value, ".10g"), format(r.resid_adf_p, ".10g"),
                "+".join(sorted(r.selected_by)), r.converged,
            ])

    if isinstance(path, (str, _Path)):
        with open(path, "w", encoding="utf-8", newline="") as handle:
            _write(handle)
    else:
        _write(path)
