"""End-to-end analysis pipeline: ingest, describe, identify, test, fit, extract.

Stages run in a fixed order, each feeding the next. Ingestion or degenerate
data abort the run; later failures mark their section (and dependents)
skipped with a reason so the report always carries the full section set.
The JSON report is deterministic: same data, config, and seed give
byte-identical output.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import diagnostics, identification, regressions, series, state_space
from .errors import FxPremiaError, InsufficientDataError, ParameterError

__all__ = [
    "PipelineConfig",
    "SectionResult",
    "WhitenessReport",
    "AnalysisReport",
    "check_residual_whiteness",
    "run_pipeline",
    "SCHEMA_VERSION",
]

SCHEMA_VERSION = "1"

_SECTION_KEYS = ("table1", "table2", "tables3_4", "table5",
                 "tables6_8", "tables7_9", "premia_series")

_CONSTRAIN_CHOICES = ("both", "zero_only", "free_only")


@dataclass(frozen=True)
class PipelineConfig:
    """Settings for one pipeline run."""

    input_path: Path | str
    format: str = "generic"
    invert: bool | None = None
    start: series.Month | None = None
    end: series.Month | None = None
    level: float = 0.05
    candidates: tuple[tuple[int, int], ...] | None = None
    constrain_c: str = "both"
    out_dir: Path | str | None = None
    seed: int = 0
    optimizer_opts: dict | None = None

    def __post_init__(self):
        if self.constrain_c not in _CONSTRAIN_CHOICES:
            raise ParameterError(
                f"constrain_c must be one of {_CONSTRAIN_CHOICES}, got {self.constrain_c!r}")
        if not 0.0 < self.level < 1.0:
            raise ParameterError(f"level must be in (0,1), got {self.level}")


@dataclass(frozen=True)
class SectionResult:
    """One report section: either a payload or a skip reason."""

    status: str  # "ok" or "skipped"
    payload: dict | None = None
    reason: str | None = None

    def to_json_dict(self) -> dict:
        if self.status == "ok":
            return {"status": "ok", "payload": self.payload}
        return {"status": "skipped", "reason": self.reason}


@dataclass(frozen=True)
class WhitenessReport:
    """Is the combined residual white? Correlogram plus portmanteau evidence.

    The boolean verdict follows the portmanteau tests alone; individual
    PAC/AC spikes are reported separately so a mixed outcome (a stray
    significant lag under passing LB statistics) stays visible.
    """

    correlogram: tuple[diagnostics.CorrelogramRow, ...]
    lb_p_values: dict[int, float]
    verdict: bool
    spike_free: bool
    n_obs: int
    level: float

    def to_json_dict(self) -> dict:
        return {
            "correlogram": [
                {"lag": r.lag, "pac": r.pac, "ac": r.ac,
                 "pac_sig": r.pac_sig, "ac_sig": r.ac_sig}
                for r in self.correlogram
            ],
            "lb_p_values": {str(k): v for k, v in sorted(self.lb_p_values.items())},
            "verdict": self.verdict,
            "spike_free": self.spike_free,
            "n_obs": self.n_obs,
            "level": self.level,
        }


def check_residual_whiteness(premia: state_space.PremiaSeries,
                             level: float = 0.05) -> WhitenessReport:
    """Judge the combined residual re_hat + a_hat against white noise.

    Uses the series net of its burn-in prefix (the filter's gain
    transient). Verdict is true when every Ljung-Box p-value (lags
    12/24/36) exceeds `level`; whether any single PAC or AC lag up to 12
    crosses the `level` threshold is reported alongside, since a stray
    spike under passing portmanteau statistics is a mixed outcome worth
    surfacing rather than an automatic failure.
    """
    combined = premia.combined[premia.burn_in:]
    if combined.shape[0] <= 40:
        raise InsufficientDataError(
            f"whiteness check needs more than 40 observations, got {combined.shape[0]}")
    rows = diagnostics.correlogram(combined, 12)
    threshold = diagnostics.significance_threshold(combined.shape[0], level)
    no_spikes = all(abs(r.pac) < threshold and abs(r.ac) < threshold for r in rows)
    lb = {}
    for lag in (12, 24, 36):
        if lag < combined.shape[0]:
            lb[lag] = diagnostics.ljung_box(combined, lag, fitted_params=0).p_value
    verdict = all(p > level for p in lb.values())
    return WhitenessReport(correlogram=tuple(rows), lb_p_values=lb,
                           verdict=verdict, spike_free=no_spikes,
                           n_obs=combined.shape[0], level=level)


@dataclass
class AnalysisReport:
    """Full pipeline output: JSON-ready sections plus rich in-memory objects."""

    meta: dict
    sections: dict[str, SectionResult]
    aligned: series.AlignedSeries | None = None
    fitted: dict = field(default_factory=dict)        # variant -> FittedModel
    premia: dict = field(default_factory=dict)        # variant -> PremiaSeries
    whiteness: dict = field(default_factory=dict)     # variant -> WhitenessReport
    candidates: list = field(default_factory=list)    # CandidateReports
    verdict: regressions.PremiaTimeVariationVerdict | None = None

    def __post_init__(self):
        missing = [k for k in _SECTION_KEYS if k not in self.sections]
        if missing:
            raise ParameterError(f"report is missing sections: {missing}")

    @property
    def degraded(self) -> bool:
        return any(s.status != "ok" for s in self.sections.values())

    def to_json_text(self) -> str:
        doc = {
            "schema_version": SCHEMA_VERSION,
            "meta": self.meta,
            "sections": {k: self.sections[k].to_json_dict() for k in _SECTION_KEYS},
        }
        return json.dumps(_jsonable(doc), sort_keys=True, indent=2,
                          allow_nan=False) + "\n"


def _jsonable(obj):
    """Coerce report payloads to deterministic JSON-safe types."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (frozenset, set)):
        return sorted(str(v) for v in obj)
    if isinstance(obj, series.Month):
        return str(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _correlogram_rows_json(rows) -> list[dict]:
    return [{"lag": r.lag, "pac": r.pac, "ac": r.ac,
             "pac_sig": r.pac_sig, "ac_sig": r.ac_sig} for r in rows]


def _variants_for(constrain_c: str) -> tuple[str, ...]:
    if constrain_c == "both":
        return ("c_zero", "c_free")
    if constrain_c == "zero_only":
        return ("c_zero",)
    return ("c_free",)


def run_pipeline(config: PipelineConfig) -> AnalysisReport:
    """Execute the full analysis and write report files when out_dir is set.

    Raises FxPremiaError subclasses for fatal problems (unreadable or
    degenerate data, empty date range, unwritable output directory);
    estimation trouble degrades the affected sections instead.
    """
    out_dir: Path | None = None
    if config.out_dir is not None:
        out_dir = Path(config.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)

    observations = series.ingest_csv(config.input_path, format=config.format,
                                     invert=config.invert)
    observations = series.filter_observations(observations, config.start, config.end)
    if not observations:
        raise InsufficientDataError("no observations remain after the date filter")
    aligned = series.build_aligned(observations)
    fe = aligned.fwd_err
    level = config.level

    sections: dict[str, SectionResult] = {}
    fitted_models: dict[str, state_space.FittedModel] = {}
    premia_map: dict[str, state_space.PremiaSeries] = {}
    whiteness_map: dict[str, WhitenessReport] = {}
    verdict_obj: regressions.PremiaTimeVariationVerdict | None = None
    meta = {
        "input": str(config.input_path),
        "format": config.format,
        "invert": config.invert,
        "date_start": str(aligned.dates[0]),
        "date_end": str(aligned.dates[-1]),
        "t_count": aligned.t_count,
        "level": level,
        "constrain_c": config.constrain_c,
        "seed": config.seed,
    }

    # table 1: descriptives. A degenerate series is fatal by contract.
    mom = diagnostics.moments(fe)
    jb = diagnostics.jarque_bera(fe)
    adf = diagnostics.adf_test(fe)
    sections["table1"] = SectionResult(status="ok", payload={
        "moments": {"n": mom.n, "mean": mom.mean, "sd": mom.sd,
                    "skewness": mom.skewness,
                    "excess_kurtosis": mom.excess_kurtosis},
        "jarque_bera": jb.to_json_dict(),
        "adf": adf.to_json_dict(),
    })

    # table 2: correlogram and order suggestion
    identified = None
    try:
        identified = identification.identify_orders(fe, max_lag=12, level=level)
        sections["table2"] = SectionResult(status="ok", payload={
            "correlogram": _correlogram_rows_json(identified.correlogram),
            "p_suggested": identified.p_suggested,
            "q_suggested": identified.q_suggested,
        })
    except FxPremiaError as exc:
        sections["table2"] = SectionResult(status="skipped", reason=str(exc))

    # tables 3-4: candidate ARMA comparison; AIC picks the working orders
    candidate_reports = []
    fe_orders = None
    try:
        cand = config.candidates if config.candidates is not None \
            else identification.DEFAULT_CANDIDATES
        candidate_reports = identification.fit_candidates(
            fe, cand, optimizer_opts=config.optimizer_opts)
        by_aic = [r for r in candidate_reports
                  if "aic" in r.selected_by and r.converged]
        if not by_aic:
            converged = [r for r in candidate_reports if r.converged]
            if converged:
                by_aic = [min(converged, key=lambda r: r.aic)]
        if by_aic:
            fe_orders = (by_aic[0].p, by_aic[0].q)
        sections["tables3_4"] = SectionResult(status="ok", payload={
            "candidates": [r.to_json_dict() for r in candidate_reports],
            "selected_fe_orders": list(fe_orders) if fe_orders else None,
        })
    except FxPremiaError as exc:
        sections["tables3_4"] = SectionResult(status="skipped", reason=str(exc))

    # table 5: regression evidence on premium existence and variation
    try:
        verdict_obj = regressions.test_time_varying_premia(aligned, level=level)
        sections["table5"] = SectionResult(status="ok",
                                           payload=verdict_obj.to_json_dict())
    except FxPremiaError as exc:
        sections["table5"] = SectionResult(status="skipped", reason=str(exc))

    # map the selected forward-error process to the premium process
    rp_orders = None
    rp_reason = None
    if fe_orders is None:
        rp_reason = "no converged candidate fit selected an order"
    else:
        try:
            rp_orders = identification.map_fe_to_rp_process(fe_orders)
        except FxPremiaError as exc:
            rp_reason = str(exc)

    # tables 6/8: premium state-space fits per variant
    variants = _variants_for(config.constrain_c)
    fits_payload: dict[str, dict] = {}
    if rp_orders is None:
        sections["tables6_8"] = SectionResult(status="skipped", reason=rp_reason)
    else:
        p_rp, q_rp = rp_orders
        any_fit = False
        for variant in variants:
            constrain = variant == "c_zero"
            try:
                fitted = state_space.mle_fit(
                    p_rp, q_rp, fe, constrain_C_zero=constrain,
                    optimizer_opts=config.optimizer_opts)
                fitted_models[variant] = fitted
                entry = fitted.to_json_dict()
                entry["rp_orders"] = [p_rp, q_rp]
                fits_payload[variant] = entry
                any_fit = True
            except FxPremiaError as exc:
                fits_payload[variant] = {"error": str(exc)}
        if any_fit:
            sections["tables6_8"] = SectionResult(status="ok",
                                                  payload={"fits": fits_payload})
        else:
            sections["tables6_8"] = SectionResult(
                status="skipped",
                reason="; ".join(f"{v}: {d.get('error', 'failed')}"
                                 for v, d in fits_payload.items()))

    # tables 7/9 + premia series per converged variant
    premia_payload: dict[str, dict] = {}
    whiteness_payload: dict[str, dict] = {}
    for variant in variants:
        fitted = fitted_models.get(variant)
        if fitted is None:
            msg = "fit unavailable"
            premia_payload[variant] = {"error": msg}
            whiteness_payload[variant] = {"error": msg}
            continue
        if not fitted.converged:
            msg = "fit did not converge"
            premia_payload[variant] = {"error": msg}
            whiteness_payload[variant] = {"error": msg}
            continue
        try:
            prem = state_space.extract_premia(fitted, fe)
            premia_map[variant] = prem
            premia_payload[variant] = {
                "burn_in": prem.burn_in,
                "rp_hat_variance": float(np.var(prem.rp_hat)),
                "combined_variance": float(np.var(prem.combined)),
            }
        except FxPremiaError as exc:
            premia_payload[variant] = {"error": str(exc)}
            whiteness_payload[variant] = {"error": "premia unavailable"}
            continue
        try:
            white = check_residual_whiteness(prem, level=level)
            whiteness_map[variant] = white
            whiteness_payload[variant] = white.to_json_dict()
        except FxPremiaError as exc:
            whiteness_payload[variant] = {"error": str(exc)}

    def _variant_section(payloads: dict[str, dict], label: str) -> SectionResult:
        if any("error" not in d for d in payloads.values()):
            return SectionResult(status="ok", payload=payloads)
        reason = "; ".join(f"{v}: {d.get('error', label)}"
                           for v, d in payloads.items()) or rp_reason or label
        return SectionResult(status="skipped", reason=reason)

    sections["premia_series"] = _variant_section(premia_payload, "no premia extracted")
    sections["tables7_9"] = _variant_section(whiteness_payload, "no whiteness check")

    report = AnalysisReport(
        meta=meta,
        sections=sections,
        aligned=aligned,
        fitted=fitted_models,
        premia=premia_map,
        whiteness=whiteness_map,
        candidates=candidate_reports,
        verdict=verdict_obj,
    )
    if out_dir is not None:
        _write_outputs(report, aligned, candidate_reports, out_dir)
    return report


def _write_outputs(report: AnalysisReport, aligned: series.AlignedSeries,
                   candidate_reports, out_dir: Path) -> None:
    (out_dir / "report.json").write_text(report.to_json_text(), encoding="utf-8")
    series.aligned_to_csv(aligned, out_dir / "aligned.csv")
    if candidate_reports:
        identification.candidates_to_csv(candidate_reports,
                                         out_dir / "candidates.csv")

    # one correlogram file covers the raw series and each combined residual
    import csv as _csv
    table2 = report.sections["table2"]
    with open(out_dir / "correlogram.csv", "w", encoding="utf-8", newline="") as handle:
        writer = _csv.writer(handle, lineterminator="\n")
        writer.writerow(["series", "lag", "pac", "ac", "pac_sig", "ac_sig"])
        if table2.status == "ok":
            for row in table2.payload["correlogram"]:
                writer.writerow(["fe", row["lag"],
                                 format(row["pac"], ".10g"), format(row["ac"], ".10g"),
                                 row["pac_sig"], row["ac_sig"]])
        for variant, white in sorted(report.whiteness.items()):
            for r in white.correlogram:
                writer.writerow([f"combined_{variant}", r.lag,
                                 format(r.pac, ".10g"), format(r.ac, ".10g"),
                                 r.pac_sig, r.ac_sig])

    primary = "c_zero" if "c_zero" in report.premia else \
        ("c_free" if "c_free" in report.premia else None)
    for variant, prem in sorted(report.premia.items()):
        name = "premia.csv" if variant == primary else f"premia_{variant}.csv"
        state_space.premia_to_csv(prem, aligned.dates, out_dir / name)
