"""Acceptance checks for the package contract, one test per criterion.

Each test is self-contained and prints as a single pass/fail line under
``pytest -v``. The final check needs the historical USD/GBP rates export,
which is not shipped; it skips unless the file is supplied.
"""

import math
import os
import time
from pathlib import Path

import numpy as np
import pytest

from fxpremia import series
from fxpremia.diagnostics import (
    jarque_bera_statistic,
    moments,
    significance_threshold,
)
from fxpremia.pipeline import check_residual_whiteness
from fxpremia.regressions import run_adjusted, run_fama
from fxpremia.series import Month, aligned_from_arrays, synthetic_months
from fxpremia.state_space import (
    build_arma_spec,
    extract_premia,
    information_criteria,
    kalman_filter,
    loglik_at,
    loglik_gradient,
    mle_fit,
    simulate,
    stationary_init,
)
from conftest import random_spec
from oracles import joint_gaussian_oracle, standard_kalman


def test_criterion_01_regression_identities():
    """The four-slope algebra holds exactly on arbitrary data.

    beta3 = -beta1, alpha3 = -alpha1, beta4 = beta1 - beta2,
    beta1 + beta2 = 1, alpha1 + alpha2 = 0, each to 1e-10 over 1,000
    random datasets, under a second of work per dataset.
    """
    rng = np.random.default_rng(101)
    t_count = 500
    months = synthetic_months(t_count)
    started = time.monotonic()
    worst = 0.0
    for _ in range(1000):
        scale_fe = rng.lognormal(mean=-4.0, sigma=1.0)
        scale_sc = rng.lognormal(mean=-4.0, sigma=1.0)
        shared = rng.standard_normal(t_count)
        fe = scale_fe * (shared + rng.standard_normal(t_count))
        sc = scale_sc * (rng.uniform(-1, 1) * shared + rng.standard_normal(t_count))
        aligned = aligned_from_arrays(months, fe, sc)
        fama = run_fama(aligned)
        adj = run_adjusted(aligned)
        worst = max(
            worst,
            abs(adj.fit3.beta + fama.fit1.beta),
            abs(adj.fit3.alpha + fama.fit1.alpha),
            abs(adj.fit4.beta - (fama.fit1.beta - fama.fit2.beta)),
            abs(fama.fit1.beta + fama.fit2.beta - 1.0),
            abs(fama.fit1.alpha + fama.fit2.alpha),
        )
    elapsed = time.monotonic() - started
    assert worst <= 1e-10
    assert elapsed / 1000 < 1.0


def test_criterion_02_filter_matches_dense_gaussian_conditioning():
    """Filtered moments and log-likelihood agree with brute-force
    conditioning of the joint Gaussian on 100 random specs, half of them
    with correlated disturbances, inside ten seconds."""
    rng = np.random.default_rng(814)
    started = time.monotonic()
    worst = 0.0
    for trial in range(100):
        spec = random_spec(rng, allow_c=trial % 2 == 0)
        t_count = int(rng.integers(2, 9))
        sim = simulate(spec, t_count, seed=int(rng.integers(0, 2**31)))
        out = kalman_filter(spec, sim.fe)
        ref = joint_gaussian_oracle(
            spec.Z, spec.Phi, spec.Theta, spec.R, spec.Q, spec.C,
            np.atleast_2d(stationary_init(spec).var0), sim.fe)
        for mine, theirs in (
            (out.pred_mean, ref["pred_mean"]),
            (out.filt_mean, ref["filt_mean"]),
            (out.pred_var, ref["pred_var"]),
            (out.filt_var, ref["filt_var"]),
        ):
            worst = max(worst, float(np.max(np.abs(
                np.asarray(mine) - np.asarray(theirs)))))
        worst = max(worst, abs(out.loglik - ref["loglik"]))
    elapsed = time.monotonic() - started
    assert worst < 1e-8
    assert elapsed < 10.0


def test_criterion_03_uncorrelated_filter_reduction():
    """With C = 0 the generalized filter reproduces an independently coded
    standard Kalman filter pathwise to 1e-12 on 50 random specs."""
    rng = np.random.default_rng(271)
    orders = ((1, 0), (0, 1), (1, 1))
    worst = 0.0
    for trial in range(50):
        p, q = orders[trial % 3]
        spec = random_spec(rng, p=p, q=q, allow_c=False)
        sim = simulate(spec, 200, seed=int(rng.integers(0, 2**31)))
        init = stationary_init(spec)
        out = kalman_filter(spec, sim.fe)
        ref = standard_kalman(spec.Z, spec.Phi, spec.Theta, spec.R, spec.Q,
                              np.atleast_1d(init.mean0),
                              np.atleast_2d(init.var0), sim.fe)
        for mine, theirs in (
            (out.pred_mean, ref["pred_mean"]),
            (out.filt_mean, ref["filt_mean"]),
            (out.pred_var, ref["pred_var"]),
            (out.filt_var, ref["filt_var"]),
        ):
            worst = max(worst, float(np.max(np.abs(
                np.asarray(mine) - np.asarray(theirs)))))
        worst = max(worst, abs(out.loglik - ref["loglik"]))
    assert worst < 1e-12


def test_criterion_04_information_criteria_reference_values():
    """Penalized-likelihood scores reproduce the frozen reference point."""
    three = information_criteria(936.817739, 3, 446)
    assert three.aic == pytest.approx(-4.187523, abs=1e-5)
    assert three.sc == pytest.approx(-4.159943, abs=1e-5)
    assert three.hqc == pytest.approx(-4.176649, abs=1e-5)
    four = information_criteria(936.817739, 4, 446)
    assert four.aic == pytest.approx(-4.183039, abs=1e-5)


def test_criterion_05_significance_threshold_reference_values():
    """Correlogram significance bands at the two reference sample sizes."""
    assert significance_threshold(446, 0.05) == pytest.approx(0.09281, abs=5e-5)
    assert significance_threshold(446, 0.01) == pytest.approx(0.12197, abs=5e-5)
    assert significance_threshold(218, 0.05) == pytest.approx(0.13275, abs=5e-5)


def test_criterion_06_jarque_bera_reference_value():
    """Normality statistic from the first reference moment set."""
    assert jarque_bera_statistic(446, 0.184238, 1.699602) == \
        pytest.approx(56.2038, abs=0.02)


@pytest.mark.xfail(strict=True, reason=(
    "the second reference statistic is inconsistent with its stated inputs: "
    "n=218 with these moments gives 976.02, not 1083.474; the companion "
    "test shows n=242 reproduces the quoted value"))
def test_criterion_06_jarque_bera_second_reference_as_stated():
    assert jarque_bera_statistic(218, -1.397168, 9.982169) == \
        pytest.approx(1083.474, abs=0.5)


def test_criterion_06_jarque_bera_second_reference_reconstructed():
    """The quoted statistic is recovered exactly when n = 242, so the
    discrepancy is a sample-size slip in the source table, not a formula
    difference."""
    assert jarque_bera_statistic(242, -1.397168, 9.982169) == \
        pytest.approx(1083.474, abs=0.5)


def test_criterion_07_mle_parameter_recovery():
    """AR(1) premium fits on 50 simulated samples land the persistence
    estimate within +-0.05 of truth at the median, with at least 90%
    convergence, inside two minutes."""
    spec = build_arma_spec(1, 0, (0.55,), (), R=7.27e-4, Q=1.12e-4)
    started = time.monotonic()
    estimates = []
    converged = 0
    for seed in range(50):
        sim = simulate(spec, 446, seed=seed)
        fit = mle_fit(1, 0, sim.fe, constrain_C_zero=True)
        if fit.converged:
            converged += 1
            estimates.append(fit.natural_params()["phi_1"]["estimate"])
    elapsed = time.monotonic() - started
    assert converged >= 45
    assert abs(float(np.median(estimates)) - 0.55) <= 0.05
    assert elapsed < 120.0


def test_criterion_08_likelihood_gradient_accuracy():
    """The optimizer's numeric gradient agrees with an independent central
    difference at five random parameter points to 1e-4 relative error."""
    spec = build_arma_spec(1, 1, (0.5,), (0.3,), R=7e-4, Q=1e-4)
    sim = simulate(spec, 300, seed=11)
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(5):
        raw = np.array([
            rng.uniform(-0.7, 0.7), rng.uniform(-0.7, 0.7),
            math.log(7e-4) + rng.normal(0, 0.5),
            math.log(1e-4) + rng.normal(0, 0.5),
        ])
        g_opt = loglik_gradient(1, 1, sim.fe, raw, constrain_C_zero=True)
        g_ind = np.zeros_like(raw)
        for i in range(raw.size):
            h = 1e-6 * max(1.0, abs(raw[i]))
            up, dn = raw.copy(), raw.copy()
            up[i] += h
            dn[i] -= h
            g_ind[i] = (loglik_at(1, 1, sim.fe, up, constrain_C_zero=True)
                        - loglik_at(1, 1, sim.fe, dn,
                                    constrain_C_zero=True)) / (2 * h)
        rel = np.max(np.abs(g_opt - g_ind) / np.maximum(np.abs(g_ind), 1e-8))
        worst = max(worst, float(rel))
    assert worst <= 1e-4


def test_criterion_09_whiteness_separates_correct_from_underfitted():
    """Over 100 seeds of an AR(2)-premium model, the combined residual of a
    correctly sized fit passes the portmanteau whiteness verdict at the 5%
    level at least 90 times, and a white-noise underfit on the same data
    fails it at least 90 times."""
    spec = build_arma_spec(2, 0, (0.6, 0.2), (), R=7.27e-4, Q=9.16e-4)
    correct_pass = 0
    underfit_fail = 0
    for seed in range(100):
        sim = simulate(spec, 446, seed=seed)
        good = mle_fit(2, 0, sim.fe, constrain_C_zero=True)
        if good.converged:
            correct_pass += check_residual_whiteness(
                extract_premia(good, sim.fe), level=0.05).verdict
        crude = mle_fit(0, 0, sim.fe, constrain_C_zero=True)
        if crude.converged:
            underfit_fail += not check_residual_whiteness(
                extract_premia(crude, sim.fe), level=0.05).verdict
    assert correct_pass >= 90
    assert underfit_fail >= 90


def test_criterion_10_slope_matches_component_variance_identity():
    """At T = 50,000 the difference-regression slope lands within +-0.02 of
    (var(rp) - var(dse)) / var(rp + dse) computed from the true simulated
    components."""
    t_count = 50_000
    spec = build_arma_spec(1, 0, (0.55,), (), R=7.27e-4, Q=1.12e-3)
    sim = simulate(spec, t_count, seed=42, exp_spot_sd=0.02)
    spot_chg = sim.spot_chg_e - sim.re
    aligned = aligned_from_arrays(synthetic_months(t_count), sim.fe, spot_chg)
    beta4 = run_adjusted(aligned).fit4.beta
    target = ((np.var(sim.rp) - np.var(sim.spot_chg_e))
              / np.var(sim.rp + sim.spot_chg_e))
    assert abs(beta4 - target) <= 0.02


_GBP_CSV = os.environ.get(
    "FXPREMIA_GBP_CSV",
    str(Path(__file__).parent / "fixtures" / "boe_usdgbp.csv"))


@pytest.mark.skipif(not Path(_GBP_CSV).is_file(), reason=(
    "historical USD/GBP rates export not supplied; set FXPREMIA_GBP_CSV "
    "or place it at tests/fixtures/boe_usdgbp.csv to enable"))
def test_criterion_11_historical_series_reference_values():
    """Full-sample results on the 1979-01..2016-03 USD/GBP export match the
    frozen reference values."""
    observations = series.ingest_csv(_GBP_CSV, format="boe_export")
    observations = series.filter_observations(
        observations, Month(1979, 1), Month(2016, 3))
    aligned = series.build_aligned(observations)
    mom = moments(aligned.fwd_err)
    assert mom.n == 446
    assert mom.mean == pytest.approx(-0.000573, abs=1e-4)
    assert mom.sd == pytest.approx(0.029831, abs=1e-4)
    assert mom.skewness == pytest.approx(0.184238, abs=1e-4)
    assert mom.excess_kurtosis == pytest.approx(1.699602, abs=1e-4)

    beta3 = run_adjusted(aligned).fit3.beta
    assert beta3 == pytest.approx(-3.119972, abs=1e-3)

    fit = mle_fit(1, 0, aligned.fwd_err, constrain_C_zero=True)
    assert fit.converged
    assert fit.natural_params()["phi_1"]["estimate"] == \
        pytest.approx(0.550056, abs=5e-3)
    assert fit.loglik == pytest.approx(936.8177, abs=0.5)
