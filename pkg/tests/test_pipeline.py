"""End-to-end pipeline runs, the whiteness check, and the CLI surface."""

import json
from pathlib import Path

import numpy as np
import pytest

from fxpremia import cli
from fxpremia.errors import (
    DegenerateInputError,
    InsufficientDataError,
    ParameterError,
)
from fxpremia.pipeline import (
    SCHEMA_VERSION,
    AnalysisReport,
    PipelineConfig,
    SectionResult,
    check_residual_whiteness,
    run_pipeline,
)
from fxpremia.series import Month
from fxpremia.state_space import (
    PremiaSeries,
    build_arma_spec,
    extract_premia,
    mle_fit,
    simulate,
)

FIXTURE = Path(__file__).parent / "fixtures" / "premia_fixture.csv"

SECTION_KEYS = {"table1", "table2", "tables3_4", "table5",
                "tables6_8", "tables7_9", "premia_series"}


@pytest.fixture(scope="module")
def fixture_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("report")
    config = PipelineConfig(input_path=FIXTURE, out_dir=out)
    return run_pipeline(config), out


class TestPipelineOnFixture:

    def test_all_sections_ok(self, fixture_run):
        report, _ = fixture_run
        assert set(report.sections) == SECTION_KEYS
        assert all(s.status == "ok" for s in report.sections.values())
        assert not report.degraded

    def test_ar1_selected_for_forward_errors(self, fixture_run):
        report, _ = fixture_run
        payload = report.sections["tables3_4"].payload
        assert payload["selected_fe_orders"] == [1, 0]
        winner = [c for c in payload["candidates"] if (c["p"], c["q"]) == (1, 0)]
        assert winner[0]["selected_by"] == ["aic", "hqc", "sc"]

    def test_premia_verdict_true(self, fixture_run):
        report, _ = fixture_run
        payload = report.sections["table5"].payload
        assert payload["premia_exist_and_vary"] is True
        assert payload["beta3"]["p_two_tail"] < 0.05
        assert payload["beta4"]["p_one_tail"] < 0.05

    def test_both_variants_fit_ar1_premium(self, fixture_run):
        report, _ = fixture_run
        fits = report.sections["tables6_8"].payload["fits"]
        assert set(fits) == {"c_zero", "c_free"}
        for entry in fits.values():
            assert entry["rp_orders"] == [1, 0]
            assert entry["converged"] is True
        assert fits["c_zero"]["params"]["C"]["fixed"] is True

    def test_combined_residual_white(self, fixture_run):
        report, _ = fixture_run
        for variant in ("c_zero", "c_free"):
            white = report.whiteness[variant]
            assert white.verdict is True
            assert all(p > 0.05 for p in white.lb_p_values.values())
            assert set(white.lb_p_values) == {12, 24, 36}

    def test_output_files_written(self, fixture_run):
        _, out = fixture_run
        for name in ("report.json", "aligned.csv", "candidates.csv",
                     "correlogram.csv", "premia.csv", "premia_c_free.csv"):
            assert (out / name).is_file(), name

    def test_report_json_schema(self, fixture_run):
        _, out = fixture_run
        doc = json.loads((out / "report.json").read_text())
        assert doc["schema_version"] == SCHEMA_VERSION
        assert set(doc["sections"]) == SECTION_KEYS
        assert doc["meta"]["t_count"] == 446
        assert doc["meta"]["date_start"] == "1979-01"

    def test_premia_csv_length(self, fixture_run):
        _, out = fixture_run
        lines = (out / "premia.csv").read_text().strip().splitlines()
        assert lines[0] == "date,rp_hat,re_hat,a_hat,rp_sys,combined"
        assert len(lines) == 447

    def test_correlogram_csv_covers_fe_and_variants(self, fixture_run):
        _, out = fixture_run
        lines = (out / "correlogram.csv").read_text().strip().splitlines()
        assert lines[0] == "series,lag,pac,ac,pac_sig,ac_sig"
        names = {line.split(",")[0] for line in lines[1:]}
        assert names == {"fe", "combined_c_zero", "combined_c_free"}
        assert len(lines) == 1 + 12 * 3

    def test_reproducible_report(self, fixture_run, tmp_path):
        _, out = fixture_run
        config = PipelineConfig(input_path=FIXTURE, out_dir=tmp_path)
        run_pipeline(config)
        assert (tmp_path / "report.json").read_bytes() == \
            (out / "report.json").read_bytes()


class TestPipelineDegradedPaths:

    def test_constant_rates_are_fatal(self, tmp_path):
        path = tmp_path / "const.csv"
        rows = ["date,spot,forward"]
        months = [f"19{79 + i // 12}-{i % 12 + 1:02d}" for i in range(60)]
        rows += [f"{m},1.5,1.5" for m in months]
        path.write_text("\n".join(rows) + "\n")
        with pytest.raises(DegenerateInputError):
            run_pipeline(PipelineConfig(input_path=path))

    def test_empty_date_window_is_fatal(self):
        config = PipelineConfig(input_path=FIXTURE,
                                start=Month(2030, 1), end=Month(2031, 1))
        with pytest.raises(InsufficientDataError):
            run_pipeline(config)

    def test_unmappable_orders_degrade_premium_sections(self):
        config = PipelineConfig(input_path=FIXTURE, candidates=((2, 1),))
        report = run_pipeline(config)
        assert report.degraded
        assert report.sections["table1"].status == "ok"
        assert report.sections["table5"].status == "ok"
        assert report.sections["tables6_8"].status == "skipped"
        assert "ARMA(2,1)" in report.sections["tables6_8"].reason
        assert report.sections["tables7_9"].status == "skipped"
        assert report.sections["premia_series"].status == "skipped"

    def test_zero_only_variant(self, tmp_path):
        config = PipelineConfig(input_path=FIXTURE, constrain_c="zero_only",
                                out_dir=tmp_path)
        report = run_pipeline(config)
        assert set(report.fitted) == {"c_zero"}
        assert (tmp_path / "premia.csv").is_file()
        assert not (tmp_path / "premia_c_free.csv").exists()

    def test_config_validation(self):
        with pytest.raises(ParameterError):
            PipelineConfig(input_path=FIXTURE, constrain_c="sometimes")
        with pytest.raises(ParameterError):
            PipelineConfig(input_path=FIXTURE, level=1.5)

    def test_report_requires_full_section_set(self):
        with pytest.raises(ParameterError):
            AnalysisReport(meta={}, sections={
                "table1": SectionResult(status="ok", payload={})})


def _premia_stub(combined, burn_in=0):
    zeros = np.zeros_like(combined)
    return PremiaSeries(rp_hat=zeros, re_hat=combined, a_hat=zeros,
                        rp_sys=zeros, combined=np.asarray(combined, dtype=float),
                        rp_filt=zeros, burn_in=burn_in)


class TestWhitenessCheck:

    def test_white_series_passes(self):
        rng = np.random.default_rng(5)
        report = check_residual_whiteness(_premia_stub(rng.normal(size=300)))
        assert report.verdict is True
        assert report.n_obs == 300
        assert set(report.lb_p_values) == {12, 24, 36}

    def test_persistent_series_fails(self):
        rng = np.random.default_rng(5)
        e = rng.normal(size=300)
        y = np.zeros(300)
        for t in range(1, 300):
            y[t] = 0.9 * y[t - 1] + e[t]
        report = check_residual_whiteness(_premia_stub(y))
        assert report.verdict is False
        assert report.spike_free is False

    def test_burn_in_is_trimmed(self):
        rng = np.random.default_rng(7)
        combined = rng.normal(size=100)
        combined[:3] = 50.0  # transient junk that must not reach the tests
        report = check_residual_whiteness(_premia_stub(combined, burn_in=3))
        assert report.n_obs == 97
        assert report.verdict is True

    def test_needs_more_than_forty_observations(self):
        rng = np.random.default_rng(9)
        with pytest.raises(InsufficientDataError):
            check_residual_whiteness(_premia_stub(rng.normal(size=40)))

    def test_json_dict_carries_both_facts(self):
        rng = np.random.default_rng(11)
        report = check_residual_whiteness(_premia_stub(rng.normal(size=200)))
        doc = report.to_json_dict()
        assert set(doc) == {"correlogram", "lb_p_values", "verdict",
                            "spike_free", "n_obs", "level"}
        assert len(doc["correlogram"]) == 12

    # smoke-sized versions of the 100-seed whiteness property in the
    # acceptance suite: same truth process, correctly sized fit vs underfit

    def test_verdict_true_for_correctly_specified_model(self):
        spec = build_arma_spec(2, 0, (0.6, 0.2), (), R=7.27e-4, Q=9.16e-4)
        hits = 0
        for seed in range(10):
            sim = simulate(spec, 446, seed=seed)
            fit = mle_fit(2, 0, sim.fe, constrain_C_zero=True)
            if not fit.converged:
                continue
            hits += check_residual_whiteness(extract_premia(fit, sim.fe)).verdict
        assert hits >= 8

    def test_verdict_false_for_underfitted_model(self):
        spec = build_arma_spec(2, 0, (0.6, 0.2), (), R=7.27e-4, Q=9.16e-4)
        misses = 0
        for seed in range(10):
            sim = simulate(spec, 446, seed=seed)
            fit = mle_fit(0, 0, sim.fe, constrain_C_zero=True)
            if not fit.converged:
                continue
            misses += not check_residual_whiteness(extract_premia(fit, sim.fe)).verdict
        assert misses >= 8


class TestCli:

    def test_simulate_writes_ingestible_csv(self, tmp_path):
        out = tmp_path / "sim.csv"
        comp = tmp_path / "components.csv"
        code = cli.main([
            "simulate", "--p", "1", "--q", "0", "--phi", "0.55",
            "--r", "7.27e-4", "--qvar", "1.12e-4", "--c", "0",
            "--t", "100", "--seed", "7", "--out", str(out),
            "--components-out", str(comp),
        ])
        assert code == 0
        sim_lines = out.read_text().strip().splitlines()
        assert sim_lines[0] == "date,spot,forward"
        assert len(sim_lines) == 102  # T premia periods need T+1 rate rows
        comp_lines = comp.read_text().strip().splitlines()
        assert comp_lines[0] == "date,fe,rp,re,a,spot_chg_e"
        assert len(comp_lines) == 101

    def test_simulate_round_trips_components(self, tmp_path):
        out = tmp_path / "sim.csv"
        cli.main(["simulate", "--p", "1", "--q", "0", "--phi", "0.5",
                  "--r", "7e-4", "--qvar", "1e-4", "--c", "0",
                  "--t", "80", "--seed", "3", "--out", str(out)])
        from fxpremia import series
        spec = build_arma_spec(1, 0, (0.5,), (), R=7e-4, Q=1e-4)
        sim = simulate(spec, 80, 3, exp_spot_sd=0.004)
        aligned = series.build_aligned(series.ingest_csv(out, format="generic"))
        assert np.max(np.abs(aligned.fwd_err - sim.fe)) < 1e-8

    def test_analyze_full_run_exit_zero(self, tmp_path, capsys):
        code = cli.main(["analyze", "--input", str(FIXTURE),
                         "--out", str(tmp_path)])
        assert code == 0
        assert (tmp_path / "report.json").is_file()
        assert "report written" in capsys.readouterr().out

    def test_analyze_degraded_exit_two(self, tmp_path, capsys):
        code = cli.main(["analyze", "--input", str(FIXTURE),
                         "--candidates", "2,1", "--out", str(tmp_path)])
        assert code == 2
        err = capsys.readouterr().err
        assert "skipped sections" in err

    def test_analyze_fatal_exit_one(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("date,spot,forward\n1979-01,1.5,not_a_number\n")
        code = cli.main(["analyze", "--input", str(bad), "--out", str(tmp_path)])
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_analyze_requires_some_output_dir(self, tmp_path, monkeypatch, capsys):
        monkeypatch.delenv(cli.OUT_ENV_VAR, raising=False)
        code = cli.main(["analyze", "--input", str(FIXTURE)])
        assert code == 1
        assert cli.OUT_ENV_VAR in capsys.readouterr().err

    def test_analyze_honours_env_out_dir(self, tmp_path, monkeypatch):
        target = tmp_path / "from_env"
        monkeypatch.setenv(cli.OUT_ENV_VAR, str(target))
        code = cli.main(["analyze", "--input", str(FIXTURE),
                         "--candidates", "1,0", "--constrain-c", "zero_only"])
        assert code == 0
        assert (target / "report.json").is_file()

    def test_analyze_model_spec_file(self, tmp_path):
        run_spec = tmp_path / "run.cfg"
        run_spec.write_text("p = 1\nq = 0\nconstrain_c = true\n")
        code = cli.main(["analyze", "--input", str(FIXTURE),
                         "--model-spec", str(run_spec), "--out", str(tmp_path)])
        assert code == 0
        doc = json.loads((tmp_path / "report.json").read_text())
        fits = doc["sections"]["tables6_8"]["payload"]["fits"]
        assert list(fits) == ["c_zero"]

    def test_test_premia_json_to_stdout(self, capsys):
        code = cli.main(["test-premia", "--input", str(FIXTURE)])
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["premia_exist_and_vary"] is True
        assert doc["beta3"]["p_two_tail"] < 0.05

    def test_bad_month_argument_rejected(self):
        with pytest.raises(SystemExit):
            cli.main(["analyze", "--input", "x.csv", "--start", "197901",
                      "--out", "/tmp/x"])
