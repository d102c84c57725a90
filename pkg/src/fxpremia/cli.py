"""Command-line entry points.

analyze      run the full pipeline on a rates CSV and write a report directory
simulate     draw a synthetic premium dataset and write it as an ingestible CSV
test-premia  regression-based premium test only, JSON to stdout

Exit codes: 0 full success, 2 degraded (some report sections skipped),
1 fatal (bad data, bad arguments). The default output directory can be set
with the FXPREMIA_OUT environment variable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import pipeline, regressions, series, state_space
from .errors import FxPremiaError, ParameterError

OUT_ENV_VAR = "FXPREMIA_OUT"


def _parse_month(text: str) -> series.Month:
    try:
        return series.Month.parse(text)
    except (ValueError, FxPremiaError) as exc:
        raise argparse.ArgumentTypeError(f"bad month {text!r}: {exc}") from exc


def _parse_candidates(text: str) -> tuple[tuple[int, int], ...]:
    """Parse '1,1;1,0;0,1' into ((1,1),(1,0),(0,1))."""
    pairs = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(",")
        if len(parts) != 2:
            raise argparse.ArgumentTypeError(
                f"candidate {chunk!r} is not a p,q pair")
        try:
            pairs.append((int(parts[0]), int(parts[1])))
        except ValueError as exc:
            raise argparse.ArgumentTypeError(
                f"candidate {chunk!r} is not a p,q pair") from exc
    if not pairs:
        raise argparse.ArgumentTypeError("empty candidate list")
    return tuple(pairs)


def _parse_coeffs(text: str) -> tuple[float, ...]:
    if not text.strip():
        return ()
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad coefficient list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fxpremia",
        description="Extract time-varying FX risk premia from monthly "
                    "spot/forward series.")
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="run the full analysis pipeline")
    analyze.add_argument("--input", required=True, help="rates CSV path")
    analyze.add_argument("--format", default="generic",
                         choices=["generic", "boe_export", "hkma_export"])
    analyze.add_argument("--invert", dest="invert", action="store_true",
                         default=None,
                         help="force inversion of quotes (default: per format)")
    analyze.add_argument("--no-invert", dest="invert", action="store_false",
                         help="force quotes to be used as-is")
    analyze.add_argument("--start", type=_parse_month, default=None,
                         metavar="YYYY-MM")
    analyze.add_argument("--end", type=_parse_month, default=None,
                         metavar="YYYY-MM")
    analyze.add_argument("--level", type=float, default=0.05,
                         help="significance level (default 0.05)")
    analyze.add_argument("--candidates", type=_parse_candidates, default=None,
                         metavar="P,Q;P,Q", help="override candidate orders")
    analyze.add_argument("--constrain-c", default="both",
                         choices=["both", "zero_only", "free_only"],
                         help="which cross-covariance variants to fit")
    analyze.add_argument("--out", default=None,
                         help=f"output directory (default ${OUT_ENV_VAR})")
    analyze.add_argument("--seed", type=int, default=0)
    analyze.add_argument("--model-spec", default=None,
                         help="key-value run-spec file overriding p/q/constraint")

    sim = sub.add_parser("simulate",
                         help="write a synthetic rates CSV with known premia")
    sim.add_argument("--p", type=int, required=True)
    sim.add_argument("--q", type=int, required=True)
    sim.add_argument("--phi", type=_parse_coeffs, default=(),
                     metavar="C1[,C2..]", help="AR coefficients")
    sim.add_argument("--theta", type=_parse_coeffs, default=(),
                     metavar="C1[,C2..]", help="MA coefficients")
    sim.add_argument("--r", type=float, required=True,
                     help="observation noise variance R")
    sim.add_argument("--qvar", type=float, required=True,
                     help="state innovation variance Q")
    sim.add_argument("--c", type=float, default=0.0,
                     help="noise cross-covariance C")
    sim.add_argument("--t", type=int, required=True, help="series length")
    sim.add_argument("--seed", type=int, required=True)
    sim.add_argument("--exp-spot-sd", type=float, default=0.004,
                     help="sd of the expected-spot-change component")
    sim.add_argument("--start-month", type=_parse_month,
                     default=series.Month(1979, 1), metavar="YYYY-MM")
    sim.add_argument("--log-spot0", type=float, default=0.47,
                     help="log initial spot level")
    sim.add_argument("--out", required=True, help="rates CSV to write")
    sim.add_argument("--components-out", default=None,
                     help="also write the true components CSV here")

    test = sub.add_parser("test-premia",
                          help="Table-5 style regression test, JSON to stdout")
    test.add_argument("--input", required=True)
    test.add_argument("--format", default="generic",
                      choices=["generic", "boe_export", "hkma_export"])
    test.add_argument("--invert", dest="invert", action="store_true", default=None)
    test.add_argument("--no-invert", dest="invert", action="store_false")
    test.add_argument("--start", type=_parse_month, default=None, metavar="YYYY-MM")
    test.add_argument("--end", type=_parse_month, default=None, metavar="YYYY-MM")
    test.add_argument("--level", type=float, default=0.05)
    return parser


def _cmd_analyze(args) -> int:
    out = args.out if args.out is not None else os.environ.get(OUT_ENV_VAR)
    if out is None:
        print(f"error: no output directory (--out or ${OUT_ENV_VAR})",
              file=sys.stderr)
        return 1
    candidates = args.candidates
    constrain_c = args.constrain_c
    optimizer_opts = None
    if args.model_spec is not None:
        run_spec = state_space.load_run_spec(args.model_spec)
        candidates = ((run_spec.p, run_spec.q),)
        constrain_c = "zero_only" if run_spec.constrain_C_zero else "free_only"
        optimizer_opts = run_spec.optimizer_opts()
    config = pipeline.PipelineConfig(
        input_path=args.input,
        format=args.format,
        invert=args.invert,
        start=args.start,
        end=args.end,
        level=args.level,
        candidates=candidates,
        constrain_c=constrain_c,
        out_dir=out,
        seed=args.seed,
        optimizer_opts=optimizer_opts,
    )
    report = pipeline.run_pipeline(config)
    skipped = [k for k, s in report.sections.items() if s.status != "ok"]
    print(f"report written to {Path(out) / 'report.json'}")
    if skipped:
        print("skipped sections: " + ", ".join(sorted(skipped)), file=sys.stderr)
        return 2
    return 0


def _cmd_simulate(args) -> int:
    spec = state_space.build_arma_spec(args.p, args.q, args.phi, args.theta,
                                       R=args.r, Q=args.qvar, C=args.c)
    sim = state_space.simulate(spec, args.t, args.seed,
                               exp_spot_sd=args.exp_spot_sd)
    # realized spot change = expected change minus the expectation error
    spot_chg = (sim.spot_chg_e if sim.spot_chg_e is not None else 0.0) - sim.re
    observations = series.rates_from_components(
        sim.fe, spot_chg, log_spot0=args.log_spot0, start=args.start_month)
    out_path = Path(args.out)
    if out_path.parent and not out_path.parent.exists():
        out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", encoding="utf-8", newline="") as handle:
        handle.write("date,spot,forward\n")
        for obs in observations:
            handle.write(f"{obs.date},{obs.spot:.10g},{obs.forward_1m:.10g}\n")
    if args.components_out:
        import csv as _csv
        months = series.synthetic_months(args.t, args.start_month)
        with open(args.components_out, "w", encoding="utf-8", newline="") as handle:
            writer = _csv.writer(handle, lineterminator="\n")
            header = ["date", "fe", "rp", "re", "a"]
            if sim.spot_chg_e is not None:
                header.append("spot_chg_e")
            writer.writerow(header)
            for i, month in enumerate(months):
                row = [str(month), format(sim.fe[i], ".10g"),
                       format(sim.rp[i], ".10g"), format(sim.re[i], ".10g"),
                       format(sim.a[i], ".10g")]
                if sim.spot_chg_e is not None:
                    row.append(format(sim.spot_chg_e[i], ".10g"))
                writer.writerow(row)
    print(f"wrote {args.t + 1} monthly observations to {out_path}")
    return 0


def _cmd_test_premia(args) -> int:
    observations = series.ingest_csv(args.input, format=args.format,
                                     invert=args.invert)
    observations = series.filter_observations(observations, args.start, args.end)
    aligned = series.build_aligned(observations)
    verdict = regressions.test_time_varying_premia(aligned, level=args.level)
    print(json.dumps(pipeline._jsonable(verdict.to_json_dict()),
                     sort_keys=True, indent=2))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "analyze":
            return _cmd_analyze(args)
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "test-premia":
            return _cmd_test_premia(args)
        raise ParameterError(f"unknown command {args.command!r}")
    except FxPremiaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
