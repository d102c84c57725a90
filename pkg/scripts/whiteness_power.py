#!/usr/bin/env python3
"""Monte Carlo power study for the combined-residual whiteness verdict.

For each seed, draws an AR(2)-premium sample, fits both a correctly sized
model and a white-noise underfit, and tallies how often the whiteness
verdict accepts the former and rejects the latter. Useful when tuning
designs or revalidating the acceptance property.

    python3 scripts/whiteness_power.py --seeds 100
"""

import argparse
import sys
import time

from fxpremia.pipeline import check_residual_whiteness
from fxpremia.state_space import build_arma_spec, extract_premia, mle_fit, simulate


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seeds", type=int, default=100)
    parser.add_argument("--t", type=int, default=446)
    parser.add_argument("--phi", type=float, nargs="+", default=[0.6, 0.2])
    parser.add_argument("--r", type=float, default=7.27e-4)
    parser.add_argument("--qvar", type=float, default=9.16e-4)
    parser.add_argument("--level", type=float, default=0.05)
    args = parser.parse_args(argv)

    p = len(args.phi)
    spec = build_arma_spec(p, 0, tuple(args.phi), (), R=args.r, Q=args.qvar)
    counts = {"correct_pass": 0, "correct_total": 0,
              "underfit_fail": 0, "underfit_total": 0}
    started = time.monotonic()
    for seed in range(args.seeds):
        sim = simulate(spec, args.t, seed=seed)
        for order, ok_key, tot_key, want_white in (
            ((p, 0), "correct_pass", "correct_total", True),
            ((0, 0), "underfit_fail", "underfit_total", False),
        ):
            fit = mle_fit(order[0], order[1], sim.fe, constrain_C_zero=True)
            if not fit.converged:
                continue
            counts[tot_key] += 1
            verdict = check_residual_whiteness(
                extract_premia(fit, sim.fe), level=args.level).verdict
            counts[ok_key] += verdict if want_white else (not verdict)
    elapsed = time.monotonic() - started

    print(f"design: AR({p}) phi={args.phi} R={args.r} Q={args.qvar} "
          f"T={args.t} level={args.level}")
    print(f"correct fit passes whiteness: "
          f"{counts['correct_pass']}/{counts['correct_total']}")
    print(f"underfit fails whiteness:     "
          f"{counts['underfit_fail']}/{counts['underfit_total']}")
    print(f"elapsed: {elapsed:.1f}s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
