#!/usr/bin/env python3
"""Regenerate the bundled simulated-rates fixture used by the test suite.

The fixture is a synthetic monthly spot/forward CSV whose forward errors
carry an AR(1) premium at realistic monthly-FX magnitudes. Running this
script is only needed when the simulation conventions change; the output
is deterministic for the pinned seed.
"""

from pathlib import Path
import sys

from fxpremia.cli import main

FIXTURE = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "premia_fixture.csv"

ARGS = [
    "simulate",
    "--p", "1", "--q", "0",
    "--phi", "0.55",
    "--r", "7.27e-4",
    "--qvar", "1.12e-4",
    "--c", "0",
    "--t", "446",
    "--seed", "42",
    "--exp-spot-sd", "0.004",
    "--start-month", "1979-01",
    "--log-spot0", "0.47",
    "--out", str(FIXTURE),
]

if __name__ == "__main__":
    sys.exit(main(ARGS))
