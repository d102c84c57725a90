"""Shared helpers for the test suite."""

import numpy as np
import pytest

from fxpremia.state_space import StateSpaceSpec, build_arma_spec


def stable_ar_coeffs(rng, p, max_pac=0.85):
    """Draw AR coefficients guaranteed stationary.

    Partial autocorrelations are sampled uniformly in (-max_pac, max_pac)
    and converted to coefficients by the Durbin-Levinson recursion run in
    reverse; every PAC inside the unit interval yields a stable polynomial.
    """
    if p == 0:
        return ()
    pacs = rng.uniform(-max_pac, max_pac, size=p)
    coeffs = np.zeros(0)
    for k, pac in enumerate(pacs, start=1):
        prev = coeffs
        coeffs = np.empty(k)
        coeffs[k - 1] = pac
        for j in range(k - 1):
            coeffs[j] = prev[j] - pac * prev[k - 2 - j]
    return tuple(float(c) for c in coeffs)


def random_spec(rng, p=None, q=None, allow_c=True):
    """Random valid state-space spec with optional cross-covariance."""
    if p is None:
        p = int(rng.integers(0, 3))
    if q is None:
        q = int(rng.integers(0, 3))
    phi = stable_ar_coeffs(rng, p)
    theta = tuple(float(v) for v in rng.uniform(-0.9, 0.9, size=q))
    r = float(rng.uniform(0.1, 2.0))
    qv = float(rng.uniform(0.1, 2.0))
    if allow_c:
        rho = float(rng.uniform(-0.9, 0.9))
        c = rho * np.sqrt(r * qv)
    else:
        c = 0.0
    return build_arma_spec(p, q, phi, theta, R=r, Q=qv, C=c)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
