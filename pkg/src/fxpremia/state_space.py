"""Signal-plus-noise state space for the forward-error premium.

The observable forward error splits into an unobservable ARMA(p,q) premium
and white expectation noise:

    fe_t = Z x_t + re_t,          re_t ~ N(0, R)
    x_{t+1} = Phi x_t + Theta a_{t+1},   a_{t+1} ~ N(0, Q)

with Cov(re_t, a_{t+1}) = C: the expectation error realized with this
month's spot and the premium innovation entering next month's state are
the same piece of news, so they may be correlated. C = 0 recovers the
standard Kalman filter.

Under that timing the exact conditional recursions are the standard
update plus two corrections in the prediction step (derived by joint
Gaussian conditioning and verified against a brute-force oracle):

    S_t   = Z P_t Z' + R
    nu_t  = fe_t - Z xhat_t
    K_t   = P_t Z' / S_t
    xf_t  = xhat_t + K_t nu_t
    Pf_t  = P_t - K_t Z P_t
    xhat_{t+1} = Phi xf_t + Theta C nu_t / S_t
    P_{t+1}    = Phi Pf_t Phi' + Theta Q Theta' - (C^2/S_t) Theta Theta'
                 - Phi K_t C Theta' - Theta C K_t' Phi'

Both cross terms in the variance prediction carry a minus sign; the
filtered covariance stays symmetric only with that choice, and the dense
joint-Gaussian oracle in the test suite confirms it to 1e-8.

The log-likelihood is the prediction-error decomposition
L = -(T/2) ln 2pi - (1/2) sum[ln S_t + nu_t^2/S_t].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats
from scipy.linalg import solve_discrete_lyapunov

from .errors import (
    CovarianceDomainError,
    DegenerateInputError,
    FilterDivergenceError,
    InsufficientDataError,
    NonStationaryError,
    ParameterError,
)

__all__ = [
    "StateSpaceSpec",
    "InitialState",
    "FilterOutput",
    "FittedModel",
    "PremiaSeries",
    "SimulationResult",
    "Criteria",
    "build_arma_spec",
    "stationary_init",
    "kalman_filter",
    "log_likelihood",
    "information_criteria",
    "loglik_at",
    "loglik_gradient",
    "mle_fit",
    "simulate",
    "extract_premia",
    "premia_to_csv",
    "RunSpec",
    "load_run_spec",
]

_LN_2PI = math.log(2.0 * math.pi)

# Stationarity margins: hard wall for constructed specs, soft wall inside
# the optimizer so penalties engage before construction would fail.
_UNIT_ROOT_TOL = 1e-12
_OPT_STATIONARY_MARGIN = 1e-6
_PENALTY = 1e8
_LOGVAR_BOUND = 60.0


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


def _ar_spectral_radius(phi: tuple[float, ...]) -> float:
    """Largest root modulus of the AR companion matrix (0 when p = 0)."""
    p = len(phi)
    if p == 0:
        return 0.0
    if p == 1:
        return abs(phi[0])
    comp = np.zeros((p, p))
    comp[0, :] = phi
    comp[1:, :-1] = np.eye(p - 1)
    return float(np.max(np.abs(np.linalg.eigvals(comp))))


@dataclass(frozen=True)
class StateSpaceSpec:
    """A stationary ARMA(p,q) premium process in state-space form."""

    p: int
    q: int
    phi: tuple[float, ...]
    theta: tuple[float, ...]
    m: int
    Z: np.ndarray      # (m,) observation row
    Phi: np.ndarray    # (m, m) transition
    Theta: np.ndarray  # (m,) state-noise loading
    R: float
    Q: float
    C: float

    def __post_init__(self):
        Z = np.asarray(self.Z, dtype=float).reshape(-1)
        Phi = np.asarray(self.Phi, dtype=float)
        Theta = np.asarray(self.Theta, dtype=float).reshape(-1)
        if Z.shape != (self.m,) or Theta.shape != (self.m,) or Phi.shape != (self.m, self.m):
            raise ParameterError("state-space matrices inconsistent with m")
        if len(self.phi) != self.p or len(self.theta) != self.q:
            raise ParameterError("coefficient counts do not match orders")
        if self.R < 0.0 or self.Q < 0.0:
            raise CovarianceDomainError(
                f"variances must be non-negative: R={self.R}, Q={self.Q}")
        # joint noise covariance [[R, C], [C, Q]] must be PSD
        if self.C ** 2 > self.R * self.Q * (1.0 + 1e-12) + 1e-300:
            raise CovarianceDomainError(
                f"C^2 = {self.C ** 2:g} exceeds R*Q = {self.R * self.Q:g}")
        radius = float(np.max(np.abs(np.linalg.eigvals(Phi)))) if self.m else 0.0
        if radius >= 1.0 - _UNIT_ROOT_TOL:
            raise NonStationaryError(
                f"transition spectral radius {radius:.12f} not inside unit circle")
        object.__setattr__(self, "Z", _readonly(Z))
        object.__setattr__(self, "Phi", _readonly(Phi))
        object.__setattr__(self, "Theta", _readonly(Theta))


def build_arma_spec(p: int, q: int,
                    phi_coeffs=(), theta_coeffs=(), *,
                    R: float, Q: float, C: float = 0.0) -> StateSpaceSpec:
    """Construct the state-space layout for an ARMA(p,q) premium.

    AR(1) is scalar. MA(1) and ARMA(1,1) use a two-state layout whose second
    state is the lag of the first, with observation loading [1, theta_1].
    Other orders use the companion form of dimension m = max(p, q+1) with
    Z = [1, 0, ..., 0]. (0,0) is allowed as a degenerate white-noise premium.
    """
    if p < 0 or q < 0:
        raise ParameterError(f"orders must be non-negative, got p={p}, q={q}")
    phi = tuple(float(v) for v in phi_coeffs)
    theta = tuple(float(v) for v in theta_coeffs)
    if len(phi) != p or len(theta) != q:
        raise ParameterError(
            f"expected {p} AR and {q} MA coefficients, got {len(phi)} and {len(theta)}")
    if _ar_spectral_radius(phi) >= 1.0 - _UNIT_ROOT_TOL:
        raise NonStationaryError(
            f"AR polynomial has a root on or inside the unit circle: phi={phi}")

    if (p, q) in ((0, 0), (1, 0)):
        m = 1
        Z = np.array([1.0])
        Phi = np.array([[phi[0] if p else 0.0]])
        Theta = np.array([1.0])
    elif (p, q) in ((0, 1), (1, 1)):
        # two states: first carries the AR recursion and the new shock,
        # second is its lag so the observation can load the MA term
        m = 2
        Z = np.array([1.0, theta[0]])
        Phi = np.array([[phi[0] if p else 0.0, 0.0],
                        [1.0, 0.0]])
        Theta = np.array([1.0, 0.0])
    else:
        m = max(p, q + 1)
        Z = np.zeros(m)
        Z[0] = 1.0
        Phi = np.zeros((m, m))
        for i in range(p):
            Phi[i, 0] = phi[i]
        Phi[:-1, 1:] = np.eye(m - 1)
        Theta = np.zeros(m)
        Theta[0] = 1.0
        for j in range(q):
            Theta[j + 1] = theta[j]
    return StateSpaceSpec(p=p, q=q, phi=phi, theta=theta, m=m,
                          Z=Z, Phi=Phi, Theta=Theta,
                          R=float(R), Q=float(Q), C=float(C))


@dataclass(frozen=True)
class InitialState:
    mean0: np.ndarray
    var0: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean0", _readonly(np.asarray(self.mean0).reshape(-1)))
        object.__setattr__(self, "var0", _readonly(self.var0))


def stationary_init(spec: StateSpaceSpec) -> InitialState:
    """Unconditional state moments: zero mean, Lyapunov covariance.

    var0 solves V = Phi V Phi' + Theta Q Theta', which exists because the
    transition is strictly stable.
    """
    if spec.m == 1:
        phi = spec.Phi[0, 0]
        v = spec.Theta[0] ** 2 * spec.Q / (1.0 - phi ** 2)
        var0 = np.array([[v]])
    else:
        var0 = solve_discrete_lyapunov(spec.Phi, np.outer(spec.Theta, spec.Theta) * spec.Q)
        var0 = 0.5 * (var0 + var0.T)
    return InitialState(mean0=np.zeros(spec.m), var0=var0)


@dataclass(frozen=True)
class FilterOutput:
    """Per-period filter path. pred_* are prior (one-step-ahead) moments,
    filt_* posterior; innovation nu_t = fe_t - Z pred_mean_t."""

    pred_mean: np.ndarray       # (T, m)
    pred_var: np.ndarray        # (T, m, m)
    filt_mean: np.ndarray       # (T, m)
    filt_var: np.ndarray        # (T, m, m)
    gain: np.ndarray            # (T, m)
    innovation: np.ndarray      # (T,)
    innovation_var: np.ndarray  # (T,)
    loglik: float

    def __post_init__(self):
        for name in ("pred_mean", "pred_var", "filt_mean", "filt_var",
                     "gain", "innovation", "innovation_var"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))


def kalman_filter(spec: StateSpaceSpec, fe, init: InitialState | None = None) -> FilterOutput:
    """Run the generalized filter over the series and accumulate the likelihood.

    With C = 0 the prediction step loses its correction terms and the
    recursion is the textbook Kalman filter.
    """
    y = np.asarray(fe, dtype=float)
    if y.ndim != 1 or y.shape[0] < 1:
        raise ParameterError("fe must be a non-empty 1-d vector")
    if not np.all(np.isfinite(y)):
        raise ParameterError("fe contains non-finite values")
    if init is None:
        init = stationary_init(spec)
    m = spec.m
    if init.mean0.shape != (m,) or init.var0.shape != (m, m):
        raise ParameterError("initial moments inconsistent with state dimension")
    T = y.shape[0]
    Z, Phi, Theta = spec.Z, spec.Phi, spec.Theta
    R, Q, C = spec.R, spec.Q, spec.C
    ThTh = np.outer(Theta, Theta)

    pred_mean = np.empty((T, m))
    pred_var = np.empty((T, m, m))
    filt_mean = np.empty((T, m))
    filt_var = np.empty((T, m, m))
    gain = np.empty((T, m))
    innovation = np.empty(T)
    innovation_var = np.empty(T)

    x = init.mean0.astype(float)
    P = init.var0.astype(float)
    loglik = 0.0
    for t in range(T):
        pred_mean[t] = x
        pred_var[t] = P
        Pz = P @ Z
        S = float(Z @ Pz) + R
        if not math.isfinite(S) or S <= 0.0:
            raise FilterDivergenceError(
                f"innovation variance {S!r} at t={t} is not positive")
        nu = y[t] - float(Z @ x)
        K = Pz / S
        xf = x + K * nu
        Pf = P - np.outer(K, Pz)
        Pf = 0.5 * (Pf + Pf.T)
        filt_mean[t] = xf
        filt_var[t] = Pf
        gain[t] = K
        innovation[t] = nu
        innovation_var[t] = S
        loglik -= 0.5 * (_LN_2PI + math.log(S) + nu * nu / S)

        x = Phi @ xf + Theta * (C * nu / S)
        PhiK = Phi @ K
        P = (Phi @ Pf @ Phi.T + ThTh * Q - ThTh * (C * C / S)
             - np.outer(PhiK, Theta) * C - np.outer(Theta, PhiK) * C)
        P = 0.5 * (P + P.T)

    return FilterOutput(pred_mean=pred_mean, pred_var=pred_var,
                        filt_mean=filt_mean, filt_var=filt_var, gain=gain,
                        innovation=innovation, innovation_var=innovation_var,
                        loglik=loglik)


def log_likelihood(filter_output: FilterOutput) -> float:
    """Prediction-error decomposition recomputed from the stored path."""
    S = filter_output.innovation_var
    nu = filter_output.innovation
    T = S.shape[0]
    return float(-0.5 * T * _LN_2PI - 0.5 * np.sum(np.log(S)) - 0.5 * np.sum(nu * nu / S))


def _loglik_value(spec: StateSpaceSpec, y: np.ndarray, init: InitialState) -> float:
    """Likelihood-only filter pass; scalar specialization when m = 1."""
    R, Q, C = spec.R, spec.Q, spec.C
    T = y.shape[0]
    if spec.m == 1:
        z = float(spec.Z[0])
        phi = float(spec.Phi[0, 0])
        th = float(spec.Theta[0])
        x = float(init.mean0[0])
        P = float(init.var0[0, 0])
        th2q = th * th * Q
        loglik = 0.0
        for t in range(T):
            S = z * z * P + R
            if not S > 0.0 or S != S:
                raise FilterDivergenceError(
                    f"innovation variance {S!r} at t={t} is not positive")
            nu = y[t] - z * x
            K = P * z / S
            xf = x + K * nu
            Pf = P - K * z * P
            loglik -= 0.5 * (_LN_2PI + math.log(S) + nu * nu / S)
            x = phi * xf + th * C * nu / S
            P = phi * phi * Pf + th2q - th * th * C * C / S - 2.0 * phi * K * C * th
        return loglik

    Z, Phi, Theta = spec.Z, spec.Phi, spec.Theta
    ThTh = np.outer(Theta, Theta)
    x = init.mean0.astype(float)
    P = init.var0.astype(float)
    loglik = 0.0
    for t in range(T):
        Pz = P @ Z
        S = float(Z @ Pz) + R
        if not math.isfinite(S) or S <= 0.0:
            raise FilterDivergenceError(
                f"innovation variance {S!r} at t={t} is not positive")
        nu = y[t] - float(Z @ x)
        K = Pz / S
        xf = x + K * nu
        Pf = P - np.outer(K, Pz)
        Pf = 0.5 * (Pf + Pf.T)
        loglik -= 0.5 * (_LN_2PI + math.log(S) + nu * nu / S)
        x = Phi @ xf + Theta * (C * nu / S)
        PhiK = Phi @ K
        P = (Phi @ Pf @ Phi.T + ThTh * Q - ThTh * (C * C / S)
             - np.outer(PhiK, Theta) * C - np.outer(Theta, PhiK) * C)
        P = 0.5 * (P + P.T)
    return loglik


@dataclass(frozen=True)
class Criteria:
    aic: float
    sc: float
    hqc: float


def information_criteria(loglik: float, k: int, t_count: int) -> Criteria:
    """Per-observation penalized-likelihood scores."""
    if t_count < 1 or k < 0:
        raise ParameterError("t_count must be positive and k non-negative")
    T = float(t_count)
    aic = (-2.0 * loglik + 2.0 * k) / T
    sc = (-2.0 * loglik + k * math.log(T)) / T
    hqc = (-2.0 * loglik + 2.0 * k * math.log(math.log(T))) / T
    return Criteria(aic=aic, sc=sc, hqc=hqc)


# ---------------------------------------------------------------------------
# maximum likelihood
# ---------------------------------------------------------------------------

def _param_names(p: int, q: int, constrain_C_zero: bool, fix_r_zero: bool) -> tuple[str, ...]:
    names = [f"phi_{i}" for i in range(1, p + 1)]
    names += [f"theta_{j}" for j in range(1, q + 1)]
    if not fix_r_zero:
        names.append("log_r")
    names.append("log_q")
    if not constrain_C_zero:
        names.append("c")
    return tuple(names)


def _decode_params(raw: np.ndarray, p: int, q: int,
                   constrain_C_zero: bool, fix_r_zero: bool):
    raw = np.asarray(raw, dtype=float)
    expected = p + q + (0 if fix_r_zero else 1) + 1 + (0 if constrain_C_zero else 1)
    if raw.shape != (expected,):
        raise ParameterError(
            f"raw parameter vector has length {raw.shape}, expected ({expected},)")
    phi = tuple(raw[:p])
    theta = tuple(raw[p:p + q])
    pos = p + q
    if fix_r_zero:
        R = 0.0
    else:
        R = math.exp(raw[pos])
        pos += 1
    Q = math.exp(raw[pos])
    pos += 1
    C = float(raw[pos]) if not constrain_C_zero else 0.0
    return phi, theta, R, Q, C


def loglik_at(p: int, q: int, fe, raw_params,
              constrain_C_zero: bool = True, fix_r_zero: bool = False) -> float:
    """Exact log-likelihood at a raw parameter vector (raises on invalid values)."""
    y = np.asarray(fe, dtype=float)
    phi, theta, R, Q, C = _decode_params(np.asarray(raw_params, float),
                                         p, q, constrain_C_zero, fix_r_zero)
    spec = build_arma_spec(p, q, phi, theta, R=R, Q=Q, C=C)
    return _loglik_value(spec, y, stationary_init(spec))


def _make_objective(p: int, q: int, y: np.ndarray,
                    constrain_C_zero: bool, fix_r_zero: bool):
    """Negative log-likelihood with smooth penalties outside the valid region."""
    def objective(raw: np.ndarray) -> float:
        phi, theta, R_, Q_, C_ = None, None, None, None, None
        raw = np.asarray(raw, dtype=float)
        if not np.all(np.isfinite(raw)):
            return _PENALTY * 10.0
        try:
            phi, theta, R_, Q_, C_ = _decode_params(
                raw, p, q, constrain_C_zero, fix_r_zero)
        except (ParameterError, OverflowError):
            return _PENALTY * 10.0
        radius = _ar_spectral_radius(phi)
        if radius >= 1.0 - _OPT_STATIONARY_MARGIN:
            return _PENALTY * (1.0 + radius)
        # keep log-variances in a sane band so exp stays finite and informative
        pos = p + q
        logvars = raw[pos:pos + (1 if fix_r_zero else 2)]
        excess = float(np.max(np.abs(logvars))) - _LOGVAR_BOUND
        if excess > 0.0:
            return _PENALTY * (1.0 + excess)
        if not constrain_C_zero:
            limit = 0.999 * R_ * Q_
            if C_ * C_ > limit:
                ratio = (C_ * C_ - limit) / max(limit, 1e-30)
                return _PENALTY * (1.0 + min(ratio, 1e6))
        try:
            spec = build_arma_spec(p, q, phi, theta, R=R_, Q=Q_, C=C_)
            ll = _loglik_value(spec, y, stationary_init(spec))
        except (FilterDivergenceError, CovarianceDomainError,
                NonStationaryError, np.linalg.LinAlgError, ValueError):
            return _PENALTY
        if not math.isfinite(ll):
            return _PENALTY
        return -ll

    return objective


_FD_STEP = 1e-5


def _central_gradient(func, x: np.ndarray, step_scale: float = _FD_STEP) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    grad = np.empty_like(x)
    for i in range(x.shape[0]):
        h = step_scale * max(1.0, abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        grad[i] = (func(xp) - func(xm)) / (2.0 * h)
    return grad


def loglik_gradient(p: int, q: int, fe, raw_params,
                    constrain_C_zero: bool = True, fix_r_zero: bool = False) -> np.ndarray:
    """The optimizer's numeric gradient of the log-likelihood (central
    differences, step 1e-5 scaled by parameter magnitude)."""
    y = np.asarray(fe, dtype=float)
    objective = _make_objective(p, q, y, constrain_C_zero, fix_r_zero)
    return -_central_gradient(objective, np.asarray(raw_params, float))


def _default_start(p: int, q: int, y: np.ndarray,
                   constrain_C_zero: bool, fix_r_zero: bool) -> np.ndarray:
    """Method-of-moments starting point from the first few autocovariances."""
    n = y.shape[0]
    dev = y - y.mean()
    g0 = float(dev @ dev) / n
    if g0 <= 0.0:
        raise DegenerateInputError("series has zero variance")
    g1 = float(dev[1:] @ dev[:-1]) / n
    g2 = float(dev[2:] @ dev[:-2]) / n

    phi = []
    if p >= 1:
        if abs(g1) > 1e-12 * g0:
            phi1 = max(-0.9, min(0.9, g2 / g1))
        else:
            phi1 = 0.3
        if abs(phi1) < 0.05:
            phi1 = math.copysign(0.1, phi1 if phi1 != 0.0 else 1.0)
        phi = [phi1] + [0.0] * (p - 1)
    theta = [0.0] * q

    raw = list(phi) + list(theta)
    if fix_r_zero:
        shrink = 1.0 - phi[0] ** 2 if p >= 1 else 1.0
        q0 = max(g0 * shrink, 1e-12)
        raw.append(math.log(q0))
    else:
        if p >= 1 and phi[0] != 0.0:
            s2rp = g1 / phi[0]
        else:
            s2rp = g0 / 2.0
        s2rp = max(0.05 * g0, min(0.95 * g0, s2rp))
        r0 = max(g0 - s2rp, 0.05 * g0)
        shrink = 1.0 - phi[0] ** 2 if p >= 1 else 1.0
        q0 = max(s2rp * shrink, 1e-12)
        raw.append(math.log(r0))
        raw.append(math.log(q0))
    if not constrain_C_zero:
        raw.append(0.0)
    return np.array(raw, dtype=float)


def _numeric_hessian(func, x: np.ndarray, step_scale: float = 1e-4) -> np.ndarray:
    n = x.shape[0]
    h = step_scale * np.maximum(1.0, np.abs(x))
    H = np.empty((n, n))
    f0 = func(x)
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h[i]
        fpp = func(x + ei)
        fmm = func(x - ei)
        H[i, i] = (fpp - 2.0 * f0 + fmm) / (h[i] ** 2)
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = h[j]
            fa = func(x + ei + ej)
            fb = func(x + ei - ej)
            fc = func(x - ei + ej)
            fd = func(x - ei - ej)
            H[i, j] = H[j, i] = (fa - fb - fc + fd) / (4.0 * h[i] * h[j])
    return H


@dataclass(frozen=True)
class FittedModel:
    """Maximum-likelihood estimate of a premium state-space model."""

    spec: StateSpaceSpec
    raw_params: np.ndarray
    param_names: tuple[str, ...]
    loglik: float
    aic: float
    sc: float
    hqc: float
    se: np.ndarray | None
    p_values: np.ndarray | None
    converged: bool
    iterations: int
    k: int
    t_count: int
    constrain_C_zero: bool
    fix_r_zero: bool

    def __post_init__(self):
        object.__setattr__(self, "raw_params", _readonly(self.raw_params))
        if self.se is not None:
            object.__setattr__(self, "se", _readonly(self.se))
        if self.p_values is not None:
            object.__setattr__(self, "p_values", _readonly(self.p_values))

    def natural_params(self) -> dict:
        """Estimates on the natural scale with delta-method standard errors
        for the exponentially parameterized variances."""
        out = {}
        for i, name in enumerate(self.param_names):
            est = float(self.raw_params[i])
            se = float(self.se[i]) if self.se is not None else None
            pv = float(self.p_values[i]) if self.p_values is not None else None
            if name in ("log_r", "log_q"):
                natural = math.exp(est)
                out[name[-1].upper()] = {
                    "estimate": natural,
                    "se": natural * se if se is not None else None,
                    "p_value": pv,
                }
            else:
                label = name.upper() if name == "c" else name
                out[label] = {"estimate": est, "se": se, "p_value": pv}
        if self.fix_r_zero:
            out["R"] = {"estimate": 0.0, "se": None, "p_value": None, "fixed": True}
        if self.constrain_C_zero:
            out["C"] = {"estimate": 0.0, "se": None, "p_value": None, "fixed": True}
        return out

    def to_json_dict(self) -> dict:
        return {
            "p": self.spec.p,
            "q": self.spec.q,
            "constrain_C_zero": self.constrain_C_zero,
            "fix_r_zero": self.fix_r_zero,
            "params": self.natural_params(),
            "loglik": self.loglik,
            "aic": self.aic,
            "sc": self.sc,
            "hqc": self.hqc,
            "k": self.k,
            "t_count": self.t_count,
            "converged": self.converged,
            "iterations": self.iterations,
        }


def mle_fit(p: int, q: int, fe,
            constrain_C_zero: bool = True,
            optimizer_opts: dict | None = None,
            fix_r_zero: bool = False,
            start=None) -> FittedModel:
    """Fit the premium state space by exact maximum likelihood.

    Raw parameters are AR/MA coefficients (penalized toward stationarity),
    log-variances for R and Q, and C directly when unconstrained (penalized
    into the PSD region C^2 <= R*Q). Quasi-Newton (BFGS) with numeric
    central-difference gradients, iteration cap 500 by default. A fit that
    stops without meeting the convergence test is returned with
    converged=False rather than raised. fix_r_zero pins the observation
    noise at zero, which turns the model into a classical ARMA fit for the
    observed series itself.
    """
    y = np.asarray(fe, dtype=float)
    if y.ndim != 1:
        raise ParameterError("fe must be a 1-d vector")
    if y.shape[0] < 30:
        raise InsufficientDataError(
            f"mle_fit needs at least 30 observations, got {y.shape[0]}")
    if not np.all(np.isfinite(y)):
        raise ParameterError("fe contains non-finite values")
    if fix_r_zero and not constrain_C_zero:
        raise ParameterError("C must be constrained to zero when R is fixed at zero")

    opts = {"maxiter": 500, "gtol": 1e-7}
    if optimizer_opts:
        opts.update(optimizer_opts)
    maxiter = int(opts["maxiter"])
    gtol = float(opts["gtol"])

    objective = _make_objective(p, q, y, constrain_C_zero, fix_r_zero)
    grad = lambda x: _central_gradient(objective, x)

    x0 = np.asarray(start, dtype=float) if start is not None \
        else _default_start(p, q, y, constrain_C_zero, fix_r_zero)

    result = optimize.minimize(objective, x0, jac=grad, method="BFGS",
                               options={"maxiter": maxiter, "gtol": gtol})
    iterations = int(result.nit)
    # polish pass: restart from the current point. BFGS often stops on
    # line-search precision loss one step short; the restart either improves
    # or certifies that L has stopped moving.
    rel_change = math.inf
    if iterations < maxiter:
        second = optimize.minimize(objective, result.x, jac=grad, method="BFGS",
                                   options={"maxiter": max(maxiter - iterations, 1),
                                            "gtol": gtol})
        iterations += int(second.nit)
        rel_change = abs(float(result.fun) - float(second.fun)) \
            / max(1.0, abs(float(second.fun)))
        if second.fun <= result.fun:
            result = second

    xhat = np.asarray(result.x, dtype=float)
    fval = float(result.fun)
    in_valid_region = fval < _PENALTY * 0.5
    if in_valid_region:
        final_grad = grad(xhat)
        grad_small = float(np.max(np.abs(final_grad))) <= max(gtol * 100.0, 1e-4) \
            * max(1.0, abs(fval))
        # converged when the optimizer says so, when the likelihood has
        # stopped changing in relative terms, or when the gradient is flat
        converged = bool(result.success) or rel_change < 1e-9 or grad_small
    else:
        converged = False

    loglik = -fval if in_valid_region else float("-inf")
    k = xhat.shape[0]
    T = y.shape[0]
    crit = information_criteria(loglik, k, T) if in_valid_region else \
        Criteria(aic=float("inf"), sc=float("inf"), hqc=float("inf"))

    se = None
    p_values = None
    if in_valid_region:
        try:
            H = _numeric_hessian(objective, xhat)
            cov = np.linalg.inv(H)
            diag = np.diag(cov)
            if np.all(np.isfinite(diag)) and np.all(diag > 0.0):
                se = np.sqrt(diag)
                p_values = 2.0 * stats.norm.sf(np.abs(xhat) / se)
        except np.linalg.LinAlgError:
            se = None
            p_values = None

    phi, theta, R_, Q_, C_ = _decode_params(xhat, p, q, constrain_C_zero, fix_r_zero)
    spec = build_arma_spec(p, q, phi, theta, R=R_, Q=Q_, C=C_) if in_valid_region \
        else build_arma_spec(p, q, tuple(0.0 for _ in range(p)),
                             tuple(0.0 for _ in range(q)),
                             R=1.0 if not fix_r_zero else 0.0, Q=1.0, C=0.0)
    return FittedModel(spec=spec, raw_params=xhat,
                       param_names=_param_names(p, q, constrain_C_zero, fix_r_zero),
                       loglik=loglik, aic=crit.aic, sc=crit.sc, hqc=crit.hqc,
                       se=se, p_values=p_values, converged=converged,
                       iterations=iterations, k=k, t_count=T,
                       constrain_C_zero=constrain_C_zero, fix_r_zero=fix_r_zero)


# ---------------------------------------------------------------------------
# simulation and premia extraction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SimulationResult:
    """Simulated components. a[t] is the state innovation drawn jointly with
    re[t] (it enters the state at t+1), so Cov(re[t], a[t]) = C elementwise."""

    fe: np.ndarray
    rp: np.ndarray
    re: np.ndarray
    a: np.ndarray
    spot_chg_e: np.ndarray | None

    def __post_init__(self):
        for name in ("fe", "rp", "re", "a"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))
        if self.spot_chg_e is not None:
            object.__setattr__(self, "spot_chg_e", _readonly(self.spot_chg_e))


def _psd_factor_2x2(R: float, Q: float, C: float) -> np.ndarray:
    """Cholesky-style factor of [[R, C], [C, Q]], tolerant of zero variances."""
    if R > 0.0:
        l11 = math.sqrt(R)
        l21 = C / l11
        s = Q - l21 * l21
        if s < -1e-12 * max(Q, 1.0):
            raise CovarianceDomainError("noise covariance is not PSD")
        l22 = math.sqrt(max(s, 0.0))
    else:
        if C != 0.0:
            raise CovarianceDomainError("C must be zero when R is zero")
        l11 = 0.0
        l21 = 0.0
        l22 = math.sqrt(Q)
    return np.array([[l11, 0.0], [l21, l22]])


def simulate(spec: StateSpaceSpec, t_count: int, seed: int,
             exp_spot_sd: float | None = None) -> SimulationResult:
    """Draw a sample path of the premium model.

    The state starts from its stationary distribution. Each period draws the
    pair (re_t, a_{t+1}) from N(0, [[R, C], [C, Q]]); the premium is
    rp_t = Z x_t and the observation fe_t = rp_t + re_t. When exp_spot_sd is
    given an independent i.i.d. expected-spot-change series is drawn too, so
    callers can assemble complete synthetic datasets with known components.
    """
    if t_count < 1:
        raise ParameterError(f"t_count must be positive, got {t_count}")
    if exp_spot_sd is not None and exp_spot_sd < 0.0:
        raise ParameterError("exp_spot_sd must be non-negative")
    rng = np.random.default_rng(seed)
    init = stationary_init(spec)

    # draw order is part of the reproducibility contract:
    # initial state, then the T noise pairs, then the optional series
    z_init = rng.standard_normal(spec.m)
    z_pairs = rng.standard_normal((t_count, 2))
    dse = rng.normal(0.0, exp_spot_sd, t_count) if exp_spot_sd is not None else None

    evals, evecs = np.linalg.eigh(init.var0)
    root = evecs @ np.diag(np.sqrt(np.clip(evals, 0.0, None)))
    x = root @ z_init

    L = _psd_factor_2x2(spec.R, spec.Q, spec.C)
    noise = z_pairs @ L.T  # column 0: re, column 1: a
    re = noise[:, 0]
    a = noise[:, 1]

    rp = np.empty(t_count)
    for t in range(t_count):
        rp[t] = float(spec.Z @ x)
        x = spec.Phi @ x + spec.Theta * a[t]
    fe = rp + re
    return SimulationResult(fe=fe, rp=rp, re=re, a=a, spot_chg_e=dse)


@dataclass(frozen=True)
class PremiaSeries:
    """Premium decomposition extracted from a fitted model.

    rp_hat is the predicted (prior) premium and rp_filt the filtered
    (posterior) premium. The split of the observation uses the filtered
    estimate, so rp_filt + re_hat = fe holds by definition; a_hat is the
    filtering update rp_filt - rp_hat, the estimated premium shock. The
    systematic premium rp_sys is the predictable part of the premium given
    past observations, which is exactly rp_hat, and

        combined = re_hat + a_hat = fe - rp_sys

    is then the model's one-step prediction error: white noise when the
    premium process is correctly specified. The first burn_in entries sit
    in the filter's gain transient.
    """

    rp_hat: np.ndarray
    re_hat: np.ndarray
    a_hat: np.ndarray
    rp_sys: np.ndarray
    combined: np.ndarray
    rp_filt: np.ndarray
    burn_in: int

    def __post_init__(self):
        for name in ("rp_hat", "re_hat", "a_hat", "rp_sys", "combined", "rp_filt"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))


def extract_premia(fitted: FittedModel, fe) -> PremiaSeries:
    """Decompose the forward errors under a converged fitted model.

    The filtered premium splits each observation into premium and rational
    error, fe = rp_filt + re_hat; the gap between the filtered and the
    predicted premium is the estimated premium shock a_hat. Removing the
    predictable premium part (rp_sys = rp_hat) from the forward error
    leaves combined = re_hat + a_hat, the one-step prediction error.
    """
    if not fitted.converged:
        raise ParameterError("extract_premia requires a converged fit")
    y = np.asarray(fe, dtype=float)
    fo = kalman_filter(fitted.spec, y)
    Z = fitted.spec.Z
    rp_hat = fo.pred_mean @ Z
    rp_filt = fo.filt_mean @ Z
    re_hat = y - rp_filt
    a_hat = rp_filt - rp_hat
    rp_sys = rp_hat.copy()
    combined = re_hat + a_hat
    return PremiaSeries(rp_hat=rp_hat, re_hat=re_hat, a_hat=a_hat,
                        rp_sys=rp_sys, combined=combined, rp_filt=rp_filt,
                        burn_in=max(fitted.spec.p, fitted.spec.q))


def premia_to_csv(premia: PremiaSeries, dates, path) -> None:
    """Write ``date,rp_hat,re_hat,a_hat,rp_sys,combined`` with 10 significant digits."""
    import csv as _csv
    from pathlib import Path as _Path

    dates = list(dates)
    if len(dates) != premia.rp_hat.shape[0]:
        raise ParameterError("dates length does not match premia series")

    def _write(handle):
        writer = _csv.writer(handle, lineterminator="\n")
        writer.writerow(["date", "rp_hat", "re_hat", "a_hat", "rp_sys", "combined"])
        for i, date in enumerate(dates):
            writer.writerow([
                str(date),
                format(premia.rp_hat[i], ".10g"),
                format(premia.re_hat[i], ".10g"),
                format(premia.a_hat[i], ".10g"),
                format(premia.rp_sys[i], ".10g"),
                format(premia.combined[i], ".10g"),
            ])

    if isinstance(path, (str, _Path)):
        with open(path, "w", encoding="utf-8", newline="") as handle:
            _write(handle)
    else:
        _write(path)


# ---------------------------------------------------------------------------
# batch-run spec files
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RunSpec:
    """Model settings parsed from a plain key-value text file."""

    p: int
    q: int
    constrain_C_zero: bool = True
    max_iter: int = 500
    gtol: float = 1e-7

    def optimizer_opts(self) -> dict:
        return {"maxiter": self.max_iter, "gtol": self.gtol}


_TRUE_WORDS = {"true", "yes", "1", "zero"}
_FALSE_WORDS = {"false", "no", "0", "free"}


def load_run_spec(path) -> RunSpec:
    """Parse ``key = value`` lines: p, q, constrain_c, max_iter, gtol.

    '#' starts a comment. constrain_c accepts true/false/zero/free.
    """
    text = open(path, "r", encoding="utf-8").read() if not hasattr(path, "read") \
        else path.read()
    values: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        for sep in ("=", ":"):
            if sep in stripped:
                key, _, val = stripped.partition(sep)
                values[key.strip().lower()] = val.strip()
                break
        else:
            raise ParameterError(f"run spec line {lineno} is not key = value: {line!r}")
    known = {"p", "q", "constrain_c", "max_iter", "gtol"}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ParameterError(f"run spec has unknown keys: {', '.join(unknown)}")
    if "p" not in values or "q" not in values:
        raise ParameterError("run spec must define p and q")
    try:
        p = int(values["p"])
        q = int(values["q"])
        max_iter = int(values.get("max_iter", "500"))
        gtol = float(values.get("gtol", "1e-7"))
    except ValueError as exc:
        raise ParameterError(f"run spec has a malformed numeric value: {exc}") from exc
    constrain_raw = values.get("constrain_c", "true").lower()
    if constrain_raw in _TRUE_WORDS:
        constrain = True
    elif constrain_raw in _FALSE_WORDS:
        constrain = False
    else:
        raise ParameterError(f"constrain_c value {constrain_raw!r} not understood")
    return RunSpec(p=p, q=q, constrain_C_zero=constrain, max_iter=max_iter, gtol=gtol)
