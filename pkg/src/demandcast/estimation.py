"""Maximum-likelihood SARIMA estimation through a Kalman-filter likelihood.

Model: multiplicative seasonal ARIMA (p,d,q)(P,D,Q,s).  The differenced
series is demeaned by the intercept (stored as the process mean), the
seasonal and regular lag polynomials are expanded into a single ARMA, and
that ARMA is put in companion state-space form.  The exact Gaussian
likelihood comes from the innovations produced by a Kalman filter started at
the stationary state covariance; the innovation variance is profiled out in
closed form so the optimizer only searches the ARMA coefficients.

Optimization runs in an unconstrained space: each coefficient block is
parameterized by partial autocorrelations squashed through tanh, which keeps
every visited point stationary and invertible.
"""

from __future__ import annotations

import datetime as dt
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import linalg as sla
from scipy import optimize, signal

from .errors import DataError, InsufficientDataError, NumericalError, SpecError
from .series import DifferenceSpec, TimeSeries, difference, dropped_initials, integrate

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is in the default install
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap


# expanded lag-polynomial degree cap; beyond this the state dimension makes
# the filter and the Lyapunov solve impractically slow
MAX_EXPANDED_ORDER = 70

FIT_FORMAT = "demandcast-fit"
FIT_FORMAT_VERSION = 1


@dataclass(frozen=True)
class SarimaSpec:
    """Model orders (p,d,q)(P,D,Q,s) plus the intercept switch.

    ``with_intercept=None`` resolves to the convention used throughout: fit a
    mean term only when the model does no differencing (d + D == 0).
    """

    p: int
    d: int
    q: int
    P: int = 0
    D: int = 0
    Q: int = 0
    s: int = 1
    with_intercept: bool | None = None

    def __post_init__(self) -> None:
        for name in ("p", "d", "q", "P", "D", "Q", "s"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool):
                raise SpecError(f"order {name} must be an integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if min(self.p, self.d, self.q, self.P, self.D, self.Q) < 0:
            raise SpecError(f"orders must be non-negative, got {self.label()}")
        if self.d > 2 or self.D > 1:
            raise SpecError(f"differencing is capped at d<=2, D<=1, got d={self.d}, D={self.D}")
        if self.s < 1:
            raise SpecError(f"seasonal period must be >= 1, got {self.s}")
        if (self.P or self.D or self.Q) and self.s < 2:
            raise SpecError("seasonal terms need a seasonal period of at least 2")
        if self.ar_order > MAX_EXPANDED_ORDER or self.ma_order > MAX_EXPANDED_ORDER:
            raise SpecError(
                f"expanded order {max(self.ar_order, self.ma_order)} exceeds the "
                f"cap of {MAX_EXPANDED_ORDER}"
            )
        if self.with_intercept is None:
            object.__setattr__(self, "with_intercept", self.d + self.D == 0)

    @property
    def ar_order(self) -> int:
        return self.p + self.P * self.s

    @property
    def ma_order(self) -> int:
        return self.q + self.Q * self.s

    @property
    def state_dim(self) -> int:
        return max(self.ar_order, self.ma_order + 1)

    @property
    def k_params(self) -> int:
        """Coefficients plus intercept plus the innovation variance."""
        return self.p + self.q + self.P + self.Q + int(self.with_intercept) + 1

    @property
    def diff_spec(self) -> DifferenceSpec:
        return DifferenceSpec(d=self.d, D=self.D, s=self.s)

    @property
    def is_seasonal(self) -> bool:
        return self.s > 1 and (self.P > 0 or self.D > 0 or self.Q > 0)

    def label(self) -> str:
        base = f"({self.p},{self.d},{self.q})"
        if self.P or self.D or self.Q:
            return f"{base}({self.P},{self.D},{self.Q},{self.s})"
        return base

    @classmethod
    def parse(cls, text: str) -> "SarimaSpec":
        """Parse the CLI form ``p,d,q`` or ``p,d,q,P,D,Q,s``."""
        parts = [part.strip() for part in text.split(",")]
        if len(parts) not in (3, 7):
            raise SpecError(f"spec must have 3 or 7 comma-separated orders, got {text!r}")
        try:
            nums = [int(part) for part in parts]
        except ValueError as exc:
            raise SpecError(f"bad spec {text!r}: {exc}") from exc
        if len(nums) == 3:
            return cls(*nums)
        return cls(p=nums[0], d=nums[1], q=nums[2], P=nums[3], D=nums[4], Q=nums[5], s=nums[6])


@dataclass(frozen=True)
class SarimaParams:
    """Parameter values for a :class:`SarimaSpec`.

    ``mean`` is the process mean of the differenced series, not the
    regression-form intercept; use :attr:`intercept_for` to convert.
    """

    mean: float = 0.0
    ar: tuple[float, ...] = ()
    ma: tuple[float, ...] = ()
    seasonal_ar: tuple[float, ...] = ()
    seasonal_ma: tuple[float, ...] = ()
    sigma2: float = 1.0

    def __post_init__(self) -> None:
        for name in ("ar", "ma", "seasonal_ar", "seasonal_ma"):
            vals = tuple(float(v) for v in getattr(self, name))
            if any(not np.isfinite(v) for v in vals):
                raise SpecError(f"{name} coefficients must be finite")
            object.__setattr__(self, name, vals)
        object.__setattr__(self, "mean", float(self.mean))
        object.__setattr__(self, "sigma2", float(self.sigma2))
        if not np.isfinite(self.mean):
            raise SpecError("mean must be finite")
        if not (np.isfinite(self.sigma2) and self.sigma2 > 0):
            raise SpecError(f"sigma2 must be positive, got {self.sigma2}")

    def intercept_for(self, spec: SarimaSpec) -> float:
        """Regression-form intercept c = mean * (1 - sum of expanded AR coefficients)."""
        ar_rec, _ = expand_polynomials(spec, self)
        return self.mean * (1.0 - float(np.sum(ar_rec)))


def _check_dims(spec: SarimaSpec, params: SarimaParams) -> None:
    got = (len(params.ar), len(params.ma), len(params.seasonal_ar), len(params.seasonal_ma))
    want = (spec.p, spec.q, spec.P, spec.Q)
    if got != want:
        raise SpecError(
            f"parameter block sizes {got} do not match spec {spec.label()} orders {want}"
        )


def _seasonal_poly(coeffs: tuple[float, ...], s: int, sign: float) -> np.ndarray:
    """Lag polynomial 1 + sign*c1*B^s + sign*c2*B^2s + ... as dense coefficients."""
    poly = np.zeros(len(coeffs) * s + 1)
    poly[0] = 1.0
    for i, c in enumerate(coeffs, start=1):
        poly[i * s] = sign * c
    return poly


def expand_polynomials(spec: SarimaSpec, params: SarimaParams) -> tuple[np.ndarray, np.ndarray]:
    """Multiply regular and seasonal lag polynomials into recursion form.

    Returns (ar, ma) where the model is
    ``w_t = sum_i ar[i-1] w_{t-i} + e_t + sum_j ma[j-1] e_{t-j}``.
    """
    _check_dims(spec, params)
    ar_poly = np.concatenate(([1.0], -np.asarray(params.ar, dtype=float)))
    sar_poly = _seasonal_poly(params.seasonal_ar, spec.s, -1.0)
    full_ar = np.convolve(ar_poly, sar_poly)
    ma_poly = np.concatenate(([1.0], np.asarray(params.ma, dtype=float)))
    sma_poly = _seasonal_poly(params.seasonal_ma, spec.s, +1.0)
    full_ma = np.convolve(ma_poly, sma_poly)
    return -full_ar[1:], full_ma[1:]


def _poly_roots_outside(rec_coeffs: np.ndarray, is_ma: bool) -> bool:
    """True when every root of the lag polynomial lies strictly outside the unit circle.

    ``rec_coeffs`` is recursion form: AR polynomial 1 - sum a_i z^i, MA
    polynomial 1 + sum m_i z^i.
    """
    coeffs = np.asarray(rec_coeffs, dtype=float)
    nz = np.flatnonzero(coeffs)
    if nz.size == 0:
        return True
    coeffs = coeffs[: nz[-1] + 1]
    sign = 1.0 if is_ma else -1.0
    # highest degree first for np.roots
    poly = np.concatenate(((sign * coeffs)[::-1], [1.0]))
    roots = np.roots(poly)
    return bool(np.all(np.abs(roots) > 1.0))


def is_stationary(spec: SarimaSpec, params: SarimaParams) -> bool:
    ar_rec, _ = expand_polynomials(spec, params)
    return _poly_roots_outside(ar_rec, is_ma=False)


def is_invertible(spec: SarimaSpec, params: SarimaParams) -> bool:
    _, ma_rec = expand_polynomials(spec, params)
    return _poly_roots_outside(ma_rec, is_ma=True)


# ---------------------------------------------------------------------------
# partial-autocorrelation reparameterization


def pacf_to_coeffs(kappa: np.ndarray) -> np.ndarray:
    """Map partial autocorrelations in (-1,1) to stationary AR coefficients."""
    kappa = np.asarray(kappa, dtype=float)
    a = np.zeros(kappa.size)
    for j in range(kappa.size):
        kj = kappa[j]
        prev = a[:j].copy()
        a[:j] = prev - kj * prev[::-1]
        a[j] = kj
    return a


def coeffs_to_pacf(coeffs: np.ndarray) -> np.ndarray:
    """Inverse of :func:`pacf_to_coeffs`; fails if the block is not stationary."""
    a = np.asarray(coeffs, dtype=float).copy()
    m = a.size
    kappa = np.zeros(m)
    for j in range(m - 1, -1, -1):
        kj = a[j]
        if not np.isfinite(kj) or abs(kj) >= 1.0:
            raise NumericalError("coefficient block is outside the stationary region")
        kappa[j] = kj
        prev = a[:j]
        a = (prev + kj * prev[::-1]) / (1.0 - kj * kj)
    return kappa


# ---------------------------------------------------------------------------
# Kalman filter core


@njit(cache=True)
def _kf_core(y, tcol, rvec, p0):  # pragma: no cover - exercised via wrappers
    """Innovations filter for a companion-form ARMA state space.

    tcol holds the first column of the transition matrix (expanded AR
    coefficients, zero padded); rvec is the shock loading [1, ma...].  The
    filter runs at unit innovation variance; once the predicted covariance
    stops changing it freezes the gain and switches to O(r) updates.
    """
    r = tcol.shape[0]
    n = y.shape[0]
    v = np.empty(n)
    f = np.empty(n)
    a = np.zeros(r)
    P = p0.copy()
    Q = np.empty((r, r))
    for i in range(r):
        for j in range(r):
            Q[i, j] = rvec[i] * rvec[j]
    af = np.empty(r)
    anew = np.empty(r)
    work = np.empty((r, r))
    Pf = np.empty((r, r))
    gain = np.empty(r)
    fs = 1.0
    steady = False
    scale = 1.0 + np.abs(p0).max()
    tol = 1e-11 * scale
    ok = True
    for t in range(n):
        if steady:
            vt = y[t] - a[0]
            v[t] = vt
            f[t] = fs
            a0 = a[0] + gain[0] * vt
            for i in range(r):
                nxt = a[i + 1] + gain[i + 1] * vt if i + 1 < r else 0.0
                anew[i] = tcol[i] * a0 + nxt
            for i in range(r):
                a[i] = anew[i]
            continue
        ft = P[0, 0]
        if not np.isfinite(ft) or ft <= 0.0:
            ok = False
            break
        vt = y[t] - a[0]
        v[t] = vt
        f[t] = ft
        ratio = vt / ft
        for i in range(r):
            af[i] = a[i] + P[i, 0] * ratio
        for i in range(r):
            for j in range(r):
                Pf[i, j] = P[i, j] - P[i, 0] * P[0, j] / ft
        for i in range(r):
            nxt = af[i + 1] if i + 1 < r else 0.0
            a[i] = tcol[i] * af[0] + nxt
        for i in range(r):
            for j in range(r):
                nxt = Pf[i + 1, j] if i + 1 < r else 0.0
                work[i, j] = tcol[i] * Pf[0, j] + nxt
        delta = 0.0
        for i in range(r):
            for j in range(r):
                nxt = work[i, j + 1] if j + 1 < r else 0.0
                pn = tcol[j] * work[i, 0] + nxt + Q[i, j]
                diffij = abs(pn - P[i, j])
                if diffij > delta:
                    delta = diffij
                P[i, j] = pn
        if delta < tol:
            fnew = P[0, 0]
            if not np.isfinite(fnew) or fnew <= 0.0:
                ok = False
                break
            steady = True
            fs = fnew
            for i in range(r):
                gain[i] = P[i, 0] / fs
    return v, f, a, P, ok


def _companion_matrix(tcol: np.ndarray) -> np.ndarray:
    r = tcol.size
    T = np.zeros((r, r))
    T[:, 0] = tcol
    if r > 1:
        T[np.arange(r - 1), np.arange(1, r)] = 1.0
    return T


def _state_space(ar_rec: np.ndarray, ma_rec: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    r = max(len(ar_rec), len(ma_rec) + 1)
    tcol = np.zeros(r)
    tcol[: len(ar_rec)] = ar_rec
    rvec = np.zeros(r)
    rvec[0] = 1.0
    rvec[1: len(ma_rec) + 1] = ma_rec
    return tcol, rvec


def _stationary_state_cov(tcol: np.ndarray, rvec: np.ndarray) -> np.ndarray:
    """Solve P = T P T' + R R' for the stationary initial state covariance."""
    T = _companion_matrix(tcol)
    Q = np.outer(rvec, rvec)
    try:
        # the bilinear solver stays fast at large state dimensions
        P0 = sla.solve_discrete_lyapunov(T, Q, method="bilinear")
    except Exception as exc:
        raise NumericalError(f"stationary covariance solve failed: {exc}") from exc
    if not np.isfinite(P0).all():
        raise NumericalError("stationary covariance solve returned non-finite values")
    return (P0 + P0.T) / 2.0


def _innovations(w: np.ndarray, ar_rec: np.ndarray, ma_rec: np.ndarray):
    """Run the unit-variance filter; returns (v, f, predicted state, tcol)."""
    tcol, rvec = _state_space(ar_rec, ma_rec)
    P0 = _stationary_state_cov(tcol, rvec)
    v, f, a_pred, _, ok = _kf_core(w, tcol, rvec, P0)
    if not ok or not (np.isfinite(v).all() and np.isfinite(f).all()):
        raise NumericalError("Kalman filter produced non-finite innovations")
    return v, f, a_pred, tcol


def _concentrated_loglik(v: np.ndarray, f: np.ndarray) -> tuple[float, float]:
    """Profile out sigma2; returns (loglik at the profiled variance, sigma2 hat)."""
    n = v.size
    ssq = float(np.sum(v * v / f))
    if ssq <= 0.0 or not np.isfinite(ssq):
        raise NumericalError("degenerate innovation sum in likelihood")
    sigma2 = ssq / n
    ll = -0.5 * n * (math.log(2.0 * math.pi) + 1.0 + math.log(sigma2)) - 0.5 * float(
        np.sum(np.log(f))
    )
    return ll, sigma2


def _prepare(series: TimeSeries, spec: SarimaSpec) -> np.ndarray:
    """Difference per the spec and enforce the minimum-length precondition."""
    series.require_complete("estimation")
    w = difference(series, spec.diff_spec).values if spec.d or spec.D else series.values
    if w.size <= max(spec.ar_order, spec.ma_order) + 1:
        raise InsufficientDataError(
            f"only {w.size} observations remain after differencing; "
            f"spec {spec.label()} needs more than {max(spec.ar_order, spec.ma_order) + 1}"
        )
    return w


def log_likelihood(spec: SarimaSpec, params: SarimaParams, series: TimeSeries) -> float:
    """Exact Gaussian log-likelihood of the differenced, demeaned series."""
    _check_dims(spec, params)
    w = _prepare(series, spec)
    ar_rec, ma_rec = expand_polynomials(spec, params)
    if not _poly_roots_outside(ar_rec, is_ma=False):
        raise SpecError("autoregressive polynomial is not stationary")
    if not _poly_roots_outside(ma_rec, is_ma=True):
        raise SpecError("moving-average polynomial is not invertible")
    wc = w - params.mean
    v, f, _, _ = _innovations(wc, ar_rec, ma_rec)
    s2 = params.sigma2
    n = v.size
    return float(
        -0.5 * (n * math.log(2.0 * math.pi * s2) + np.sum(np.log(f)) + np.sum(v * v / f) / s2)
    )


@dataclass(frozen=True)
class SarimaFit:
    """A fitted model: spec, parameter estimates and fit diagnostics.

    ``residuals`` holds the one-step innovations on the differenced scale and
    is ``None`` for fits reloaded from disk.
    """

    spec: SarimaSpec
    params: SarimaParams
    loglik: float
    aic: float
    bic: float
    n_obs: int
    converged: bool
    residuals: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.residuals is not None:
            arr = np.array(self.residuals, dtype=float, copy=True)
            arr.setflags(write=False)
            object.__setattr__(self, "residuals", arr)


@dataclass(frozen=True)
class Forecast:
    """Point forecasts with variance and a symmetric 95% interval."""

    start_date: dt.date
    point: np.ndarray
    variance: np.ndarray
    lower95: np.ndarray
    upper95: np.ndarray

    def __post_init__(self) -> None:
        for name in ("point", "variance", "lower95", "upper95"):
            arr = np.array(getattr(self, name), dtype=float, copy=True)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def horizon(self) -> int:
        return int(self.point.size)

    def dates(self) -> list[dt.date]:
        return [self.start_date + dt.timedelta(days=i) for i in range(self.horizon)]


# ---------------------------------------------------------------------------
# starting values


def _ar_fit_yw(x: np.ndarray, order: int) -> np.ndarray:
    """Yule-Walker AR coefficients via Durbin-Levinson on the biased ACF."""
    xd = x - x.mean()
    denom = float(xd @ xd)
    if denom <= 0.0:
        raise NumericalError("degenerate variance in long-AR fit")
    rho = np.empty(order)
    for k in range(1, order + 1):
        rho[k - 1] = float(xd[:-k] @ xd[k:]) / denom
    a = np.zeros(order)
    v = 1.0
    for k in range(1, order + 1):
        num = rho[k - 1] - (a[: k - 1] @ rho[: k - 1][::-1] if k > 1 else 0.0)
        kappa = num / v
        if not np.isfinite(kappa) or abs(kappa) >= 1.0:
            raise NumericalError("long-AR fit left the stationary region")
        v *= 1.0 - kappa * kappa
        a[: k - 1] = a[: k - 1] - kappa * a[: k - 1][::-1]
        a[k - 1] = kappa
    return a


def _shrink_into_region(coeffs: np.ndarray, is_ma: bool) -> np.ndarray | None:
    """Scale roots outward (coeff_i *= lam^i) until the block is admissible."""
    coeffs = np.asarray(coeffs, dtype=float)
    if not np.isfinite(coeffs).all():
        return None
    for lam in (1.0, 0.97, 0.93, 0.85, 0.7, 0.5, 0.25):
        scaled = coeffs * lam ** np.arange(1, coeffs.size + 1)
        try:
            kappa = coeffs_to_pacf(-scaled if is_ma else scaled)
        except NumericalError:
            continue
        if np.all(np.abs(kappa) < 0.98):
            return scaled
    return None


def _hannan_rissanen_start(wc: np.ndarray, spec: SarimaSpec) -> dict[str, np.ndarray]:
    """Regression-based starting coefficients; falls back to zeros per block."""
    zeros = {
        "ar": np.zeros(spec.p),
        "ma": np.zeros(spec.q),
        "seasonal_ar": np.zeros(spec.P),
        "seasonal_ma": np.zeros(spec.Q),
    }
    ar_lags = list(range(1, spec.p + 1)) + [spec.s * i for i in range(1, spec.P + 1)]
    ma_lags = list(range(1, spec.q + 1)) + [spec.s * i for i in range(1, spec.Q + 1)]
    if not ar_lags and not ma_lags:
        return zeros
    n = wc.size
    max_lag = max(ar_lags + ma_lags)
    resid = None
    t_start = max_lag
    if ma_lags:
        long_order = min(max(10, 2 * max_lag), n // 4)
        if long_order < 1 or n - long_order < 20:
            return zeros
        try:
            a_long = _ar_fit_yw(wc, long_order)
        except NumericalError:
            return zeros
        resid = np.zeros(n)
        for t in range(long_order, n):
            resid[t] = wc[t] - float(a_long @ wc[t - long_order: t][::-1])
        t_start = max(max_lag, long_order + max(ma_lags))
    if n - t_start < 10 + len(ar_lags) + len(ma_lags):
        return zeros
    cols = [wc[t_start - lag: n - lag] for lag in ar_lags]
    cols += [resid[t_start - lag: n - lag] for lag in ma_lags]
    X = np.column_stack(cols)
    y = wc[t_start:]
    try:
        beta, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    except np.linalg.LinAlgError:
        return zeros
    if rank < X.shape[1] or not np.isfinite(beta).all():
        return zeros
    out = {
        "ar": beta[: spec.p],
        "seasonal_ar": beta[spec.p: spec.p + spec.P],
        "ma": beta[spec.p + spec.P: spec.p + spec.P + spec.q],
        "seasonal_ma": beta[spec.p + spec.P + spec.q:],
    }
    for key, is_ma in (("ar", False), ("seasonal_ar", False), ("ma", True), ("seasonal_ma", True)):
        if out[key].size == 0:
            continue
        shrunk = _shrink_into_region(out[key], is_ma)
        if shrunk is None:
            return zeros
        out[key] = shrunk
    return out


# ---------------------------------------------------------------------------
# fitting


def _blocks_to_z(blocks: dict[str, np.ndarray]) -> np.ndarray:
    """Unconstrained optimizer coordinates from per-block coefficients."""
    zs = []
    for key, is_ma in (("ar", False), ("ma", True), ("seasonal_ar", False), ("seasonal_ma", True)):
        coeffs = np.asarray(blocks[key], dtype=float)
        if coeffs.size == 0:
            continue
        kappa = coeffs_to_pacf(-coeffs if is_ma else coeffs)
        kappa = np.clip(kappa, -0.995, 0.995)
        zs.append(np.arctanh(kappa))
    if not zs:
        return np.empty(0)
    return np.concatenate(zs)


def _z_to_blocks(z: np.ndarray, spec: SarimaSpec) -> dict[str, np.ndarray]:
    out = {}
    pos = 0
    for key, size, is_ma in (
        ("ar", spec.p, False),
        ("ma", spec.q, True),
        ("seasonal_ar", spec.P, False),
        ("seasonal_ma", spec.Q, True),
    ):
        kappa = np.tanh(z[pos: pos + size])
        coeffs = pacf_to_coeffs(kappa)
        out[key] = -coeffs if is_ma else coeffs
        pos += size
    return out


def _params_from_blocks(blocks: dict[str, np.ndarray], mean: float, sigma2: float) -> SarimaParams:
    return SarimaParams(
        mean=mean,
        ar=tuple(blocks["ar"]),
        ma=tuple(blocks["ma"]),
        seasonal_ar=tuple(blocks["seasonal_ar"]),
        seasonal_ma=tuple(blocks["seasonal_ma"]),
        sigma2=sigma2,
    )


NM_MAX_EVALS = 5000
NM_XATOL = 1e-8
MAX_RESTARTS = 2
RESTART_MIN_GAIN = 1e-4
GRAD_MAX_EVALS = 3000


def _minimize_once(objective, z0: np.ndarray) -> "optimize.OptimizeResult":
    """One local search: gradient-based first, simplex fallback.

    L-BFGS-B on the unconstrained coordinates converges in a few hundred
    evaluations where Nelder-Mead needs thousands; the simplex run remains
    as a fallback for the rare starts where finite-difference gradients hit
    an inadmissible (infinite) likelihood region and the line search aborts.
    """
    res = optimize.minimize(
        objective, z0, method="L-BFGS-B",
        options={"maxfun": GRAD_MAX_EVALS, "ftol": 1e-11, "gtol": 1e-7},
    )
    if res.success and np.isfinite(res.fun):
        return res
    fallback_start = res.x if np.isfinite(res.fun) else z0
    nm = optimize.minimize(
        objective, fallback_start, method="Nelder-Mead",
        options={"xatol": NM_XATOL, "fatol": 1e-10, "maxfev": NM_MAX_EVALS, "maxiter": NM_MAX_EVALS},
    )
    if np.isfinite(res.fun) and res.fun < nm.fun:
        return res
    return nm


def fit(spec: SarimaSpec, series: TimeSeries, seed: int = 0) -> SarimaFit:
    """Maximize the exact likelihood over stationary, invertible parameters.

    The search starts from regression-based coefficients and runs a
    gradient-based local optimizer (with a simplex fallback); seeded
    perturbation restarts continue only while they keep improving the
    optimum.  The innovation variance is profiled out, so the search space
    holds only the lag coefficients.
    """
    w = _prepare(series, spec)
    n = w.size
    if float(np.ptp(w)) == 0.0:
        raise NumericalError(f"cannot fit {spec.label()} to a constant series")
    if n < 10 * spec.k_params:
        warnings.warn(
            f"fitting {spec.label()} with only {n} observations for "
            f"{spec.k_params} parameters; estimates may be unstable",
            stacklevel=2,
        )
    mu = float(w.mean()) if spec.with_intercept else 0.0
    wc = w - mu
    dim = spec.p + spec.q + spec.P + spec.Q

    def objective(z: np.ndarray) -> float:
        try:
            blocks = _z_to_blocks(z, spec)
            params = _params_from_blocks(blocks, 0.0, 1.0)
            ar_rec, ma_rec = expand_polynomials(spec, params)
            v, f, _, _ = _innovations(wc, ar_rec, ma_rec)
            ll, _ = _concentrated_loglik(v, f)
        except (NumericalError, FloatingPointError):
            return np.inf
        return -ll if np.isfinite(ll) else np.inf

    if dim == 0:
        z_best = np.empty(0)
        converged = True
    else:
        start_blocks = _hannan_rissanen_start(wc, spec)
        try:
            z0 = _blocks_to_z(start_blocks)
        except NumericalError:
            z0 = np.zeros(dim)
        if z0.size != dim or not np.isfinite(z0).all():
            z0 = np.zeros(dim)
        if not np.isfinite(objective(z0)):
            z0 = np.zeros(dim)
        rng = np.random.default_rng(seed)
        best = _minimize_once(objective, z0)
        for _ in range(MAX_RESTARTS):
            z_try = best.x + rng.normal(0.0, 0.2, size=dim)
            res = _minimize_once(objective, z_try)
            improved = res.fun < best.fun - RESTART_MIN_GAIN
            if res.fun < best.fun:
                best = res
            if not improved:
                break
        if not np.isfinite(best.fun):
            raise NumericalError(f"no admissible parameter point found for {spec.label()}")
        z_best = best.x
        converged = bool(best.success)

    blocks = _z_to_blocks(z_best, spec)
    probe = _params_from_blocks(blocks, 0.0, 1.0)
    ar_rec, ma_rec = expand_polynomials(spec, probe)
    v, f, _, _ = _innovations(wc, ar_rec, ma_rec)
    loglik, sigma2 = _concentrated_loglik(v, f)
    params = _params_from_blocks(blocks, mu, sigma2)
    k = spec.k_params
    return SarimaFit(
        spec=spec,
        params=params,
        loglik=loglik,
        aic=2.0 * k - 2.0 * loglik,
        bic=k * math.log(n) - 2.0 * loglik,
        n_obs=n,
        converged=converged,
        residuals=v,
    )


# ---------------------------------------------------------------------------
# forecasting and simulation


def _psi_weights(ar_rec: np.ndarray, ma_rec: np.ndarray, diff: DifferenceSpec, horizon: int) -> np.ndarray:
    """MA-infinity weights of the model including its differencing operator."""
    ar_poly = np.concatenate(([1.0], -np.asarray(ar_rec, dtype=float)))
    for _ in range(diff.d):
        ar_poly = np.convolve(ar_poly, [1.0, -1.0])
    for _ in range(diff.D):
        seasonal = np.zeros(diff.s + 1)
        seasonal[0] = 1.0
        seasonal[-1] = -1.0
        ar_poly = np.convolve(ar_poly, seasonal)
    ar_full = -ar_poly[1:]
    psi = np.empty(horizon)
    psi[0] = 1.0
    for j in range(1, horizon):
        acc = ma_rec[j - 1] if j - 1 < ma_rec.size else 0.0
        kmax = min(j, ar_full.size)
        for i in range(1, kmax + 1):
            acc += ar_full[i - 1] * psi[j - i]
        psi[j] = acc
    return psi


def default_horizon_cap(spec: SarimaSpec) -> int:
    return max(3 * spec.s, 365)


def forecast(
    fit_result: SarimaFit,
    series: TimeSeries,
    horizon: int,
    max_horizon: int | None = None,
) -> Forecast:
    """Dynamic forecasts from the end of ``series`` under the fitted model.

    ``series`` should be the training series or an extension of it; the
    filter is re-run, so any gap-free continuation is accepted.  Interval
    width comes from the MA-infinity representation, hence it is
    non-decreasing in the horizon.
    """
    spec, params = fit_result.spec, fit_result.params
    cap = default_horizon_cap(spec) if max_horizon is None else int(max_horizon)
    if not isinstance(horizon, (int, np.integer)) or isinstance(horizon, bool) or horizon < 1:
        raise SpecError(f"horizon must be a positive integer, got {horizon!r}")
    if horizon > cap:
        raise SpecError(f"horizon {horizon} exceeds the cap of {cap}")
    w = _prepare(series, spec)
    wc = w - params.mean
    ar_rec, ma_rec = expand_polynomials(spec, params)
    if not _poly_roots_outside(ar_rec, is_ma=False):
        raise SpecError("autoregressive polynomial is not stationary")
    if not _poly_roots_outside(ma_rec, is_ma=True):
        raise SpecError("moving-average polynomial is not invertible")
    v, f, a_pred, tcol = _innovations(wc, ar_rec, ma_rec)
    r = tcol.size
    m = np.empty(horizon)
    a = a_pred.copy()
    for j in range(horizon):
        m[j] = a[0]
        nxt = np.empty(r)
        for i in range(r):
            nxt[i] = tcol[i] * a[0] + (a[i + 1] if i + 1 < r else 0.0)
        a = nxt
    w_hat = m + params.mean

    diff = spec.diff_spec
    if diff.n_dropped:
        init = dropped_initials(series, diff)
        diffed = difference(series, diff)
        full = TimeSeries(diffed.start_date, np.concatenate((diffed.values, w_hat)))
        points = integrate(full, diff, init).values[-horizon:]
    else:
        points = w_hat

    psi = _psi_weights(ar_rec, ma_rec, diff, horizon)
    variance = params.sigma2 * np.cumsum(psi * psi)
    half = 1.96 * np.sqrt(variance)
    start = series.end_date + dt.timedelta(days=1)
    return Forecast(
        start_date=start,
        point=points,
        variance=variance,
        lower95=points - half,
        upper95=points + half,
    )


def simulate(
    spec: SarimaSpec,
    params: SarimaParams,
    n: int,
    seed: int,
    start_date: dt.date = dt.date(2000, 1, 1),
) -> TimeSeries:
    """Draw a Gaussian sample path of length ``n`` from the model.

    The ARMA core is simulated with a burn-in of at least ten state
    dimensions, the mean is added, then the differencing operators are
    inverted from zero initial values and the final ``n`` points returned.
    """
    _check_dims(spec, params)
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool) or n < 1:
        raise SpecError(f"sample length must be a positive integer, got {n!r}")
    ar_rec, ma_rec = expand_polynomials(spec, params)
    if not _poly_roots_outside(ar_rec, is_ma=False):
        raise SpecError("cannot simulate from a non-stationary model")
    if not _poly_roots_outside(ma_rec, is_ma=True):
        raise SpecError("cannot simulate from a non-invertible model")
    r = spec.state_dim
    burn = 10 * r + 100
    rng = np.random.default_rng(seed)
    eps = rng.normal(0.0, math.sqrt(params.sigma2), size=n + burn)
    path = signal.lfilter(
        np.concatenate(([1.0], ma_rec)), np.concatenate(([1.0], -ar_rec)), eps
    )[burn:]
    path = path + params.mean
    diff = spec.diff_spec
    if diff.n_dropped:
        placed = TimeSeries(start_date + dt.timedelta(days=diff.n_dropped), path)
        values = integrate(placed, diff, np.zeros(diff.n_dropped)).values[-n:]
    else:
        values = path
    return TimeSeries(start_date, values)


# ---------------------------------------------------------------------------
# serialization


def save_fit(fit_result: SarimaFit, path: str | Path, metadata: dict[str, str] | None = None) -> None:
    """Write a fit as versioned key=value text with full-precision floats."""
    spec, params = fit_result.spec, fit_result.params
    lines = [
        f"format={FIT_FORMAT}/{FIT_FORMAT_VERSION}",
        f"spec={spec.p},{spec.d},{spec.q},{spec.P},{spec.D},{spec.Q},{spec.s}",
        f"with_intercept={'true' if spec.with_intercept else 'false'}",
        f"mean={params.mean:.17g}",
    ]
    for name in ("ar", "ma", "seasonal_ar", "seasonal_ma"):
        for i, value in enumerate(getattr(params, name), start=1):
            lines.append(f"{name}.{i}={value:.17g}")
    lines += [
        f"sigma2={params.sigma2:.17g}",
        f"loglik={fit_result.loglik:.17g}",
        f"aic={fit_result.aic:.17g}",
        f"bic={fit_result.bic:.17g}",
        f"n_obs={fit_result.n_obs}",
        f"converged={'true' if fit_result.converged else 'false'}",
    ]
    for key, value in (metadata or {}).items():
        if "=" in key or "\n" in key or "\n" in str(value):
            raise SpecError(f"metadata key/value must be single-line, got {key!r}")
        lines.append(f"meta.{key}={value}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_fit(path: str | Path) -> tuple[SarimaFit, dict[str, str]]:
    """Read a fit written by :func:`save_fit`; returns (fit, metadata)."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"fit file not found: {path}")
    pairs: dict[str, str] = {}
    metadata: dict[str, str] = {}
    coeffs: dict[str, dict[int, float]] = {"ar": {}, "ma": {}, "seasonal_ar": {}, "seasonal_ma": {}}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise DataError(f"{path}:{lineno}: expected key=value, got {line!r}")
        if key.startswith("meta."):
            metadata[key[5:]] = value
            continue
        base, dot, idx = key.partition(".")
        if dot and base in coeffs:
            try:
                coeffs[base][int(idx)] = float(value)
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: bad coefficient line: {exc}") from exc
            continue
        pairs[key] = value
    try:
        fmt, _, version = pairs["format"].partition("/")
        if fmt != FIT_FORMAT or int(version) > FIT_FORMAT_VERSION:
            raise DataError(f"unsupported fit format {pairs['format']!r}")
        order = [int(v) for v in pairs["spec"].split(",")]
        spec = SarimaSpec(
            p=order[0], d=order[1], q=order[2], P=order[3], D=order[4], Q=order[5], s=order[6],
            with_intercept=pairs["with_intercept"] == "true",
        )
        blocks = {}
        for name, want in (("ar", spec.p), ("ma", spec.q), ("seasonal_ar", spec.P), ("seasonal_ma", spec.Q)):
            got = coeffs[name]
            if sorted(got) != list(range(1, want + 1)):
                raise DataError(f"fit file has {len(got)} {name} coefficients, spec wants {want}")
            blocks[name] = tuple(got[i] for i in range(1, want + 1))
        params = SarimaParams(
            mean=float(pairs["mean"]),
            ar=blocks["ar"],
            ma=blocks["ma"],
            seasonal_ar=blocks["seasonal_ar"],
            seasonal_ma=blocks["seasonal_ma"],
            sigma2=float(pairs["sigma2"]),
        )
        fit_result = SarimaFit(
            spec=spec,
            params=params,
            loglik=float(pairs["loglik"]),
            aic=float(pairs["aic"]),
            bic=float(pairs["bic"]),
            n_obs=int(pairs["n_obs"]),
            converged=pairs["converged"] == "true",
            residuals=None,
        )
    except KeyError as exc:
        raise DataError(f"fit file {path} is missing required key {exc}") from exc
    except (ValueError, IndexError) as exc:
        raise DataError(f"fit file {path} is malformed: {exc}") from exc
    return fit_result, metadata
