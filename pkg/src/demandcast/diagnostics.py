"""Stationarity and correlation diagnostics.

Covers the augmented Dickey-Fuller unit-root test with AIC lag selection,
autocorrelation and partial-autocorrelation estimates with confidence bands,
and a differencing-order recommendation built on repeated ADF tests.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import _adfdata
from .errors import DataError, InsufficientDataError, NumericalError, SpecError
from .series import DifferenceSpec, TimeSeries, difference

P_CLAMP = 1e-8

REGRESSIONS = ("n", "c", "ct")


@dataclass(frozen=True)
class AdfResult:
    """Outcome of one augmented Dickey-Fuller test.

    ``statistic`` is the t-ratio on the lagged level; small (very negative)
    values reject the unit-root null.  ``p_value_clamped`` is set when the
    response surface under- or overflowed and the p-value was pinned to the
    [1e-8, 1 - 1e-8] range.
    """

    statistic: float
    p_value: float
    used_lags: int
    n_effective: int
    regression: str
    p_value_clamped: bool = False


@dataclass(frozen=True)
class CorrelogramResult:
    """ACF or PACF values for lags 1..L with a flat 1.96/sqrt(n) band."""

    kind: str
    values: np.ndarray
    band: float

    def __post_init__(self) -> None:
        if self.kind not in ("acf", "pacf"):
            raise SpecError(f"kind must be 'acf' or 'pacf', got {self.kind!r}")
        arr = np.array(self.values, dtype=float, copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def max_lag(self) -> int:
        return int(self.values.size)

    def value_at(self, lag: int) -> float:
        if not 1 <= lag <= self.max_lag:
            raise IndexError(f"lag {lag} outside 1..{self.max_lag}")
        return float(self.values[lag - 1])


def _mackinnon_pvalue(stat: float, regression: str) -> tuple[float, bool]:
    """Approximate p-value for the tau statistic; clamped outside the surface."""
    if stat <= _adfdata.TAU_MIN[regression]:
        return P_CLAMP, True
    if stat >= _adfdata.TAU_MAX[regression]:
        return 1.0 - P_CLAMP, True
    if stat <= _adfdata.TAU_STAR[regression]:
        coeffs = _adfdata.SMALL_P[regression]
    else:
        coeffs = _adfdata.LARGE_P[regression]
    p = float(stats.norm.cdf(np.polyval(coeffs[::-1], stat)))
    if p < P_CLAMP:
        return P_CLAMP, True
    if p > 1.0 - P_CLAMP:
        return 1.0 - P_CLAMP, True
    return p, False


def _ols_tstat0(y: np.ndarray, X: np.ndarray) -> tuple[float, float]:
    """OLS fit returning (t-ratio of column 0, residual sum of squares)."""
    beta, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < X.shape[1]:
        raise NumericalError("singular regression matrix in unit-root test")
    resid = y - X @ beta
    ssr = float(resid @ resid)
    dof = X.shape[0] - X.shape[1]
    if dof <= 0:
        raise InsufficientDataError("unit-root regression has no residual degrees of freedom")
    s2 = ssr / dof
    xtx_inv = np.linalg.inv(X.T @ X)
    se0 = float(np.sqrt(s2 * xtx_inv[0, 0]))
    if se0 == 0.0 or not np.isfinite(se0):
        raise NumericalError("degenerate standard error in unit-root test")
    return float(beta[0] / se0), ssr


def _ols_ssr(y: np.ndarray, X: np.ndarray) -> float:
    beta, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < X.shape[1]:
        raise NumericalError("singular regression matrix in unit-root test")
    resid = y - X @ beta
    return float(resid @ resid)


def _adf_design(x: np.ndarray, lag: int, regression: str) -> tuple[np.ndarray, np.ndarray]:
    """Regression of dx_t on x_{t-1}, lagged dx terms and deterministics."""
    dx = np.diff(x)
    t0 = lag
    y = dx[t0:]
    m = y.size
    cols = [x[t0: x.size - 1]]
    for j in range(1, lag + 1):
        cols.append(dx[t0 - j: dx.size - j])
    if regression in ("c", "ct"):
        cols.append(np.ones(m))
    if regression == "ct":
        cols.append(np.arange(1.0, m + 1.0))
    return y, np.column_stack(cols)


def default_max_lag(n: int) -> int:
    """Schwert rule: floor(12 * (n/100)^0.25)."""
    return int(np.floor(12.0 * (n / 100.0) ** 0.25))


def adf_test(series: TimeSeries, regression: str = "c", max_lag: int | None = None) -> AdfResult:
    """Augmented Dickey-Fuller test with AIC lag selection over 0..max_lag.

    Candidate lags are compared on a common sample trimmed at ``max_lag``;
    the winning lag is then refit on its own full sample, which sets
    ``n_effective = n - used_lags - 1``.
    """
    if regression not in REGRESSIONS:
        raise SpecError(f"regression must be one of {REGRESSIONS}, got {regression!r}")
    x = series.require_complete("the unit-root test")
    n = x.size
    if n < 20:
        raise InsufficientDataError(f"unit-root test needs at least 20 observations, got {n}")
    if float(np.ptp(x)) == 0.0:
        raise DataError("unit-root test is undefined for a constant series")
    ntrend = {"n": 0, "c": 1, "ct": 2}[regression]
    if max_lag is None:
        max_lag = default_max_lag(n)
    if max_lag < 0:
        raise SpecError(f"max_lag must be non-negative, got {max_lag}")
    hard_cap = (n - 1) // 2 - ntrend - 2
    max_lag = min(max_lag, max(hard_cap, 0))

    # lag choice: same trimmed sample for every candidate, AIC on the Gaussian
    # log-likelihood of the residuals
    y_sel, X_sel = _adf_design(x, max_lag, regression)
    m = y_sel.size
    if m <= max_lag + ntrend + 2:
        raise InsufficientDataError("series too short for the requested lag order")
    aics = np.empty(max_lag + 1)
    for k in range(max_lag + 1):
        keep = list(range(k + 1)) + list(range(max_lag + 1, max_lag + 1 + ntrend))
        ssr = _ols_ssr(y_sel, X_sel[:, keep])
        ncols = k + 1 + ntrend
        llf = -m / 2.0 * (np.log(2.0 * np.pi) + np.log(ssr / m) + 1.0)
        aics[k] = -2.0 * llf + 2.0 * ncols
    best_lag = int(np.argmin(aics))

    y, X = _adf_design(x, best_lag, regression)
    stat, _ = _ols_tstat0(y, X)
    p, clamped = _mackinnon_pvalue(stat, regression)
    return AdfResult(
        statistic=stat,
        p_value=p,
        used_lags=best_lag,
        n_effective=y.size,
        regression=regression,
        p_value_clamped=clamped,
    )


def acf(series: TimeSeries, max_lag: int) -> CorrelogramResult:
    """Sample autocorrelations for lags 1..max_lag with the 1/n denominator.

    The biased normalisation keeps |value| <= 1 at every lag.
    """
    x = series.require_complete("autocorrelation")
    n = x.size
    if not 1 <= max_lag < n:
        raise SpecError(f"max_lag must be in 1..{n - 1}, got {max_lag}")
    xd = x - x.mean()
    denom = float(xd @ xd)
    if denom == 0.0:
        raise DataError("autocorrelation is undefined for a constant series")
    vals = np.empty(max_lag)
    for k in range(1, max_lag + 1):
        vals[k - 1] = float(xd[:-k] @ xd[k:]) / denom
    return CorrelogramResult(kind="acf", values=vals, band=1.96 / np.sqrt(n))


def pacf(series: TimeSeries, max_lag: int) -> CorrelogramResult:
    """Partial autocorrelations via the Durbin-Levinson recursion on the sample ACF."""
    n = len(series)
    if not 1 <= max_lag <= n // 2:
        raise SpecError(f"max_lag must be in 1..n/2 = {n // 2}, got {max_lag}")
    rho = acf(series, max_lag).values
    pac = np.empty(max_lag)
    a = np.zeros(max_lag)
    v = 1.0
    for k in range(1, max_lag + 1):
        if k == 1:
            kappa = rho[0]
        else:
            num = rho[k - 1] - a[: k - 1] @ rho[: k - 1][::-1]
            kappa = num / v
        v *= 1.0 - kappa * kappa
        if not np.isfinite(kappa) or v <= 0.0:
            raise NumericalError(
                f"Durbin-Levinson recursion broke down at lag {k}: "
                "autocorrelation sequence is not positive definite"
            )
        a[: k - 1] = a[: k - 1] - kappa * a[: k - 1][::-1]
        a[k - 1] = kappa
        pac[k - 1] = kappa
    return CorrelogramResult(kind="pacf", values=pac, band=1.96 / np.sqrt(len(series)))


def unit_root_profile(
    series: TimeSeries, max_d: int = 2, regression: str = "c"
) -> list[tuple[int, AdfResult]]:
    """ADF results for the series differenced 0..max_d times."""
    out = []
    for d in range(max_d + 1):
        w = series if d == 0 else difference(series, DifferenceSpec(d=d))
        out.append((d, adf_test(w, regression=regression)))
    return out


OVERDIFFERENCE_P = 1e-6


def overdifferencing_risk(result: AdfResult) -> bool:
    """Whether an ADF result on a differenced series signals over-differencing.

    A p-value this far below any sensible significance level says the series
    was already stationary before the last difference was taken; differencing
    again only inflates the moving-average side of the model.
    """
    return result.p_value < OVERDIFFERENCE_P


def recommend_differencing(series: TimeSeries, s: int = 7, alpha: float = 0.05) -> DifferenceSpec:
    """Smallest d in 0..2 whose ADF test rejects the unit root at ``alpha``.

    Only regular differencing is recommended; the seasonal period is carried
    through for downstream use.  When the chosen order looks over-differenced
    (lag-1 autocorrelation below -0.5) a warning is issued rather than an
    error, since the recommendation is still the smallest admissible order.
    """
    if len(series) < 50:
        raise InsufficientDataError(
            f"differencing recommendation needs at least 50 observations, got {len(series)}"
        )
    if not 0 < alpha < 1:
        raise SpecError(f"alpha must be in (0, 1), got {alpha}")
    for d in range(3):
        w = series if d == 0 else difference(series, DifferenceSpec(d=d))
        result = adf_test(w)
        if result.p_value < alpha:
            lag1 = acf(w, 1).values[0]
            if lag1 < -0.5:
                warnings.warn(
                    f"d={d} rejects the unit root but lag-1 autocorrelation is "
                    f"{lag1:.3f}; the series may be over-differenced",
                    stacklevel=2,
                )
            return DifferenceSpec(d=d, D=0, s=s)
    raise InsufficientDataError(
        "no differencing order up to 2 achieves stationarity at the "
        f"{alpha:g} level; the series resists unit-root modelling"
    )
