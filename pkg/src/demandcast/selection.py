"""Candidate grids, grid evaluation and stepwise order search.

Two fixed benchmark grids mirror the comparison tables of the original
demand study (one non-seasonal, one weekly-seasonal); the stepwise search is
a hill climb over (p, q, P, Q) guided by AIC, in the spirit of common
auto-ARIMA procedures.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .diagnostics import recommend_differencing
from .errors import InsufficientDataError, NumericalError, SpecError
from .estimation import SarimaFit, SarimaSpec, fit
from .metrics import dynamic_metrics, one_step_metrics
from .series import SplitSpec, TimeSeries, split

# (p, d, q) rows of the non-seasonal comparison table
ARIMA_TABLE_ORDERS: tuple[tuple[int, int, int], ...] = (
    (1, 0, 0),
    (2, 0, 0),
    (1, 1, 0),
    (1, 2, 0),
    (0, 0, 1),
    (0, 1, 1),
    (0, 2, 1),
    (8, 0, 8),
    (8, 1, 8),
    (9, 0, 7),
    (9, 1, 7),
    (8, 0, 9),
    (8, 1, 9),
    (5, 1, 3),
)

# ((p, d, q), (P, D, Q, s)) rows of the weekly-seasonal comparison tables
SARIMA_TABLE_ORDERS: tuple[tuple[tuple[int, int, int], tuple[int, int, int, int]], ...] = (
    ((1, 0, 0), (3, 0, 6, 7)),
    ((0, 0, 0), (1, 0, 1, 7)),
    ((0, 0, 0), (1, 1, 1, 7)),
    ((0, 0, 0), (3, 0, 6, 7)),
    ((0, 0, 0), (3, 1, 6, 7)),
    ((1, 0, 0), (6, 0, 2, 7)),
    ((0, 0, 0), (6, 0, 2, 7)),
    ((0, 0, 0), (6, 1, 2, 7)),
    ((1, 0, 0), (6, 0, 3, 7)),
    ((0, 0, 0), (6, 0, 3, 7)),
    ((0, 0, 0), (6, 1, 3, 7)),
)

GRID_KINDS = ("arima-table", "sarima-table")


@dataclass(frozen=True)
class CandidateSet:
    """A named, duplicate-free collection of model specs to compare."""

    specs: tuple[SarimaSpec, ...]
    source: str
    name: str = ""

    def __post_init__(self) -> None:
        if not self.specs:
            raise SpecError("candidate set must hold at least one spec")
        if len(set(self.specs)) != len(self.specs):
            raise SpecError("candidate set contains duplicate specs")
        if self.source not in ("fixed-grid", "stepwise", "explicit"):
            raise SpecError(f"unknown candidate source {self.source!r}")
        if not self.name:
            object.__setattr__(self, "name", self.source)


def fixed_grid(kind: str) -> CandidateSet:
    """Benchmark candidate grid: ``arima-table`` or ``sarima-table``."""
    if kind == "arima-table":
        specs = tuple(SarimaSpec(p, d, q) for p, d, q in ARIMA_TABLE_ORDERS)
    elif kind == "sarima-table":
        specs = tuple(
            SarimaSpec(p=o[0], d=o[1], q=o[2], P=so[0], D=so[1], Q=so[2], s=so[3])
            for o, so in SARIMA_TABLE_ORDERS
        )
    else:
        raise SpecError(f"grid kind must be one of {GRID_KINDS}, got {kind!r}")
    return CandidateSet(specs=specs, source="fixed-grid", name=kind)


@dataclass(frozen=True)
class EvaluationRow:
    """One evaluated candidate; metric fields are NaN when unavailable."""

    spec: SarimaSpec
    train_mape: float
    test_mape: float
    aic: float
    bic: float
    loglik: float
    converged: bool
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


RANKING_KEYS = ("test_mape", "train_mape", "aic", "bic")


@dataclass(frozen=True)
class RankedResults:
    """Evaluation rows sorted ascending by the ranking key, failures last."""

    rows: tuple[EvaluationRow, ...]
    ranking_key: str

    def __post_init__(self) -> None:
        if self.ranking_key not in RANKING_KEYS:
            raise SpecError(f"ranking_key must be one of {RANKING_KEYS}, got {self.ranking_key!r}")
        object.__setattr__(self, "rows", tuple(sorted(self.rows, key=self._sort_key)))

    def _sort_key(self, row: EvaluationRow):
        value = getattr(row, self.ranking_key)
        bad = row.failed or not np.isfinite(value)
        return (bad, value if np.isfinite(value) else 0.0)

    @property
    def best(self) -> EvaluationRow | None:
        head = self.rows[0] if self.rows else None
        if head is None or head.failed or not np.isfinite(getattr(head, self.ranking_key)):
            return None
        return head


def _evaluate_candidate(
    spec: SarimaSpec, train: TimeSeries, test: TimeSeries | None, seed: int
) -> EvaluationRow:
    """Fit one candidate and measure it; failures become rows, not exceptions."""
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            fit_result = fit(spec, train, seed=seed)
        train_mape = one_step_metrics(fit_result, train).mape
        test_mape = dynamic_metrics(fit_result, train, test).mape if test is not None else float("nan")
        return EvaluationRow(
            spec=spec,
            train_mape=train_mape,
            test_mape=test_mape,
            aic=fit_result.aic,
            bic=fit_result.bic,
            loglik=fit_result.loglik,
            converged=fit_result.converged,
        )
    except (NumericalError, InsufficientDataError, SpecError) as exc:
        nan = float("nan")
        return EvaluationRow(
            spec=spec,
            train_mape=nan,
            test_mape=nan,
            aic=nan,
            bic=nan,
            loglik=nan,
            converged=False,
            error=f"{type(exc).__name__}: {exc}",
        )


def evaluate_grid(
    series: TimeSeries,
    split_spec: SplitSpec,
    candidates: CandidateSet,
    seed: int = 0,
    jobs: int = 1,
    ranking_key: str = "test_mape",
) -> RankedResults:
    """Fit every candidate on the train side and rank by holdout accuracy.

    With ``jobs > 1`` candidates are fitted in parallel processes; results
    are aggregated in submission order, so the ranking is identical either
    way.
    """
    train, test = split(series, split_spec)
    specs = list(candidates.specs)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_evaluate_candidate, specs, [train] * len(specs),
                                 [test] * len(specs), [seed] * len(specs)))
    else:
        rows = [_evaluate_candidate(spec, train, test, seed) for spec in specs]
    return RankedResults(rows=tuple(rows), ranking_key=ranking_key)


@dataclass(frozen=True)
class StepwiseConfig:
    """Caps and fixed orders for the stepwise search."""

    max_p: int = 5
    max_q: int = 5
    max_P: int = 2
    max_Q: int = 2
    s: int = 7
    seasonal: bool = True
    d: int | None = None
    D: int = 0
    max_steps: int = 50

    def __post_init__(self) -> None:
        if min(self.max_p, self.max_q, self.max_P, self.max_Q) < 0:
            raise SpecError("stepwise caps must be non-negative")
        if self.s < 1:
            raise SpecError(f"seasonal period must be >= 1, got {self.s}")
        if self.d is not None and not 0 <= self.d <= 2:
            raise SpecError(f"d must be in 0..2, got {self.d}")
        if not 0 <= self.D <= 1:
            raise SpecError(f"D must be 0 or 1, got {self.D}")


def stepwise_search(
    series: TimeSeries, config: StepwiseConfig = StepwiseConfig(), seed: int = 0
) -> RankedResults:
    """AIC hill climb over (p, q, P, Q) from a handful of canonical starts.

    ``d`` defaults to the unit-root recommendation on the given series.  The
    returned table ranks every spec the search visited; holdout accuracy is
    not computed here (test_mape is NaN), evaluate the winner separately.
    """
    if config.d is not None:
        d = config.d
    else:
        try:
            d = recommend_differencing(series, s=config.s).d
        except InsufficientDataError as exc:
            warnings.warn(f"differencing recommendation failed ({exc}); using d=2", stacklevel=2)
            d = 2
    seasonal = config.seasonal and config.s >= 2
    D = config.D if seasonal else 0

    def make_spec(p: int, q: int, P: int, Q: int) -> SarimaSpec:
        return SarimaSpec(p=p, d=d, q=q, P=P, D=D, Q=Q, s=config.s if seasonal else 1)

    def clamp(p: int, q: int, P: int, Q: int) -> bool:
        return (
            0 <= p <= config.max_p
            and 0 <= q <= config.max_q
            and 0 <= P <= (config.max_P if seasonal else 0)
            and 0 <= Q <= (config.max_Q if seasonal else 0)
        )

    starts = [(0, 0, 0, 0), (1, 0, 0, 0), (0, 1, 0, 0), (2, 2, 0, 0)]
    if seasonal:
        starts += [(1, 0, 1, 0), (0, 1, 0, 1), (2, 2, 1, 1)]
    starts = [c for c in starts if clamp(*c)]

    visited: dict[tuple[int, int, int, int], EvaluationRow] = {}

    def evaluate(coords: tuple[int, int, int, int]) -> EvaluationRow:
        if coords not in visited:
            visited[coords] = _evaluate_candidate(make_spec(*coords), series, None, seed)
        return visited[coords]

    for coords in starts:
        evaluate(coords)

    def aic_of(coords: tuple[int, int, int, int]) -> float:
        row = visited[coords]
        return row.aic if not row.failed and np.isfinite(row.aic) else np.inf

    current = min(visited, key=aic_of)
    for _ in range(config.max_steps):
        p, q, P, Q = current
        neighbors = [
            (p + dp, q + dq, P + dP, Q + dQ)
            for dp, dq, dP, dQ in (
                (1, 0, 0, 0), (-1, 0, 0, 0), (0, 1, 0, 0), (0, -1, 0, 0),
                (0, 0, 1, 0), (0, 0, -1, 0), (0, 0, 0, 1), (0, 0, 0, -1),
            )
            if clamp(p + dp, q + dq, P + dP, Q + dQ)
        ]
        for coords in neighbors:
            evaluate(coords)
        best_neighbor = min(neighbors, key=aic_of, default=None)
        if best_neighbor is None or aic_of(best_neighbor) >= aic_of(current) - 1e-9:
            break
        current = best_neighbor

    rows = tuple(visited.values())
    if all(row.failed for row in rows):
        raise NumericalError("stepwise search: no candidate could be fitted")
    return RankedResults(rows=rows, ranking_key="aic")
