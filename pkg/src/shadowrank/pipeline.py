"""Offline training and online serving of price-adjusted rankings.

Offline: solve every training user's dual exactly, remember the prices,
tune the tie-break factor, fit a predictor.  Online: look up (or average)
prices in microseconds, adjust scores, sort.  The four serving strategies
differ only in where the prices come from:

    NO_OPT   zeros (unconstrained baseline)
    MEAN     average of the training prices
    KNN      inverse-distance average of nearest training users
    OPTIMAL  solve the dual live per request (the latency ceiling)

Per-request latency is measured around price lookup + scoring + assignment
only; compliance evaluation and any I/O sit outside the timed section.
"""

from __future__ import annotations

import enum
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .assignment import InfeasibleError
from .dual import (
    DEFAULT_EPSILON_GRID,
    ComplianceReport,
    DualConfig,
    _inner_argmax,
    solve_dual,
    tune_epsilon,
)
from .predictor import LambdaPredictor, PredictorKind, fit, predict
from .problem import (
    DEFAULT_TOL,
    Assignment,
    ConstraintSpec,
    DiscountVector,
    RankingInstance,
    constraint_attainment,
    normalize_constraints,
    raw_utility,
)

__all__ = [
    "Strategy",
    "PredictorConfig",
    "TrainedArtifact",
    "StrategyResult",
    "EvaluationReport",
    "offline_train",
    "online_rank",
    "evaluate",
]

logger = logging.getLogger(__name__)

ARTIFACT_FORMAT_VERSION = 1


class Strategy(enum.Enum):
    NO_OPT = "no_opt"
    MEAN = "mean"
    KNN = "knn"
    OPTIMAL = "optimal"


@dataclass(frozen=True)
class PredictorConfig:
    kind: PredictorKind = PredictorKind.KNN
    k: int = 10
    standardize: bool = False


@dataclass(frozen=True)
class TrainedArtifact:
    """Everything the online path needs, plus training provenance.

    ``constraints`` is the canonical constraint template shared by the
    population (per-request overrides are possible at the API level but a
    trained artifact serves one template).  ``train_lambdas`` has one row
    per successfully solved training user.
    """

    gamma: DiscountVector
    constraints: tuple[ConstraintSpec, ...]
    item_count: int
    covariate_dim: int
    predictor: LambdaPredictor
    epsilon: float
    train_lambdas: np.ndarray
    train_covariates: np.ndarray  # raw, pre-standardization
    mean_lambda: np.ndarray
    skipped_users: tuple[str, ...]
    dual_config: DualConfig
    predictor_config: PredictorConfig
    format_version: int = ARTIFACT_FORMAT_VERSION

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    @property
    def rank_count(self) -> int:
        return len(self.gamma)

    def make_instance(self, user_id: str, u, covariates) -> RankingInstance:
        """Build a canonical instance for this artifact's template."""
        return RankingInstance(
            u=u,
            gamma=self.gamma,
            constraints=self.constraints,
            user_id=user_id,
            covariates=covariates,
        )


@dataclass(frozen=True)
class StrategyResult:
    strategy: Strategy
    n_users: int
    compliance_probability: float
    mean_utility: float
    latency_p50_ms: float
    latency_p95_ms: float
    latency_p99_ms: float
    latency_max_ms: float

    def __post_init__(self):
        lats = (
            self.latency_p50_ms,
            self.latency_p95_ms,
            self.latency_p99_ms,
            self.latency_max_ms,
        )
        if any(v < 0 for v in lats):
            raise ValueError("negative latency")
        if any(a > b + 1e-12 for a, b in zip(lats, lats[1:])):
            raise ValueError("latency percentiles out of order")
        if not 0.0 <= self.compliance_probability <= 1.0:
            raise ValueError("compliance probability outside [0, 1]")


@dataclass(frozen=True)
class EvaluationReport:
    rows: tuple[StrategyResult, ...]
    repeats: int
    failures: tuple[tuple[str, str, str], ...] = ()  # (user_id, strategy, error)


def _check_population(instances: list[RankingInstance]):
    first = instances[0]
    for inst in instances[1:]:
        if inst.m1 != first.m1 or inst.m2 != first.m2:
            raise ValueError("population must share catalog size and rank count")
        if inst.num_constraints != first.num_constraints:
            raise ValueError("population must share the constraint count")
        if inst.covariates.size != first.covariates.size:
            raise ValueError("population must share the covariate dimension")


def offline_train(
    train_set,
    dual_config: DualConfig | None = None,
    predictor_config: PredictorConfig | None = None,
    epsilon_grid=DEFAULT_EPSILON_GRID,
) -> TrainedArtifact:
    """Solve the training population and package the serving state.

    Users whose dual diverges (no compliant assignment exists) are skipped
    with a warning and listed in the artifact.  Raises InfeasibleError if
    nobody survives.
    """
    dual_config = dual_config or DualConfig()
    predictor_config = predictor_config or PredictorConfig()
    instances = [normalize_constraints(i) for i in train_set]
    if not instances:
        raise ValueError("empty training set")
    _check_population(instances)

    solved: list[RankingInstance] = []
    lambdas: list[np.ndarray] = []
    skipped: list[str] = []
    for inst in instances:
        prices = solve_dual(inst, dual_config)
        if prices.infeasible_flag:
            logger.warning("skipping infeasible training user %r", inst.user_id)
            skipped.append(inst.user_id)
            continue
        solved.append(inst)
        lambdas.append(prices.lam)
    if not solved:
        raise InfeasibleError("every training user is infeasible")

    train_lambdas = np.vstack(lambdas)
    epsilon = tune_epsilon(solved, lambdas, epsilon_grid)

    train_x = np.vstack([inst.covariates for inst in solved])
    k = min(predictor_config.k, len(solved))
    if k < predictor_config.k:
        logger.warning(
            "k clamped from %d to %d (only %d solved users)",
            predictor_config.k,
            k,
            len(solved),
        )
    predictor = fit(
        predictor_config.kind,
        train_x,
        train_lambdas,
        k=k,
        standardize=predictor_config.standardize,
    )

    return TrainedArtifact(
        gamma=instances[0].gamma,
        constraints=instances[0].constraints,
        item_count=instances[0].m1,
        covariate_dim=instances[0].covariates.size,
        predictor=predictor,
        epsilon=epsilon,
        train_lambdas=train_lambdas,
        train_covariates=train_x,
        mean_lambda=train_lambdas.mean(axis=0),
        skipped_users=tuple(skipped),
        dual_config=dual_config,
        predictor_config=predictor_config,
    )


def _prices_for(artifact: TrainedArtifact, instance: RankingInstance, strategy: Strategy):
    if strategy is Strategy.NO_OPT:
        return np.zeros(artifact.num_constraints)
    if strategy is Strategy.MEAN:
        return artifact.mean_lambda
    if strategy is Strategy.KNN:
        return predict(artifact.predictor, instance.covariates)
    if strategy is Strategy.OPTIMAL:
        return solve_dual(instance, artifact.dual_config).lam
    raise ValueError(f"unknown strategy: {strategy!r}")


def online_rank(
    artifact: TrainedArtifact,
    instance: RankingInstance,
    strategy: Strategy = Strategy.KNN,
) -> tuple[Assignment, ComplianceReport, float]:
    """Serve one request.  Returns (assignment, compliance, latency_ms).

    The timed section is exactly price lookup + scoring + assignment.
    """
    instance = normalize_constraints(instance)
    if instance.num_constraints != artifact.num_constraints:
        raise ValueError(
            f"instance has {instance.num_constraints} constraints, "
            f"artifact expects {artifact.num_constraints}"
        )

    t0 = time.perf_counter()
    lam = _prices_for(artifact, instance, strategy)
    assignment = _inner_argmax(instance, lam, artifact.epsilon)
    latency_ms = (time.perf_counter() - t0) * 1e3

    slack = constraint_attainment(instance, assignment.item_at_rank) - instance.bounds
    report = ComplianceReport(
        slack=slack,
        compliant=bool((slack >= -DEFAULT_TOL).all()),
        utility=raw_utility(instance, assignment.item_at_rank),
    )
    return assignment, report, latency_ms


def evaluate(
    artifact: TrainedArtifact,
    test_set,
    strategies=(Strategy.NO_OPT, Strategy.MEAN, Strategy.KNN, Strategy.OPTIMAL),
    repeats: int = 3,
) -> EvaluationReport:
    """Benchmark strategies on held-out users.

    Per user and strategy: one untimed warm-up call, then ``repeats`` timed
    calls; percentiles pool all timed samples for the strategy.  Compliance
    and utility come from the (deterministic) ranked output.  A user that
    raises is recorded as a failure and excluded from that strategy's
    aggregates rather than aborting the run.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    instances = [normalize_constraints(i) for i in test_set]
    if not instances:
        raise ValueError("empty test set")
    rows = []
    failures = []
    for strategy in strategies:
        latencies: list[float] = []
        compliant = 0
        utilities: list[float] = []
        for inst in instances:
            try:
                online_rank(artifact, inst, strategy)  # warm-up, timing discarded
                report = None
                for _ in range(repeats):
                    _, report, ms = online_rank(artifact, inst, strategy)
                    latencies.append(ms)
            except Exception as exc:  # noqa: BLE001 - per-user fault isolation
                failures.append((inst.user_id, strategy.value, str(exc)))
                continue
            compliant += int(report.compliant)
            utilities.append(report.utility)
        if not utilities:
            raise InfeasibleError(f"no user evaluable under {strategy.value}")
        lat = np.asarray(latencies)
        p50, p95, p99 = np.percentile(lat, [50, 95, 99])
        rows.append(
            StrategyResult(
                strategy=strategy,
                n_users=len(utilities),
                compliance_probability=compliant / len(utilities),
                mean_utility=float(np.mean(utilities)),
                latency_p50_ms=float(p50),
                latency_p95_ms=float(p95),
                latency_p99_ms=float(p99),
                latency_max_ms=float(lat.max()),
            )
        )
    return EvaluationReport(rows=tuple(rows), repeats=repeats, failures=tuple(failures))
