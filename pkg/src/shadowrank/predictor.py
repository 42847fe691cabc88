"""Price prediction from user covariates.

The online trick: instead of solving the dual per request, look the answer
up.  Offline, a population of users is solved exactly; online, a new user's
prices are an inverse-distance weighted average of the k nearest training
users' solved prices.  MEAN (population average) and ZERO (no adjustment)
are the baselines the KNN has to beat.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

__all__ = ["PredictorKind", "LambdaPredictor", "fit", "predict"]


class PredictorKind(enum.Enum):
    KNN = "knn"
    MEAN = "mean"
    ZERO = "zero"


@dataclass(frozen=True)
class LambdaPredictor:
    """Fitted predictor state.  Build with :func:`fit`."""

    kind: PredictorKind
    k: int = 10
    train_x: np.ndarray | None = None
    train_lambda: np.ndarray | None = None
    mean_lambda: np.ndarray | None = None
    num_constraints: int = 0
    standardize: bool = False
    shift: np.ndarray | None = None
    spread: np.ndarray | None = None


def fit(
    kind: PredictorKind,
    train_x=None,
    train_lambda=None,
    *,
    k: int = 10,
    standardize: bool = False,
    num_constraints: int | None = None,
) -> LambdaPredictor:
    """Fit a predictor on solved training prices.

    KNN and MEAN need (train_x, train_lambda); ZERO only needs the number
    of constraints (inferred from train_lambda when given).  KNN requires
    k >= 1 and k <= number of training rows.
    """
    if kind is PredictorKind.ZERO:
        if num_constraints is None:
            if train_lambda is None:
                raise ValueError("ZERO needs num_constraints or train_lambda")
            num_constraints = np.asarray(train_lambda).shape[1]
        return LambdaPredictor(kind=kind, num_constraints=int(num_constraints))

    if train_x is None or train_lambda is None:
        raise ValueError(f"{kind.value} needs train_x and train_lambda")
    x = np.asarray(train_x, dtype=np.float64)
    lam = np.asarray(train_lambda, dtype=np.float64)
    if x.ndim != 2 or lam.ndim != 2:
        raise ValueError("train_x and train_lambda must be 2-D (rows = users)")
    if x.shape[0] != lam.shape[0]:
        raise ValueError(f"{x.shape[0]} covariate rows vs {lam.shape[0]} price rows")
    if x.shape[0] == 0:
        raise ValueError("need at least one training row")
    if not (np.isfinite(x).all() and np.isfinite(lam).all()):
        raise ValueError("non-finite training data")
    if (lam < 0).any():
        raise ValueError("training prices must be nonnegative")

    shift = spread = None
    if standardize:
        shift = x.mean(axis=0)
        spread = x.std(axis=0)
        spread = np.where(spread > 0, spread, 1.0)
        x = (x - shift) / spread

    if kind is PredictorKind.KNN:
        if not 1 <= k <= x.shape[0]:
            raise ValueError(f"k={k} outside [1, {x.shape[0]}]")
    return LambdaPredictor(
        kind=kind,
        k=int(k),
        train_x=x,
        train_lambda=lam,
        mean_lambda=lam.mean(axis=0),
        num_constraints=lam.shape[1],
        standardize=standardize,
        shift=shift,
        spread=spread,
    )


def predict(model: LambdaPredictor, x) -> np.ndarray:
    """Predicted nonnegative price vector for one covariate vector."""
    if model.kind is PredictorKind.ZERO:
        return np.zeros(model.num_constraints)
    if model.kind is PredictorKind.MEAN:
        return model.mean_lambda.copy()

    q = np.asarray(x, dtype=np.float64).reshape(-1)
    if q.size != model.train_x.shape[1]:
        raise ValueError(f"query has {q.size} covariates, model expects {model.train_x.shape[1]}")
    if not np.isfinite(q).all():
        raise ValueError("non-finite query")
    if model.standardize:
        q = (q - model.shift) / model.spread

    diff = model.train_x - q
    dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    exact = dist == 0.0
    if exact.any():
        # Exact covariate hits: average their prices unweighted.
        return model.train_lambda[exact].mean(axis=0)
    kth = np.partition(dist, model.k - 1)[model.k - 1]
    mask = dist <= kth  # all ties at the k-th distance participate
    w = 1.0 / dist[mask]
    return (w @ model.train_lambda[mask]) / w.sum()
