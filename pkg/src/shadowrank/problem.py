"""Data model for ranking under exposure constraints.

A ranking problem places ``m1`` candidate items into ``m2`` ranked slots
(``m1 >= m2``).  Value decays down the list according to a positive,
non-increasing discount vector ``gamma``, so the full item-by-rank weight
matrix is the outer product ``u gamma^T`` of per-item utilities and the
discounts, and never needs to be stored densely.  Auxiliary objectives
(topic exposure, provider share, ...) enter the same way: each constraint
carries a per-item utility vector ``a`` and a bound on the discount-weighted
total an assignment must attain.

Dense ``m1 x m2`` matrices are supported as an escape hatch for problems
whose weights do not factor (per-rank utilities, per-cell constraints).
Everything downstream treats the factored form as the fast path.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "DEFAULT_TOL",
    "BoundKind",
    "Sense",
    "MemoryBudgetExceeded",
    "DiscountVector",
    "ConstraintSpec",
    "RankingInstance",
    "Assignment",
    "ShadowPriceVector",
    "normalize_constraints",
    "score_vector",
    "materialize_weight_matrix",
    "constraint_attainment",
    "raw_utility",
]

# Comparison tolerance used everywhere a module does not override it.
DEFAULT_TOL = 1e-9

# materialize_weight_matrix refuses to allocate more cells than this
# unless the caller raises the cap explicitly.
DEFAULT_CELL_CAP = 50_000_000


class MemoryBudgetExceeded(RuntimeError):
    """Raised when materializing a dense matrix would exceed the cell cap."""


class Sense(enum.Enum):
    GE = "ge"
    LE = "le"


class BoundKind(enum.Enum):
    ABSOLUTE = "absolute"
    FRACTION_OF_TOTAL_EXPOSURE = "fraction_of_total_exposure"


def _as_float_vector(x, name: str, *, allow_empty: bool = False) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0 and not allow_empty:
        raise ValueError(f"{name} must be non-empty")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite entries")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


def _as_float_matrix(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be two-dimensional, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite entries")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class DiscountVector:
    """Positive, non-increasing per-rank discounts.

    The length of the vector is the number of ranked slots ``m2``.
    """

    gamma: np.ndarray

    def __post_init__(self):
        g = _as_float_vector(self.gamma, "gamma")
        if (g <= 0).any():
            raise ValueError("discounts must be strictly positive")
        if (np.diff(g) > DEFAULT_TOL).any():
            raise ValueError("discounts must be non-increasing")
        object.__setattr__(self, "gamma", g)

    @classmethod
    def dcg(cls, m2: int) -> "DiscountVector":
        """Standard DCG discounts 1/log2(j+1) for ranks j = 1..m2."""
        if m2 < 1:
            raise ValueError("need at least one rank")
        j = np.arange(1, m2 + 1, dtype=np.float64)
        return cls(1.0 / np.log2(j + 1.0))

    @property
    def total_exposure(self) -> float:
        """Sum of the discounts; the exposure mass one full ranking carries."""
        return float(self.gamma.sum())

    def __len__(self) -> int:
        return self.gamma.size


@dataclass(frozen=True)
class ConstraintSpec:
    """One auxiliary objective with a bound.

    ``a`` holds per-item auxiliary utilities; the constraint applies to the
    discount-weighted total sum_j a[item_at_rank[j]] * gamma[j].  ``dense_a``
    replaces the factored form with explicit per-cell values when needed;
    exactly one of the two must be given.

    FRACTION_OF_TOTAL_EXPOSURE bounds are relative to sum(gamma) and must
    lie in [0, 1]; they are resolved to absolute bounds by
    :func:`normalize_constraints`.
    """

    a: np.ndarray | None = None
    sense: Sense = Sense.GE
    bound: float = 0.0
    bound_kind: BoundKind = BoundKind.ABSOLUTE
    label: str = ""
    dense_a: np.ndarray | None = None

    def __post_init__(self):
        if (self.a is None) == (self.dense_a is None):
            raise ValueError("exactly one of a / dense_a must be given")
        if self.a is not None:
            object.__setattr__(self, "a", _as_float_vector(self.a, "a"))
        else:
            object.__setattr__(self, "dense_a", _as_float_matrix(self.dense_a, "dense_a"))
        if not isinstance(self.sense, Sense):
            raise ValueError(f"bad sense: {self.sense!r}")
        if not isinstance(self.bound_kind, BoundKind):
            raise ValueError(f"bad bound_kind: {self.bound_kind!r}")
        bound = float(self.bound)
        if not math.isfinite(bound):
            raise ValueError("bound must be finite")
        if self.bound_kind is BoundKind.FRACTION_OF_TOTAL_EXPOSURE and not (0.0 <= bound <= 1.0):
            raise ValueError("fractional bound must lie in [0, 1]")
        object.__setattr__(self, "bound", bound)

    @property
    def is_factored(self) -> bool:
        return self.a is not None


@dataclass(frozen=True)
class RankingInstance:
    """One user's ranking problem.

    ``u`` is the per-item utility vector (factored case); ``dense_u`` is the
    full item-by-rank matrix for problems that do not factor.  Exactly one of
    the two must be given.  ``gamma`` is always required: it defines the
    exposure notion fractional bounds refer to, and the factored fast path.
    """

    u: np.ndarray | None
    gamma: DiscountVector
    constraints: tuple[ConstraintSpec, ...] = ()
    user_id: str = ""
    covariates: np.ndarray = field(default_factory=lambda: np.zeros(0))
    dense_u: np.ndarray | None = None

    def __post_init__(self):
        if (self.u is None) == (self.dense_u is None):
            raise ValueError("exactly one of u / dense_u must be given")
        if self.u is not None:
            object.__setattr__(self, "u", _as_float_vector(self.u, "u"))
        else:
            object.__setattr__(self, "dense_u", _as_float_matrix(self.dense_u, "dense_u"))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        object.__setattr__(
            self, "covariates", _as_float_vector(self.covariates, "covariates", allow_empty=True)
        )
        if not isinstance(self.gamma, DiscountVector):
            object.__setattr__(self, "gamma", DiscountVector(self.gamma))
        m1, m2 = self.m1, self.m2
        if m2 > m1:
            raise ValueError(f"more ranks than items: m1={m1}, m2={m2}")
        if self.dense_u is not None and self.dense_u.shape != (m1, m2):
            raise ValueError(f"dense_u shape {self.dense_u.shape} != ({m1}, {m2})")
        for i, c in enumerate(self.constraints):
            if c.is_factored:
                if c.a.size != m1:
                    raise ValueError(f"constraint {i}: a has length {c.a.size}, expected {m1}")
            elif c.dense_a.shape != (m1, m2):
                raise ValueError(f"constraint {i}: dense_a shape {c.dense_a.shape} != ({m1}, {m2})")

    @property
    def m1(self) -> int:
        return self.u.size if self.u is not None else self.dense_u.shape[0]

    @property
    def m2(self) -> int:
        return len(self.gamma)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    @property
    def is_factored(self) -> bool:
        return self.u is not None and all(c.is_factored for c in self.constraints)

    @property
    def is_canonical(self) -> bool:
        """True when every constraint reads tr(A^T P) >= b with absolute b."""
        return all(
            c.sense is Sense.GE and c.bound_kind is BoundKind.ABSOLUTE for c in self.constraints
        )

    @property
    def bounds(self) -> np.ndarray:
        return np.array([c.bound for c in self.constraints], dtype=np.float64)


@dataclass(frozen=True)
class Assignment:
    """An injective map of ranks to items.

    ``item_at_rank[j]`` is the item placed at rank j.  ``total_weight`` is
    the assignment's value under whatever weight matrix produced it.  The
    optimality certificate (row_potentials per item, col_potentials per rank)
    is populated by backends that compute duals; potentials of unmatched
    items are zero.
    """

    item_at_rank: np.ndarray
    total_weight: float
    row_potentials: np.ndarray | None = None
    col_potentials: np.ndarray | None = None

    def __post_init__(self):
        sel = np.asarray(self.item_at_rank, dtype=np.int64)
        if sel.ndim != 1 or sel.size == 0:
            raise ValueError("item_at_rank must be a non-empty vector")
        if np.unique(sel).size != sel.size:
            raise ValueError("item_at_rank must be injective")
        if (sel < 0).any():
            raise ValueError("negative item index")
        sel = sel.copy()
        sel.flags.writeable = False
        object.__setattr__(self, "item_at_rank", sel)
        object.__setattr__(self, "total_weight", float(self.total_weight))
        for name in ("row_potentials", "col_potentials"):
            val = getattr(self, name)
            if val is not None:
                object.__setattr__(self, name, _as_float_vector(val, name))

    @property
    def m2(self) -> int:
        return self.item_at_rank.size


@dataclass(frozen=True)
class ShadowPriceVector:
    """Solved (or predicted) per-constraint prices plus solve diagnostics."""

    lam: np.ndarray
    dual_value: float
    iterations: int
    converged: bool
    infeasible_flag: bool
    iterates: tuple[np.ndarray, ...] | None = None

    def __post_init__(self):
        lam = _as_float_vector(self.lam, "lam", allow_empty=True)
        if (lam < 0).any():
            raise ValueError("shadow prices must be nonnegative")
        object.__setattr__(self, "lam", lam)


def normalize_constraints(instance: RankingInstance) -> RankingInstance:
    """Rewrite every constraint as tr(A^T P) >= b with an absolute bound.

    LE constraints are negated (a -> -a, b -> -b); fractional bounds are
    resolved against sum(gamma).  Idempotent: canonical instances come back
    unchanged (same object).
    """
    if instance.is_canonical:
        return instance
    total = instance.gamma.total_exposure
    out = []
    for c in instance.constraints:
        bound = c.bound
        if c.bound_kind is BoundKind.FRACTION_OF_TOTAL_EXPOSURE:
            bound = bound * total
        a, dense_a = c.a, c.dense_a
        if c.sense is Sense.LE:
            bound = -bound
            if a is not None:
                a = -a
            else:
                dense_a = -dense_a
        out.append(
            ConstraintSpec(
                a=a,
                sense=Sense.GE,
                bound=bound,
                bound_kind=BoundKind.ABSOLUTE,
                label=c.label,
                dense_a=dense_a,
            )
        )
    return replace(instance, constraints=tuple(out))


def _check_lam(instance: RankingInstance, lam) -> np.ndarray:
    lam = np.asarray(lam, dtype=np.float64).reshape(-1)
    if lam.size != instance.num_constraints:
        raise ValueError(
            f"got {lam.size} shadow prices for {instance.num_constraints} constraints"
        )
    if lam.size and not np.isfinite(lam).all():
        raise ValueError("shadow prices must be finite")
    return lam


def score_vector(
    instance: RankingInstance, lam, epsilon: float = 0.0
) -> np.ndarray:
    """Adjusted per-item scores u + (1 + epsilon) * sum_k lam_k a_k.

    Factored instances only; the adjusted weight matrix is then
    ``outer(score, gamma)`` and ranking reduces to sorting the scores.
    ``epsilon`` nudges argmax ties toward constraint compliance without
    changing the argmax otherwise (for small epsilon).
    """
    if not instance.is_factored:
        raise ValueError("score_vector needs a fully factored instance")
    lam = _check_lam(instance, lam)
    s = instance.u.astype(np.float64, copy=True)
    for coef, c in zip(lam, instance.constraints):
        if coef != 0.0:
            s += (1.0 + epsilon) * coef * c.a
    return s


def materialize_weight_matrix(
    instance: RankingInstance,
    lam,
    epsilon: float = 0.0,
    max_cells: int = DEFAULT_CELL_CAP,
) -> np.ndarray:
    """Dense m1 x m2 adjusted weights U + (1 + epsilon) * sum_k lam_k A_k.

    Factored parts contribute outer products with gamma.  Refuses to
    allocate more than ``max_cells`` cells.
    """
    lam = _check_lam(instance, lam)
    m1, m2 = instance.m1, instance.m2
    if m1 * m2 > max_cells:
        raise MemoryBudgetExceeded(f"{m1} x {m2} exceeds the {max_cells}-cell cap")
    gamma = instance.gamma.gamma
    factored_part = np.zeros(m1)
    if instance.u is not None:
        factored_part += instance.u
    dense = np.zeros((m1, m2))
    if instance.dense_u is not None:
        dense += instance.dense_u
    for coef, c in zip(lam, instance.constraints):
        if coef == 0.0:
            continue
        if c.is_factored:
            factored_part += (1.0 + epsilon) * coef * c.a
        else:
            dense += (1.0 + epsilon) * coef * c.dense_a
    if factored_part.any():
        dense += np.outer(factored_part, gamma)
    return dense


def _selection_value(vec_or_mat, gamma: np.ndarray, item_at_rank: np.ndarray) -> float:
    if vec_or_mat.ndim == 1:
        return float(vec_or_mat[item_at_rank] @ gamma)
    cols = np.arange(item_at_rank.size)
    return float(vec_or_mat[item_at_rank, cols].sum())


def constraint_attainment(instance: RankingInstance, item_at_rank) -> np.ndarray:
    """Per-constraint attained totals tr(A_k^T P) for the given assignment."""
    sel = np.asarray(item_at_rank, dtype=np.int64)
    if sel.size != instance.m2:
        raise ValueError(f"assignment has {sel.size} ranks, instance has {instance.m2}")
    gamma = instance.gamma.gamma
    out = np.empty(instance.num_constraints)
    for k, c in enumerate(instance.constraints):
        out[k] = _selection_value(c.a if c.is_factored else c.dense_a, gamma, sel)
    return out


def raw_utility(instance: RankingInstance, item_at_rank) -> float:
    """Unadjusted utility tr(U^T P) of the given assignment."""
    sel = np.asarray(item_at_rank, dtype=np.int64)
    if sel.size != instance.m2:
        raise ValueError(f"assignment has {sel.size} ranks, instance has {instance.m2}")
    return _selection_value(
        instance.u if instance.u is not None else instance.dense_u,
        instance.gamma.gamma,
        sel,
    )
