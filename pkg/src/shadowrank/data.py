"""Dataset and artifact files, and the synthetic population generator.

A dataset file is one self-describing JSON document: a header fixing the
problem shape (m1, m2, constraint table, discount spec), then per-user
records (utilities, covariates, optional per-user constraint overrides).
Derived quantities are never stored; loaders rebuild instances and
canonicalize.  Writers are deterministic: the same in-memory value always
produces byte-identical files.

The generator builds topic-exposure populations with a known structure
linking covariates to prices:

    CLUSTERED  users fall into clusters with distinct topic preferences;
               covariates reveal the cluster
    LINEAR     preferences drift along one direction in covariate space
    CONSTANT   identical preference law for everyone; covariates are noise

Bounds are calibrated so a target fraction of users violates at least one
constraint at their unconstrained optimum, while every user keeps at least
one compliant assignment (checked constructively).
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .dual import DualConfig
from .pipeline import PredictorConfig, TrainedArtifact
from .predictor import PredictorKind, fit
from .problem import (
    BoundKind,
    ConstraintSpec,
    DiscountVector,
    RankingInstance,
    Sense,
    normalize_constraints,
)

__all__ = [
    "DATASET_FORMAT_VERSION",
    "DataFormatError",
    "InfeasibleConfigError",
    "ConstraintRecord",
    "UserRecord",
    "Dataset",
    "read_dataset",
    "write_dataset",
    "load_dataset",
    "LambdaLaw",
    "SynthConfig",
    "synth_generate",
    "save_artifact",
    "load_artifact",
]

DATASET_FORMAT_VERSION = 1
ARTIFACT_FORMAT_VERSION = 1

_DATASET_TAG = "shadowrank-dataset"
_ARTIFACT_TAG = "shadowrank-artifact"


class DataFormatError(ValueError):
    """A file failed validation; the message carries the location."""


class InfeasibleConfigError(RuntimeError):
    """The generator cannot satisfy the requested configuration."""


# ---------------------------------------------------------------------------
# dataset container


@dataclass(frozen=True)
class ConstraintRecord:
    label: str
    sense: str  # "ge" | "le"
    bound: float
    bound_kind: str  # "absolute" | "fraction_of_total_exposure"
    a: tuple[float, ...]


@dataclass(frozen=True)
class UserRecord:
    user_id: str
    u: tuple[float, ...]
    covariates: tuple[float, ...]
    a_overrides: dict[int, tuple[float, ...]] = field(default_factory=dict)


@dataclass(frozen=True)
class Dataset:
    m1: int
    m2: int
    gamma: str | tuple[float, ...]  # "dcg" or explicit discounts
    constraints: tuple[ConstraintRecord, ...]
    users: tuple[UserRecord, ...]
    meta: dict = field(default_factory=dict)
    format_version: int = DATASET_FORMAT_VERSION

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    @property
    def covariate_dim(self) -> int:
        return len(self.users[0].covariates) if self.users else 0

    def discount_vector(self) -> DiscountVector:
        if self.gamma == "dcg":
            return DiscountVector.dcg(self.m2)
        return DiscountVector(np.asarray(self.gamma, dtype=np.float64))

    def instances(self) -> list[RankingInstance]:
        """Canonical instances, ordered by user_id."""
        gamma = self.discount_vector()
        base = [
            ConstraintSpec(
                a=np.asarray(c.a, dtype=np.float64),
                sense=Sense(c.sense),
                bound=c.bound,
                bound_kind=BoundKind(c.bound_kind),
                label=c.label,
            )
            for c in self.constraints
        ]
        out = []
        for rec in sorted(self.users, key=lambda r: r.user_id):
            cons = list(base)
            for idx, a in rec.a_overrides.items():
                c = base[idx]
                cons[idx] = ConstraintSpec(
                    a=np.asarray(a, dtype=np.float64),
                    sense=c.sense,
                    bound=c.bound,
                    bound_kind=c.bound_kind,
                    label=c.label,
                )
            inst = RankingInstance(
                u=np.asarray(rec.u, dtype=np.float64),
                gamma=gamma,
                constraints=tuple(cons),
                user_id=rec.user_id,
                covariates=np.asarray(rec.covariates, dtype=np.float64),
            )
            out.append(normalize_constraints(inst))
        return out


# ---------------------------------------------------------------------------
# parsing helpers


def _need(obj: dict, key: str, where: str):
    if key not in obj:
        raise DataFormatError(f"{where}: missing field {key!r}")
    return obj[key]


def _need_int(obj: dict, key: str, where: str) -> int:
    val = _need(obj, key, where)
    if not isinstance(val, int) or isinstance(val, bool):
        raise DataFormatError(f"{where}.{key}: expected an integer, got {val!r}")
    return val


def _float_list(val, n: int | None, where: str) -> tuple[float, ...]:
    if not isinstance(val, list):
        raise DataFormatError(f"{where}: expected a list")
    out = []
    for i, x in enumerate(val):
        if not isinstance(x, (int, float)) or isinstance(x, bool) or not math.isfinite(x):
            raise DataFormatError(f"{where}[{i}]: expected a finite number, got {x!r}")
        out.append(float(x))
    if n is not None and len(out) != n:
        raise DataFormatError(f"{where}: expected {n} values, got {len(out)}")
    return tuple(out)


def _parse_dataset(doc, where: str = "dataset") -> Dataset:
    if not isinstance(doc, dict):
        raise DataFormatError(f"{where}: expected a JSON object")
    if doc.get("format") != _DATASET_TAG:
        raise DataFormatError(f"{where}: not a {_DATASET_TAG} file")
    version = _need_int(doc, "format_version", where)
    if version != DATASET_FORMAT_VERSION:
        raise DataFormatError(
            f"{where}: unknown format_version {version} (supported: {DATASET_FORMAT_VERSION})"
        )
    m1 = _need_int(doc, "m1", where)
    m2 = _need_int(doc, "m2", where)
    if not 1 <= m2 <= m1:
        raise DataFormatError(f"{where}: need 1 <= m2 <= m1, got m1={m1} m2={m2}")

    gamma_spec = _need(doc, "gamma", where)
    if gamma_spec == "dcg":
        gamma: str | tuple[float, ...] = "dcg"
    else:
        gamma = _float_list(gamma_spec, m2, f"{where}.gamma")

    cons = []
    raw_cons = _need(doc, "constraints", where)
    if not isinstance(raw_cons, list):
        raise DataFormatError(f"{where}.constraints: expected a list")
    for k, rc in enumerate(raw_cons):
        loc = f"{where}.constraints[{k}]"
        if not isinstance(rc, dict):
            raise DataFormatError(f"{loc}: expected an object")
        sense = _need(rc, "sense", loc)
        if sense not in ("ge", "le"):
            raise DataFormatError(f"{loc}.sense: expected 'ge' or 'le', got {sense!r}")
        kind = _need(rc, "bound_kind", loc)
        if kind not in ("absolute", "fraction_of_total_exposure"):
            raise DataFormatError(f"{loc}.bound_kind: got {kind!r}")
        bound = _need(rc, "bound", loc)
        if not isinstance(bound, (int, float)) or isinstance(bound, bool) or not math.isfinite(bound):
            raise DataFormatError(f"{loc}.bound: expected a finite number")
        if kind == "fraction_of_total_exposure" and not 0.0 <= bound <= 1.0:
            raise DataFormatError(f"{loc}.bound: fractional bound must lie in [0, 1]")
        cons.append(
            ConstraintRecord(
                label=str(rc.get("label", f"c{k}")),
                sense=sense,
                bound=float(bound),
                bound_kind=kind,
                a=_float_list(_need(rc, "a", loc), m1, f"{loc}.a"),
            )
        )

    users = []
    seen_ids = set()
    raw_users = _need(doc, "users", where)
    if not isinstance(raw_users, list):
        raise DataFormatError(f"{where}.users: expected a list")
    cov_dim = None
    for i, ru in enumerate(raw_users):
        loc = f"{where}.users[{i}]"
        if not isinstance(ru, dict):
            raise DataFormatError(f"{loc}: expected an object")
        user_id = _need(ru, "user_id", loc)
        if not isinstance(user_id, str) or not user_id:
            raise DataFormatError(f"{loc}.user_id: expected a non-empty string")
        if user_id in seen_ids:
            raise DataFormatError(f"{loc}.user_id: duplicate {user_id!r}")
        seen_ids.add(user_id)
        covs = _float_list(_need(ru, "covariates", loc), None, f"{loc}.covariates")
        if cov_dim is None:
            cov_dim = len(covs)
        elif len(covs) != cov_dim:
            raise DataFormatError(
                f"{loc}.covariates: expected {cov_dim} values, got {len(covs)}"
            )
        overrides = {}
        for key, val in (ru.get("a_overrides") or {}).items():
            try:
                idx = int(key)
            except ValueError:
                raise DataFormatError(f"{loc}.a_overrides: bad constraint index {key!r}")
            if not 0 <= idx < len(cons):
                raise DataFormatError(f"{loc}.a_overrides: constraint index {idx} out of range")
            overrides[idx] = _float_list(val, m1, f"{loc}.a_overrides[{key}]")
        users.append(
            UserRecord(
                user_id=user_id,
                u=_float_list(_need(ru, "u", loc), m1, f"{loc}.u"),
                covariates=covs,
                a_overrides=overrides,
            )
        )

    meta = doc.get("meta") or {}
    if not isinstance(meta, dict):
        raise DataFormatError(f"{where}.meta: expected an object")
    return Dataset(
        m1=m1,
        m2=m2,
        gamma=gamma,
        constraints=tuple(cons),
        users=tuple(users),
        meta=meta,
        format_version=version,
    )


def read_dataset(path) -> Dataset:
    """Parse and validate a dataset file."""
    with open(path, "r", encoding="utf-8") as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as exc:
            raise DataFormatError(
                f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
            ) from exc
    return _parse_dataset(doc, where=str(path))


def _dataset_doc(ds: Dataset) -> dict:
    return {
        "format": _DATASET_TAG,
        "format_version": ds.format_version,
        "m1": ds.m1,
        "m2": ds.m2,
        "gamma": ds.gamma if ds.gamma == "dcg" else list(ds.gamma),
        "constraints": [
            {
                "label": c.label,
                "sense": c.sense,
                "bound": c.bound,
                "bound_kind": c.bound_kind,
                "a": list(c.a),
            }
            for c in ds.constraints
        ],
        "users": [
            {
                "user_id": u.user_id,
                "u": list(u.u),
                "covariates": list(u.covariates),
                **(
                    {"a_overrides": {str(k): list(v) for k, v in sorted(u.a_overrides.items())}}
                    if u.a_overrides
                    else {}
                ),
            }
            for u in ds.users
        ],
        "meta": ds.meta,
    }


def write_dataset(ds: Dataset, path) -> None:
    """Write a dataset file.  Deterministic: same value, same bytes."""
    with open(path, "w", encoding="utf-8") as f:
        json.dump(_dataset_doc(ds), f, sort_keys=True, separators=(",", ":"))
        f.write("\n")


def load_dataset(path) -> list[RankingInstance]:
    """Read a dataset file into canonical instances ordered by user_id."""
    return read_dataset(path).instances()


# ---------------------------------------------------------------------------
# synthetic populations


class LambdaLaw(enum.Enum):
    CLUSTERED = "clustered"
    LINEAR = "linear"
    CONSTANT = "constant"


@dataclass(frozen=True)
class SynthConfig:
    seed: int
    n_users: int
    m1: int
    m2: int
    num_constraints: int
    covariate_dim: int
    lambda_law: LambdaLaw = LambdaLaw.CLUSTERED
    binding_fraction: float = 0.5

    def __post_init__(self):
        if self.n_users < 1:
            raise InfeasibleConfigError("need at least one user")
        if not 1 <= self.m2 <= self.m1:
            raise InfeasibleConfigError(f"need 1 <= m2 <= m1, got {self.m1}, {self.m2}")
        if self.num_constraints < 1 or self.covariate_dim < 1:
            raise InfeasibleConfigError("need at least one constraint and one covariate")
        if self.m1 < 4 * (self.num_constraints + 1):
            raise InfeasibleConfigError(
                f"m1={self.m1} too small for {self.num_constraints} topics "
                f"(need >= {4 * (self.num_constraints + 1)})"
            )
        if not 0.0 <= self.binding_fraction < 1.0:
            raise InfeasibleConfigError("binding_fraction must lie in [0, 1)")
        if not isinstance(self.lambda_law, LambdaLaw):
            object.__setattr__(self, "lambda_law", LambdaLaw(self.lambda_law))


def _topic_assignment(rng, m1: int, K: int) -> np.ndarray:
    """Item -> topic in 0..K (0 = untopiced); each topic gets the same count."""
    per = max(2, m1 // (2 * K + 2))
    topics = np.zeros(m1, dtype=np.int64)
    topics[: per * K] = np.repeat(np.arange(1, K + 1), per)
    return rng.permutation(topics)


def _unconstrained_exposure(u_rows, topics, K, gamma) -> np.ndarray:
    """Per-user fraction of exposure each topic gets at the unconstrained opt."""
    n, m1 = u_rows.shape
    m2 = gamma.size
    top = np.argsort(-u_rows, axis=1, kind="stable")[:, :m2]
    total = gamma.sum()
    frac = np.empty((n, K))
    topic_at_rank = topics[top]  # n x m2
    for k in range(K):
        frac[:, k] = ((topic_at_rank == k + 1) * gamma).sum(axis=1) / total
    return frac


def _pick_bound(e: np.ndarray, is_bound: np.ndarray, need: int, cap: float):
    """Threshold binding as close to `need` not-yet-bound users as possible.

    Thresholds sit halfway between adjacent distinct exposure values, so
    point masses (whole clusters with identical exposure, or the users with
    no topic item ranked at all) bind atomically.  Returns (threshold,
    newly_bound); (0.0, 0) when nothing admissible binds anyone.
    """
    n = e.size
    order = np.argsort(e, kind="stable")
    es = e[order]
    new_prefix = np.cumsum(~is_bound[order])
    under_b, under_n = 0.0, 0
    over_b, over_n = None, -1
    for j in range(1, n + 1):
        if j < n and es[j] - es[j - 1] <= 1e-12:
            continue  # inside an atom; no threshold fits here
        b = 0.5 * (es[j - 1] + es[j]) if j < n else es[-1] * 1.05 + 1e-3
        if b >= cap:
            jcap = int(np.searchsorted(es, cap - 1e-12, side="left"))
            newly = int(new_prefix[jcap - 1]) if jcap >= 1 else 0
            if newly >= need:
                over_b, over_n = cap, newly
            elif newly > under_n:
                under_b, under_n = cap, newly
            break  # larger thresholds are all capped to the same place
        newly = int(new_prefix[j - 1])
        if newly >= need:
            over_b, over_n = b, newly  # smallest overshoot; stop here
            break
        if newly > under_n:
            under_b, under_n = b, newly
    if over_b is not None and over_n - need < need - under_n:
        return over_b, over_n
    return under_b, under_n


def _certify_feasible(bounds_abs, topics, K, gamma) -> bool:
    """Constructively check one compliant assignment exists: spend the best
    ranks on whichever topic still has the largest residual demand."""
    counts = np.array([(topics == k + 1).sum() for k in range(K)])
    residual = bounds_abs.copy()
    left = counts.copy()
    for g in gamma:
        k = int(np.argmax(residual))
        if residual[k] <= 1e-12:
            continue  # demands met; remaining ranks are free
        if left[k] == 0:
            # largest demand unservable; try the largest servable one
            order = np.argsort(-residual)
            k = next((int(kk) for kk in order if residual[kk] > 1e-12 and left[kk] > 0), -1)
            if k < 0:
                return False
        residual[k] -= g
        left[k] -= 1
    return bool((residual <= 1e-12).all())


def synth_generate(config: SynthConfig) -> Dataset:
    """Generate a population with calibrated binding constraints.

    Deterministic in the seed.  Raises InfeasibleConfigError when the
    target binding fraction cannot be approached (within 0.15) while every
    user keeps a compliant assignment.
    """
    rng = np.random.default_rng(config.seed)
    n, m1, m2, K, d = (
        config.n_users,
        config.m1,
        config.m2,
        config.num_constraints,
        config.covariate_dim,
    )
    gamma = DiscountVector.dcg(m2).gamma
    topics = _topic_assignment(rng, m1, K)

    law = config.lambda_law
    if law is LambdaLaw.CLUSTERED:
        # Cluster c dislikes topic (c mod K) + 1: that topic's items sink at
        # lambda = 0, so cluster members need that topic's price high.  Each
        # cluster fixes one multiset of utilities; members get the values
        # shuffled within each topic group.  Rankings differ user to user,
        # but score order statistics (hence the price kink) are identical
        # across the cluster, so the price is a function of the covariates.
        n_clusters = max(6, 2 * K)
        cluster = rng.integers(0, n_clusters, size=n)
        centers = rng.normal(0.0, 2.0, size=(n_clusters, d))
        x = centers[cluster] + rng.normal(0.0, 0.35, size=(n, d))
        base = rng.uniform(1.0, 5.0, size=(n_clusters, m1))
        cluster_drop = rng.uniform(1.4, 2.4, size=n_clusters)
        for c in range(n_clusters):
            base[c, topics == (c % K) + 1] -= cluster_drop[c]
        base = np.clip(base, 0.05, 5.0)
        groups = [np.flatnonzero(topics == t) for t in range(K + 1)]
        u = np.empty((n, m1))
        for i in range(n):
            row = base[cluster[i]].copy()
            for g in groups:
                row[g] = row[g][rng.permutation(g.size)]
            u[i] = row
    elif law is LambdaLaw.LINEAR:
        u = rng.uniform(1.0, 5.0, size=(n, m1))
        t = rng.uniform(0.0, 1.0, size=n)
        direction = rng.normal(0.0, 1.0, size=d)
        direction /= np.linalg.norm(direction)
        x = np.outer(t * 4.0, direction) + rng.normal(0.0, 0.25, size=(n, d))
        # Dislike of topic 1 grows linearly along the covariate direction.
        # Kept shallow so unconstrained exposure still varies continuously.
        hit = topics == 1
        u[:, hit] -= (1.2 * t)[:, None]
    else:  # CONSTANT: identical law; covariates carry nothing
        u = rng.uniform(1.0, 5.0, size=(n, m1))
        x = rng.normal(0.0, 1.0, size=(n, d))
        drop = rng.uniform(0.2, 1.6, size=n)
        hit = topics == 1
        u[:, hit] -= drop[:, None]
    u = np.clip(u, 0.05, 5.0)

    # Calibrate fractional bounds: per topic in turn, pick the smallest
    # threshold that binds however many users the target still needs.
    exposure = _unconstrained_exposure(u, topics, K, gamma)
    total = gamma.sum()
    counts = np.array([(topics == k + 1).sum() for k in range(K)])
    max_frac = np.array(
        [gamma[: min(int(c), m2)].sum() / total for c in counts]
    )  # most exposure one topic can get
    cap = 0.90 * max_frac
    # Keep the sum of demands coverable with slack for discount decay.
    if cap.sum() > 0.85:
        cap *= 0.85 / cap.sum()

    def binding_at(b: np.ndarray) -> float:
        return float((exposure < b - 1e-12).any(axis=1).mean())

    bounds = np.zeros(K)
    is_bound = np.zeros(n, dtype=bool)
    target = int(round(config.binding_fraction * n))
    remaining = list(range(K))
    while remaining:
        need = target - int(is_bound.sum())
        if need <= 0:
            break
        # whichever topic can land nearest the remaining need goes next
        picks = {k: _pick_bound(exposure[:, k], is_bound, need, cap[k]) for k in remaining}
        k = min(remaining, key=lambda kk: abs(picks[kk][1] - need))
        bounds[k] = picks[k][0]
        is_bound |= exposure[:, k] < bounds[k] - 1e-12
        remaining.remove(k)

    # Shrink until every user has a compliant assignment by construction.
    for _ in range(25):
        if _certify_feasible(bounds * total, topics, K, gamma):
            break
        bounds = bounds * 0.93
    else:
        raise InfeasibleConfigError("could not certify feasibility for the population")

    achieved = binding_at(bounds)
    if abs(achieved - config.binding_fraction) > 0.15:
        raise InfeasibleConfigError(
            f"achieved binding fraction {achieved:.3f} too far from "
            f"target {config.binding_fraction:.3f}"
        )

    constraints = tuple(
        ConstraintRecord(
            label=f"topic_{k + 1}",
            sense="ge",
            bound=float(bounds[k]),
            bound_kind="fraction_of_total_exposure",
            a=tuple((topics == k + 1).astype(float).tolist()),
        )
        for k in range(K)
    )
    width = len(str(n - 1))
    users = tuple(
        UserRecord(
            user_id=f"u{idx:0{width}d}",
            u=tuple(np.round(u[idx], 9).tolist()),
            covariates=tuple(np.round(x[idx], 9).tolist()),
        )
        for idx in range(n)
    )
    meta = {
        "generator": "synth",
        "lambda_law": law.value,
        "seed": config.seed,
        "binding_fraction_target": config.binding_fraction,
        "binding_fraction_achieved": achieved,
    }
    return Dataset(
        m1=m1,
        m2=m2,
        gamma="dcg",
        constraints=constraints,
        users=users,
        meta=meta,
    )


# ---------------------------------------------------------------------------
# trained-artifact files


def _constraint_spec_doc(c: ConstraintSpec) -> dict:
    if not c.is_factored:
        raise DataFormatError("artifact files support factored constraints only")
    return {
        "label": c.label,
        "sense": c.sense.value,
        "bound": c.bound,
        "bound_kind": c.bound_kind.value,
        "a": c.a.tolist(),
    }


def save_artifact(artifact: TrainedArtifact, path) -> None:
    """Serialize a trained artifact.  The predictor is stored as its raw
    training data and refitted on load (deterministic)."""
    pred = artifact.predictor
    doc = {
        "format": _ARTIFACT_TAG,
        "format_version": artifact.format_version,
        "item_count": artifact.item_count,
        "covariate_dim": artifact.covariate_dim,
        "gamma": artifact.gamma.gamma.tolist(),
        "constraints": [_constraint_spec_doc(c) for c in artifact.constraints],
        "epsilon": artifact.epsilon,
        "train_lambdas": artifact.train_lambdas.tolist(),
        "train_covariates": artifact.train_covariates.tolist(),
        "skipped_users": list(artifact.skipped_users),
        "dual_config": asdict(artifact.dual_config),
        "predictor_config": {
            "kind": artifact.predictor_config.kind.value,
            "k": artifact.predictor_config.k,
            "standardize": artifact.predictor_config.standardize,
        },
        "predictor_k": pred.k,
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, sort_keys=True, separators=(",", ":"))
        f.write("\n")


def load_artifact(path) -> TrainedArtifact:
    with open(path, "r", encoding="utf-8") as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as exc:
            raise DataFormatError(
                f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
            ) from exc
    where = str(path)
    if not isinstance(doc, dict) or doc.get("format") != _ARTIFACT_TAG:
        raise DataFormatError(f"{where}: not a {_ARTIFACT_TAG} file")
    version = _need_int(doc, "format_version", where)
    if version != ARTIFACT_FORMAT_VERSION:
        raise DataFormatError(f"{where}: unknown format_version {version}")
    try:
        gamma = DiscountVector(np.asarray(doc["gamma"], dtype=np.float64))
        constraints = tuple(
            ConstraintSpec(
                a=np.asarray(c["a"], dtype=np.float64),
                sense=Sense(c["sense"]),
                bound=float(c["bound"]),
                bound_kind=BoundKind(c["bound_kind"]),
                label=str(c.get("label", "")),
            )
            for c in doc["constraints"]
        )
        dc = dict(doc["dual_config"])
        dual_config = DualConfig(**dc)
        pc = doc["predictor_config"]
        predictor_config = PredictorConfig(
            kind=PredictorKind(pc["kind"]),
            k=int(pc["k"]),
            standardize=bool(pc["standardize"]),
        )
        train_lambdas = np.asarray(doc["train_lambdas"], dtype=np.float64)
        if train_lambdas.ndim != 2:
            raise DataFormatError(f"{where}: train_lambdas must be 2-D")
        train_x = np.asarray(doc["train_covariates"], dtype=np.float64)
        if predictor_config.kind is PredictorKind.ZERO:
            predictor = fit(PredictorKind.ZERO, num_constraints=train_lambdas.shape[1])
        else:
            predictor = fit(
                predictor_config.kind,
                train_x,
                train_lambdas,
                k=int(doc.get("predictor_k", predictor_config.k)),
                standardize=predictor_config.standardize,
            )
        return TrainedArtifact(
            gamma=gamma,
            constraints=constraints,
            item_count=_need_int(doc, "item_count", where),
            covariate_dim=_need_int(doc, "covariate_dim", where),
            predictor=predictor,
            epsilon=float(doc["epsilon"]),
            train_lambdas=train_lambdas,
            train_covariates=train_x,
            mean_lambda=train_lambdas.mean(axis=0),
            skipped_users=tuple(doc["skipped_users"]),
            dual_config=dual_config,
            predictor_config=predictor_config,
            format_version=version,
        )
    except DataFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"{where}: malformed artifact: {exc}") from exc
