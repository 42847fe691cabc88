"""Shadow prices by projected subgradient on the matching dual.

For a canonical instance (every constraint tr(A_k^T P) >= b_k) the dual
function is

    g(lam) = max_P tr((U + sum_k lam_k A_k)^T P) - lam . b,   lam >= 0,

a convex piecewise-linear function whose inner maximization is just an
assignment problem, so evaluating g costs one sort (factored case) or one
Hungarian solve.  A subgradient at lam is (tr(A_k^T P*) - b_k)_k for any
inner maximizer P*; the projected step lam <- clip(lam - eta * subgrad)
raises the price of violated constraints and relaxes satisfied ones.

Plain harmonic-step subgradient moves lam by about step_scale * ln(T) total,
which is far too slow to actually reach a distant kink or the lambda cap
within the iteration budget.  A coordinate bisection polish runs after the
main loop: per coordinate, the subgradient is non-decreasing in lam_k, so
its sign change brackets the kink to ~1e-12, and a coordinate whose
subgradient stays negative all the way to the cap is driven there, which is
what makes the cap a usable infeasibility signal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assignment import AssignStrategy, assign, hungarian_assign
from .problem import (
    DEFAULT_TOL,
    Assignment,
    RankingInstance,
    ShadowPriceVector,
    constraint_attainment,
    materialize_weight_matrix,
    raw_utility,
    score_vector,
)

__all__ = [
    "DEFAULT_EPSILON_GRID",
    "DualConfig",
    "ComplianceReport",
    "dual_value",
    "solve_dual",
    "rank_with_lambda",
    "tune_epsilon",
]

# 0 plus i * 10^-j for i in 1..9, j in 1..4, ascending.
DEFAULT_EPSILON_GRID: tuple[float, ...] = (0.0,) + tuple(
    sorted(i * 10.0**-j for j in range(1, 5) for i in range(1, 10))
)


@dataclass(frozen=True)
class DualConfig:
    """Knobs for solve_dual.

    step_schedule is "harmonic" (step_scale / t, default scale
    max(|b|_inf, 1)) or "polyak" ((g - best_feasible_value) / |subgrad|^2
    once a compliant inner solution has been seen, harmonic before that).
    Convergence: stop once the best dual value fails to improve by
    tolerance (relative) for `patience` consecutive iterations.
    """

    max_iterations: int = 5000
    tolerance: float = 1e-6
    patience: int = 50
    step_schedule: str = "harmonic"
    step_scale: float | None = None
    lambda_cap: float = 1e6
    polish: bool = True
    polish_sweeps: int = 2
    record_iterates: bool = False
    compliance_tol: float = DEFAULT_TOL

    def __post_init__(self):
        if self.step_schedule not in ("harmonic", "polyak"):
            raise ValueError(f"unknown step schedule: {self.step_schedule!r}")
        if self.max_iterations < 1 or self.patience < 1 or self.polish_sweeps < 0:
            raise ValueError("iteration counts must be positive")
        if self.lambda_cap <= 0:
            raise ValueError("lambda_cap must be positive")


@dataclass(frozen=True)
class ComplianceReport:
    """Slack per constraint (attained - bound), compliance flag, raw utility."""

    slack: np.ndarray
    compliant: bool
    utility: float

    def __post_init__(self):
        object.__setattr__(self, "slack", np.asarray(self.slack, dtype=np.float64))


def _require_canonical(instance: RankingInstance):
    if not instance.is_canonical:
        raise ValueError("instance must be canonical; run normalize_constraints first")


def _inner_argmax(instance: RankingInstance, lam, epsilon: float = 0.0) -> Assignment:
    """Maximize the adjusted weight tr(S_eps^T P) over assignments."""
    if instance.is_factored:
        s = score_vector(instance, lam, epsilon)
        return assign((s, instance.gamma), AssignStrategy.AUTO)
    w = materialize_weight_matrix(instance, lam, epsilon)
    if w.size <= 4096:
        # Skip the AUTO Monge probes: at this size Hungarian is cheaper
        # than the check, and solve_dual evaluates thousands of these.
        return hungarian_assign(w)
    return assign(w, AssignStrategy.AUTO)


def dual_value(instance: RankingInstance, lam) -> tuple[float, Assignment]:
    """g(lam) together with the inner maximizer that witnesses it."""
    _require_canonical(instance)
    lam = np.asarray(lam, dtype=np.float64).reshape(-1)
    inner = _inner_argmax(instance, lam, 0.0)
    g = inner.total_weight - float(lam @ instance.bounds) if lam.size else inner.total_weight
    return g, inner


def _eval_coord(instance, lam, k, x, b):
    trial = lam.copy()
    trial[k] = x
    g, inner = dual_value(instance, trial)
    att = constraint_attainment(instance, inner.item_at_rank)
    return g, att[k] - b[k]


def _polish(instance, lam, g_cur, config) -> tuple[np.ndarray, float]:
    """Coordinate-wise bisection on the subgradient sign.  Never worsens g."""
    b = instance.bounds
    cap = config.lambda_cap
    lam = lam.copy()
    for _ in range(config.polish_sweeps):
        for k in range(lam.size):
            g_lo, s_lo = _eval_coord(instance, lam, k, 0.0, b)
            if s_lo >= 0.0:
                cand, g_cand = 0.0, g_lo
            else:
                lo = 0.0
                hi = min(cap, max(1.0, 2.0 * lam[k]))
                g_hi, s_hi = _eval_coord(instance, lam, k, hi, b)
                while s_hi < 0.0 and hi < cap:
                    hi = min(2.0 * hi, cap)
                    g_hi, s_hi = _eval_coord(instance, lam, k, hi, b)
                if s_hi < 0.0:
                    # Still descending at the cap: recession direction.
                    # Take the cap only on a clear improvement so a
                    # boundary-degenerate but feasible coordinate is not
                    # flagged spuriously.
                    if g_hi < g_cur - 1e-9 * max(1.0, abs(g_cur)):
                        lam[k], g_cur = hi, g_hi
                    continue
                for _ in range(200):
                    if hi - lo <= 1e-12 * max(1.0, hi):
                        break
                    mid = 0.5 * (lo + hi)
                    g_mid, s_mid = _eval_coord(instance, lam, k, mid, b)
                    if s_mid < 0.0:
                        lo = mid
                    else:
                        hi, g_hi = mid, g_mid
                cand, g_cand = hi, g_hi
            if g_cand <= g_cur + 1e-12 * max(1.0, abs(g_cur)):
                lam[k] = cand
                g_cur = min(g_cur, g_cand)
    return lam, g_cur


def solve_dual(instance: RankingInstance, config: DualConfig | None = None) -> ShadowPriceVector:
    """Minimize g over lam >= 0; prices, diagnostics, optional iterate trail.

    Deterministic for a fixed instance and config.  infeasible_flag is set
    when some price ends at the cap, i.e. the dual kept descending along
    that coordinate, which certifies (numerically) that no compliant
    assignment exists.
    """
    config = config or DualConfig()
    _require_canonical(instance)
    K = instance.num_constraints
    if K == 0:
        g, _ = dual_value(instance, np.zeros(0))
        trail = (np.zeros(0),) if config.record_iterates else None
        return ShadowPriceVector(np.zeros(0), g, 0, True, False, trail)

    b = instance.bounds
    lam = np.zeros(K)
    trail = [lam.copy()] if config.record_iterates else None

    g0, inner0 = dual_value(instance, lam)
    att0 = constraint_attainment(instance, inner0.item_at_rank)
    if (att0 >= b - config.compliance_tol).all():
        # Unconstrained optimum already complies: lam = 0 is optimal.
        return ShadowPriceVector(
            lam, g0, 1, True, False, tuple(trail) if trail is not None else None
        )

    scale = config.step_scale
    if scale is None:
        scale = max(1.0, float(np.abs(b).max()))
    best_g, best_lam = g0, lam.copy()
    best_feasible = None
    stall = 0
    converged = False
    iterations = 0
    for t in range(1, config.max_iterations + 1):
        iterations = t
        g, inner = dual_value(instance, lam)
        att = constraint_attainment(instance, inner.item_at_rank)
        sub = att - b
        if g < best_g - config.tolerance * max(1.0, abs(best_g)):
            best_g, best_lam = g, lam.copy()
            stall = 0
        else:
            stall += 1
            if stall >= config.patience:
                converged = True
                break
        if not sub.any():
            converged = True  # exact zero subgradient certifies optimality
            break
        if (sub >= -config.compliance_tol).all():
            value = raw_utility(instance, inner.item_at_rank)
            if best_feasible is None or value > best_feasible:
                best_feasible = value
        if config.step_schedule == "polyak" and best_feasible is not None:
            step = max(g - best_feasible, 0.0) / max(float(sub @ sub), 1e-30)
        else:
            step = scale / t
        lam = np.clip(lam - step * sub, 0.0, config.lambda_cap)
        if trail is not None:
            trail.append(lam.copy())

    lam, g_final = best_lam, best_g
    if config.polish and config.polish_sweeps > 0:
        lam, g_final = _polish(instance, lam, g_final, config)
        if trail is not None:
            trail.append(lam.copy())

    infeasible = bool((lam >= config.lambda_cap * (1.0 - 1e-9)).any())
    return ShadowPriceVector(
        lam=lam,
        dual_value=g_final,
        iterations=iterations,
        converged=converged,
        infeasible_flag=infeasible,
        iterates=tuple(trail) if trail is not None else None,
    )


def rank_with_lambda(
    instance: RankingInstance, lam, epsilon: float = 0.0, tol: float = DEFAULT_TOL
) -> tuple[Assignment, ComplianceReport]:
    """Rank under given prices and report compliance against the bounds.

    The tie-break factor epsilon scales the price term by (1 + epsilon),
    splitting adjusted-weight ties toward constraint compliance; slack and
    utility are always reported epsilon-free against the instance's own
    constraints.
    """
    _require_canonical(instance)
    lam = np.asarray(lam, dtype=np.float64).reshape(-1)
    assignment = _inner_argmax(instance, lam, epsilon)
    att = constraint_attainment(instance, assignment.item_at_rank)
    slack = att - instance.bounds
    report = ComplianceReport(
        slack=slack,
        compliant=bool((slack >= -tol).all()),
        utility=raw_utility(instance, assignment.item_at_rank),
    )
    return assignment, report


def tune_epsilon(instances, lams, grid=DEFAULT_EPSILON_GRID) -> float:
    """Pick the grid epsilon minimizing violations, then maximizing utility.

    Ties prefer the smallest epsilon (the grid is scanned in ascending
    order).  ``lams`` holds one price vector per instance, typically the
    training prices.
    """
    instances = list(instances)
    lams = list(lams)
    if len(instances) != len(lams):
        raise ValueError("need one price vector per instance")
    if not instances:
        raise ValueError("need at least one instance")
    best_key = None
    best_eps = 0.0
    for eps in sorted(set(float(e) for e in grid)):
        if eps < 0:
            raise ValueError("epsilon must be nonnegative")
        violations = 0
        utility = 0.0
        for inst, lam in zip(instances, lams):
            _, report = rank_with_lambda(inst, lam, eps)
            violations += 0 if report.compliant else 1
            utility += report.utility
        key = (violations, -utility)
        if best_key is None or key < best_key:
            best_key = key
            best_eps = eps
    return best_eps
