"""Assignment backends: who goes in which slot.

All backends maximize total weight over injective maps of m2 ranks into m1
items (m1 >= m2).  The interesting fact this module is built around: when
the weight matrix is the outer product of scores and non-increasing
discounts, the optimum is "sort items by score, best score to best slot"
(rearrangement), which is O(m1 log m1) and needs no matrix at all.  The
Hungarian backend covers dense matrices and produces dual potentials as an
optimality certificate; greedy trades exactness for speed on very large
dense inputs (1/2-approximation for nonnegative weights).
"""

from __future__ import annotations

import enum
import itertools

import numpy as np

from .problem import Assignment, DiscountVector

__all__ = [
    "AssignStrategy",
    "InfeasibleError",
    "assign",
    "hungarian_assign",
    "greedy_assign",
    "sorted_identity_assign",
    "brute_force_assign",
    "is_inverse_monge",
    "verify_potentials",
]

# Dense matrices with more items than this go to greedy under AUTO.
DENSE_EXACT_ROW_LIMIT = 4096

BRUTE_FORCE_ITEM_LIMIT = 8


class InfeasibleError(RuntimeError):
    """No assignment satisfies the constraints."""


class AssignStrategy(enum.Enum):
    AUTO = "auto"
    SORT_MONGE = "sort_monge"
    HUNGARIAN = "hungarian"
    GREEDY_HALF = "greedy_half"
    BRUTE_FORCE = "brute_force"


def _check_dense(weights) -> np.ndarray:
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 2:
        raise ValueError(f"weight matrix must be 2-D, got shape {w.shape}")
    m1, m2 = w.shape
    if m2 < 1:
        raise ValueError("need at least one rank")
    if m2 > m1:
        raise ValueError(f"more ranks than items: {m1} x {m2}")
    if not np.isfinite(w).all():
        raise ValueError("weights must be finite")
    return w


def _hungarian_small(w: np.ndarray) -> Assignment:
    # Same algorithm as below on plain lists; for tiny matrices the numpy
    # call overhead dominates, and the dual solver evaluates thousands of
    # these per solve.
    m1, m2 = w.shape
    cost = (-w.T).tolist()
    u = [min(row) for row in cost]
    v = [0.0] * m1
    owner = [-1] * m1
    inf = float("inf")
    for r in range(m2):
        minv = [inf] * m1
        way = [-1] * m1
        used = [False] * m1
        j0 = -1
        while True:
            scan = r if j0 < 0 else owner[j0]
            crow = cost[scan]
            us = u[scan]
            best = inf
            jbest = -1
            for j in range(m1):
                if not used[j]:
                    red = crow[j] - us - v[j]
                    if red < minv[j]:
                        minv[j] = red
                        way[j] = j0
                    if minv[j] < best:
                        best = minv[j]
                        jbest = j
            if best != 0.0:
                u[r] += best
                for j in range(m1):
                    if used[j]:
                        u[owner[j]] += best
                        v[j] -= best
                    else:
                        minv[j] -= best
            used[jbest] = True
            j0 = jbest
            if owner[jbest] < 0:
                break
        while j0 >= 0:
            jprev = way[j0]
            owner[j0] = r if jprev < 0 else owner[jprev]
            j0 = jprev
    item_at_rank = np.empty(m2, dtype=np.int64)
    for i, r in enumerate(owner):
        if r >= 0:
            item_at_rank[r] = i
    total = float(w[item_at_rank, np.arange(m2)].sum())
    return Assignment(
        item_at_rank=item_at_rank,
        total_weight=total,
        row_potentials=-np.asarray(v),
        col_potentials=-np.asarray(u),
    )


def hungarian_assign(weights) -> Assignment:
    """Exact max-weight assignment with dual potentials.

    Shortest-augmenting-path over the rank side, O(m1 * m2^2).  The returned
    potentials certify optimality: row_potentials[i] + col_potentials[j]
    >= w[i, j] everywhere, with equality on matched pairs, zero on unmatched
    items, and sum of potentials equal to total_weight.
    """
    w = _check_dense(weights)
    m1, m2 = w.shape
    if m1 * m2 <= 256:
        return _hungarian_small(w)
    # Minimize over cost[r, i] = -w[i, r]; rows are ranks so every row ends
    # matched.  Initial row reduction keeps every Dijkstra delta >= 0.
    cost = np.ascontiguousarray(-w.T)
    u = cost.min(axis=1).copy()  # rank potentials
    v = np.zeros(m1)  # item potentials
    owner = np.full(m1, -1, dtype=np.int64)  # owner[i] = rank holding item i

    for r in range(m2):
        minv = np.full(m1, np.inf)
        way = np.full(m1, -1, dtype=np.int64)
        used = np.zeros(m1, dtype=bool)
        j0 = -1
        while True:
            scan = r if j0 < 0 else owner[j0]
            reduced = cost[scan] - u[scan] - v
            upd = ~used & (reduced < minv)
            minv[upd] = reduced[upd]
            way[upd] = j0
            free = np.flatnonzero(~used)
            jbest = free[np.argmin(minv[free])]
            delta = minv[jbest]
            if delta != 0.0:
                u[r] += delta
                tree = np.flatnonzero(used)
                if tree.size:
                    u[owner[tree]] += delta  # tree ranks are distinct
                    v[tree] -= delta
                minv[~used] -= delta
            used[jbest] = True
            j0 = jbest
            if owner[jbest] < 0:
                break
        while j0 >= 0:
            jprev = way[j0]
            owner[j0] = r if jprev < 0 else owner[jprev]
            j0 = jprev

    item_at_rank = np.empty(m2, dtype=np.int64)
    matched = np.flatnonzero(owner >= 0)
    item_at_rank[owner[matched]] = matched
    total = float(w[item_at_rank, np.arange(m2)].sum())
    return Assignment(
        item_at_rank=item_at_rank,
        total_weight=total,
        row_potentials=-v,
        col_potentials=-u,
    )


def greedy_assign(weights) -> Assignment:
    """1/2-approximation for nonnegative weights: take cells best-first.

    Ties resolve to the lowest item index, then the lowest rank.  No
    potentials; the guarantee is the standard greedy-matching bound.
    """
    w = _check_dense(weights)
    if (w < 0).any():
        raise ValueError("greedy backend requires nonnegative weights")
    m1, m2 = w.shape
    order = np.argsort(-w, axis=None, kind="stable")
    item_free = np.ones(m1, dtype=bool)
    rank_free = np.ones(m2, dtype=bool)
    item_at_rank = np.full(m2, -1, dtype=np.int64)
    left = m2
    for flat in order:
        i, j = divmod(int(flat), m2)
        if item_free[i] and rank_free[j]:
            item_at_rank[j] = i
            item_free[i] = False
            rank_free[j] = False
            left -= 1
            if left == 0:
                break
    total = float(w[item_at_rank, np.arange(m2)].sum())
    return Assignment(item_at_rank=item_at_rank, total_weight=total)


def sorted_identity_assign(scores, gamma) -> Assignment:
    """Optimal assignment for factored weights outer(scores, gamma).

    Sort items by score descending (ties: lowest item index) and give the
    j-th best item rank j.  Optimal by rearrangement since gamma is
    non-increasing.  No potentials on this path.
    """
    if isinstance(gamma, DiscountVector):
        g = gamma.gamma
    else:
        g = DiscountVector(gamma).gamma
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 1:
        raise ValueError("scores must be a vector")
    if not np.isfinite(s).all():
        raise ValueError("scores must be finite")
    m2 = g.size
    if m2 > s.size:
        raise ValueError(f"more ranks than items: {s.size} items, {m2} ranks")
    order = np.argsort(-s, kind="stable")
    item_at_rank = order[:m2].astype(np.int64)
    total = float(s[item_at_rank] @ g)
    return Assignment(item_at_rank=item_at_rank, total_weight=total)


def brute_force_assign(weights, constraints=None) -> Assignment:
    """Exhaustive oracle over all injective rank maps.  m1 <= 8.

    ``constraints`` is an optional list of (matrix_or_vector_times_gamma)
    pairs ``(values, bound)`` where ``values`` is an m1 x m2 matrix of
    per-cell contributions; a permutation is admissible when every
    constraint attains at least its bound.  Raises InfeasibleError when
    constraints are given and nothing is admissible.  Ties resolve to the
    first maximizer in lexicographic permutation order.
    """
    w = _check_dense(weights)
    m1, m2 = w.shape
    if m1 > BRUTE_FORCE_ITEM_LIMIT:
        raise ValueError(f"brute force capped at {BRUTE_FORCE_ITEM_LIMIT} items, got {m1}")
    checks = []
    for values, bound in constraints or ():
        vals = np.asarray(values, dtype=np.float64)
        if vals.shape != (m1, m2):
            raise ValueError(f"constraint values must be {m1} x {m2}")
        checks.append((vals, float(bound)))
    cols = np.arange(m2)
    best_perm = None
    best_val = -np.inf
    for perm in itertools.permutations(range(m1), m2):
        sel = np.asarray(perm, dtype=np.int64)
        if any(vals[sel, cols].sum() < bound - 1e-12 for vals, bound in checks):
            continue
        val = w[sel, cols].sum()
        if val > best_val:
            best_val = val
            best_perm = sel
    if best_perm is None:
        raise InfeasibleError("no admissible assignment")
    return Assignment(item_at_rank=best_perm, total_weight=float(best_val))


def is_inverse_monge(weights, tol: float = 1e-9) -> bool:
    """Check w[i,j] + w[i+1,j+1] >= w[i,j+1] + w[i+1,j] for all adjacent pairs.

    Adjacent pairs suffice: the general 2x2 condition telescopes from them.
    """
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 2:
        raise ValueError("need a matrix")
    if w.shape[0] < 2 or w.shape[1] < 2:
        return True
    lhs = w[:-1, :-1] + w[1:, 1:]
    rhs = w[:-1, 1:] + w[1:, :-1]
    return bool((lhs >= rhs - tol).all())


def verify_potentials(assignment: Assignment, weights, tol: float = 1e-9) -> bool:
    """Check the LP-dual certificate carried by an assignment."""
    if assignment.row_potentials is None or assignment.col_potentials is None:
        return False
    w = np.asarray(weights, dtype=np.float64)
    alpha = assignment.row_potentials
    beta = assignment.col_potentials
    if alpha.size != w.shape[0] or beta.size != w.shape[1]:
        return False
    scale = max(1.0, float(np.abs(w).max()))
    if (alpha[:, None] + beta[None, :] < w - tol * scale).any():
        return False
    sel = assignment.item_at_rank
    cols = np.arange(sel.size)
    if not np.allclose(alpha[sel] + beta[cols], w[sel, cols], atol=tol * scale):
        return False
    unmatched = np.setdiff1d(np.arange(w.shape[0]), sel)
    if unmatched.size and np.abs(alpha[unmatched]).max() > tol * scale:
        return False
    total = alpha[sel].sum() + beta.sum()
    return bool(abs(total - assignment.total_weight) <= tol * scale * max(1, sel.size))


def _square_monge_shortcut(w: np.ndarray, tol: float) -> Assignment | None:
    # Square inverse Monge: the diagonal is optimal.  Sorting rows by first
    # column can both create and destroy the property, so try the matrix as
    # given first, then the row-sorted version.
    m = w.shape[0]
    if is_inverse_monge(w, tol):
        sel = np.arange(m, dtype=np.int64)
        return Assignment(item_at_rank=sel, total_weight=float(np.trace(w)))
    order = np.argsort(-w[:, 0], kind="stable")
    ws = w[order]
    if is_inverse_monge(ws, tol):
        sel = order.astype(np.int64)
        return Assignment(
            item_at_rank=sel, total_weight=float(w[sel, np.arange(m)].sum())
        )
    return None


def assign(
    target,
    strategy: AssignStrategy = AssignStrategy.AUTO,
    *,
    dense_exact_row_limit: int = DENSE_EXACT_ROW_LIMIT,
    monge_tol: float = 1e-9,
) -> Assignment:
    """Dispatch to an assignment backend.

    ``target`` is either a dense m1 x m2 weight matrix or a factored
    ``(scores, gamma)`` pair.  AUTO picks the cheapest exact backend it can
    justify: factored input sorts; square dense input sorts when it verifies
    inverse Monge (possibly after ordering rows by first column); other
    dense input goes to Hungarian, or to greedy above
    ``dense_exact_row_limit`` items.  The rectangular Monge shortcut is
    deliberately not taken: with m1 > m2 the sorted diagonal can be
    suboptimal even on inverse Monge input.
    """
    factored = isinstance(target, tuple)
    if factored:
        scores, gamma = target
        if strategy in (AssignStrategy.AUTO, AssignStrategy.SORT_MONGE):
            return sorted_identity_assign(scores, gamma)
        g = gamma.gamma if isinstance(gamma, DiscountVector) else np.asarray(gamma, float)
        w = np.outer(np.asarray(scores, dtype=np.float64), g)
    else:
        w = _check_dense(target)

    if strategy is AssignStrategy.AUTO:
        if w.shape[0] == w.shape[1]:
            shortcut = _square_monge_shortcut(w, monge_tol)
            if shortcut is not None:
                return shortcut
        if w.shape[0] > dense_exact_row_limit:
            return greedy_assign(w)
        return hungarian_assign(w)
    if strategy is AssignStrategy.SORT_MONGE:
        if w.shape[0] != w.shape[1]:
            raise ValueError(
                "SORT_MONGE on dense input requires a square matrix; "
                "rectangular Monge diagonals are not optimal in general"
            )
        shortcut = _square_monge_shortcut(w, monge_tol)
        if shortcut is None:
            raise ValueError("matrix is not inverse Monge, even after row sorting")
        return shortcut
    if strategy is AssignStrategy.HUNGARIAN:
        return hungarian_assign(w)
    if strategy is AssignStrategy.GREEDY_HALF:
        return greedy_assign(w)
    if strategy is AssignStrategy.BRUTE_FORCE:
        return brute_force_assign(w)
    raise ValueError(f"unknown strategy: {strategy!r}")
