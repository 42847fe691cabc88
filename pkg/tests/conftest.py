"""Shared builders for the test suite.

The "tied floor" instance below is the canonical hand-checkable case used
throughout: a 4x4 dense problem with one exposure floor that can only be met
by putting item 2 (0-indexed) at the top rank. Its adjusted matrix at the
optimal price has a two-way tie, one side compliant and one not.
"""

import numpy as np
import pytest

from shadowrank import (
    BoundKind,
    ConstraintSpec,
    DiscountVector,
    RankingInstance,
    Sense,
)

TIED_U = np.array(
    [
        [5.0, 4.0, 2.0, 1.0],
        [5.0, 3.0, 3.0, 2.0],
        [3.0, 3.0, 3.0, 3.0],
        [2.0, 1.0, 0.0, 0.0],
    ]
)
TIED_A = np.zeros((4, 4))
TIED_A[2] = [1.0, 0.6, 0.5, 0.4]
TIED_BOUND = 0.7
TIED_PRICE = 4.0  # dual optimum; adjusted optimum is 14, compliant utility 10


def tied_floor_instance() -> RankingInstance:
    return RankingInstance(
        u=None,
        dense_u=TIED_U.copy(),
        gamma=DiscountVector(np.ones(4)),
        constraints=(
            ConstraintSpec(dense_a=TIED_A.copy(), sense=Sense.GE, bound=TIED_BOUND),
        ),
    )


@pytest.fixture
def tied_floor() -> RankingInstance:
    return tied_floor_instance()


def random_factored_instance(rng, m1, m2, num_constraints, frac_hi=0.35):
    """Random feasible factored instance: binary group memberships with
    floors set safely below what dedicating one top slot can deliver."""
    gamma = DiscountVector.dcg(m2)
    u = rng.uniform(0.0, 5.0, size=m1)
    cons = []
    for _ in range(num_constraints):
        a = (rng.random(m1) < 0.5).astype(float)
        if not a.any():
            a[int(rng.integers(m1))] = 1.0
        # one item of the group at the top rank always covers this
        bound = float(rng.uniform(0.0, frac_hi)) * float(gamma.gamma[0])
        cons.append(ConstraintSpec(a=a, sense=Sense.GE, bound=bound))
    return RankingInstance(u=u, gamma=gamma, constraints=tuple(cons))


# --- acceptance verdict lines -----------------------------------------------
# test_acceptance.py records one line per criterion; echoed after the run so
# they survive pytest's output capture.

ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES[number] = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
