"""Walk through the 4x4 instance where the exposure floor only binds
through a tie-break.

Item 2 is the sole member of a protected group whose exposure must reach
0.7. Unconstrained, the best ranking earns 12 and ignores item 2. At the
optimal shadow price the adjusted problem has a two-way tie at weight 14:
one side compliant, one not. The epsilon tie-break picks the compliant
side without giving up any adjusted weight.
"""

import numpy as np

from shadowrank import (
    ConstraintSpec,
    DiscountVector,
    DualConfig,
    RankingInstance,
    Sense,
    rank_with_lambda,
    solve_dual,
    tune_epsilon,
)

U = np.array(
    [
        [5.0, 4.0, 2.0, 1.0],
        [5.0, 3.0, 3.0, 2.0],
        [3.0, 3.0, 3.0, 3.0],
        [2.0, 1.0, 0.0, 0.0],
    ]
)
A = np.zeros((4, 4))
A[2] = [1.0, 0.6, 0.5, 0.4]  # item 2's exposure by rank


def order(a):
    return [int(i) for i in a.item_at_rank]


def run():
    inst = RankingInstance(
        u=None,
        dense_u=U,
        gamma=DiscountVector(np.ones(4)),
        constraints=(ConstraintSpec(dense_a=A, sense=Sense.GE, bound=0.7),),
    )

    unpriced, rep0 = rank_with_lambda(inst, np.zeros(1))
    print(f"no price: order={order(unpriced)} "
          f"weight={unpriced.total_weight:.1f} compliant={rep0.compliant}")

    sp = solve_dual(inst, DualConfig())
    print(f"solved shadow price: lambda={sp.lam[0]:.6f} "
          f"dual value={sp.dual_value:.4f}")

    ranked, rep1 = rank_with_lambda(inst, sp.lam)
    print(f"priced: order={order(ranked)} adjusted={ranked.total_weight:.1f} "
          f"raw utility={rep1.utility:.1f} compliant={rep1.compliant}")
    print(f"slack on the floor: {rep1.slack[0]:+.3f}")

    # the compliant side only wins by a knife edge: a price a hair below the
    # kink flips the argmax back to the violating order unless epsilon
    # inflates the priced term
    low = sp.lam - 1e-4
    shaved, rep2 = rank_with_lambda(inst, low)
    eps = tune_epsilon([inst], [low])
    saved, rep3 = rank_with_lambda(inst, low, eps)
    print(f"price 1e-4 below the kink: order={order(shaved)} "
          f"compliant={rep2.compliant}")
    print(f"same price, epsilon={eps}: order={order(saved)} "
          f"compliant={rep3.compliant}")


if __name__ == "__main__":
    run()
