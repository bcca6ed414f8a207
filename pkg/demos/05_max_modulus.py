"""Maximum modulus over escorted states.

Assembles a random operator polynomial on the truncated Fock spaces of a
small matrix, prints the per-state norms, and compares the maximum over
escorted states with the maximum over all states at matched depths.  Also
checks the intertwiner that transports non-escorted states onto escorted
ones.
"""

from __future__ import annotations

import random
from fractions import Fraction as F

from markov_doob import (
    FiniteStochasticMatrix,
    OperatorPolynomial,
    Term,
    escorted_states,
    intertwiner_check,
    max_modulus_norm,
    unescorted_successors,
)


def main() -> None:
    P = FiniteStochasticMatrix.from_dense([
        [0, F(1, 2), F(1, 2), 0],
        [0, 0, 1, 0],
        [0, 0, F(1, 3), F(2, 3)],
        [1, 0, 0, 0],
    ])
    rng = random.Random(7)
    terms = []
    for _ in range(4):
        n = rng.randint(0, 2)
        edges = [(i, j) for i in P.states for j in P.states if P.power(n)[i][j] > 0]
        i, j = rng.choice(edges)
        terms.append(Term(0, 0, n, i, j, complex(rng.gauss(0, 1), rng.gauss(0, 1))))
    poly = OperatorPolynomial(1, tuple(terms))

    esc = escorted_states(P)
    print(f"escorted states: {sorted(esc)}")
    for M in (4, 8, 12):
        rep = max_modulus_norm(P, poly, M)
        per = ", ".join(f"{k}: {v:.6f}" for k, v in rep.per_state.items())
        print(f"M = {M}: per state {{{per}}}")
        print(f"  escorted max {rep.escorted_max:.9f}, matched max {rep.full_max:.9f}, "
              f"gap {rep.gap:.2e}")
    for k in P.states:
        if k not in esc:
            for s in unescorted_successors(P, k):
                print(f"intertwiner H_{k} -> H_{s}: deviation {intertwiner_check(P, k, s, M=8)}")


if __name__ == "__main__":
    main()
