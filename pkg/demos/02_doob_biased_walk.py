"""The biased walk on Z is a Doob transform of the simple walk.

Certifies the equivalence on a finite window in exact arithmetic, recovers
the eigenvalue 3/5 and the eigenfunction 3^(-x), then checks the transform
reproduces the simple walk row by row.
"""

from __future__ import annotations

from fractions import Fraction as F

from markov_doob import (
    EigenPair,
    biased_walk,
    certify_doob_equivalence,
    doob_transform,
    explore_window,
    simple_walk,
)


def main() -> None:
    P = biased_walk(F(9, 10))
    window = explore_window(P, [(0,)], 20)
    cert = certify_doob_equivalence(P, simple_walk(1), lambda x: x, window, depth=6)
    print(f"certified: {cert.certified} (exact: {cert.exact}) on {len(window)} states")
    print(f"return ratio alpha^(2) = {cert.return_ratio}, lambda = {cert.lam}")
    h0 = cert.h[(0,)]
    print("h(x) / h(0) for x = -3..3:", [str(cert.h[(x,)] / h0) for x in range(-3, 4)])

    pair = EigenPair(F(3, 5), lambda x: F(1, 3) ** x[0])
    Q = doob_transform(P, pair, window)
    print("transformed row at 0:", {k[0]: str(p) for k, p in Q.row((0,))})
    print("simple walk row at 0:", {k[0]: str(p) for k, p in simple_walk(1).row((0,))})


if __name__ == "__main__":
    main()
