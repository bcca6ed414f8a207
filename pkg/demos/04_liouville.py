"""Positive harmonic functions of lattice walks.

Zero-drift walks on Z^d are strongly Liouville.  A drifting walk carries a
nonconstant positive harmonic exponential, found here as the root of the
moment generating function and checked exactly on a window.
"""

from __future__ import annotations

import math
from fractions import Fraction as F

from markov_doob import (
    LatticeMeasure,
    biased_walk,
    explore_window,
    simple_walk,
    strong_liouville_walk_verdict,
    verify_harmonic_on_window,
    zd_walk,
)


def fmt(v) -> str:
    return "(" + ", ".join(str(c) for c in v) + ")"


def main() -> None:
    for d in (1, 2, 3):
        v = strong_liouville_walk_verdict(simple_walk(d).measure)
        print(f"simple walk on Z^{d}: strong Liouville = {v.strong_liouville}, drift {fmt(v.drift)}")

    walk = biased_walk()
    v = strong_liouville_walk_verdict(walk.measure)
    a = v.witness.alpha[0]
    print(f"biased walk: strong Liouville = {v.strong_liouville}, alpha = {a:.12f} "
          f"(-ln 9 = {-math.log(9):.12f}), exact base {v.witness.base[0]}")
    base = v.witness.base[0]
    rep = verify_harmonic_on_window(walk, lambda x: base ** x[0], explore_window(walk, [(0,)], 30))
    print(f"  residual of 9^(-x) on {rep.checked} states: {rep.max_residual}")

    tilted = zd_walk(LatticeMeasure.from_dict(
        {(1, 0): F(1, 2), (-1, 0): F(1, 4), (0, 1): F(1, 8), (0, -1): F(1, 8)}))
    v = strong_liouville_walk_verdict(tilted.measure)
    alpha = fmt(f"{c:.6f}" for c in v.witness.alpha)
    print(f"tilted walk on Z^2: drift {fmt(v.drift)}, witness alpha {alpha}")


if __name__ == "__main__":
    main()
