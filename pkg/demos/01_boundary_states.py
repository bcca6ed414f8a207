"""Boundary states of small stochastic matrices.

Classifies a few matrices into exclusive and escorted states, checks the
multiple-arrival property, and builds the peaking witness for each
escorted state.  Run with ``python demos/01_boundary_states.py``.
"""

from __future__ import annotations

from fractions import Fraction as F

from markov_doob import FiniteStochasticMatrix, classify, peaking_witness

MATRICES = {
    "two-state": [[0, 1], [F(1, 2), F(1, 2)]],
    "uniform": [[F(1, 3)] * 3] * 3,
    "bipartite": [[0, F(1, 2), F(1, 2)], [1, 0, 0], [1, 0, 0]],
    "three-cycle": [[0, 1, 0], [0, 0, 1], [1, 0, 0]],
}


def main() -> None:
    for name, rows in MATRICES.items():
        P = FiniteStochasticMatrix.from_dense([[F(x) for x in r] for r in rows])
        c = classify(P)
        print(f"{name}: period {c.period}, classes {c.classes}")
        print(f"  exclusive {sorted(c.exclusive)}  escorted {sorted(c.escorted)}")
        print(f"  multiple arrival: {c.multiple_arrival}  counterexample (s, k, n): "
              f"{c.arrival_counterexample}")
        if c.is_cycle:
            print(f"  boundary: {c.boundary}")
            continue
        print(f"  boundary: {sorted(c.boundary)}")
        for k in sorted(c.escorted):
            w = peaking_witness(P, k)
            offs = ", ".join(f"H_{s}: {v.value}" for s, v in sorted(w.off_values.items()))
            print(f"  S_{k}{k}^({w.n0}) has norm {w.anchor_norm} on H_{k}; squared norms {offs}")


if __name__ == "__main__":
    main()
