"""Spectral radii and Green sums from return probabilities.

Estimates rho for the biased walk (exact value 2 sqrt(pq) = 0.6), the
reflected half-line chain and the simple walk, checks the Doob relation
rho(biased) = lambda rho(simple), and classifies recurrence heuristically.
"""

from __future__ import annotations

from markov_doob import (
    biased_walk,
    green_classify,
    halfline_chain,
    simple_walk,
    spectral_radius_estimate,
)


def main() -> None:
    biased = spectral_radius_estimate(biased_walk(), (0,), 1000)
    half = spectral_radius_estimate(halfline_chain(), 0, 1000)
    simple = spectral_radius_estimate(simple_walk(1), (0,), 1000)
    print(f"biased walk:   rho ~ {biased.radius:.4f} (exact 0.6)")
    print(f"half-line:     rho ~ {half.radius:.4f}")
    print(f"simple walk:   rho ~ {simple.radius:.4f} (exact 1)")
    print(f"(3/5) rho(simple) = {0.6 * simple.radius:.4f} vs rho(biased) = {biased.radius:.4f}")

    for name, chain, root, steps in [
        ("Z simple", simple_walk(1), (0,), 2000),
        ("Z^3 simple", simple_walk(3), (0, 0, 0), 60),
        ("Z biased", biased_walk(), (0,), 400),
    ]:
        g = green_classify(chain, root, steps)
        print(f"{name}: sum_(1<=n<={steps}) P^(n)_00 = {g.sums.sum_without_zero:.3f}, "
              f"{g.verdict} ({g.reason})")


if __name__ == "__main__":
    main()
