"""Return probabilities, spectral-radius estimates and Green-function partial sums.

All verdicts here are heuristics drawn from finitely many return
probabilities; recurrence and the exact spectral radius of an infinite chain
are not finitely decidable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .chain import BudgetExceededError, ChainError, PowerTable, default_budget, is_irreducible
from .walks import LatticeWalk

__all__ = [
    "SpectralError",
    "SpectralEstimate",
    "GreenPartialSum",
    "GreenVerdict",
    "return_probabilities",
    "spectral_radius_estimate",
    "green_classify",
]

RECURRENT = "recurrent-leaning"
TRANSIENT = "transient-leaning"
INCONCLUSIVE = "inconclusive"

# thresholds of the Green-function verdict
TAIL_INCREMENT_TOL = 1e-6
RHO_GAP = 0.01
BETA_RECURRENT = 1.05
BETA_TRANSIENT = 1.2


class SpectralError(ChainError):
    pass


def _lattice_returns(walk: LatticeWalk, N: int, budget: int) -> list[float]:
    """Floating return probabilities of a lattice walk by dense convolution.

    Mass farther than ``(N - n) * r`` (sup norm) at step ``n`` can never come
    back by step ``N``, so the grid radius is ``ceil(N/2) * r`` and mass
    pushed off the grid is dropped.
    """
    support = [(np.array(v), float(p)) for v, p in walk.measure.support]
    r = max(int(np.abs(v).max()) for v, _ in support)
    R = ((N + 1) // 2) * r
    d = walk.dimension
    size = 2 * R + 1
    cells = size**d
    if cells > budget:
        raise BudgetExceededError(f"lattice grid of {cells} cells exceeds budget {budget}")
    dist = np.zeros((size,) * d)
    centre = (R,) * d
    dist[centre] = 1.0
    out = [1.0]
    charged = 1
    for _ in range(N):
        new = np.zeros_like(dist)
        for v, p in support:
            dst = tuple(slice(max(o, 0), size + min(o, 0)) for o in v)
            src = tuple(slice(max(-o, 0), size - max(o, 0)) for o in v)
            new[dst] += p * dist[src]
        dist = new
        charged += int(np.count_nonzero(dist))
        if charged > budget:
            raise BudgetExceededError(f"exploration budget of {budget} state-level pairs exceeded")
        out.append(float(dist[centre]))
    return out


def return_probabilities(chain, i, N: int, exact: bool | None = None,
                         budget: int | None = None) -> list:
    """``[P^(n)_ii for n = 0..N]``, zeros included.

    ``exact=None`` follows the chain's numeric mode; ``exact=False`` on an
    exact chain converts to floating first (lattice walks then use a dense
    convolution).
    """
    if N < 0:
        raise ValueError("N must be nonnegative")
    budget = default_budget() if budget is None else budget
    if exact is None:
        exact = chain.exact
    if exact and not chain.exact:
        raise SpectralError("exact return probabilities need an exact chain")
    if not exact:
        if isinstance(chain, LatticeWalk):
            return _lattice_returns(chain, N, budget)
        if chain.exact:
            chain = chain.as_floating()
    table = PowerTable(chain, budget)
    return [table.entry(n, i, i) for n in range(N + 1)]


@dataclass
class SpectralEstimate:
    """Estimate of ``limsup (P^(n)_ii)^(1/n)``.

    ``samples`` holds ``(n, P^(n)_ii, root)`` for the nonzero returns only.
    """

    state: object
    samples: list[tuple[int, float, float]]
    radius: object
    method: str
    max_root: float | None = None
    slope_radius: float | None = None
    cutoff: int = 0


def _loglinear_slope(samples) -> float:
    ns = np.array([n for n, _, _ in samples], dtype=float)
    logs = np.array([math.log(p) for _, p, _ in samples])
    slope, _ = np.polyfit(ns, logs, 1)
    return math.exp(slope)


def spectral_radius_estimate(chain, i, N: int, budget: int | None = None) -> SpectralEstimate:
    """Spectral radius of state ``i`` from returns up to step ``N``.

    Finite irreducible matrices return exactly 1.  Otherwise the estimate is
    the larger of the best sampled root and ``exp(slope)`` of a straight-line
    fit of ``log P^(n)_ii`` against ``n`` over the last quarter of the nonzero
    samples, clipped to 1.
    """
    if getattr(chain, "finite", False) and is_irreducible(chain):
        return SpectralEstimate(i, [], Fraction(1), "perron", cutoff=N)
    probs = return_probabilities(chain, i, N, exact=False, budget=budget)
    samples = [(n, p, p ** (1.0 / n)) for n, p in enumerate(probs) if n > 0 and p > 0]
    if not samples:
        raise SpectralError(
            f"no return to state {chain.key(i)} within {N} steps; raise the cutoff"
        )
    max_root = max(s[2] for s in samples)
    tail = samples[-max(2, len(samples) // 4):]
    slope = _loglinear_slope(tail) if len(tail) >= 2 else None
    if slope is not None and slope > max_root:
        radius, method = min(slope, 1.0), "log-slope"
    else:
        radius, method = min(max_root, 1.0), "max-root"
    return SpectralEstimate(i, samples, radius, method, max_root, slope, N)


@dataclass
class GreenPartialSum:
    """Partial sums of ``P^(n)_ii`` up to ``cutoff``, under both conventions."""

    state: object
    cutoff: int
    increments: list[float]
    sum_without_zero: float
    sum_with_zero: float = field(init=False)

    def __post_init__(self):
        self.sum_with_zero = self.sum_without_zero + 1

    def partial_sums(self, include_zero: bool = False) -> list[float]:
        acc = 1.0 if include_zero else 0.0
        out = []
        for x in self.increments:
            acc += x
            out.append(acc)
        return out


@dataclass
class GreenVerdict:
    sums: GreenPartialSum
    verdict: str
    reason: str
    fitted_rho: float | None
    fitted_beta: float | None
    heuristic: bool = True


def _fit_tail(tail_n, tail_p):
    logs = np.log(tail_p)
    A = np.column_stack([np.ones(len(tail_n)), tail_n, -np.log(tail_n)])
    coef, *_ = np.linalg.lstsq(A, logs, rcond=None)
    rho = math.exp(coef[1])
    B = np.column_stack([np.ones(len(tail_n)), -np.log(tail_n)])
    coef1, *_ = np.linalg.lstsq(B, logs, rcond=None)
    return rho, float(coef[2]), float(coef1[1])


def green_classify(chain, i, N: int, budget: int | None = None) -> GreenVerdict:
    """Heuristic recurrence/transience label from the tail of the return sequence.

    The tail (second half of the nonzero returns) is fitted to
    ``c * n^(-beta) * rho^n``.  Transient-leaning when the tail returns are
    all below 1e-6 or the fitted ``rho`` is clearly below 1.  Otherwise ``rho``
    is pinned to 1 and ``beta`` refitted: ``beta <= 1.05`` (increments decay
    no faster than 1/n) is recurrent-leaning, ``beta >= 1.2`` (summable
    tail) transient-leaning, anything between inconclusive.
    """
    if N < 10:
        raise ValueError("green_classify needs N >= 10")
    probs = [float(p) for p in return_probabilities(chain, i, N, exact=False, budget=budget)]
    increments = probs[1:]
    sums = GreenPartialSum(i, N, increments, math.fsum(increments))
    nz = [(n, p) for n, p in enumerate(probs) if n > 0 and p > 0]
    tail = [(n, p) for n, p in nz if n >= N / 2]
    if len(tail) < 3:
        return GreenVerdict(sums, INCONCLUSIVE, "too few nonzero returns in the tail", None, None)
    tn = np.array([n for n, _ in tail], dtype=float)
    tp = np.array([p for _, p in tail])
    rho, beta_free, beta = _fit_tail(tn, tp)
    if rho < 1 - RHO_GAP:
        return GreenVerdict(sums, TRANSIENT, f"fitted radius {rho:.6g} < 1", rho, beta_free)
    if tp.max() < TAIL_INCREMENT_TOL:
        return GreenVerdict(sums, TRANSIENT, "tail increments below 1e-6", rho, beta_free)
    if beta <= BETA_RECURRENT:
        return GreenVerdict(sums, RECURRENT, f"returns decay like n^-{beta:.3g}", 1.0, beta)
    if beta >= BETA_TRANSIENT:
        return GreenVerdict(sums, TRANSIENT, f"summable tail n^-{beta:.3g}", 1.0, beta)
    return GreenVerdict(sums, INCONCLUSIVE, f"borderline decay n^-{beta:.3g}", 1.0, beta)
