"""Harmonic functions: finite kernels, exponential harmonics of lattice walks,
strong-Liouville verdicts and windowed residual checks."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np
from scipy.special import logsumexp

from ._numeric import is_exact, nullspace_exact
from .chain import ChainError, FiniteStochasticMatrix
from .doob import ResidualReport, _h_lookup, _window_states
from .walks import LatticeMeasure

__all__ = [
    "HarmonicError",
    "HarmonicBasis",
    "ExponentialHarmonic",
    "LiouvilleVerdict",
    "finite_harmonic_space",
    "windowed_harmonic_space",
    "mgf",
    "minimal_harmonic_root",
    "strong_liouville_walk_verdict",
    "verify_harmonic_on_window",
]

KERNEL_TOL = 1e-10
PHI_TOL = 1e-13
DRIFT_TOL = 1e-12


class HarmonicError(ChainError):
    pass


@dataclass
class HarmonicBasis:
    """Basis of ``{h : P h = h}`` with a positivity flag per vector."""

    states: tuple
    vectors: list[list]
    positive: list[bool]
    exact: bool

    @property
    def dimension(self) -> int:
        return len(self.vectors)

    def contains_constants(self) -> bool:
        if not self.vectors:
            return False
        A = np.array([[float(v) for v in vec] for vec in self.vectors]).T
        ones = np.ones(len(self.states))
        coef, *_ = np.linalg.lstsq(A, ones, rcond=None)
        return bool(np.allclose(A @ coef, ones, atol=1e-9))


def _normalise(vectors: list[list], exact: bool):
    out, flags = [], []
    for v in vectors:
        if exact:
            if all(x < 0 for x in v):
                v = [-x for x in v]
            flags.append(all(x > 0 for x in v))
        else:
            if sum(v) < 0:
                v = [-x for x in v]
            flags.append(all(x > KERNEL_TOL for x in v))
        out.append(v)
    return out, flags


def _kernel(rows: list[list], ncols: int, exact: bool) -> list[list]:
    if exact:
        return nullspace_exact(rows, ncols)
    if not rows:
        return [list(r) for r in np.eye(ncols)]
    A = np.array(rows, dtype=float)
    _, s, vh = np.linalg.svd(A)
    scale = max(1.0, float(s[0])) if len(s) else 1.0
    rank = int(np.sum(s > KERNEL_TOL * scale))
    return [list(r) for r in vh[rank:]]


def finite_harmonic_space(P: FiniteStochasticMatrix) -> HarmonicBasis:
    """Kernel of ``P - I``: exact elimination in rational mode, SVD otherwise."""
    n = P.n_states
    dense = P.dense()
    rows = [[dense[i][j] - (1 if i == j else 0) for j in range(n)] for i in range(n)]
    vectors, flags = _normalise(_kernel(rows, n, P.exact), P.exact)
    return HarmonicBasis(tuple(P.states), vectors, flags, P.exact)


def windowed_harmonic_space(chain, window) -> HarmonicBasis:
    """Solutions on a window of ``(P h)(i) = h(i)`` for every interior state.

    Interior states are those whose whole row lies in the window; the
    remaining window states are free boundary values.  This is evidence
    about positive harmonic functions, not a proof.
    """
    states = _window_states(chain, window)
    index = {s: k for k, s in enumerate(states)}
    rows = []
    for i in states:
        row = chain.row(i)
        if not all(t in index for t, _ in row):
            continue
        eq = [0] * len(states)
        for t, p in row:
            eq[index[t]] += p
        eq[index[i]] -= 1
        rows.append(eq)
    vectors, flags = _normalise(_kernel(rows, len(states), chain.exact), chain.exact)
    return HarmonicBasis(states, vectors, flags, chain.exact)


def _as_vector(alpha, d: int) -> tuple[float, ...]:
    if isinstance(alpha, (int, float, Fraction)):
        alpha = (alpha,)
    alpha = tuple(float(a) for a in alpha)
    if len(alpha) != d:
        raise HarmonicError(f"expected a vector of dimension {d}")
    return alpha


def _log_mgf(mu: LatticeMeasure, alpha: Sequence[float]) -> float:
    ys = np.array([v for v, _ in mu.support], dtype=float)
    logw = np.log([float(p) for _, p in mu.support])
    return float(logsumexp(ys @ np.asarray(alpha, dtype=float) + logw))


def mgf(mu: LatticeMeasure, alpha) -> float:
    """``sum_y exp(<alpha, y>) mu(y)``, evaluated through a log-sum-exp."""
    return math.exp(_log_mgf(mu, _as_vector(alpha, mu.dimension)))


@dataclass
class ExponentialHarmonic:
    """``h(x) = exp(<alpha, x>)`` with ``phi(alpha) = 1``.

    When every ``exp(alpha_i)`` is rational and satisfies the constraint
    exactly, ``base`` holds those rationals and ``h`` is evaluated exactly.
    """

    alpha: tuple[float, ...]
    phi: float
    base: tuple[Fraction, ...] | None = None

    def __call__(self, x):
        x = (x,) if isinstance(x, int) else tuple(x)
        if self.base is not None:
            out = Fraction(1)
            for b, c in zip(self.base, x):
                out *= b**c
            return out
        return math.exp(sum(a * c for a, c in zip(self.alpha, x)))


def _exact_base(mu: LatticeMeasure, alpha: Sequence[float]) -> tuple[Fraction, ...] | None:
    if not mu.exact:
        return None
    for bound in (10**3, 10**6, 10**9):
        base = tuple(Fraction(math.exp(a)).limit_denominator(bound) for a in alpha)
        total = Fraction(0)
        for v, p in mu.support:
            term = Fraction(p)
            for b, c in zip(base, v):
                term *= b**c
            total += term
        if total == 1:
            return base
    return None


def minimal_harmonic_root(mu: LatticeMeasure, direction) -> ExponentialHarmonic:
    """Nonzero ``t`` with ``phi(t * direction) = 1``, by bracketing and bisection.

    Along a direction the section ``g(t) = phi(t u)`` is convex with
    ``g(0) = 1`` and ``g'(0) = <drift, u>``, so a positive root exists exactly
    when the drift points against ``u``.
    """
    d = mu.dimension
    u = np.array(_as_vector(direction, d))
    if not np.any(u):
        raise HarmonicError("direction must be nonzero")
    dirs = (direction,) if isinstance(direction, (int, float, Fraction)) else tuple(direction)
    if mu.exact and all(is_exact(c) for c in dirs):
        slope = sum(Fraction(a) * b for a, b in zip(mu.drift, dirs))
        uphill = slope >= 0
    else:
        slope = float(np.array([float(c) for c in mu.drift]) @ u)
        uphill = slope >= -DRIFT_TOL
    if uphill:
        raise HarmonicError(f"no nonzero root along {dirs}: drift component {slope} >= 0")

    ys = np.array([v for v, _ in mu.support], dtype=float)
    proj = ys @ u
    logw = np.log([float(p) for _, p in mu.support])
    guard = 700.0 / (np.abs(u).sum() * np.abs(ys).max())

    def log_g(t: float) -> float:
        return float(logsumexp(t * proj + logw))

    def dg(t: float) -> float:
        return float(np.sum(proj * np.exp(t * proj + logw)))

    tp = 1.0
    while dg(tp) <= 0:
        tp *= 2
        if tp > guard:
            raise HarmonicError("no bracket for the minimum of the mgf section")
    lo, hi = 0.0, tp
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if dg(mid) < 0:
            lo = mid
        else:
            hi = mid
    lo = 0.5 * (lo + hi)
    hi = max(tp, lo)
    while log_g(hi) <= 0:
        hi *= 2
        if hi > guard:
            raise HarmonicError("mgf section does not return to 1 before the overflow guard")
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if log_g(mid) < 0:
            lo = mid
        else:
            hi = mid
    t = hi if abs(math.expm1(log_g(hi))) <= abs(math.expm1(log_g(lo))) else lo
    phi = math.exp(log_g(t))
    if abs(phi - 1) > PHI_TOL:
        raise HarmonicError(f"bisection stalled with phi = {phi!r}")
    alpha = tuple(float(t * c) for c in u)
    return ExponentialHarmonic(alpha, phi, _exact_base(mu, alpha))


@dataclass
class LiouvilleVerdict:
    strong_liouville: bool
    drift: tuple
    witness: ExponentialHarmonic | None


def strong_liouville_walk_verdict(mu: LatticeMeasure) -> LiouvilleVerdict:
    """Strong Liouville iff the drift vanishes.

    With zero drift, ``alpha = 0`` is the unique minimizer of the convex mgf,
    so only constants are minimal positive harmonics.  Otherwise the
    exponential harmonic along ``-drift`` is returned as a witness.
    """
    drift = mu.drift
    if mu.exact:
        zero = all(c == 0 for c in drift)
    else:
        zero = math.sqrt(sum(float(c) ** 2 for c in drift)) <= DRIFT_TOL
    if zero:
        return LiouvilleVerdict(True, drift, None)
    if mu.dimension == 1:
        direction = (-1 if drift[0] > 0 else 1,)
    else:
        norm = math.sqrt(sum(float(c) ** 2 for c in drift))
        direction = tuple(-float(c) / norm for c in drift)
    return LiouvilleVerdict(False, drift, minimal_harmonic_root(mu, direction))


def verify_harmonic_on_window(chain, h, window) -> ResidualReport:
    """Max relative residual ``|(P h)(i) - h(i)| / h(i)`` over the window states.

    ``h`` must be known on the window and on its one-step boundary.
    """
    states = _window_states(chain, window)
    if isinstance(h, Mapping):
        missing = [t for s in states for t, _ in chain.row(s) if t not in h]
        if missing:
            raise HarmonicError(f"h missing at boundary state {chain.key(missing[0])}")
    get = _h_lookup(h)
    exact = chain.exact
    worst, worst_state = None, None
    for i in states:
        hi = get(i)
        if not hi > 0:
            raise HarmonicError(f"h is not positive at {chain.key(i)}")
        vals = [(p, get(t)) for t, p in chain.row(i)]
        exact_here = chain.exact and is_exact(hi) and all(is_exact(v) for _, v in vals)
        exact = exact and exact_here
        ph = sum(p * v for p, v in vals)
        res = abs(ph - hi) / hi
        if not exact_here:
            res = float(res)
        if worst is None or res > worst:
            worst, worst_state = res, i
    worst = worst if worst is not None else 0
    passed = worst == 0 if exact else float(worst) <= KERNEL_TOL
    return ResidualReport(worst, worst_state, len(states), exact, passed)
