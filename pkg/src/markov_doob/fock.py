"""Truncations of the Fock-type space ``H_P`` and of the weighted shifts ``S_ij^(n)``.

``H_{P,k}`` has orthonormal basis ``xi_{m,j,k}`` over pairs with
``P^(m)_jk > 0``.  The shift ``S_ij^(n)`` sends ``xi_{m,j,k}`` to
``sqrt(P^(n)_ij P^(m)_jk / P^(n+m)_ik) xi_{n+m,i,k}`` and kills the other
basis vectors.  A truncation keeps levels ``m <= M`` in the domain and
``m <= M + D`` in the codomain (``D`` the polynomial degree), so nothing is
lost on the output side: truncated norms are lower bounds of the true norm
and nondecreasing in ``M``.

Squared amplitudes stay exact rationals; square roots are taken only when a
numeric matrix is built.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, NamedTuple

import numpy as np
import scipy.linalg

from ._numeric import parse_number
from .chain import ChainError, FiniteStochasticMatrix, is_irreducible

__all__ = [
    "FockError",
    "FockBasisIndex",
    "TruncatedSubspace",
    "Term",
    "OperatorPolynomial",
    "TruncatedOperator",
    "NormSeries",
    "PeakingValue",
    "amplitude_squared",
    "enumerate_basis",
    "generator_matrix",
    "assemble",
    "truncated_norm",
    "converged_norm",
    "peaking_closed_form",
    "intertwiner_check",
    "unescorted_successors",
    "parse_polynomial",
]

DENSE_SVD_LIMIT = 2000
DIMENSION_CAP = 50_000
NORM_DEPTH_CAP = 24
NORM_CONVERGENCE_TOL = 1e-8


class FockError(ChainError):
    pass


class FockBasisIndex(NamedTuple):
    level: int
    state: int
    anchor: int


def amplitude_squared(P: FiniteStochasticMatrix, i: int, j: int, k: int, n: int, m: int):
    """``P^(n)_ij P^(m)_jk / P^(n+m)_ik``; zero when either leg vanishes."""
    num = P.power(n)[i][j] * P.power(m)[j][k]
    if not num:
        return num
    return num / P.power(n + m)[i][k]


@dataclass
class TruncatedSubspace:
    """Ordered bases of the truncated domain and codomain of ``H_{P,k}``."""

    P: FiniteStochasticMatrix
    anchor: int
    depth: int
    codomain_depth: int
    domain: tuple[FockBasisIndex, ...]
    codomain: tuple[FockBasisIndex, ...]
    _dom_index: dict = field(init=False, repr=False)
    _cod_index: dict = field(init=False, repr=False)

    def __post_init__(self):
        self._dom_index = {b: r for r, b in enumerate(self.domain)}
        self._cod_index = {b: r for r, b in enumerate(self.codomain)}

    def domain_position(self, b: FockBasisIndex) -> int:
        return self._dom_index[b]

    def codomain_position(self, b: FockBasisIndex) -> int:
        return self._cod_index[b]


def _levels(P: FiniteStochasticMatrix, k: int, upto: int) -> list[FockBasisIndex]:
    out = []
    for m in range(upto + 1):
        col = P.power(m)
        out.extend(FockBasisIndex(m, j, k) for j in P.states if col[j][k] > 0)
    return out


def enumerate_basis(P: FiniteStochasticMatrix, k: int, M: int, extra: int = 0) -> TruncatedSubspace:
    """Basis ``xi_{m,j,k}`` for ``m <= M`` (codomain up to ``M + extra``), level-major."""
    if M < 0:
        raise FockError("depth must be nonnegative")
    if not is_irreducible(P):
        raise FockError("the Fock truncation is built for irreducible matrices")
    cod = _levels(P, k, M + extra)
    dom = tuple(b for b in cod if b.level <= M)
    return TruncatedSubspace(P, k, M, M + extra, dom, tuple(cod))


class Term(NamedTuple):
    row: int
    col: int
    degree: int
    source: int
    target: int
    coeff: complex = 1


@dataclass(frozen=True)
class OperatorPolynomial:
    """``sum coeff * S_{source,target}^(degree)`` placed in blocks of an ``l x l`` matrix.

    ``source`` and ``target`` follow the index order of ``S_ij``: the
    generator maps ``xi_{m,target,k}`` into level ``m + degree`` at state
    ``source``.
    """

    block_size: int
    terms: tuple[Term, ...]

    @property
    def degree(self) -> int:
        return max((t.degree for t in self.terms), default=0)

    @classmethod
    def single(cls, i: int, j: int, n: int, coeff: complex = 1) -> "OperatorPolynomial":
        return cls(1, (Term(0, 0, n, i, j, coeff),))

    @classmethod
    def identity(cls, P: FiniteStochasticMatrix, block_size: int = 1) -> "OperatorPolynomial":
        terms = tuple(
            Term(r, r, 0, s, s, 1) for r in range(block_size) for s in P.states
        )
        return cls(block_size, terms)


@dataclass
class TruncatedOperator:
    """Numeric matrix of an operator restricted to a truncated ``H_{P,k}``.

    ``squared`` maps (codomain index, domain index) to the exact squared
    amplitude for single generators; it is empty for assembled polynomials.
    """

    subspace: TruncatedSubspace
    matrix: np.ndarray
    block_size: int = 1
    squared: dict = field(default_factory=dict)

    @property
    def anchor(self) -> int:
        return self.subspace.anchor

    def adjoint(self) -> np.ndarray:
        return self.matrix.conj().T


def generator_matrix(P: FiniteStochasticMatrix, i: int, j: int, n: int,
                     subspace: TruncatedSubspace) -> TruncatedOperator:
    """Matrix of ``S_ij^(n)`` on the truncation."""
    if not P.power(n)[i][j] > 0:
        raise FockError(f"({i}, {j}) is not an edge of Gr(P^{n})")
    if subspace.codomain_depth < subspace.depth + n:
        raise FockError("codomain truncation too shallow for this degree")
    k = subspace.anchor
    A = np.zeros((len(subspace.codomain), len(subspace.domain)), dtype=complex)
    squared = {}
    for col, b in enumerate(subspace.domain):
        if b.state != j:
            continue
        a2 = amplitude_squared(P, i, j, k, n, b.level)
        row = subspace.codomain_position(FockBasisIndex(b.level + n, i, k))
        squared[(row, col)] = a2
        A[row, col] = math.sqrt(a2)
    return TruncatedOperator(subspace, A, 1, squared)


def assemble(P: FiniteStochasticMatrix, poly: OperatorPolynomial, k: int, M: int,
             subspace: TruncatedSubspace | None = None) -> TruncatedOperator:
    """Block matrix of ``poly`` restricted to ``H_{P,k}`` with domain depth ``M``."""
    D = poly.degree
    sub = subspace or enumerate_basis(P, k, M, extra=D)
    rows, cols = len(sub.codomain), len(sub.domain)
    ell = poly.block_size
    A = np.zeros((ell * rows, ell * cols), dtype=complex)
    for t in poly.terms:
        if not (0 <= t.row < ell and 0 <= t.col < ell):
            raise FockError(f"term block ({t.row}, {t.col}) outside {ell}x{ell}")
        if not P.power(t.degree)[t.source][t.target] > 0:
            raise FockError(
                f"term S_{t.source}{t.target}^({t.degree}) is not in the graph of P^{t.degree}"
            )
        g = generator_matrix(P, t.source, t.target, t.degree, sub)
        A[t.row * rows:(t.row + 1) * rows, t.col * cols:(t.col + 1) * cols] += t.coeff * g.matrix
    return TruncatedOperator(sub, A, ell)


def _power_norm(A: np.ndarray, tol: float = 1e-12, max_iter: int = 10_000) -> float:
    rng = np.random.default_rng(0)
    x = rng.standard_normal(A.shape[1]) + 0j
    x /= np.linalg.norm(x)
    prev = 0.0
    for _ in range(max_iter):
        y = A.conj().T @ (A @ x)
        ray = float(np.vdot(x, y).real)
        resid = np.linalg.norm(y - ray * x)
        ny = np.linalg.norm(y)
        if ny == 0:
            return 0.0
        x = y / ny
        if resid <= tol * max(ray, 1e-300) and abs(ray - prev) <= tol * ray:
            break
        prev = ray
    return math.sqrt(max(ray, 0.0))


def truncated_norm(op) -> float:
    """Largest singular value: dense SVD up to 2000 rows/cols, power iteration above."""
    A = op.matrix if isinstance(op, TruncatedOperator) else np.asarray(op)
    if A.size == 0:
        return 0.0
    big = max(A.shape)
    if big > DIMENSION_CAP:
        raise FockError(f"dimension {big} exceeds the cap of {DIMENSION_CAP}")
    if big <= DENSE_SVD_LIMIT:
        return float(scipy.linalg.svdvals(A)[0])
    return _power_norm(A)


@dataclass
class NormSeries:
    value: float
    depth: int
    increment: float
    converged: bool
    history: list[float]


def converged_norm(P: FiniteStochasticMatrix, poly: OperatorPolynomial, k: int,
                   start: int = 0, cap: int = NORM_DEPTH_CAP,
                   tol: float = NORM_CONVERGENCE_TOL) -> NormSeries:
    """Increase the depth until successive truncated norms differ by less than ``tol``."""
    history = []
    for M in range(start, cap + 1):
        history.append(truncated_norm(assemble(P, poly, k, M)))
        if len(history) >= 2 and history[-1] - history[-2] < tol:
            return NormSeries(history[-1], M, history[-1] - history[-2], True, history)
    inc = history[-1] - history[-2] if len(history) > 1 else float("nan")
    return NormSeries(history[-1], cap, inc, False, history)


@dataclass
class PeakingValue:
    """Squared norm of ``S_kk^(n0)`` restricted to ``H_s``.

    ``value`` is the larger of the best scanned ratio and the limit
    ``P^(n0)_kk``; ``argmax`` is the maximizing ``m`` or ``None`` when the
    limit dominates.
    """

    value: Fraction
    argmax: int | None
    scanned: dict
    limit: Fraction


def peaking_closed_form(P: FiniteStochasticMatrix, k: int, n0: int, s: int,
                        M_sup: int | None = None) -> PeakingValue:
    """``sup_m P^(n0)_kk P^(m)_ks / P^(m+n0)_ks`` over ``m <= M_sup`` with ``P^(m)_ks > 0``."""
    if s == k:
        raise FockError("peaking value is defined for s != k")
    pkk = P.power(n0)[k][k]
    if not pkk > 0:
        raise FockError(f"P^({n0})_kk vanishes")
    if M_sup is None:
        M_sup = 4 * P.n_states**2 + n0
    ratios = {}
    for m in range(M_sup + 1):
        pks = P.power(m)[k][s]
        if pks > 0:
            ratios[m] = pkk * pks / P.power(m + n0)[k][s]
    if not ratios:
        raise FockError(f"state {s} is not reached from {k} within {M_sup} steps")
    m_best = max(ratios, key=lambda m: (ratios[m], -m))
    if ratios[m_best] >= pkk:
        return PeakingValue(ratios[m_best], m_best, ratios, pkk)
    return PeakingValue(pkk, None, ratios, pkk)


def unescorted_successors(P: FiniteStochasticMatrix, k: int) -> list[int]:
    """States ``s`` with ``P_ks > 0`` whose only predecessor is ``k``."""
    g = P.graph
    return sorted(s for s in g.successors[k] if g.predecessors[s] == frozenset({k}))


def _apply(P, gen, b: FockBasisIndex):
    """Image of a basis vector under ``S_ij^(n)``: (target, squared amplitude) or None."""
    i, j, n = gen
    if b.state != j:
        return None
    return FockBasisIndex(b.level + n, i, b.anchor), amplitude_squared(P, i, j, b.anchor, n, b.level)


def intertwiner_check(P: FiniteStochasticMatrix, k: int, s: int,
                      generators: Iterable[tuple[int, int, int]] | None = None,
                      M: int = 6):
    """Max deviation between ``S W`` and ``W S`` for ``W: xi_{m,j,k} -> xi_{m+1,j,s}``.

    Generators are ``(i, j, n)`` triples (default: every degree-0 and
    degree-1 generator).  Checked on basis vectors of ``H_k`` with
    ``m + n <= M``.  Exact matrices are compared in squared amplitudes, so the
    result is exactly zero when the two sides agree.
    """
    g = P.graph
    if not P.entry(k, s) > 0:
        raise FockError(f"P_{k}{s} vanishes")
    if g.predecessors[s] != frozenset({k}):
        if not unescorted_successors(P, k):
            raise FockError(f"state {k} is escorted; no intertwiner exists")
        raise FockError(f"state {s} has a predecessor other than {k}")
    if generators is None:
        generators = [(i, j, n) for n in (0, 1) for i in P.states for j in P.states
                      if P.power(n)[i][j] > 0]
    generators = list(generators)
    for i, j, n in generators:
        if not P.power(n)[i][j] > 0:
            raise FockError(f"({i}, {j}) is not an edge of Gr(P^{n})")
    basis = _levels(P, k, M)
    worst = P.zero
    for gen in generators:
        for b in basis:
            if b.level + gen[2] > M:
                continue
            ws = _apply(P, gen, b)
            wb = FockBasisIndex(b.level + 1, b.state, s)
            if not P.power(wb.level)[wb.state][s] > 0:
                raise FockError("W leaves the basis of H_s")
            sw = _apply(P, gen, wb)
            if ws is None and sw is None:
                continue
            if ws is None or sw is None:
                return float("inf")
            target_ws = FockBasisIndex(ws[0].level + 1, ws[0].state, s)
            if target_ws != sw[0]:
                return float("inf")
            if ws[1] != sw[1]:
                dev = abs(math.sqrt(ws[1]) - math.sqrt(sw[1]))
                worst = max(float(worst), dev) if dev else worst
    return worst


def parse_polynomial(text: str) -> OperatorPolynomial:
    """Polynomial file: lines ``term <r> <c> <n> <i> <j> <re> [<im>]``."""
    terms = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] != "term" or len(parts) not in (7, 8):
            raise FockError(f"line {lineno}: expected 'term <r> <c> <n> <i> <j> <re> [<im>]'")
        try:
            r, c, n, i, j = (int(x) for x in parts[1:6])
            re = float(parse_number(parts[6]))
            im = float(parse_number(parts[7])) if len(parts) == 8 else 0.0
        except (ValueError, ZeroDivisionError):
            raise FockError(f"line {lineno}: malformed term {line!r}") from None
        if min(r, c, n, i, j) < 0:
            raise FockError(f"line {lineno}: negative index")
        terms.append(Term(r, c, n, i, j, complex(re, im)))
    if not terms:
        raise FockError("polynomial file has no terms")
    ell = 1 + max(max(t.row, t.col) for t in terms)
    return OperatorPolynomial(ell, tuple(terms))

