"""Finite stochastic matrices, lazily explored countable chains and their powers.

Two chain flavours share one small protocol used by every other module:

* ``chain.row(state)`` returns the transition row as a tuple of
  ``(target, probability)`` pairs with strictly positive probabilities;
* ``chain.exact`` tells whether probabilities are :class:`fractions.Fraction`
  (exact mode) or floats;
* ``chain.key(state)`` / ``chain.parse_key(text)`` convert states to and from
  printable keys.

:class:`FiniteStochasticMatrix` has states ``0..n-1``; :class:`LazyChain` wraps a
pure transition function over an arbitrary hashable state type.
"""

from __future__ import annotations

import math
import os
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Hashable, Iterable, Mapping, Sequence

import numpy as np

from ._numeric import FLOAT_ROW_TOL, is_exact, parse_number

__all__ = [
    "ChainError",
    "MatrixFormatError",
    "NotIrreducibleError",
    "BudgetExceededError",
    "FiniteStochasticMatrix",
    "TransitionGraph",
    "LazyChain",
    "PowerTable",
    "CyclicDecomposition",
    "Window",
    "parse_matrix",
    "serialize_matrix",
    "is_irreducible",
    "power_entry",
    "period_decomposition",
    "conjugacy_check",
    "explore_window",
    "default_budget",
]

DEFAULT_BUDGET = 10**7


class ChainError(ValueError):
    """Invalid chain input or an operation whose preconditions fail."""


class MatrixFormatError(ChainError):
    pass


class NotIrreducibleError(ChainError):
    pass


class BudgetExceededError(ChainError):
    pass


def default_budget() -> int:
    """Exploration budget in state-level pairs; ``MARKOV_DOOB_BUDGET`` overrides."""
    env = os.environ.get("MARKOV_DOOB_BUDGET")
    return int(env) if env else DEFAULT_BUDGET


def _check_row(state, row, exact: bool) -> None:
    if not row:
        raise ChainError(f"state {state!r} has an empty transition row")
    seen = set()
    total = 0
    for target, p in row:
        if target in seen:
            raise ChainError(f"duplicate entry ({state!r}, {target!r})")
        seen.add(target)
        if not 0 < p <= 1:
            raise ChainError(f"probability {p} at ({state!r}, {target!r}) outside (0, 1]")
        total += p
    if exact:
        if total != 1:
            raise ChainError(f"row {state!r} sums to {total}, not 1")
    elif abs(float(total) - 1.0) > FLOAT_ROW_TOL:
        raise ChainError(f"row {state!r} sums to {float(total)!r}, not 1")


@dataclass(frozen=True)
class TransitionGraph:
    """Successor and predecessor sets of ``Gr(P)``."""

    successors: tuple[frozenset[int], ...]
    predecessors: tuple[frozenset[int], ...]

    def has_edge(self, i: int, j: int) -> bool:
        return j in self.successors[i]


@dataclass(frozen=True)
class FiniteStochasticMatrix:
    """Sparse row-stochastic matrix over states ``0..n_states-1``.

    ``rows[i]`` holds ``(j, P_ij)`` pairs sorted by ``j``; only strictly
    positive entries are stored.  In exact mode each probability is a
    ``Fraction`` and rows sum to exactly one.
    """

    n_states: int
    rows: tuple[tuple[tuple[int, object], ...], ...]
    exact: bool = True
    _powers: list = field(default_factory=list, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n_states < 1:
            raise ChainError("a stochastic matrix needs at least one state")
        if len(self.rows) != self.n_states:
            raise ChainError(f"expected {self.n_states} rows, got {len(self.rows)}")
        for i, row in enumerate(self.rows):
            for j, p in row:
                if not 0 <= j < self.n_states:
                    raise ChainError(f"index {j} out of range in row {i}")
                if self.exact and not is_exact(p):
                    raise ChainError(f"non-rational entry {p!r} in exact mode")
            _check_row(i, row, self.exact)

    @classmethod
    def from_rows(cls, rows: Sequence[Iterable[tuple[int, object]]], exact: bool | None = None):
        rows = [sorted((int(j), p) for j, p in row if p != 0) for row in rows]
        if exact is None:
            exact = all(is_exact(p) for row in rows for _, p in row)
        conv = Fraction if exact else float
        return cls(len(rows), tuple(tuple((j, conv(p)) for j, p in row) for row in rows), exact)

    @classmethod
    def from_dense(cls, dense, exact: bool | None = None) -> "FiniteStochasticMatrix":
        """Build from a nested sequence or array; ints and Fractions give exact mode."""
        rows = [[(j, p) for j, p in enumerate(row) if p != 0] for row in dense]
        if isinstance(dense, np.ndarray) and dense.dtype != object:
            exact = False if exact is None else exact
            rows = [[(j, float(p)) for j, p in r] for r in rows]
        return cls.from_rows(rows, exact)

    @property
    def numeric_mode(self) -> str:
        return "exact-rational" if self.exact else "floating"

    @property
    def states(self) -> range:
        return range(self.n_states)

    def row(self, state: int):
        return self.rows[state]

    def entry(self, i: int, j: int):
        for t, p in self.rows[i]:
            if t == j:
                return p
        return Fraction(0) if self.exact else 0.0

    def key(self, state: int) -> str:
        return str(state)

    def parse_key(self, text: str) -> int:
        return int(text)

    @property
    def zero(self):
        return Fraction(0) if self.exact else 0.0

    @property
    def one(self):
        return Fraction(1) if self.exact else 1.0

    def dense(self) -> list[list]:
        out = [[self.zero] * self.n_states for _ in range(self.n_states)]
        for i, row in enumerate(self.rows):
            for j, p in row:
                out[i][j] = p
        return out

    def to_numpy(self) -> np.ndarray:
        return np.array([[float(p) for p in r] for r in self.dense()], dtype=float)

    @cached_property
    def graph(self) -> TransitionGraph:
        succ = [frozenset(j for j, _ in row) for row in self.rows]
        pred: list[set[int]] = [set() for _ in self.states]
        for i, s in enumerate(succ):
            for j in s:
                pred[j].add(i)
        return TransitionGraph(tuple(succ), tuple(frozenset(p) for p in pred))

    def power(self, n: int) -> list[list]:
        """Dense ``P^n``; powers are cached, ``P^0`` is the identity."""
        if n < 0:
            raise ValueError("negative power")
        if not self._powers:
            self._powers.append(
                [[self.one if i == j else self.zero for j in self.states] for i in self.states]
            )
        while len(self._powers) <= n:
            prev = self._powers[-1]
            nxt = [[self.zero] * self.n_states for _ in self.states]
            for i in self.states:
                pi = prev[i]
                acc = nxt[i]
                for k in self.states:
                    a = pi[k]
                    if a:
                        for j, p in self.rows[k]:
                            acc[j] += a * p
            self._powers.append(nxt)
        return self._powers[n]

    def relabel(self, sigma: Sequence[int]) -> "FiniteStochasticMatrix":
        """The matrix Q with ``Q[sigma[i]][sigma[j]] = P[i][j]``."""
        inv = [0] * self.n_states
        for i, s in enumerate(sigma):
            inv[s] = i
        rows = [[(sigma[j], p) for j, p in self.rows[inv[a]]] for a in self.states]
        return FiniteStochasticMatrix.from_rows(rows, self.exact)

    def as_floating(self) -> "FiniteStochasticMatrix":
        return FiniteStochasticMatrix.from_rows(
            [[(j, float(p)) for j, p in row] for row in self.rows], exact=False
        )

    def __hash__(self):
        return hash((self.n_states, self.rows, self.exact))


class LazyChain:
    """Countable-state chain given by a pure transition function.

    Rows are validated and memoized on first access.

    Parameters
    ----------
    name : str
        Descriptive name, used in reports.
    transition : callable
        ``state -> iterable of (state, probability)``.
    key, parse_key : callable
        State codec to and from canonical printable keys.
    exact : bool
        Whether the transition function returns Fractions.
    """

    finite = False

    def __init__(
        self,
        name: str,
        transition: Callable[[Hashable], Iterable[tuple[Hashable, object]]],
        key: Callable[[Hashable], str] = str,
        parse_key: Callable[[str], Hashable] = int,
        exact: bool = True,
    ):
        self.name = name
        self._transition = transition
        self.key = key
        self.parse_key = parse_key
        self.exact = exact
        self._rows: dict = {}

    def row(self, state):
        try:
            return self._rows[state]
        except KeyError:
            pass
        merged: dict = {}
        for t, p in self._transition(state):
            if p:
                merged[t] = merged.get(t, 0) + p
        row = tuple(merged.items())
        _check_row(state, row, self.exact)
        self._rows[state] = row
        return row

    @property
    def zero(self):
        return Fraction(0) if self.exact else 0.0

    @property
    def one(self):
        return Fraction(1) if self.exact else 1.0

    def as_floating(self) -> "LazyChain":
        base = self

        def transition(state):
            return [(t, float(p)) for t, p in base.row(state)]

        return LazyChain(self.name, transition, self.key, self.parse_key, exact=False)

    def __repr__(self):
        return f"LazyChain({self.name!r}, exact={self.exact})"


FiniteStochasticMatrix.finite = True


class PowerTable:
    """Memoized rows ``P^(n)_{i,.}`` computed by forward propagation.

    The number of stored (state, level) pairs is capped by ``budget``.
    """

    def __init__(self, chain, budget: int | None = None):
        self.chain = chain
        self.budget = default_budget() if budget is None else budget
        self.explored_pairs = 0
        self._levels: dict = {}

    def row_power(self, i, n: int) -> dict:
        if n < 0:
            raise ValueError("negative power")
        levels = self._levels.get(i)
        if levels is None:
            levels = self._levels[i] = [{i: self.chain.one}]
            self._charge(1)
        while len(levels) <= n:
            nxt: dict = {}
            for s, a in levels[-1].items():
                for t, p in self.chain.row(s):
                    nxt[t] = nxt.get(t, 0) + a * p
            self._charge(len(nxt))
            levels.append(nxt)
        return levels[n]

    def entry(self, n: int, i, j):
        return self.row_power(i, n).get(j, self.chain.zero)

    def _charge(self, count: int) -> None:
        self.explored_pairs += count
        if self.explored_pairs > self.budget:
            raise BudgetExceededError(
                f"exploration budget of {self.budget} state-level pairs exceeded"
            )


def power_entry(table, n: int, i, j):
    """``P^(n)_ij``; ``table`` may be a :class:`PowerTable` or a chain."""
    if not isinstance(table, PowerTable):
        if getattr(table, "finite", False):
            return table.power(n)[i][j]
        table = PowerTable(table)
    return table.entry(n, i, j)


@dataclass(frozen=True)
class CyclicDecomposition:
    period: int
    classes: tuple[int, ...]

    def members(self, c: int) -> tuple[int, ...]:
        return tuple(i for i, k in enumerate(self.classes) if k == c)

    def partition(self) -> list[tuple[int, ...]]:
        return [self.members(c) for c in range(self.period)]


def _reach(adj, start: int) -> set[int]:
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return seen


def is_irreducible(P: FiniteStochasticMatrix) -> bool:
    """True iff ``Gr(P)`` is strongly connected (forward and backward reach of 0)."""
    g = P.graph
    n = P.n_states
    return len(_reach(g.successors, 0)) == n and len(_reach(g.predecessors, 0)) == n


def period_decomposition(P: FiniteStochasticMatrix) -> CyclicDecomposition:
    """Period and cyclic classes from BFS levels out of state 0."""
    if not is_irreducible(P):
        raise NotIrreducibleError("period is defined for irreducible matrices only")
    level = [-1] * P.n_states
    level[0] = 0
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v in P.graph.successors[u]:
            if level[v] < 0:
                level[v] = level[u] + 1
                queue.append(v)
    g = 0
    for u in P.states:
        for v in P.graph.successors[u]:
            g = math.gcd(g, abs(level[u] + 1 - level[v]))
    return CyclicDecomposition(g, tuple(lv % g for lv in level))


def _as_mapping(sigma, n: int) -> list[int]:
    if isinstance(sigma, Mapping):
        seq = [sigma[i] for i in range(n)]
    else:
        seq = list(sigma)
    if len(seq) != n or sorted(seq) != list(range(n)):
        raise ChainError("sigma is not a bijection of the state space")
    return seq


def conjugacy_check(P: FiniteStochasticMatrix, Q: FiniteStochasticMatrix, sigma) -> bool:
    """True iff ``P_ij == Q_{sigma(i) sigma(j)}`` for every pair of states."""
    if P.n_states != Q.n_states:
        raise ChainError("sigma cannot be a bijection between different state counts")
    s = _as_mapping(sigma, P.n_states)
    exact = P.exact and Q.exact
    for i in P.states:
        mapped = {s[j]: p for j, p in P.row(i)}
        qrow = dict(Q.row(s[i]))
        if mapped.keys() != qrow.keys():
            return False
        for j, p in mapped.items():
            q = qrow[j]
            if exact:
                if p != q:
                    return False
            elif abs(float(p) - float(q)) > FLOAT_ROW_TOL:
                return False
    return True


@dataclass
class Window:
    """States reachable from ``roots`` within ``depth`` steps, in discovery order."""

    states: tuple
    roots: tuple
    depth: int
    table: PowerTable

    def __contains__(self, state) -> bool:
        return state in self._index

    def __iter__(self):
        return iter(self.states)

    def __len__(self):
        return len(self.states)

    @cached_property
    def _index(self) -> frozenset:
        return frozenset(self.states)


def explore_window(chain, roots: Iterable, depth: int, budget: int | None = None,
                   table: PowerTable | None = None) -> Window:
    """Reach of ``roots`` within ``depth`` steps, with their power rows cached."""
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    roots = tuple(roots)
    table = table or PowerTable(chain, budget)
    order: dict = {}
    for r in roots:
        order.setdefault(r, None)
    for r in roots:
        for m in range(depth + 1):
            for s in table.row_power(r, m):
                order.setdefault(s, None)
    return Window(tuple(order), roots, depth, table)


def parse_matrix(text: str) -> FiniteStochasticMatrix:
    """Parse the ``.stoch`` format.

    ``#`` starts a comment; the first content line is ``states <N>``; every
    other line is ``<i> <j> <p>`` with 0-based indices.  Probabilities written
    as integers or ``a/b`` are exact; a single decimal literal switches the
    whole matrix to floating mode.
    """
    n = None
    entries: dict[tuple[int, int], object] = {}
    decimal = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if n is None:
            if len(parts) != 2 or parts[0] != "states":
                raise MatrixFormatError(f"line {lineno}: expected 'states <N>' header")
            try:
                n = int(parts[1])
            except ValueError:
                raise MatrixFormatError(f"line {lineno}: bad state count {parts[1]!r}") from None
            if n < 1:
                raise MatrixFormatError(f"line {lineno}: state count must be positive")
            continue
        if len(parts) != 3:
            raise MatrixFormatError(f"line {lineno}: expected '<i> <j> <p>'")
        try:
            i, j = int(parts[0]), int(parts[1])
            p = parse_number(parts[2])
        except (ValueError, ZeroDivisionError):
            raise MatrixFormatError(f"line {lineno}: malformed entry {line!r}") from None
        if not (0 <= i < n and 0 <= j < n):
            raise MatrixFormatError(f"line {lineno}: index out of range for {n} states")
        if not 0 <= p <= 1:
            raise MatrixFormatError(f"line {lineno}: probability {parts[2]} outside [0, 1]")
        if (i, j) in entries:
            raise MatrixFormatError(f"line {lineno}: duplicate entry ({i}, {j})")
        decimal |= isinstance(p, float)
        entries[(i, j)] = p
    if n is None:
        raise MatrixFormatError("missing 'states <N>' header")
    rows: list[list] = [[] for _ in range(n)]
    for (i, j), p in sorted(entries.items()):
        if p != 0:
            rows[i].append((j, float(p) if decimal else p))
    for i, row in enumerate(rows):
        total = sum(p for _, p in row)
        if decimal:
            bad = abs(total - 1.0) > FLOAT_ROW_TOL
        else:
            bad = total != 1
        if bad:
            raise MatrixFormatError(f"row {i} sums to {total}, not 1")
    return FiniteStochasticMatrix.from_rows(rows, exact=not decimal)


def serialize_matrix(P: FiniteStochasticMatrix) -> str:
    lines = [f"states {P.n_states}"]
    for i, row in enumerate(P.rows):
        for j, p in row:
            lines.append(f"{i} {j} {p if P.exact else repr(float(p))}")
    return "\n".join(lines) + "\n"
