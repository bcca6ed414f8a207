"""State classification (exclusive, escorted, multiple arrival) and peaking witnesses.

For a finite irreducible matrix that is not a cycle, the boundary states are
exactly the escorted ones, and the norm of any operator matrix over the
tensor algebra is the maximum of its restrictions to ``H_{P,k}`` over
escorted ``k``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

from .chain import FiniteStochasticMatrix, NotIrreducibleError, is_irreducible, period_decomposition
from .fock import (
    FockError,
    OperatorPolynomial,
    PeakingValue,
    amplitude_squared,
    assemble,
    peaking_closed_form,
    truncated_norm,
    unescorted_successors,
)

__all__ = [
    "PeakingError",
    "StateClassification",
    "ArrivalReport",
    "PeakingReport",
    "MaxModulusReport",
    "escorted_states",
    "exclusive_states",
    "multiple_arrival",
    "arrival_horizon",
    "is_cycle",
    "classify",
    "peaking_witness",
    "escort_distances",
    "max_modulus_norm",
]

NOT_APPLICABLE = "not applicable: P is a cycle"
MAX_MODULUS_TOL = 1e-8


class PeakingError(FockError):
    pass


def _require_irreducible(P: FiniteStochasticMatrix) -> None:
    if not is_irreducible(P):
        raise NotIrreducibleError("matrix is not irreducible")


def escorted_states(P: FiniteStochasticMatrix) -> frozenset[int]:
    """States ``k`` all of whose successors have a second predecessor."""
    _require_irreducible(P)
    g = P.graph
    return frozenset(
        k for k in P.states
        if all(len(g.predecessors[s] - {k}) > 0 for s in g.successors[k])
    )


def exclusive_states(P: FiniteStochasticMatrix) -> frozenset[int]:
    """States forming a cyclic class on their own."""
    _require_irreducible(P)
    dec = period_decomposition(P)
    return frozenset(m[0] for m in dec.partition() if len(m) == 1)


def arrival_horizon(P: FiniteStochasticMatrix) -> int:
    """Number of powers after which positivity patterns repeat with the period."""
    n = P.n_states
    p = period_decomposition(P).period
    return p * ((n - 1) ** 2 + 1) + n * n


@dataclass
class ArrivalReport:
    holds: bool
    counterexample: tuple[int, int, int] | None
    horizon: int

    def __bool__(self) -> bool:
        return self.holds


def multiple_arrival(P: FiniteStochasticMatrix, horizon: int | None = None) -> ArrivalReport:
    """Whether every arrival at a non-exclusive state can come from two sources.

    The counterexample is ``(s, k, n)``: ``P^(n)_ks > 0`` while no other
    state reaches ``s`` in exactly ``n`` steps.
    """
    _require_irreducible(P)
    horizon = arrival_horizon(P) if horizon is None else horizon
    targets = [s for s in P.states if s not in exclusive_states(P)]
    if not targets:
        return ArrivalReport(True, None, horizon)
    # boolean powers suffice for positivity patterns
    succ = [set(P.graph.successors[i]) for i in P.states]
    reach = [{i} for i in P.states]
    for n in range(1, horizon + 1):
        reach = [set().union(*(succ[j] for j in r)) for r in reach]
        for s in targets:
            sources = [k for k in P.states if s in reach[k]]
            if len(sources) == 1 and sources[0] != s:
                return ArrivalReport(False, (s, sources[0], n), horizon)
    return ArrivalReport(True, None, horizon)


def is_cycle(P: FiniteStochasticMatrix) -> bool:
    g = P.graph
    return all(len(g.successors[i]) == 1 and len(g.predecessors[i]) == 1 for i in P.states)


@dataclass
class StateClassification:
    exclusive: frozenset[int]
    escorted: frozenset[int]
    boundary: frozenset[int] | str
    multiple_arrival: bool
    arrival_counterexample: tuple[int, int, int] | None
    is_cycle: bool
    period: int
    classes: list[tuple[int, ...]] = field(default_factory=list)


def classify(P: FiniteStochasticMatrix) -> StateClassification:
    _require_irreducible(P)
    dec = period_decomposition(P)
    exc = exclusive_states(P)
    esc = escorted_states(P)
    arr = multiple_arrival(P)
    cyc = is_cycle(P)
    boundary: frozenset[int] | str = NOT_APPLICABLE if cyc else esc
    if not cyc:
        if not esc:
            raise AssertionError("internal error: no escorted state in a non-cycle")
        if esc & exc:
            raise AssertionError("internal error: an exclusive state is escorted")
        if arr.holds and esc != frozenset(P.states) - exc:
            raise AssertionError("internal error: multiple arrival without full boundary")
    return StateClassification(
        exc, esc, boundary, arr.holds, arr.counterexample, cyc, dec.period, dec.partition()
    )


@dataclass
class PeakingReport:
    """Witness ``S_kk^(n0)`` peaking at ``k``.

    ``anchor_norm`` is the exact amplitude of ``xi_{0,k,k}`` (always 1).
    ``off_values`` maps each other state to the squared norm on ``H_s`` and
    ``margins`` to ``1 - value``.
    """

    state: int
    n0: int
    anchor_norm: Fraction
    anchor_numeric: float
    off_values: dict[int, PeakingValue]
    margins: dict[int, object]

    @property
    def certified(self) -> bool:
        return all(m > 0 for m in self.margins.values())


def peaking_witness(P: FiniteStochasticMatrix, k: int, depth: int = 8) -> PeakingReport:
    if k not in escorted_states(P):
        raise PeakingError(f"state {k} is not escorted")
    if is_cycle(P):
        raise PeakingError("P is a cycle")
    dec = period_decomposition(P)
    cls = dec.members(dec.classes[k])
    n0 = 1
    while not all(P.power(n0)[k][j] > 0 for j in cls):
        n0 += 1
    anchor = amplitude_squared(P, k, k, k, n0, 0)
    poly = OperatorPolynomial.single(k, k, n0)
    numeric = truncated_norm(assemble(P, poly, k, depth))
    off, margins = {}, {}
    for s in P.states:
        if s == k:
            continue
        v = peaking_closed_form(P, k, n0, s)
        off[s] = v
        margins[s] = 1 - v.value
    return PeakingReport(k, n0, anchor, numeric, off, margins)


def escort_distances(P: FiniteStochasticMatrix) -> dict[int, int]:
    """Length of the shortest chain of unescorted successors from each state to an escorted one.

    Along ``k -> s`` with ``s`` an unescorted successor the intertwiner gives
    ``norm on H_k at depth M - 1 <= norm on H_s at depth M``, so a state at
    distance ``L`` is compared against escorted states at depth ``M - L``.
    """
    esc = escorted_states(P)
    dist = {k: 0 for k in esc}
    # reverse BFS over edges k -> s with s unescorted successor of k
    back: dict[int, list[int]] = {s: [] for s in P.states}
    for k in P.states:
        for s in unescorted_successors(P, k):
            back[s].append(k)
    queue = deque(esc)
    while queue:
        s = queue.popleft()
        for k in back[s]:
            if k not in dist:
                dist[k] = dist[s] + 1
                queue.append(k)
    missing = set(P.states) - set(dist)
    if missing:
        raise PeakingError(f"states {sorted(missing)} never reach an escorted state")
    return dist


@dataclass
class MaxModulusReport:
    depth: int
    per_state: dict[int, float]
    matched_depths: dict[int, int]
    matched_norms: dict[int, float]
    full_max: float
    escorted_max: float
    argmax: int
    gap: float
    same_depth_max: float

    @property
    def passed(self) -> bool:
        return self.gap <= MAX_MODULUS_TOL


def max_modulus_norm(P: FiniteStochasticMatrix, poly: OperatorPolynomial, M: int) -> MaxModulusReport:
    """Per-state truncated norms and the matched-depth maximum-modulus gap.

    ``per_state`` holds every norm at depth ``M``.  For the comparison,
    escorted states stay at depth ``M`` and a non-escorted state at escort
    distance ``L`` is evaluated at depth ``max(M - L, 0)``; ``gap`` is the
    excess of the overall matched maximum over the escorted maximum.
    """
    _require_irreducible(P)
    if is_cycle(P):
        raise PeakingError("P is a cycle; the boundary is not defined")
    esc = escorted_states(P)
    dist = escort_distances(P)
    per_state = {k: truncated_norm(assemble(P, poly, k, M)) for k in P.states}
    depths = {k: max(M - dist[k], 0) for k in P.states}
    matched = {
        k: per_state[k] if depths[k] == M else truncated_norm(assemble(P, poly, k, depths[k]))
        for k in P.states
    }
    esc_max = max(matched[k] for k in esc)
    full = max(matched.values())
    argmax = min(k for k in P.states if matched[k] == full)
    return MaxModulusReport(
        M, per_state, depths, matched, full, esc_max, argmax, full - esc_max,
        max(per_state.values()),
    )
