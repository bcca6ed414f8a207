"""Doob transforms, the ratio cocycle and Doob-equivalence certification.

A positive eigenpair ``P h = lam h`` turns ``P`` into the stochastic matrix
``Q_ij = P_ij h(j) / (lam h(i))``.  :func:`certify_doob_equivalence` runs the
converse: from two chains with a common graph it rebuilds ``(h, lam)`` out of
the power ratios ``Q^(n) / P^(n)`` and checks that they explain ``Q``.

For infinite chains every claim is restricted to a finite window and power
depth, which the certificate records.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping

from ._numeric import close, exact_root, is_exact, parse_number
from .chain import ChainError, FiniteStochasticMatrix, LazyChain, PowerTable, Window

__all__ = [
    "DoobError",
    "EigenPair",
    "ResidualReport",
    "RatioCocycle",
    "DoobCertificate",
    "DisparityReport",
    "conditional_probability",
    "verify_eigenpair",
    "doob_transform",
    "ratio_identity_check",
    "certify_doob_equivalence",
    "sigma_search",
    "nonconjugate_doob_witness",
    "parse_eigenfunction",
]

FLOAT_RESIDUAL_TOL = 1e-10
SIGMA_SEARCH_LIMIT = 10
ENUMERATION_CAP = 20000


class DoobError(ChainError):
    pass


def _h_lookup(h) -> Callable:
    if isinstance(h, Mapping):
        return h.__getitem__
    if callable(h):
        return h
    raise TypeError("h must be a mapping or a callable")


@dataclass
class EigenPair:
    """Candidate eigenpair; ``h`` is a mapping over states or a callable."""

    lam: object
    h: Mapping | Callable

    def value(self, state):
        return _h_lookup(self.h)(state)

    def inverse(self) -> "EigenPair":
        """The pair ``(1/h, 1/lam)`` that undoes the transform by this pair."""
        get = _h_lookup(self.h)
        if isinstance(self.h, Mapping):
            inv = {s: 1 / v for s, v in self.h.items()}
        else:
            def inv(s):
                return 1 / get(s)
        return EigenPair(1 / self.lam, inv)


def _window_states(chain, window) -> tuple:
    if window is None:
        if getattr(chain, "finite", False):
            return tuple(chain.states)
        raise DoobError("infinite chains need an explicit window")
    if isinstance(window, Window):
        return window.states
    return tuple(window)


def _interior(chain, states) -> list:
    inside = set(states)
    return [s for s in states if all(t in inside for t, _ in chain.row(s))]


@dataclass
class ResidualReport:
    """Worst relative residual ``|(Ph)(i) - lam h(i)| / (lam h(i))``."""

    max_residual: object
    worst_state: object
    checked: int
    exact: bool
    passed: bool


def verify_eigenpair(P, h, lam, window=None) -> ResidualReport:
    """Check ``P h = lam h`` on every window state whose row stays in the window."""
    states = _window_states(P, window)
    get = _h_lookup(h.h if isinstance(h, EigenPair) else h)
    values = {}
    for s in states:
        v = get(s)
        if not v > 0:
            raise DoobError(f"h is not positive at state {P.key(s)}: {v}")
        values[s] = v
    exact = P.exact and is_exact(lam) and all(is_exact(v) for v in values.values())
    worst, worst_state = (Fraction(0) if exact else 0.0), None
    interior = _interior(P, states)
    for i in interior:
        ph = sum((p * values[j] for j, p in P.row(i)), Fraction(0) if exact else 0.0)
        target = lam * values[i]
        res = abs(ph - target) / target
        if not exact:
            res = float(res)
        if worst_state is None or res > worst:
            worst, worst_state = res, i
    passed = worst == 0 if exact else worst <= FLOAT_RESIDUAL_TOL
    return ResidualReport(worst, worst_state, len(interior), exact, passed)


def doob_transform(P, pair: EigenPair, window=None):
    """``Q_ij = P_ij h(j) / (lam h(i))`` after verifying the eigenpair.

    A finite matrix gives a :class:`FiniteStochasticMatrix`; a lazy chain gives
    a lazy chain (rows are produced wherever ``h`` is known).
    """
    report = verify_eigenpair(P, pair.h, pair.lam, window)
    if not report.passed:
        where = P.key(report.worst_state) if report.worst_state is not None else "?"
        raise DoobError(
            f"eigenpair check failed: worst residual {report.max_residual} at state {where}"
        )
    get = _h_lookup(pair.h)
    lam = pair.lam
    if getattr(P, "finite", False):
        exact = report.exact
        rows = []
        for i in P.states:
            hi = get(i)
            rows.append([(j, p * get(j) / (lam * hi)) for j, p in P.row(i)])
        if not exact:
            rows = [[(j, float(q)) for j, q in r] for r in rows]
        return FiniteStochasticMatrix.from_rows(rows, exact=exact)

    exact = report.exact

    def transition(i):
        hi = get(i)
        row = [(j, p * get(j) / (lam * hi)) for j, p in P.row(i)]
        return row if exact else [(j, float(q)) for j, q in row]

    return LazyChain(f"doob({P.name})", transition, P.key, P.parse_key, exact=exact)


class RatioCocycle:
    """``r^(n)_ij = lam^(-n) h(j) / h(i)`` of an eigenpair."""

    def __init__(self, pair: EigenPair):
        self.pair = pair
        self._h = _h_lookup(pair.h)

    def __call__(self, n: int, i, j):
        return self._h(j) / (self.pair.lam**n * self._h(i))


def conditional_probability(P, i, j, k, n: int, m: int, table: PowerTable | None = None):
    """``P^(n)_ij P^(m)_jk / P^(n+m)_ik``."""
    table = table or PowerTable(P)
    den = table.entry(n + m, i, k)
    if not den:
        raise DoobError(f"P^({n + m}) vanishes at ({P.key(i)}, {P.key(k)})")
    return table.entry(n, i, j) * table.entry(m, j, k) / den


def ratio_identity_check(P, pair: EigenPair, window=None, N: int = 6) -> tuple[bool, object]:
    """Compare ``Q^(n)_ij`` with ``r^(n)_ij P^(n)_ij`` for ``n <= N``.

    ``Q`` is the Doob transform; both sides come from separate power tables.
    Roots are the window states; for a mapping ``h``, roots whose ``N``-step
    reach leaves the domain of ``h`` are skipped.
    """
    Q = doob_transform(P, pair, window)
    r = RatioCocycle(pair)
    states = _window_states(P, window)
    tp, tq = PowerTable(P), PowerTable(Q)
    exact = P.exact and Q.exact
    domain = set(pair.h) if isinstance(pair.h, Mapping) else None
    worst = Fraction(0) if exact else 0.0
    for i in states:
        reach = [tp.row_power(i, n) for n in range(N + 1)]
        if domain is not None and any(j not in domain for lvl in reach for j in lvl):
            continue
        for n, lvl in enumerate(reach):
            qrow = tq.row_power(i, n)
            if qrow.keys() != lvl.keys():
                return False, float("inf")
            for j, pv in lvl.items():
                dev = abs(qrow[j] - r(n, i, j) * pv)
                if dev > worst:
                    worst = dev
    ok = worst == 0 if exact else float(worst) <= 1e-12
    return ok, worst


@dataclass
class DoobCertificate:
    """Outcome of :func:`certify_doob_equivalence`.

    When ``certified`` is true, ``Q_{sigma(i) sigma(j)} = P_ij h(j) / (lam h(i))``
    held on every window edge and the sampled power identities held up to
    ``depth``.  Otherwise ``refutation`` names the failing check and
    ``witness`` carries the data that re-evaluates as unequal.
    """

    certified: bool
    window: tuple
    depth: int
    sigma: dict = field(default_factory=dict)
    lam: object = None
    h: dict = field(default_factory=dict)
    i0: object = None
    n0: int | None = None
    return_ratio: object = None
    verified_edges: int = 0
    verified_samples: int = 0
    exact: bool = True
    refutation: str | None = None
    witness: tuple | None = None
    warnings: list[str] = field(default_factory=list)


def _sigma_fn(sigma, finite_n: int | None) -> Callable:
    if sigma is None:
        return lambda s: s
    if isinstance(sigma, Mapping):
        f = sigma.__getitem__
    elif callable(sigma):
        f = sigma
    else:
        seq = list(sigma)
        f = seq.__getitem__
    if finite_n is not None:
        image = [f(i) for i in range(finite_n)]
        if sorted(image) != list(range(finite_n)):
            raise DoobError("sigma is not a bijection of the state space")
    return f


def _refute(window, depth, kind, witness, **kw) -> DoobCertificate:
    return DoobCertificate(False, tuple(window), depth, refutation=kind, witness=witness, **kw)


def _enumerate_triples(states, tp: PowerTable, N: int, rng: random.Random, cap: int):
    """(i, j, k, n, m) with n + m in 1..N and both legs positive."""
    total = 0
    for i in states:
        for n in range(N + 1):
            for j in tp.row_power(i, n):
                for m in range(N + 1 - n):
                    if n + m:
                        total += len(tp.row_power(j, m))
                if total > cap:
                    break
    if total <= cap:
        for i in states:
            for n in range(N + 1):
                for j in tp.row_power(i, n):
                    for m in range(N + 1 - n):
                        if n + m:
                            for k in tp.row_power(j, m):
                                yield i, j, k, n, m
        return
    for _ in range(cap):
        i = rng.choice(states)
        n = rng.randrange(N + 1)
        m = rng.randrange(1 if n == 0 else 0, N - n + 1)
        j = rng.choice(list(tp.row_power(i, n)))
        k = rng.choice(list(tp.row_power(j, m)))
        yield i, j, k, n, m


def _find_conditional_mismatch(states, tp, tq, s, N, exact, rng, cap, counter=None):
    """First (i, j, k, n, m, cp, cq) whose conditional probabilities differ."""
    for i, j, k, n, m in _enumerate_triples(states, tp, N, rng, cap):
        cp = tp.entry(n, i, j) * tp.entry(m, j, k) / tp.entry(n + m, i, k)
        cq_den = tq.entry(n + m, s(i), s(k))
        if not cq_den:
            return (i, j, k, n, m, cp, 0)
        cq = tq.entry(n, s(i), s(j)) * tq.entry(m, s(j), s(k)) / cq_den
        if not close(cp, cq, exact, 1e-10):
            return (i, j, k, n, m, cp, cq)
        if counter is not None:
            counter[0] += 1
    return None


def certify_doob_equivalence(P, Q, sigma=None, window=None, depth: int = 6,
                             samples: int = 2000, seed: int = 0,
                             budget: int | None = None) -> DoobCertificate:
    """Certify ``Q ~ P^(h, lam)`` under ``sigma`` or return a refutation.

    Follows the constructive characterization: ``alpha^(n)_ij = Q^(n)/P^(n)``
    on the graph of ``P^n``; ``i0`` is the first window state and ``n0`` its
    minimal return time; ``lam = alpha^(n0)_{i0 i0}^(-1/n0)``;
    ``h(i) = lam^d alpha^(d)_{i0 i}`` with ``d`` the distance from ``i0``.
    The equality of conditional probabilities is read as quantifying over
    every intermediate ``j`` with both legs positive.

    Without ``sigma`` both chains must be finite with at most ten states;
    every graph isomorphism is tried in turn.
    """
    p_fin, q_fin = getattr(P, "finite", False), getattr(Q, "finite", False)
    if p_fin != q_fin:
        return _refute(
            _window_states(P, window) if (window is not None or p_fin) else (), depth,
            "graph", ("state-space", "finite" if p_fin else "infinite",
                      "finite" if q_fin else "infinite"),
        )
    if p_fin and P.n_states != Q.n_states:
        return _refute(tuple(P.states), depth, "graph", ("state-count", P.n_states, Q.n_states))
    if sigma is None and p_fin:
        isos = sigma_search(P, Q)
        if not isos:
            return _refute(tuple(P.states), depth, "graph", ("no-isomorphism",))
        first = None
        for iso in isos:
            cert = certify_doob_equivalence(P, Q, iso, window, depth, samples, seed, budget)
            if cert.certified:
                return cert
            first = first or cert
        first.warnings.append(f"no certificate under any of {len(isos)} graph isomorphisms")
        return first

    states = _window_states(P, window)
    if not states:
        raise DoobError("empty window")
    s = _sigma_fn(sigma, P.n_states if p_fin else None)
    rng = random.Random(seed)
    exact = P.exact and Q.exact
    warnings: list[str] = []
    sig = {i: s(i) for i in states}
    kw = dict(sigma=sig)

    for i in states:
        mapped = {s(j) for j, _ in P.row(i)}
        target = {j for j, _ in Q.row(s(i))}
        if mapped != target:
            return _refute(states, depth, "graph", ("edges", i, tuple(sorted(
                map(Q.key, mapped ^ target)))), **kw)

    tp, tq = PowerTable(P, budget), PowerTable(Q, budget)

    def alpha(n, i, j):
        p = tp.entry(n, i, j)
        q = tq.entry(n, s(i), s(j))
        if not p or not q:
            raise _Positivity((i, j, n, p, q))
        return q / p

    i0 = states[0]
    horizon = max(depth, len(states)) + 1
    n0 = next((n for n in range(1, horizon + 1) if tp.entry(n, i0, i0)), None)
    if n0 is None:
        raise DoobError(f"no return to {P.key(i0)} within {horizon} steps")
    try:
        a0 = alpha(n0, i0, i0)
    except _Positivity as e:
        return _refute(states, depth, "positivity", e.args[0], **kw)
    lam = None
    if exact:
        lam = exact_root(1 / a0, n0)
        if lam is None:
            warnings.append(
                f"lam = ({a0})^(-1/{n0}) is irrational; continuing in floating point"
            )
            exact = False
    if lam is None:
        lam = float(a0) ** (-1.0 / n0)

    dist = {i0: 0}
    m = 0
    while len(dist) < len(states) and m < horizon + len(states):
        m += 1
        for t in tp.row_power(i0, m):
            dist.setdefault(t, m)
    missing = [t for t in states if t not in dist]
    if missing:
        raise DoobError(f"window state {P.key(missing[0])} not reached from {P.key(i0)}")
    h = {}
    try:
        for i in states:
            d = dist[i]
            val = lam**d * alpha(d, i0, i)
            h[i] = val if exact else float(val)
    except _Positivity as e:
        return _refute(states, depth, "positivity", e.args[0], **kw)

    base = dict(sigma=sig, lam=lam, h=h, i0=i0, n0=n0, return_ratio=a0, exact=exact,
                warnings=warnings)
    edges = 0
    for i in states:
        qrow = dict(Q.row(s(i)))
        for j, p in P.row(i):
            if j not in h:
                continue
            predicted = p * h[j] / (lam * h[i])
            actual = qrow[s(j)]
            if not close(predicted, actual, exact, 1e-10):
                mismatch = _find_conditional_mismatch(states, tp, tq, s, depth, exact, rng,
                                                      ENUMERATION_CAP)
                if mismatch is not None:
                    return _refute(states, depth, "conditional", mismatch, **base)
                return _refute(states, depth, "transform", (i, j, predicted, actual), **base)
            edges += 1

    counter = [0]
    mismatch = _find_conditional_mismatch(states, tp, tq, s, depth, exact, rng,
                                          max(samples, 1), counter)
    if mismatch is not None:
        return _refute(states, depth, "conditional", mismatch, **base)
    checked = counter[0]
    inv_lam = 1 / lam
    for i in states:
        for n in range(1, depth + 1):
            if tp.entry(n, i, i):
                try:
                    a = alpha(n, i, i)
                except _Positivity as e:
                    return _refute(states, depth, "positivity", e.args[0], **base)
                if not close(a, inv_lam**n, exact, 1e-10):
                    return _refute(states, depth, "return-ratio", (i, n, a, inv_lam**n), **base)
                checked += 1
    for _ in range(max(samples // 4, 1)):
        i = rng.choice(states)
        mm = rng.randrange(0, depth)
        n = rng.randrange(1, depth - mm + 1)
        common = [j for j in tp.row_power(i, mm) if tp.entry(n + mm, i, j)]
        if not common:
            continue
        j = rng.choice(common)
        try:
            lhs, rhs = alpha(n + mm, i, j), inv_lam**n * alpha(mm, i, j)
        except _Positivity as e:
            return _refute(states, depth, "positivity", e.args[0], **base)
        if not close(lhs, rhs, exact, 1e-10):
            return _refute(states, depth, "shift", (i, j, n, mm, lhs, rhs), **base)
        checked += 1

    return DoobCertificate(True, tuple(states), depth, verified_edges=edges,
                           verified_samples=checked, **base)


class _Positivity(Exception):
    pass


def _invariant(P: FiniteStochasticMatrix, i: int) -> tuple:
    g = P.graph
    return (len(g.successors[i]), len(g.predecessors[i]), i in g.successors[i])


def sigma_search(P: FiniteStochasticMatrix, Q: FiniteStochasticMatrix) -> list[tuple[int, ...]]:
    """All graph isomorphisms ``Gr(P) -> Gr(Q)`` by degree-pruned backtracking."""
    n = P.n_states
    if n > SIGMA_SEARCH_LIMIT or Q.n_states > SIGMA_SEARCH_LIMIT:
        raise DoobError(f"sigma search is limited to {SIGMA_SEARCH_LIMIT} states")
    if n != Q.n_states:
        return []
    gp, gq = P.graph, Q.graph
    inv_p = [_invariant(P, i) for i in range(n)]
    inv_q = [_invariant(Q, i) for i in range(n)]
    if sorted(inv_p) != sorted(inv_q):
        return []
    order = sorted(range(n), key=lambda i: (-len(gp.successors[i]) - len(gp.predecessors[i]), i))
    assign: dict[int, int] = {}
    used: set[int] = set()
    found: list[tuple[int, ...]] = []

    def consistent(i: int, a: int) -> bool:
        for j, b in assign.items():
            if (j in gp.successors[i]) != (b in gq.successors[a]):
                return False
            if (i in gp.successors[j]) != (a in gq.successors[b]):
                return False
        return True

    def extend(pos: int) -> None:
        if pos == n:
            found.append(tuple(assign[i] for i in range(n)))
            return
        i = order[pos]
        for a in range(n):
            if a in used or inv_q[a] != inv_p[i] or not consistent(i, a):
                continue
            assign[i] = a
            used.add(a)
            extend(pos + 1)
            del assign[i]
            used.discard(a)

    extend(0)
    return sorted(found)


@dataclass
class DisparityReport:
    """Evidence that ``Q = P^(h,1)`` is Doob-equivalent but not identical to ``P``.

    ``edge`` is a window edge where ``Q`` and ``P`` differ, so the identity map
    is not a conjugacy.  ``multiset_state`` is a window state whose row
    multiset of ``Q`` occurs in no window row of ``P``, which rules out every
    relabelling; it is ``None`` when the row multisets agree (e.g. a
    reflection may still conjugate the two chains).
    """

    residual: ResidualReport
    edge: tuple
    multiset_state: object
    certificate: DoobCertificate | None
    window: tuple


def nonconjugate_doob_witness(P, h, window=None, depth: int = 4):
    """Transform ``P`` by a nonconstant positive harmonic ``h``; return ``(Q, report)``."""
    states = _window_states(P, window)
    report = verify_eigenpair(P, h, Fraction(1) if P.exact else 1.0, window)
    get = _h_lookup(h)
    values = {get(s) for s in states}
    if not report.passed:
        raise DoobError(f"h is not harmonic: worst residual {report.max_residual}")
    if report.exact:
        constant = len(values) == 1
    else:
        constant = max(values) - min(values) <= 1e-12 * max(values)
    if constant:
        raise DoobError("h is constant on the window; no Doob witness exists")
    pair = EigenPair(Fraction(1) if report.exact else 1.0, h)
    Q = doob_transform(P, pair, window)
    interior = _interior(P, states)
    edge = None
    for i in interior:
        qrow = dict(Q.row(i))
        for j, p in P.row(i):
            if not close(p, qrow[j], report.exact):
                edge = (i, j, p, qrow[j])
                break
        if edge:
            break
    if edge is None:
        raise DoobError("no disparity found on the window interior")

    def multiset(chain, i):
        return tuple(sorted(p if report.exact else round(float(p), 12) for _, p in chain.row(i)))

    p_rows = {multiset(P, i) for i in interior}
    multiset_state = next((i for i in interior if multiset(Q, i) not in p_rows), None)
    cert = None
    if interior:
        sub = tuple(interior)
        try:
            cert = certify_doob_equivalence(P, Q, None if P.finite else (lambda x: x), sub,
                                            depth, samples=200)
        except (DoobError, ChainError, KeyError):
            cert = None
    return Q, DisparityReport(report, edge, multiset_state, cert, tuple(states))


def parse_eigenfunction(text: str, chain) -> dict:
    """Eigenfunction file: lines ``<state-key> <value>``."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise DoobError(f"line {lineno}: expected '<state-key> <value>'")
        out[chain.parse_key(parts[0])] = parse_number(parts[1])
    return out
