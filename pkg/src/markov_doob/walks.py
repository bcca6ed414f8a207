"""Example chains: random walks on Z^d, the lamplighter group and a half-line chain."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from ._numeric import FLOAT_ROW_TOL, is_exact, parse_number
from .chain import ChainError, LazyChain

__all__ = [
    "LatticeMeasure",
    "LatticeWalk",
    "LamplighterElement",
    "zd_walk",
    "simple_walk",
    "biased_walk",
    "parse_measure",
    "lamplighter_walk",
    "lamplighter_generators",
    "halfline_chain",
    "vector_key",
    "parse_vector_key",
]


def vector_key(v: Sequence[int]) -> str:
    return ",".join(str(int(c)) for c in v)


def parse_vector_key(text: str) -> tuple[int, ...]:
    return tuple(int(c) for c in text.split(","))


def _span_is_full(vectors: Sequence[Sequence[int]], d: int) -> bool:
    """Whether the integer span of ``vectors`` is all of Z^d (Hermite reduction)."""
    rows = [list(v) for v in vectors if any(v)]
    det = 1
    r = 0
    for c in range(d):
        while True:
            live = [k for k in range(r, len(rows)) if rows[k][c] != 0]
            if not live:
                return False
            piv = min(live, key=lambda k: abs(rows[k][c]))
            rows[r], rows[piv] = rows[piv], rows[r]
            done = True
            for k in range(r + 1, len(rows)):
                if rows[k][c]:
                    q = rows[k][c] // rows[r][c]
                    rows[k] = [a - q * b for a, b in zip(rows[k], rows[r])]
                    if rows[k][c]:
                        done = False
            if done:
                break
        det *= abs(rows[r][c])
        r += 1
    return det == 1


@dataclass(frozen=True)
class LatticeMeasure:
    """Finitely supported probability measure on Z^d."""

    dimension: int
    support: tuple[tuple[tuple[int, ...], object], ...]

    def __post_init__(self):
        if self.dimension < 1:
            raise ChainError("dimension must be positive")
        seen = set()
        for v, p in self.support:
            if len(v) != self.dimension:
                raise ChainError(f"vector {v} does not have dimension {self.dimension}")
            if v in seen:
                raise ChainError(f"duplicate support vector {v}")
            seen.add(v)
            if not p > 0:
                raise ChainError(f"nonpositive weight {p} at {v}")
        total = sum(p for _, p in self.support)
        if self.exact:
            if total != 1:
                raise ChainError(f"measure weights sum to {total}, not 1")
        elif abs(float(total) - 1) > FLOAT_ROW_TOL:
            raise ChainError(f"measure weights sum to {float(total)}, not 1")
        if not _span_is_full([v for v, _ in self.support], self.dimension):
            raise ChainError(f"support does not span Z^{self.dimension}")

    @classmethod
    def from_dict(cls, weights: Mapping) -> "LatticeMeasure":
        items = []
        for v, p in weights.items():
            v = (v,) if isinstance(v, int) else tuple(v)
            items.append((v, p))
        d = len(items[0][0])
        return cls(d, tuple(sorted(items)))

    @property
    def exact(self) -> bool:
        return all(is_exact(p) for _, p in self.support)

    def weight(self, v) -> object:
        for y, p in self.support:
            if y == tuple(v):
                return p
        return 0

    @property
    def symmetric(self) -> bool:
        lookup = dict(self.support)
        return all(lookup.get(tuple(-c for c in v)) == p for v, p in self.support)

    @property
    def drift(self) -> tuple:
        return tuple(
            sum((v[i] * p for v, p in self.support), Fraction(0) if self.exact else 0.0)
            for i in range(self.dimension)
        )


class LatticeWalk(LazyChain):
    """Translation-invariant walk ``P_{x,y} = mu(y - x)`` on Z^d."""

    def __init__(self, measure: LatticeMeasure, name: str | None = None):
        self.measure = measure
        self.dimension = measure.dimension
        steps = measure.support

        def transition(x):
            return [(tuple(a + b for a, b in zip(x, y)), p) for y, p in steps]

        super().__init__(
            name or f"zd-walk(d={measure.dimension})",
            transition,
            key=vector_key,
            parse_key=parse_vector_key,
            exact=measure.exact,
        )

    @property
    def symmetric(self) -> bool:
        return self.measure.symmetric

    @property
    def origin(self) -> tuple[int, ...]:
        return (0,) * self.dimension

    def as_floating(self) -> "LatticeWalk":
        m = LatticeMeasure(self.dimension, tuple((v, float(p)) for v, p in self.measure.support))
        return LatticeWalk(m, self.name)


def zd_walk(measure: LatticeMeasure) -> LatticeWalk:
    return LatticeWalk(measure)


def simple_walk(d: int = 1) -> LatticeWalk:
    """Nearest-neighbour walk with weight 1/(2d) on each of ``±e_i``."""
    w = Fraction(1, 2 * d)
    support = []
    for i in range(d):
        for s in (1, -1):
            e = [0] * d
            e[i] = s
            support.append((tuple(e), w))
    return LatticeWalk(LatticeMeasure(d, tuple(support)), f"zd-simple(d={d})")


def biased_walk(p=Fraction(9, 10)) -> LatticeWalk:
    """Walk on Z stepping +1 with probability ``p`` and -1 otherwise."""
    if isinstance(p, str):
        p = parse_number(p)
    if not 0 < p < 1:
        raise ChainError("biased walk needs 0 < p < 1")
    return LatticeWalk(LatticeMeasure(1, (((1,), p), ((-1,), 1 - p))), f"zd-biased(p={p})")


def parse_measure(text: str) -> LatticeMeasure:
    """Measure file: lines ``<v1> ... <vd> <p>``; ``#`` comments."""
    items = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) < 2:
            raise ChainError(f"line {lineno}: expected '<v1> ... <vd> <p>'")
        try:
            v = tuple(int(c) for c in parts[:-1])
            p = parse_number(parts[-1])
        except (ValueError, ZeroDivisionError):
            raise ChainError(f"line {lineno}: malformed measure line {line!r}") from None
        items.append((v, p))
    if not items:
        raise ChainError("empty measure file")
    if any(isinstance(p, float) for _, p in items):
        items = [(v, float(p)) for v, p in items]
    return LatticeMeasure(len(items[0][0]), tuple(items))


@dataclass(frozen=True)
class LamplighterElement:
    """Element ``(x, w)`` of the lamplighter group: position and lit lamps."""

    position: tuple[int, ...]
    lamps: frozenset = frozenset()

    def key(self) -> str:
        lamps = ";".join(vector_key(v) for v in sorted(self.lamps))
        return f"{vector_key(self.position)}{{{lamps}}}"

    @classmethod
    def parse(cls, text: str) -> "LamplighterElement":
        pos, _, rest = text.partition("{")
        if not rest.endswith("}"):
            raise ChainError(f"bad lamplighter key {text!r}")
        body = rest[:-1]
        lamps = frozenset(parse_vector_key(s) for s in body.split(";")) if body else frozenset()
        return cls(parse_vector_key(pos), lamps)

    def __mul__(self, other: "LamplighterElement") -> "LamplighterElement":
        shifted = {tuple(a + b for a, b in zip(z, self.position)) for z in other.lamps}
        pos = tuple(a + b for a, b in zip(self.position, other.position))
        return LamplighterElement(pos, frozenset(self.lamps ^ shifted))

    def inverse(self) -> "LamplighterElement":
        pos = tuple(-a for a in self.position)
        lamps = frozenset(tuple(a + b for a, b in zip(z, pos)) for z in self.lamps)
        return LamplighterElement(pos, lamps)

    @classmethod
    def identity(cls, d: int) -> "LamplighterElement":
        return cls((0,) * d, frozenset())


def lamplighter_generators(d: int) -> dict[str, LamplighterElement]:
    """Moves ``±e_i`` with lamps untouched, and the toggle at the current position."""
    gens = {}
    zero = (0,) * d
    for i in range(d):
        for sign, label in ((1, "+"), (-1, "-")):
            e = [0] * d
            e[i] = sign
            gens[f"{label}e{i + 1}"] = LamplighterElement(tuple(e))
    gens["toggle"] = LamplighterElement(zero, frozenset({zero}))
    return gens


def lamplighter_walk(d: int = 1, weights: Mapping[str, object] | None = None) -> LazyChain:
    """Random walk ``g -> g * s`` on the lamplighter group over Z^d.

    ``weights`` maps generator labels (``+e1``, ``-e1``, ..., ``toggle``) to
    probabilities; the default is uniform over all ``2d + 1`` generators.
    """
    gens = lamplighter_generators(d)
    if weights is None:
        w = Fraction(1, len(gens))
        weights = {label: w for label in gens}
    unknown = set(weights) - set(gens)
    if unknown:
        raise ChainError(f"unknown lamplighter generators {sorted(unknown)}")
    for label, g in gens.items():
        inv = next(lab for lab, h in gens.items() if h == g.inverse())
        if weights.get(label, 0) != weights.get(inv, 0):
            raise ChainError(f"measure is not symmetric: {label} vs {inv}")
    steps = [(gens[label], p) for label, p in weights.items() if p]
    exact = all(is_exact(p) for _, p in steps)

    def transition(g: LamplighterElement):
        return [(g * s, p) for s, p in steps]

    return LazyChain(
        f"lamplighter(d={d})",
        transition,
        key=LamplighterElement.key,
        parse_key=LamplighterElement.parse,
        exact=exact,
    )


_TENTH = Fraction(1, 10)
_NINE_TENTHS = Fraction(9, 10)


def halfline_chain() -> LazyChain:
    """Chain on N: ``P_00 = P_{i,i-1} = 1/10`` and ``P_{i-1,i} = 9/10``."""

    def transition(i: int):
        if i < 0:
            raise ChainError(f"state {i} is not in N")
        return [(max(i - 1, 0), _TENTH), (i + 1, _NINE_TENTHS)]

    return LazyChain("halfline", transition, key=str, parse_key=int, exact=True)
