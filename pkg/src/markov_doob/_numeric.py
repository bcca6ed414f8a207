"""Small numeric helpers shared by the exact-rational and floating code paths."""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational

FLOAT_ROW_TOL = 1e-12


def is_exact(x) -> bool:
    return isinstance(x, Rational)


def parse_number(text: str):
    """Parse ``a/b`` or an integer as a Fraction, anything else as a float."""
    text = text.strip()
    if "/" in text:
        num, den = text.split("/", 1)
        return Fraction(int(num), int(den))
    try:
        return Fraction(int(text))
    except ValueError:
        return float(text)


def format_number(x) -> str | float:
    """JSON-friendly form: exact values become ``a/b`` strings."""
    if isinstance(x, bool):
        return x
    if is_exact(x):
        return str(Fraction(x))
    return float(x)


def to_float(x) -> float:
    return float(x)


def close(a, b, exact: bool, rel: float = 1e-12) -> bool:
    if exact and is_exact(a) and is_exact(b):
        return a == b
    a, b = float(a), float(b)
    return abs(a - b) <= rel * max(1.0, abs(a), abs(b))


def integer_nth_root(n: int, k: int) -> int | None:
    """Return r with r**k == n, or None when n is not a perfect k-th power."""
    if n < 0:
        return None
    if n < 2:
        return n
    r = 1 << ((n.bit_length() + k - 1) // k)
    while True:
        s = ((k - 1) * r + n // r ** (k - 1)) // k
        if s >= r:
            break
        r = s
    return r if r**k == n else None


def exact_root(x: Fraction, k: int) -> Fraction | None:
    """Exact positive k-th root of a positive rational, if it is rational."""
    num = integer_nth_root(x.numerator, k)
    den = integer_nth_root(x.denominator, k)
    if num is None or den is None:
        return None
    return Fraction(num, den)


def nullspace_exact(rows: list[list[Fraction]], ncols: int) -> list[list[Fraction]]:
    """Basis of the right kernel by reduced row echelon form over Q."""
    m = [list(map(Fraction, r)) for r in rows]
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][c]
        m[r] = [v * inv for v in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for i, c in enumerate(pivots):
            v[c] = -m[i][f]
        basis.append(v)
    return basis


def safe_log(x) -> float:
    """log of a positive number that may be a huge-denominator Fraction."""
    if isinstance(x, Fraction):
        return math.log(x.numerator) - math.log(x.denominator)
    return math.log(x)
