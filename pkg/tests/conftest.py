from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from markov_doob.chain import FiniteStochasticMatrix

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

F = Fraction


def matrix(rows) -> FiniteStochasticMatrix:
    """Dense nested lists (ints, Fractions or 'a/b' strings) to a matrix."""
    return FiniteStochasticMatrix.from_dense([[F(x) for x in r] for r in rows])


TWO_STATE = [[0, 1], ["1/2", "1/2"]]
CYCLE3 = [[0, 1, 0], [0, 0, 1], [1, 0, 0]]
CYCLE2 = [[0, 1], [1, 0]]
UNIFORM3 = [["1/3"] * 3] * 3
BIPARTITE = [[0, "1/2", "1/2"], [1, 0, 0], [1, 0, 0]]


@pytest.fixture
def two_state():
    return matrix(TWO_STATE)


@pytest.fixture
def cycle3():
    return matrix(CYCLE3)


@pytest.fixture
def cycle2():
    return matrix(CYCLE2)


@pytest.fixture
def uniform3():
    return matrix(UNIFORM3)


@pytest.fixture
def bipartite():
    return matrix(BIPARTITE)


def dense_power(rows, n):
    """Independent oracle: repeated dense Fraction multiplication."""
    size = len(rows)
    out = [[F(int(i == j)) for j in range(size)] for i in range(size)]
    for _ in range(n):
        out = [[sum(out[i][k] * rows[k][j] for k in range(size)) for j in range(size)]
               for i in range(size)]
    return out


def random_irreducible(rng: random.Random, n: int, density: float = 0.35,
                       max_weight: int = 6) -> FiniteStochasticMatrix:
    """Hamiltonian cycle plus random extra edges, rational weights."""
    order = list(range(n))
    rng.shuffle(order)
    nxt = {order[t]: order[(t + 1) % n] for t in range(n)}
    rows = []
    for i in range(n):
        targets = {nxt[i]} | {j for j in range(n) if rng.random() < density}
        targets = sorted(targets)
        w = [rng.randint(1, max_weight) for _ in targets]
        s = sum(w)
        rows.append([(j, F(x, s)) for j, x in zip(targets, w)])
    return FiniteStochasticMatrix.from_rows(rows)


@st.composite
def irreducible_matrices(draw, min_states: int = 1, max_states: int = 6):
    n = draw(st.integers(min_states, max_states))
    seed = draw(st.integers(0, 2**32 - 1))
    density = draw(st.sampled_from([0.0, 0.2, 0.4, 0.7]))
    return random_irreducible(random.Random(seed), n, density)
