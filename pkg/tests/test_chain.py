from __future__ import annotations

import math
import random
from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from markov_doob.chain import (
    BudgetExceededError,
    ChainError,
    FiniteStochasticMatrix,
    LazyChain,
    MatrixFormatError,
    NotIrreducibleError,
    PowerTable,
    conjugacy_check,
    explore_window,
    is_irreducible,
    parse_matrix,
    period_decomposition,
    power_entry,
    serialize_matrix,
)
from markov_doob.walks import halfline_chain, simple_walk

from conftest import CYCLE2, CYCLE3, TWO_STATE, dense_power, irreducible_matrices, matrix

TWO_STATE_TEXT = "states 2\n0 1 1\n1 0 1/2\n1 1 1/2\n"


class TestParse:
    def test_two_state(self):
        P = parse_matrix(TWO_STATE_TEXT)
        assert P == matrix(TWO_STATE)
        assert P.exact and P.numeric_mode == "exact-rational"

    def test_identity_1x1(self):
        P = parse_matrix("states 1\n0 0 1\n")
        assert P.n_states == 1 and P.dense() == [[1]]

    def test_row_sum_error(self):
        with pytest.raises(MatrixFormatError, match="row 0 sums to 0.6"):
            parse_matrix("states 2\n0 1 0.6\n1 0 1\n")

    def test_comments_and_decimal_mode(self):
        P = parse_matrix("# two states\nstates 2\n0 1 1.0  # edge\n1 0 0.5\n1 1 0.5\n")
        assert not P.exact
        assert P.entry(1, 0) == 0.5

    @pytest.mark.parametrize("text, msg", [
        ("0 1 1\n", "header"),
        ("states 2\n0 1\n", "expected"),
        ("states 2\n0 5 1\n1 0 1\n", "out of range"),
        ("states 2\n0 1 3/2\n1 0 1\n", "outside"),
        ("states 2\n0 1 1\n0 1 1\n1 0 1\n", "duplicate"),
        ("states 2\n0 1 x\n1 0 1\n", "malformed"),
        ("", "missing"),
    ])
    def test_errors(self, text, msg):
        with pytest.raises(MatrixFormatError, match=msg):
            parse_matrix(text)

    @given(irreducible_matrices())
    def test_roundtrip(self, P):
        assert parse_matrix(serialize_matrix(P)) == P

    def test_row_major_serialization(self):
        assert serialize_matrix(matrix(TWO_STATE)) == TWO_STATE_TEXT


class TestMatrixInvariants:
    def test_negative_rejected(self):
        with pytest.raises(ChainError):
            FiniteStochasticMatrix.from_rows([[(0, F(3, 2)), (1, F(-1, 2))], [(1, F(1))]])

    def test_float_tolerance(self):
        FiniteStochasticMatrix.from_rows([[(0, 0.1), (1, 0.9 + 1e-13)], [(1, 1.0)]])
        with pytest.raises(ChainError):
            FiniteStochasticMatrix.from_rows([[(0, 0.1), (1, 0.9 + 1e-9)], [(1, 1.0)]])

    def test_zero_entries_dropped(self):
        P = matrix([[0, 1], [1, 0]])
        assert P.row(0) == ((1, F(1)),)

    def test_graph(self, two_state):
        g = two_state.graph
        assert g.successors[0] == frozenset({1})
        assert g.predecessors[1] == frozenset({0, 1})
        assert g.has_edge(1, 1) and not g.has_edge(0, 0)


class TestIrreducible:
    def test_examples(self, two_state, cycle3):
        assert is_irreducible(two_state)
        assert is_irreducible(cycle3)
        assert not is_irreducible(matrix([[1, 0], [0, 1]]))

    def test_one_way(self):
        assert not is_irreducible(matrix([["1/2", "1/2"], [0, 1]]))


class TestPowers:
    def test_two_state_square(self, two_state):
        assert power_entry(two_state, 2, 0, 0) == F(1, 2)
        assert two_state.power(2) == [[F(1, 2), F(1, 2)], [F(1, 4), F(3, 4)]]

    def test_zero_power(self, two_state):
        assert power_entry(two_state, 0, 1, 1) == 1
        assert power_entry(two_state, 0, 0, 1) == 0

    def test_simple_walk(self):
        walk = simple_walk(1)
        assert power_entry(walk, 2, (0,), (0,)) == F(1, 2)
        for n in range(0, 9):
            expected = F(math.comb(2 * n, n), 4**n)
            assert power_entry(PowerTable(walk), 2 * n, (0,), (0,)) == expected

    def test_unreachable_is_zero(self):
        assert power_entry(simple_walk(1), 3, (0,), (10,)) == 0

    @given(irreducible_matrices(max_states=5), st.integers(0, 6), st.integers(0, 6))
    def test_chapman_kolmogorov(self, P, n, m):
        A, B, C = P.power(n), P.power(m), P.power(n + m)
        for i in P.states:
            for k in P.states:
                assert C[i][k] == sum(A[i][j] * B[j][k] for j in P.states)

    @given(irreducible_matrices(max_states=5), st.integers(0, 7))
    def test_against_dense_oracle(self, P, n):
        assert P.power(n) == dense_power(P.dense(), n)

    @given(irreducible_matrices(max_states=5), st.integers(1, 6))
    def test_positivity_is_path_existence(self, P, n):
        paths = [{i} for i in P.states]
        for _ in range(n):
            paths = [set().union(*(P.graph.successors[j] for j in r)) for r in paths]
        for i in P.states:
            for j in P.states:
                assert (P.power(n)[i][j] > 0) == (j in paths[i])

    @given(irreducible_matrices(max_states=5), st.integers(0, 5))
    def test_table_matches_matrix(self, P, n):
        table = PowerTable(P)
        for i in P.states:
            for j in P.states:
                assert table.entry(n, i, j) == P.power(n)[i][j]

    def test_lazy_chapman_kolmogorov(self):
        chain = halfline_chain()
        table = PowerTable(chain)
        for n, m in [(1, 2), (3, 3), (4, 1)]:
            for k in range(0, 4):
                lhs = table.entry(n + m, 0, k)
                rhs = sum(table.entry(n, 0, j) * table.entry(m, j, k)
                          for j in table.row_power(0, n))
                assert lhs == rhs

    def test_budget(self):
        table = PowerTable(simple_walk(2), budget=50)
        with pytest.raises(BudgetExceededError):
            table.row_power((0, 0), 10)

    def test_budget_env(self, monkeypatch):
        monkeypatch.setenv("MARKOV_DOOB_BUDGET", "20")
        with pytest.raises(BudgetExceededError):
            PowerTable(simple_walk(1)).row_power((0,), 10)


class TestPeriod:
    def test_cycle3(self, cycle3):
        dec = period_decomposition(cycle3)
        assert dec.period == 3
        assert dec.partition() == [(0,), (1,), (2,)]

    def test_two_state(self, two_state):
        dec = period_decomposition(two_state)
        assert dec.period == 1 and dec.partition() == [(0, 1)]

    def test_two_cycle(self):
        assert period_decomposition(matrix(CYCLE2)).period == 2

    def test_not_irreducible(self):
        with pytest.raises(NotIrreducibleError):
            period_decomposition(matrix([[1, 0], [0, 1]]))

    @given(irreducible_matrices(max_states=6))
    def test_edge_invariant(self, P):
        dec = period_decomposition(P)
        for i in P.states:
            for j, _ in P.row(i):
                assert dec.classes[j] == (dec.classes[i] + 1) % dec.period

    @given(irreducible_matrices(max_states=6), st.integers(0, 2**31))
    def test_period_from_random_cycles(self, P, seed):
        # gcd of lengths of random closed walks through state 0
        rng = random.Random(seed)
        g = 0
        for _ in range(200):
            state, length = 0, 0
            while True:
                state = rng.choice(sorted(P.graph.successors[state]))
                length += 1
                if state == 0:
                    break
            g = math.gcd(g, length)
        # the sampled gcd is a multiple of the period, and equal with high probability
        assert g % period_decomposition(P).period == 0

    def test_random_cycles_recover_period(self):
        P = matrix([[0, "1/2", "1/2", 0], [0, 0, 0, 1], [0, 0, 0, 1], [1, 0, 0, 0]])
        assert period_decomposition(P).period == 3
        rng = random.Random(0)
        g = 0
        for _ in range(1000):
            state, length = 0, 0
            while True:
                state = rng.choice(sorted(P.graph.successors[state]))
                length += 1
                if state == 0:
                    break
            g = math.gcd(g, length)
        assert g == 3


class TestConjugacy:
    def test_identity(self, two_state):
        assert conjugacy_check(two_state, two_state, [0, 1])

    def test_swap(self, two_state):
        assert conjugacy_check(two_state, two_state.relabel([1, 0]), [1, 0])
        assert not conjugacy_check(two_state, two_state.relabel([1, 0]), [0, 1])

    def test_different_entries(self, two_state):
        assert not conjugacy_check(two_state, matrix(CYCLE2), [0, 1])

    def test_not_bijective(self, two_state):
        with pytest.raises(ChainError):
            conjugacy_check(two_state, two_state, [0, 0])

    def test_mapping_sigma(self, two_state):
        assert conjugacy_check(two_state, two_state.relabel([1, 0]), {0: 1, 1: 0})

    @given(irreducible_matrices(max_states=6), st.randoms())
    def test_relabel(self, P, rnd):
        sigma = list(P.states)
        rnd.shuffle(sigma)
        assert conjugacy_check(P, P.relabel(sigma), sigma)


class TestWindow:
    def test_simple_walk(self):
        w = explore_window(simple_walk(1), [(0,)], 3)
        assert set(w) == {(x,) for x in range(-3, 4)}
        assert w.states[0] == (0,)

    def test_halfline(self):
        w = explore_window(halfline_chain(), [0], 2)
        assert set(w) == {0, 1, 2} and len(w) == 3

    def test_depth_zero(self):
        w = explore_window(simple_walk(2), [(0, 0), (3, 1)], 0)
        assert w.states == ((0, 0), (3, 1))

    def test_negative_depth(self):
        with pytest.raises(ValueError):
            explore_window(simple_walk(1), [(0,)], -1)

    def test_powers_cached(self):
        w = explore_window(halfline_chain(), [0], 2)
        assert w.table.entry(2, 0, 0) == F(1, 10) ** 2 + F(9, 10) * F(1, 10)


class TestLazyChain:
    def test_memoised_pure(self):
        calls = []

        def transition(i):
            calls.append(i)
            return [(i + 1, F(1))]

        c = LazyChain("shift", transition)
        assert c.row(0) == c.row(0)
        assert calls == [0]

    def test_validation(self):
        c = LazyChain("bad", lambda i: [(i, F(1, 2))])
        with pytest.raises(ChainError):
            c.row(0)
        with pytest.raises(ChainError):
            LazyChain("empty", lambda i: []).row(0)

    def test_as_floating(self):
        c = halfline_chain().as_floating()
        assert not c.exact
        assert dict(c.row(0)) == {0: 0.1, 1: 0.9}
