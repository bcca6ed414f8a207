from __future__ import annotations

import random
from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from markov_doob.chain import PowerTable, conjugacy_check, explore_window
from markov_doob.doob import (
    DoobError,
    EigenPair,
    RatioCocycle,
    certify_doob_equivalence,
    conditional_probability,
    doob_transform,
    nonconjugate_doob_witness,
    parse_eigenfunction,
    ratio_identity_check,
    sigma_search,
    verify_eigenpair,
)
from markov_doob.walks import biased_walk, halfline_chain, simple_walk

from conftest import CYCLE2, irreducible_matrices, matrix, random_irreducible


def window(chain, radius):
    return explore_window(chain, [chain.origin], radius)


def exp_pair(base, lam):
    return EigenPair(lam, lambda x: F(base) ** x[0])


class TestConditionalProbability:
    def test_two_state(self, two_state):
        assert conditional_probability(two_state, 1, 0, 1, 1, 1) == F(2, 3)

    def test_zero_numerator(self, two_state):
        assert conditional_probability(two_state, 0, 0, 1, 1, 1) == 0

    def test_simple_walk(self):
        assert conditional_probability(simple_walk(1), (0,), (1,), (0,), 1, 1) == F(1, 2)

    def test_zero_denominator(self):
        with pytest.raises(DoobError):
            conditional_probability(simple_walk(1), (0,), (1,), (5,), 1, 1)


class TestVerifyEigenpair:
    def test_simple_constant(self):
        r = verify_eigenpair(simple_walk(1), lambda x: F(1), F(1), window(simple_walk(1), 10))
        assert r.passed and r.exact and r.max_residual == 0

    def test_biased_exponential(self):
        walk = biased_walk()
        r = verify_eigenpair(walk, lambda x: F(1, 3) ** x[0], F(3, 5), window(walk, 10))
        assert r.passed and r.max_residual == 0
        assert r.checked == 19  # interior of |x| <= 10

    def test_simple_linear(self):
        walk = simple_walk(1)
        w = explore_window(walk, [(0,)], 10)
        h = {x: F(x[0] + 1) for x in w if x[0] >= 0}
        states = sorted(h)
        r = verify_eigenpair(walk, h, F(1), states)
        assert r.passed and r.max_residual == 0

    def test_wrong_lambda(self):
        walk = biased_walk()
        r = verify_eigenpair(walk, lambda x: F(1, 3) ** x[0], F(1, 2), window(walk, 5))
        assert not r.passed and r.max_residual > 0

    def test_nonpositive(self, two_state):
        with pytest.raises(DoobError):
            verify_eigenpair(two_state, {0: F(1), 1: F(0)}, F(1))

    def test_float(self):
        walk = biased_walk().as_floating()
        r = verify_eigenpair(walk, lambda x: 3.0 ** -x[0], 0.6, window(walk, 8))
        assert r.passed and not r.exact and r.max_residual <= 1e-10


class TestDoobTransform:
    @given(irreducible_matrices())
    def test_identity(self, P):
        assert doob_transform(P, EigenPair(F(1), lambda i: F(1))) == P

    def test_biased_to_simple(self):
        walk = biased_walk()
        Q = doob_transform(walk, exp_pair(F(1, 3), F(3, 5)), window(walk, 10))
        for x in range(-5, 6):
            assert dict(Q.row((x,))) == {(x + 1,): F(1, 2), (x - 1,): F(1, 2)}

    def test_finite_nonconstant_rejected(self, two_state):
        with pytest.raises(DoobError, match="worst residual"):
            doob_transform(two_state, EigenPair(F(1), {0: F(1), 1: F(2)}))

    @given(irreducible_matrices(), st.integers(1, 50))
    def test_scaled_constant_and_involution(self, P, c):
        pair = EigenPair(F(1), {i: F(c) for i in P.states})
        Q = doob_transform(P, pair)
        assert Q == P
        assert doob_transform(Q, pair.inverse()) == P

    @given(st.fractions(min_value=F(1, 20), max_value=F(20), max_denominator=20))
    def test_biased_involution(self, u):
        walk = biased_walk()
        lam = F(9, 10) * u + F(1, 10) / u
        pair = exp_pair(u, lam)
        w = window(walk, 6)
        Q = doob_transform(walk, pair, w)
        back = doob_transform(Q, pair.inverse(), w)
        for x in w:
            assert dict(back.row(x)) == dict(walk.row(x))
            assert sum(p for _, p in Q.row(x)) == 1

    def test_lazy_name(self):
        walk = biased_walk()
        Q = doob_transform(walk, exp_pair(F(1, 3), F(3, 5)), window(walk, 3))
        assert Q.name.startswith("doob(")


class TestRatioCocycle:
    def test_cocycle(self):
        rng = random.Random(0)
        r = RatioCocycle(exp_pair(F(1, 3), F(3, 5)))
        for _ in range(100):
            i, j, k = ((rng.randint(-9, 9),) for _ in range(3))
            n, m = rng.randint(0, 6), rng.randint(0, 6)
            assert r(n, i, j) * r(m, j, k) == r(n + m, i, k)

    def test_two_state_trivial(self, two_state):
        ok, dev = ratio_identity_check(two_state, EigenPair(F(1), lambda i: F(1)), None, 5)
        assert ok and dev == 0

    def test_biased(self):
        walk = biased_walk()
        ok, dev = ratio_identity_check(walk, exp_pair(F(1, 3), F(3, 5)), window(walk, 8), 6)
        assert ok and dev == 0

    def test_biased_reversal(self):
        walk = biased_walk()
        ok, dev = ratio_identity_check(walk, exp_pair(F(1, 9), F(1)), window(walk, 8), 6)
        assert ok and dev == 0


class TestCertify:
    @given(irreducible_matrices())
    def test_reflexive(self, P):
        cert = certify_doob_equivalence(P, P, list(P.states), depth=4, samples=100)
        assert cert.certified and cert.lam == 1
        assert set(cert.h.values()) == {1}

    def test_biased_simple(self):
        walk = biased_walk()
        w = window(walk, 20)
        cert = certify_doob_equivalence(walk, simple_walk(1), lambda x: x, w, 6)
        assert cert.certified and cert.exact
        assert cert.lam == F(3, 5)
        assert cert.return_ratio == F(25, 9) and cert.n0 == 2
        assert all(cert.h[x] == F(1, 3) ** x[0] * cert.h[(0,)] for x in w)

    def test_halfline_doob(self):
        c = halfline_chain()
        w = explore_window(c, [0], 8)
        cert = certify_doob_equivalence(c, c, lambda x: x, w, 5)
        assert cert.certified

    def test_graph_mismatch_sizes(self, two_state):
        cert = certify_doob_equivalence(simple_walk(1), two_state)
        assert not cert.certified and cert.refutation == "graph"

    def test_graph_mismatch_finite(self, two_state):
        cert = certify_doob_equivalence(two_state, matrix(CYCLE2), [0, 1])
        assert not cert.certified and cert.refutation == "graph"

    def test_conditional_refutation(self):
        # same graph, not Doob equivalent: conditional probabilities differ
        P = matrix([["1/2", "1/2", 0], [0, "1/2", "1/2"], ["1/2", 0, "1/2"]])
        Q = matrix([["1/3", "2/3", 0], [0, "1/2", "1/2"], ["1/2", 0, "1/2"]])
        cert = certify_doob_equivalence(P, Q, [0, 1, 2])
        assert not cert.certified and cert.refutation == "conditional"
        i, j, k, n, m, cp, cq = cert.witness
        assert cp == conditional_probability(P, i, j, k, n, m)
        assert cq == conditional_probability(Q, i, j, k, n, m)
        assert cp != cq

    def test_search_sigma(self, two_state):
        swapped = two_state.relabel([1, 0])
        cert = certify_doob_equivalence(two_state, swapped)
        assert cert.certified and cert.sigma == {0: 1, 1: 0}

    def test_bad_sigma(self, two_state):
        with pytest.raises(DoobError):
            certify_doob_equivalence(two_state, two_state, [0, 0])

    def test_infinite_needs_window(self):
        with pytest.raises(DoobError):
            certify_doob_equivalence(simple_walk(1), simple_walk(1), lambda x: x)

    @given(st.integers(0, 2**31), st.integers(2, 6))
    def test_roundtrip_finite(self, seed, n):
        P = random_irreducible(random.Random(seed), n)
        Q = doob_transform(P, EigenPair(F(1), lambda i: F(1)))
        cert = certify_doob_equivalence(P, Q, list(P.states), depth=4, samples=200)
        assert cert.certified and cert.lam == 1

    @given(st.sampled_from([F(1, 3), F(1, 9), F(1, 2), F(2), F(3, 7)]))
    def test_roundtrip_biased(self, u):
        walk = biased_walk()
        lam = F(9, 10) * u + F(1, 10) / u
        w = window(walk, 12)
        Q = doob_transform(walk, exp_pair(u, lam), w)
        cert = certify_doob_equivalence(walk, Q, lambda x: x, w, 5, samples=300)
        assert cert.certified and cert.lam == lam
        h0 = u ** w.states[0][0]
        for x in w:
            assert cert.h[x] * h0 == u ** x[0] * cert.h[w.states[0]]

    def test_irrational_root_fallback(self):
        # alpha^(2)_00 = (1/2) / (4/9), so lambda = 2 sqrt(2) / 3 is irrational
        walk = biased_walk(F(2, 3))
        w = window(walk, 8)
        cert = certify_doob_equivalence(walk, simple_walk(1), lambda x: x, w, 5)
        assert cert.certified and not cert.exact
        assert any("irrational" in m for m in cert.warnings)
        assert cert.lam == pytest.approx(2 * 2**0.5 / 3, rel=1e-12)

    def test_unbiased_is_simple(self):
        lazy = biased_walk(F(1, 2))
        walk = simple_walk(1)
        assert certify_doob_equivalence(walk, lazy, lambda x: x, window(walk, 4), 4).lam == 1


class TestSigmaSearch:
    def test_two_state(self, two_state):
        assert sigma_search(two_state, two_state) == [(0, 1)]

    def test_cycle3(self, cycle3):
        assert sigma_search(cycle3, cycle3) == [(0, 1, 2), (1, 2, 0), (2, 0, 1)]

    def test_loop_count(self, two_state):
        assert sigma_search(matrix(CYCLE2), two_state) == []

    def test_limit(self):
        P = random_irreducible(random.Random(0), 11)
        with pytest.raises(DoobError):
            sigma_search(P, P)

    @given(irreducible_matrices(max_states=5), st.randoms())
    def test_relabel_found(self, P, rnd):
        sigma = list(P.states)
        rnd.shuffle(sigma)
        Q = P.relabel(sigma)
        found = sigma_search(P, Q)
        assert tuple(sigma) in found
        for s in found:
            for i in P.states:
                for j in P.states:
                    assert P.graph.has_edge(i, j) == Q.graph.has_edge(s[i], s[j])


class TestNonconjugateWitness:
    def test_biased_reversed(self):
        walk = biased_walk()
        w = window(walk, 10)
        Q, report = nonconjugate_doob_witness(walk, lambda x: F(1, 9) ** x[0], w)
        assert dict(Q.row((0,)))[(1,)] == F(1, 10)
        assert report.edge is not None
        assert report.certificate is not None and report.certificate.certified
        # the reflection x -> -x conjugates the reversed walk, so no multiset witness
        assert report.multiset_state is None

    def test_simple_linear(self):
        walk = simple_walk(1)
        states = [(x,) for x in range(0, 12)]
        h = {(x,): F(x + 1) for x in range(-1, 13)}
        Q, report = nonconjugate_doob_witness(walk, h, states)
        for x in range(0, 11):
            assert dict(Q.row((x,)))[(x + 1,)] == F(x + 2, 2 * x + 2)
        assert report.multiset_state is not None

    def test_constant(self, two_state):
        with pytest.raises(DoobError, match="constant"):
            nonconjugate_doob_witness(two_state, {0: F(1), 1: F(1)})

    def test_not_harmonic(self, two_state):
        with pytest.raises(DoobError):
            nonconjugate_doob_witness(two_state, {0: F(1), 1: F(2)})


def test_parse_eigenfunction():
    h = parse_eigenfunction("# h\n0 1\n1 1/3\n-1 3\n", simple_walk(1))
    assert h == {(0,): 1, (1,): F(1, 3), (-1,): 3}
    with pytest.raises(DoobError):
        parse_eigenfunction("0\n", simple_walk(1))


def test_conjugacy_of_reversal():
    # the reversed biased walk is conjugate to the original by reflection
    walk = biased_walk()
    rev = biased_walk(F(1, 10))
    table_p, table_q = PowerTable(walk), PowerTable(rev)
    for n in range(5):
        for y in range(-n, n + 1):
            assert table_p.entry(n, (0,), (y,)) == table_q.entry(n, (0,), (-y,))
    P = matrix([["1/2", "1/2"], ["1/3", "2/3"]])
    assert conjugacy_check(P, P, [0, 1])
