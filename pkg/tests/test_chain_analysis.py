import math
from itertools import product

import numpy as np
import pytest

from meetwalk.config import ParameterError
from meetwalk.services.chain_analysis import (
    classify_pair,
    classify_pair_ctmc,
    classify_tuple,
    decompose,
    is_sa_overlap,
    stationary_distribution,
    stationary_distribution_ctmc,
)
from meetwalk.services.graph_core import RateMatrix, TransitionMatrix, equal_neighbor_matrix, generate
from tests.conftest import random_transition


def _cycle(n):
    P = np.zeros((n, n))
    for i in range(n):
        P[i, (i + 1) % n] = 1.0
    return TransitionMatrix.from_dense(P)


class TestDecompose:
    def test_irreducible_aperiodic(self, star20):
        d = decompose(star20)
        assert d.is_irreducible
        assert d.is_ergodic
        assert d.periods == (1,)

    def test_cycle_period(self):
        d = decompose(_cycle(4))
        assert d.classes == ((1, 2, 3, 4),)
        assert d.periods == (4,)
        assert not d.is_ergodic

    def test_transient_and_absorbing(self, period_four_and_two):
        _, evader = period_four_and_two
        d = decompose(evader)
        assert d.classes == ((1, 3), (2,), (4,))
        assert d.absorbing == (True, False, False)
        assert d.absorbing_periods() == [2]
        assert d.single_absorbing

    def test_singleton_without_self_loop_has_period_one(self):
        P = TransitionMatrix.from_dense([[0.0, 1.0], [0.0, 1.0]])
        d = decompose(P)
        assert d.classes == ((1,), (2,))
        assert d.periods == (1, 1)
        assert d.absorbing == (False, True)

    def test_identity_has_one_class_per_node(self):
        d = decompose(TransitionMatrix.identity(3))
        assert len(d.absorbing_classes()) == 3
        assert not d.single_absorbing

    def test_to_dict(self, swap2):
        assert decompose(swap2).to_dict() == {
            'n': 2,
            'classes': [{'nodes': [1, 2], 'kind': 'absorbing', 'period': 2}],
        }

    def test_random_partition_and_periods(self, rng):
        for _ in range(50):
            n = int(rng.integers(1, 8))
            P = random_transition(rng, n, density=0.3)
            d = decompose(P)
            nodes = sorted(k for c in d.classes for k in c)
            assert nodes == list(range(1, n + 1))

            support = P.support().toarray().astype(int)
            power = np.eye(n, dtype=int)
            returns = {k: [] for k in range(n)}
            for length in range(1, n + 1):
                power = np.minimum(power @ support, 1)
                for k in range(n):
                    if power[k, k]:
                        returns[k].append(length)
            for cls, period in zip(d.classes, d.periods):
                lengths = [length for k in cls for length in returns[k - 1]]
                expected = math.gcd(*lengths) if lengths else 1
                assert period == expected


class TestStationary:
    def test_star3(self):
        pi = stationary_distribution(equal_neighbor_matrix(generate('star', n=3)))
        assert np.allclose(pi, np.array([3, 2, 2]) / 7, atol=1e-12)

    def test_ring_is_uniform(self, ring4):
        assert np.allclose(stationary_distribution(ring4), np.full(4, 0.25), atol=1e-12)

    def test_periodic_chain_still_has_one(self, swap2):
        assert np.allclose(stationary_distribution(swap2), [0.5, 0.5])

    def test_zero_on_transient_nodes(self, period_four_and_two):
        _, evader = period_four_and_two
        assert np.allclose(stationary_distribution(evader), [0.5, 0, 0.5, 0])

    def test_not_unique(self):
        with pytest.raises(ParameterError, match="stationary distribution not unique"):
            stationary_distribution(TransitionMatrix.identity(2))

    def test_ctmc(self):
        Q = RateMatrix.from_dense([[-2.0, 2.0], [1.0, -1.0]])
        assert np.allclose(stationary_distribution_ctmc(Q), [1 / 3, 2 / 3], atol=1e-12)

    def test_balance(self, rng):
        for _ in range(20):
            P = random_transition(rng, 6, density=0.6)
            try:
                pi = stationary_distribution(P)
            except ParameterError:
                continue
            assert abs(pi.sum() - 1) < 1e-12
            assert np.max(np.abs(pi @ P.toarray() - pi)) < 1e-10


class TestClassify:
    def test_star_is_one_ergodic(self, star20):
        c = classify_pair(star20, star20)
        assert (c.one_ergodic, c.sa_overlap, c.all_overlap, c.finite) == (True, True, True, True)
        assert c.witness is None

    def test_ergodic_against_identity(self, star20):
        c = classify_pair(star20, TransitionMatrix.identity(20))
        assert c.one_ergodic and c.all_overlap and c.finite
        assert not c.sa_overlap

    def test_swap_pair_is_infinite(self, swap2):
        c = classify_pair(swap2, swap2)
        assert not c.sa_overlap
        assert not c.finite
        assert c.witness == (1, 2)
        assert c.to_dict()['witness'] == [1, 2]

    def test_identity_pair(self):
        I = TransitionMatrix.identity(2)
        c = classify_pair(I, I)
        assert not c.all_overlap
        assert not c.finite

    def test_finite_without_sufficient_conditions(self, period_four_and_two):
        c = classify_pair(*period_four_and_two)
        assert not c.one_ergodic
        assert not c.sa_overlap
        assert not c.all_overlap
        assert c.finite

    def test_ctmc_ignores_periods(self):
        Q = RateMatrix.from_dense([[-1.0, 1.0], [1.0, -1.0]])
        c = classify_pair_ctmc(Q, Q)
        assert c.one_ergodic and c.sa_overlap and c.all_overlap and c.finite

    def test_dimension_mismatch(self, complete2, star20):
        with pytest.raises(ParameterError, match="dimension mismatch"):
            classify_pair(complete2, star20)

    def test_tuple_needs_each_pursuer_to_pair(self, complete2, swap2):
        assert classify_tuple([complete2, complete2], [complete2]).sa_overlap
        assert is_sa_overlap([complete2, swap2, swap2], L=2) is False
        assert is_sa_overlap([swap2, complete2], L=1) is True

    def test_hierarchy_on_random_pairs(self, rng):
        for _ in range(500):
            n = int(rng.integers(1, 6))
            c = classify_pair(random_transition(rng, n, 0.4), random_transition(rng, n, 0.4))
            if c.one_ergodic or c.sa_overlap:
                assert c.all_overlap
            if c.all_overlap:
                assert c.finite


def test_two_node_supports_all_overlap_iff_finite():
    patterns = [(1.0, 0.0), (0.0, 1.0), (0.5, 0.5)]
    chains = [TransitionMatrix.from_dense([a, b]) for a, b in product(patterns, repeat=2)]
    assert len(chains) == 9
    for Pp, Pe in product(chains, repeat=2):
        c = classify_pair(Pp, Pe)
        assert c.all_overlap == c.finite
