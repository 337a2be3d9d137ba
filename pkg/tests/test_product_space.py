from itertools import product

import numpy as np
import pytest
import scipy.sparse as sp

from meetwalk.config import ParameterError, StateBudgetError
from meetwalk.services.graph_core import RateMatrix, TransitionMatrix
from meetwalk.services.meeting_dtmc import meeting_times
from meetwalk.services.product_space import (
    MeetingSet,
    ProductIndex,
    build_graph,
    ctmc_product_adjacency,
    finite_region,
    finiteness_certificate,
    forward_closure,
    is_convergent,
    masked_product_matrix,
    meeting_distances,
    meeting_walk,
    product_adjacency,
    reaches_meeting_set,
)
from tests.conftest import random_rate, random_transition


def _brute_reach(factors, L, M):
    """Reachability of the meeting set through the materialized product support."""
    support = factors[0].toarray() > 0
    for f in factors[1:]:
        support = np.kron(support, f.toarray() > 0)
    target = MeetingSet.build(factors[0].n, L, M).mask
    reached = target.copy()
    while True:
        grown = reached | (support.astype(int) @ reached.astype(int) > 0)
        if np.array_equal(grown, reached):
            return reached
        reached = grown


class TestIndex:
    def test_row_major(self):
        index = ProductIndex(3, 2)
        assert index.flatten((1, 1)) == 0
        assert index.flatten((1, 3)) == 2
        assert index.flatten((2, 1)) == 3
        assert index.unflatten(5) == (2, 3)
        assert index.strides == (3, 1)

    def test_bijection(self):
        index = ProductIndex(3, 3)
        assert [index.flatten(index.unflatten(s)) for s in range(27)] == list(range(27))

    def test_label_range(self):
        with pytest.raises(ParameterError):
            ProductIndex(3, 2).flatten((0, 1))
        with pytest.raises(ParameterError):
            ProductIndex(3, 2).flatten((1, 2, 3))


class TestMeetingSet:
    def test_pair_is_diagonal(self):
        meeting = MeetingSet.build(3, 1, 1)
        assert meeting.indices().tolist() == [0, 4, 8]

    def test_group_counts(self):
        n, L, M = 4, 2, 2
        meeting = MeetingSet.build(n, L, M)
        total = n ** (L + M)
        disjoint = 0
        index = meeting.index
        for s in range(total):
            labels = index.unflatten(s)
            if not set(labels[:L]) & set(labels[L:]):
                disjoint += 1
                assert s not in meeting
            else:
                assert s in meeting
        assert len(meeting) == total - disjoint

    def test_evaders_may_share_a_node(self):
        meeting = MeetingSet.build(3, 1, 2)
        assert ProductIndex(3, 3).flatten((1, 2, 2)) not in meeting


class TestImplicitGraphs:
    def test_product_matches_kron(self, rng):
        factors = [random_transition(rng, 3) for _ in range(3)]
        graph = product_adjacency(factors)
        dense = np.kron(np.kron(factors[0].toarray(), factors[1].toarray()), factors[2].toarray())
        assert np.allclose(graph.to_sparse().toarray(), dense)
        x = rng.random(27)
        assert np.allclose(graph.matvec(x), dense @ x)
        rows = graph.matrix_rows(np.arange(27)).toarray()
        assert np.allclose(rows, dense)

        mask = rng.random(27) < 0.3
        assert np.array_equal(graph.preimage(mask), (dense > 0).astype(int) @ mask.astype(int) > 0)
        assert np.array_equal(graph.image(mask), (dense > 0).T.astype(int) @ mask.astype(int) > 0)

    def test_sum_matches_kronecker_sum(self, rng):
        rates = [random_rate(rng, 3) for _ in range(2)]
        graph = ctmc_product_adjacency(rates)
        I = np.eye(3)
        dense = np.kron(rates[0].toarray(), I) + np.kron(I, rates[1].toarray())
        assert np.allclose(graph.to_sparse().toarray(), dense)
        x = rng.random(9)
        assert np.allclose(graph.matvec(x), dense @ x)
        assert np.allclose(graph.matrix_rows(np.arange(9)).toarray(), dense)

    def test_sum_edges_change_one_coordinate(self, unit_rate2):
        graph = ctmc_product_adjacency([unit_rate2, unit_rate2])
        index = graph.index
        start = index.flatten((1, 2))
        assert sorted(index.unflatten(v) for v in graph.successors(start)) == [(1, 1), (2, 2)]

    def test_product_edges_need_every_factor(self):
        a = TransitionMatrix.from_dense([[0.0, 1.0], [1.0, 0.0]])
        b = TransitionMatrix.from_dense([[1.0, 0.0], [0.0, 1.0]])
        graph = product_adjacency([a, b])
        assert list(graph.successors(graph.index.flatten((1, 2)))) == [graph.index.flatten((2, 2))]

    def test_mixing_types(self, complete2, unit_rate2):
        with pytest.raises(ParameterError, match="cannot mix"):
            build_graph([complete2, unit_rate2])

    def test_budget(self, star20):
        with pytest.raises(StateBudgetError) as info:
            product_adjacency([star20, star20, star20], state_budget=1000)
        assert info.value.states == 8000

    def test_budget_from_environment(self, monkeypatch, star20):
        monkeypatch.setenv('MEETWALK_STATE_BUDGET', '100')
        with pytest.raises(StateBudgetError):
            product_adjacency([star20, star20])


class TestReachability:
    def test_matches_brute_force(self, rng):
        for _ in range(40):
            n = int(rng.integers(1, 4))
            factors = [random_transition(rng, n, 0.35) for _ in range(3)]
            L = int(rng.integers(1, 3))
            expected = _brute_reach(factors, L, 3 - L)
            assert np.array_equal(reaches_meeting_set(factors, L, 3 - L), expected)

    def test_ctmc_matches_brute_force(self, rng):
        for _ in range(20):
            rates = [random_rate(rng, 3, 0.4) for _ in range(2)]
            support = np.kron(rates[0].support().toarray(), np.eye(3)) + np.kron(np.eye(3), rates[1].support().toarray())
            reached = MeetingSet.build(3, 1, 1).mask
            for _ in range(9):
                reached = reached | (support.astype(int) @ reached.astype(int) > 0)
            assert np.array_equal(reaches_meeting_set(rates), reached)

    def test_swap_pair(self, swap2):
        assert reaches_meeting_set([swap2, swap2]).tolist() == [True, False, False, True]

    def test_distances(self, period_four_and_two):
        distances = meeting_distances(list(period_four_and_two))
        index = ProductIndex(4, 2)
        assert distances[index.flatten((1, 1))] == 0
        assert distances[index.flatten((2, 1))] == 1
        assert (distances >= 0).all()

    def test_meeting_walk(self, period_four_and_two):
        walks = meeting_walk(list(period_four_and_two), (1, 2))
        pursuer, evader = walks
        assert len(pursuer) == len(evader)
        assert pursuer[0] == 1 and evader[0] == 2
        assert pursuer[-1] == evader[-1]
        assert meeting_walk(list(period_four_and_two), (1, 1)) == [[1], [1]]

    def test_no_meeting_walk(self, swap2):
        assert meeting_walk([swap2, swap2], (1, 2)) is None


class TestFiniteRegion:
    def test_meeting_state_inherits_taint(self):
        # evader sits in 1 or moves 2 -> 1 -> 1; pursuer may run off to absorbing 3
        Pp = TransitionMatrix.from_dense([[0.5, 0.0, 0.5], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        Pe = TransitionMatrix.from_dense([[1.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        index = ProductIndex(3, 2)
        reach = reaches_meeting_set([Pp, Pe])
        finite = finite_region([Pp, Pe])
        # (1, 1) is a meeting state but the next step may land in (3, 1)
        assert reach[index.flatten((1, 1))]
        assert not finite[index.flatten((1, 1))]
        assert not finite[index.flatten((3, 1))]
        assert not finite[index.flatten((1, 2))]
        assert finite[index.flatten((2, 1))]
        assert finite[index.flatten((2, 2))]
        assert finite[index.flatten((3, 3))]

    def test_ctmc_meeting_states_are_finite(self):
        Qp = RateMatrix.from_dense([[-1.0, 0.0, 1.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
        Qe = RateMatrix.from_dense([[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
        finite = finite_region([Qp, Qe])
        index = ProductIndex(3, 2)
        assert finite[index.flatten((1, 1))]
        assert not finite[index.flatten((1, 2))]
        assert finite[index.flatten((3, 3))]
        assert not finite[index.flatten((3, 1))]

    def test_certificate(self, swap2):
        certificate = finiteness_certificate([swap2, swap2])
        assert not certificate.all_finite
        assert certificate.infinite_states == ((1, 2), (2, 1))
        assert certificate.to_dict()["infinite_states"] == [[1, 2], [2, 1]]


class TestConvergence:
    def test_simple_cases(self):
        assert is_convergent(sp.csr_matrix([[0.5]]))
        assert not is_convergent(sp.csr_matrix([[1.0]]))
        assert is_convergent(sp.csr_matrix([[0.0, 1.0], [0.0, 0.5]]))
        assert not is_convergent(sp.csr_matrix([[0.0, 1.0], [1.0, 0.0]]))

    def test_rejects_non_substochastic(self):
        with pytest.raises(ParameterError):
            is_convergent(sp.csr_matrix([[0.7, 0.7], [0.0, 0.0]]))

    def test_matches_spectral_radius(self, rng):
        for _ in range(100):
            n = int(rng.integers(1, 5))
            Pp, Pe = random_transition(rng, n, 0.4), random_transition(rng, n, 0.4)
            masked = masked_product_matrix([Pp, Pe]).toarray()
            radius = max(abs(np.linalg.eigvals(masked))) if masked.size else 0.0
            assert is_convergent(masked) == (radius < 1 - 1e-9)


def _finite_three_ways(Pp, Pe):
    reach = bool(reaches_meeting_set([Pp, Pe]).all())
    convergent = is_convergent(masked_product_matrix([Pp, Pe]))
    solved = meeting_times(Pp, Pe).all_finite
    return reach, convergent, solved


def test_finiteness_criteria_agree_on_two_node_supports():
    patterns = [(1.0, 0.0), (0.0, 1.0), (0.5, 0.5)]
    chains = [TransitionMatrix.from_dense([a, b]) for a, b in product(patterns, repeat=2)]
    outcomes = [_finite_three_ways(Pp, Pe) for Pp, Pe in product(chains, repeat=2)]
    assert len(outcomes) == 81
    for reach, convergent, solved in outcomes:
        assert reach == convergent == solved
    # both answers occur
    assert {o[0] for o in outcomes} == {True, False}


def test_finiteness_criteria_agree_on_random_three_node_pairs(rng):
    for _ in range(300):
        Pp, Pe = random_transition(rng, 3, 0.4), random_transition(rng, 3, 0.4)
        reach, convergent, solved = _finite_three_ways(Pp, Pe)
        assert reach == convergent == solved


class TestForwardClosure:
    def test_discrete_start_in_meeting_set_still_steps(self, swap2):
        graph = product_adjacency([swap2, swap2])
        meeting = MeetingSet.build(2, 1, 1).mask
        closure = forward_closure(graph, 0, meeting, discrete=True)
        assert closure.tolist() == [True, False, False, True]

    def test_continuous_start_in_meeting_set(self, unit_rate2):
        graph = ctmc_product_adjacency([unit_rate2, unit_rate2])
        meeting = MeetingSet.build(2, 1, 1).mask
        assert forward_closure(graph, 0, meeting, discrete=False).tolist() == [True, False, False, False]

    def test_stops_at_meeting_set(self, period_four_and_two):
        graph = product_adjacency(list(period_four_and_two))
        meeting = MeetingSet.build(4, 1, 1).mask
        start = graph.index.flatten((2, 1))
        closure = forward_closure(graph, start, meeting, discrete=True)
        assert np.flatnonzero(closure).tolist() == sorted([start, graph.index.flatten((3, 3))])
