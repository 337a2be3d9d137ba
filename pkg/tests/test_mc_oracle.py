import numpy as np
import pytest

from meetwalk.config import ParameterError
from meetwalk.services.graph_core import RateMatrix, TransitionMatrix, equal_neighbor_matrix, generate
from meetwalk.services.mc_oracle import simulate_ctmc, simulate_dtmc
from meetwalk.services.meeting_ctmc import ctmc_group_meeting_times, ctmc_meeting_times
from meetwalk.services.meeting_dtmc import group_meeting_times, meeting_times
from tests.conftest import random_rate, random_transition


class TestDiscrete:
    def test_single_node_meets_after_one_step(self):
        one = TransitionMatrix.from_dense([[1.0]])
        estimate = simulate_dtmc([one], [one], (1, 1), trials=100)
        assert estimate.mean == 1.0
        assert estimate.std_error == 0.0
        assert estimate.censored == 0

    def test_two_node_complete(self, complete2):
        estimate = simulate_dtmc([complete2], [complete2], (1, 2), trials=20000, seed=3)
        assert estimate.within(2.0)
        assert not estimate.lower_bound_only

    def test_same_seed_same_estimate(self, complete2):
        a = simulate_dtmc([complete2], [complete2], (1, 2), trials=10000, seed=11, workers=1)
        b = simulate_dtmc([complete2], [complete2], (1, 2), trials=10000, seed=11, workers=4)
        assert a == b

    def test_seed_changes_estimate(self, complete2):
        a = simulate_dtmc([complete2], [complete2], (1, 2), trials=10000, seed=1)
        b = simulate_dtmc([complete2], [complete2], (1, 2), trials=10000, seed=2)
        assert a.mean != b.mean

    def test_censoring(self, swap2):
        estimate = simulate_dtmc([swap2], [swap2], (1, 2), trials=50, horizon=10 ** 4)
        assert estimate.censored == 50
        assert estimate.mean is None
        assert estimate.lower_bound_only
        assert estimate.within(float('inf'))
        assert estimate.to_dict()['lower_bound_only'] is True

    def test_group(self, complete2):
        estimate = simulate_dtmc([complete2, complete2], [complete2], (1, 1, 2), trials=20000, seed=5)
        assert estimate.within(4 / 3)

    def test_invalid_start(self, complete2):
        with pytest.raises(ParameterError, match="start tuple"):
            simulate_dtmc([complete2], [complete2], (1, 3))
        with pytest.raises(ParameterError):
            simulate_dtmc([complete2], [complete2], (1,))

    def test_agrees_with_closed_form(self, rng):
        for _ in range(5):
            Pp, Pe = random_transition(rng, 4, 0.6), random_transition(rng, 4, 0.6)
            result = meeting_times(Pp, Pe)
            if not result.all_finite:
                continue
            start = result.worst_start()
            estimate = simulate_dtmc([Pp], [Pe], start, trials=20000, seed=7)
            assert estimate.within(result.value(start))


class TestContinuous:
    def test_two_nodes(self, unit_rate2):
        estimate = simulate_ctmc([unit_rate2], [unit_rate2], (1, 2), trials=20000, seed=1)
        assert estimate.time_unit == 'continuous'
        assert estimate.within(0.5)

    def test_co_located_start(self, unit_rate2):
        estimate = simulate_ctmc([unit_rate2], [unit_rate2], (2, 2), trials=10)
        assert estimate.mean == 0.0
        assert estimate.censored == 0

    def test_frozen_walkers_are_censored(self):
        frozen = RateMatrix.from_dense(np.zeros((2, 2)))
        estimate = simulate_ctmc([frozen], [frozen], (1, 2), trials=10)
        assert estimate.censored == 10
        assert estimate.mean is None

    def test_agrees_with_closed_form(self, rng):
        checked = 0
        for _ in range(5):
            Qp, Qe = random_rate(rng, 3, 0.8), random_rate(rng, 3, 0.8)
            result = ctmc_meeting_times(Qp, Qe)
            if not result.all_finite:
                continue
            start = result.worst_start()
            estimate = simulate_ctmc([Qp], [Qe], start, trials=20000, seed=9)
            assert estimate.within(result.value(start))
            checked += 1
        assert checked > 0

    def test_faster_rates_shrink_times(self, unit_rate2):
        base = simulate_ctmc([unit_rate2], [unit_rate2], (1, 2), trials=20000, seed=6)
        fast = unit_rate2.scaled(10.0)
        scaled = simulate_ctmc([fast], [fast], (1, 2), trials=20000, seed=6)
        assert scaled.within(0.05)
        assert scaled.mean == pytest.approx(base.mean / 10, rel=1e-9)

    def test_group(self, unit_rate2):
        estimate = simulate_ctmc([unit_rate2, unit_rate2], [unit_rate2], (1, 1, 2), trials=20000, seed=4)
        assert estimate.within(1 / 3)


@pytest.mark.slow
def test_star_worst_start_full_protocol(star20):
    result = meeting_times(star20, star20)
    start = result.worst_start()
    estimate = simulate_dtmc([star20], [star20], start, trials=10 ** 5, seed=0)
    assert estimate.within(result.value(start))


@pytest.mark.slow
def test_ring_group_full_protocol():
    ring = equal_neighbor_matrix(generate('ring', n=5))
    result = group_meeting_times([ring, ring], [ring])
    start = result.worst_start()
    estimate = simulate_dtmc([ring, ring], [ring], start, trials=10 ** 5, seed=0)
    assert estimate.within(result.value(start))


@pytest.mark.slow
def test_random_pairs_full_protocol(rng):
    checked = 0
    for k in range(200):
        n = int(rng.integers(2, 9))
        Pp, Pe = random_transition(rng, n, 0.5), random_transition(rng, n, 0.5)
        result = meeting_times(Pp, Pe)
        if not result.all_finite:
            continue
        start = result.worst_start()
        estimate = simulate_dtmc([Pp], [Pe], start, trials=10 ** 5, seed=k)
        assert estimate.within(result.value(start)), (k, n, start)
        checked += 1
    assert checked >= 50


@pytest.mark.slow
def test_random_ctmc_pairs_full_protocol(rng):
    checked = 0
    for k in range(50):
        n = int(rng.integers(2, 7))
        Qp, Qe = random_rate(rng, n, 0.6), random_rate(rng, n, 0.6)
        result = ctmc_meeting_times(Qp, Qe)
        if not result.all_finite:
            continue
        start = result.worst_start()
        estimate = simulate_ctmc([Qp], [Qe], start, trials=10 ** 5, seed=k)
        assert estimate.within(result.value(start)), (k, n, start)
        checked += 1
    assert checked >= 15


@pytest.mark.slow
def test_random_groups_full_protocol(rng):
    shapes = [(2, 1), (1, 2), (1, 1)]
    checked = 0
    for k in range(30):
        L, M = shapes[k % len(shapes)]
        n = int(rng.integers(2, 6))
        ctmc = k % 2 == 1
        make = random_rate if ctmc else random_transition
        pursuers = [make(rng, n, 0.6) for _ in range(L)]
        evaders = [make(rng, n, 0.6) for _ in range(M)]
        solve = ctmc_group_meeting_times if ctmc else group_meeting_times
        result = solve(pursuers, evaders)
        if not result.all_finite:
            continue
        start = result.worst_start()
        simulate = simulate_ctmc if ctmc else simulate_dtmc
        estimate = simulate(pursuers, evaders, start, trials=10 ** 5, seed=k)
        assert estimate.within(result.value(start)), (k, L, M, n, ctmc, start)
        checked += 1
    assert checked >= 10
