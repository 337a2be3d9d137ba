import numpy as np
import pytest

from meetwalk.cli import configure_logging
from meetwalk.services.graph_core import (
    RateMatrix,
    TransitionMatrix,
    equal_neighbor_matrix,
    generate,
)


@pytest.fixture(autouse=True)
def quiet_cli(monkeypatch):
    # keep pytest's own log capture on the root logger
    monkeypatch.setattr(configure_logging, '_configured', True, raising=False)
    monkeypatch.setenv('MEETWALK_VALIDATE_OUTPUT', 'true')
    monkeypatch.delenv('MEETWALK_STATE_BUDGET', raising=False)
    monkeypatch.delenv('MEETWALK_DENSE_LIMIT', raising=False)


@pytest.fixture
def complete2():
    """Two nodes, every move (including staying) with probability 1/2."""
    return TransitionMatrix.from_dense([[0.5, 0.5], [0.5, 0.5]])


@pytest.fixture
def swap2():
    return TransitionMatrix.from_dense([[0.0, 1.0], [1.0, 0.0]])


@pytest.fixture
def unit_rate2():
    return RateMatrix.from_dense([[-1.0, 1.0], [1.0, -1.0]])


@pytest.fixture
def star20():
    return equal_neighbor_matrix(generate('star', n=20))


@pytest.fixture
def ring4():
    return equal_neighbor_matrix(generate('ring', n=4))


@pytest.fixture
def period_four_and_two():
    """
    A 4-cycle pursuer against an evader trapped in the period-2 class {1, 3}.

    No sufficient condition holds (gcd of the periods is 2), yet every start
    pair meets.
    """
    cycle = np.zeros((4, 4))
    for i in range(4):
        cycle[i, (i + 1) % 4] = 1.0
    evader = np.zeros((4, 4))
    evader[0, 2] = evader[2, 0] = 1.0
    evader[1, 0] = 1.0
    evader[3, 2] = 1.0
    return TransitionMatrix.from_dense(cycle), TransitionMatrix.from_dense(evader)


def random_transition(rng: np.random.Generator, n: int, density: float = 0.5) -> TransitionMatrix:
    mask = rng.random((n, n)) < density
    for i in range(n):
        if not mask[i].any():
            mask[i, rng.integers(n)] = True
    weights = (rng.random((n, n)) + 0.1) * mask
    return TransitionMatrix.from_dense(weights / weights.sum(axis=1, keepdims=True))


def random_rate(rng: np.random.Generator, n: int, density: float = 0.5) -> RateMatrix:
    mask = rng.random((n, n)) < density
    np.fill_diagonal(mask, False)
    rates = (rng.random((n, n)) + 0.1) * mask
    np.fill_diagonal(rates, -rates.sum(axis=1))
    return RateMatrix.from_dense(rates)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
