"""
Monte Carlo estimates of meeting times.

Trials run in fixed-size blocks. Block ``b`` draws from its own Philox
stream seeded by ``SeedSequence(seed, spawn_key=(b,))``, so the result does
not depend on how blocks are scheduled over the worker threads.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from meetwalk.config import (
    DEFAULT_CTMC_JUMPS,
    DEFAULT_DTMC_HORIZON,
    SIMULATION_BLOCK_SIZE,
    ParameterError,
    get_sim_workers,
)
from meetwalk.services.graph_core import RateMatrix, TransitionMatrix
from meetwalk.services.meeting_dtmc import validated_agents
from meetwalk.utils.validation import valid_start

logger = logging.getLogger('meetwalk.oracle')

# trial outcome for censored runs
CENSORED = -1.0


@dataclass(frozen=True)
class SimulationEstimate:
    """
    Sample mean of the uncensored trials.

    ``mean`` is None when every trial was censored; ``lower_bound_only`` is
    set whenever some trial was censored.
    """

    mean: Optional[float]
    std_error: Optional[float]
    trials: int
    censored: int
    horizon: int
    time_unit: str = 'discrete'

    @property
    def lower_bound_only(self) -> bool:
        return self.censored > 0

    def within(self, value: float, sigmas: float = 4.0) -> bool:
        """``|mean - value| <= sigmas * std_error``."""
        if self.mean is None:
            return math.isinf(value)
        return abs(self.mean - value) <= sigmas * (self.std_error or 0.0) + 1e-12

    def to_dict(self) -> dict:
        return {
            'mean': self.mean,
            'std_error': self.std_error,
            'trials': self.trials,
            'censored': self.censored,
            'horizon': self.horizon,
            'lower_bound_only': self.lower_bound_only,
            'time_unit': self.time_unit,
        }


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))


def _cumulative_rows(matrix: np.ndarray) -> np.ndarray:
    """Row-wise CDFs with the last column pinned to 1."""
    sums = matrix.sum(axis=1, keepdims=True)
    safe = np.where(sums > 0, sums, 1.0)
    cum = np.cumsum(matrix / safe, axis=1)
    cum[:, -1] = 1.0
    return cum


def _draw(cum: np.ndarray, current: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Next node for each walker: first column whose CDF exceeds ``u``."""
    return (u[:, None] < cum[current]).argmax(axis=1)


def _met(positions: np.ndarray, L: int) -> np.ndarray:
    return (positions[:, :L, None] == positions[:, None, L:]).any(axis=(1, 2))


def _check_start(start: Sequence[int], n: int, size: int) -> np.ndarray:
    if not valid_start(start, n, size):
        raise ParameterError(f"start tuple {tuple(start)} must have {size} labels in 1..{n}")
    return np.asarray(start, dtype=np.int64) - 1


def _run_blocks(trials: int, seed: int, workers: Optional[int],
                run_block: Callable[[np.random.Generator, int], np.ndarray]) -> np.ndarray:
    sizes = [SIMULATION_BLOCK_SIZE] * (trials // SIMULATION_BLOCK_SIZE)
    if trials % SIMULATION_BLOCK_SIZE:
        sizes.append(trials % SIMULATION_BLOCK_SIZE)
    workers = workers or get_sim_workers()

    def task(block: int) -> np.ndarray:
        return run_block(_block_rng(seed, block), sizes[block])

    if workers == 1 or len(sizes) == 1:
        outcomes = [task(b) for b in range(len(sizes))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            outcomes = list(executor.map(task, range(len(sizes))))
    return np.concatenate(outcomes)


def _summarize(times: np.ndarray, horizon: int, time_unit: str) -> SimulationEstimate:
    done = times[times != CENSORED]
    censored = int(times.size - done.size)
    if done.size == 0:
        mean, std_error = None, None
    else:
        mean = float(np.sum(done) / done.size)
        std_error = float(np.std(done, ddof=1) / math.sqrt(done.size)) if done.size > 1 else 0.0
    if censored:
        logger.warning(f"{censored} of {times.size} trials hit the horizon {horizon}; the mean is a lower bound only")
    return SimulationEstimate(mean, std_error, int(times.size), censored, int(horizon), time_unit)


def simulate_dtmc(pursuers: Sequence[TransitionMatrix], evaders: Sequence[TransitionMatrix],
                  start: Sequence[int], trials: int = 10 ** 5,
                  horizon: int = DEFAULT_DTMC_HORIZON, seed: int = 0,
                  workers: Optional[int] = None) -> SimulationEstimate:
    """
    Synchronous walkers from ``start`` (1-based, pursuers first) until the
    first ``t >= 1`` at which some pursuer and some evader share a node.
    Trials still running after ``horizon`` steps are censored.
    """
    pursuers, evaders = validated_agents(pursuers, evaders, TransitionMatrix)
    if trials < 1 or horizon < 1:
        raise ParameterError("trials and horizon must be >= 1")
    chains = pursuers + evaders
    L, size = len(pursuers), len(chains)
    origin = _check_start(start, chains[0].n, size)
    cdfs = [_cumulative_rows(chain.toarray()) for chain in chains]

    def run_block(rng: np.random.Generator, count: int) -> np.ndarray:
        positions = np.tile(origin, (count, 1))
        times = np.full(count, CENSORED)
        active = np.arange(count)
        t = 0
        while active.size and t < horizon:
            t += 1
            u = rng.random((active.size, size))
            for k, cum in enumerate(cdfs):
                positions[active, k] = _draw(cum, positions[active, k], u[:, k])
            met = _met(positions[active], L)
            times[active[met]] = t
            active = active[~met]
        return times

    estimate = _summarize(_run_blocks(trials, seed, workers, run_block), horizon, 'discrete')
    logger.debug(f"Simulated {trials} discrete-time trials from {tuple(start)}: mean={estimate.mean}")
    return estimate


def simulate_ctmc(pursuers: Sequence[RateMatrix], evaders: Sequence[RateMatrix],
                  start: Sequence[int], trials: int = 10 ** 5,
                  horizon: int = DEFAULT_CTMC_JUMPS, seed: int = 0,
                  workers: Optional[int] = None) -> SimulationEstimate:
    """
    Event-driven simulation from ``start`` until first entry into the
    meeting set. A co-located start ends at time 0. ``horizon`` caps the
    number of jumps per trial; trials whose walkers all stop jumping are
    censored too.
    """
    pursuers, evaders = validated_agents(pursuers, evaders, RateMatrix)
    if trials < 1 or horizon < 1:
        raise ParameterError("trials and horizon must be >= 1")
    chains = pursuers + evaders
    L, size = len(pursuers), len(chains)
    origin = _check_start(start, chains[0].n, size)

    exits: List[np.ndarray] = []
    cdfs: List[np.ndarray] = []
    for chain in chains:
        q = chain.toarray()
        off = q - np.diag(np.diag(q))
        exits.append(off.sum(axis=1))
        cdfs.append(_cumulative_rows(off))

    def run_block(rng: np.random.Generator, count: int) -> np.ndarray:
        positions = np.tile(origin, (count, 1))
        clock = np.zeros(count)
        times = np.full(count, CENSORED)
        if _met(positions[:1], L)[0]:
            return np.zeros(count)
        active = np.arange(count)
        jumps = 0
        while active.size and jumps < horizon:
            jumps += 1
            rates = np.column_stack([exits[k][positions[active, k]] for k in range(size)])
            total = rates.sum(axis=1)
            moving = total > 0
            active = active[moving]
            rates, total = rates[moving], total[moving]
            if not active.size:
                break
            clock[active] += rng.exponential(1.0 / total)
            u = rng.random((active.size, 2))
            agent = (u[:, :1] * total[:, None] < np.cumsum(rates, axis=1)).argmax(axis=1)
            for k, cum in enumerate(cdfs):
                chosen = agent == k
                if chosen.any():
                    rows = active[chosen]
                    positions[rows, k] = _draw(cum, positions[rows, k], u[chosen, 1])
            met = _met(positions[active], L)
            times[active[met]] = clock[active[met]]
            active = active[~met]
        return times

    estimate = _summarize(_run_blocks(trials, seed, workers, run_block), horizon, 'continuous')
    logger.debug(f"Simulated {trials} continuous-time trials from {tuple(start)}: mean={estimate.mean}")
    return estimate
