"""
Expected meeting times of continuous-time walkers.

Each walker jumps independently, so the joint generator is the Kronecker
sum of the individual rate matrices. Meeting is first entry into the
meeting set, which makes co-located starts worth exactly 0 (unlike the
discrete-time solver, which waits for ``t >= 1``). The finite part solves

    (E (I - Q) - I) m = E 1

where ``E`` zeroes the meeting-set rows.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from meetwalk.config import FIXED_POINT_RESIDUAL_TOL, ParameterError
from meetwalk.services.chain_analysis import is_sa_overlap, stationary_distribution_ctmc
from meetwalk.services.graph_core import RateMatrix
from meetwalk.services.linear_solver import solve_system
from meetwalk.services.meeting_dtmc import UNDEFINED_MEAN, MeetingTimeResult, validated_agents
from meetwalk.services.product_space import (
    FinitenessCertificate,
    KroneckerSumGraph,
    MeetingSet,
    ctmc_product_adjacency,
    tainted_states,
)

logger = logging.getLogger('meetwalk.ctmc')


@dataclass(frozen=True, eq=False)
class CtmcMeetingResult(MeetingTimeResult):
    time_unit: str = 'continuous'


def joint_generator(rates: Sequence[RateMatrix], state_budget: Optional[int] = None) -> RateMatrix:
    """Materialized Kronecker sum of ``rates``; for small spaces."""
    graph = ctmc_product_adjacency(rates, state_budget)
    return RateMatrix(graph.to_sparse())


def ctmc_system_matrix(Qp: RateMatrix, Qe: RateMatrix, state_budget: Optional[int] = None) -> sp.csr_matrix:
    """``E (I - Q_joint) - I`` for one pursuer and one evader."""
    graph = ctmc_product_adjacency([Qp, Qe], state_budget)
    meeting = MeetingSet.build(graph.n, 1, 1).mask
    E = sp.diags((~meeting).astype(float))
    identity = sp.identity(graph.states, format='csr')
    return sp.csr_matrix(E @ (identity - graph.to_sparse()) - identity)


def _solve_hitting(graph: KroneckerSumGraph, target: np.ndarray):
    """Expected time to enter ``target`` from every state, as (values, finite, residual, method)."""
    finite = ~tainted_states(graph, target, discrete=False)
    unknown = np.flatnonzero(finite & ~target)
    size = unknown.size
    logger.debug(f"Hitting system: {size} unknowns of {graph.states} states")

    def build():
        return -graph.matrix_rows(unknown)[:, unknown]

    def matvec(z):
        full = np.zeros(graph.states)
        full[unknown] = z
        return -graph.matvec(full)[unknown]

    full = np.zeros(graph.states)
    residual, method = 0.0, 'none'
    if size:
        solution = solve_system(size, np.ones(size), build, matvec)
        full[unknown] = solution.x
        residual, method = solution.residual, solution.method
        if residual > FIXED_POINT_RESIDUAL_TOL:
            logger.warning(f"Hitting-time residual {residual:.3e} exceeds {FIXED_POINT_RESIDUAL_TOL}")
    return full, finite, residual, method


def ctmc_group_meeting_times(pursuers: Sequence[RateMatrix], evaders: Sequence[RateMatrix],
                             state_budget: Optional[int] = None) -> CtmcMeetingResult:
    """
    Meeting times of ``L`` pursuers and ``M`` evaders in continuous time.

    Raises:
        StateBudgetError: ``n ** (L + M)`` above the state budget
        SolverError: the iterative solve did not converge
    """
    pursuers, evaders = validated_agents(pursuers, evaders, RateMatrix)
    L, M = len(pursuers), len(evaders)
    graph = ctmc_product_adjacency(pursuers + evaders, state_budget)
    meeting = MeetingSet.build(graph.n, L, M).mask
    values, finite, residual, method = _solve_hitting(graph, meeting)
    return CtmcMeetingResult(
        L=L, M=M, n=graph.n,
        values=np.ma.MaskedArray(values, mask=~finite),
        residual=residual,
        method=method,
        certificate=FinitenessCertificate.from_mask(graph.index, finite),
    )


def ctmc_meeting_times(Qp: RateMatrix, Qe: RateMatrix,
                       state_budget: Optional[int] = None) -> CtmcMeetingResult:
    return ctmc_group_meeting_times([Qp], [Qe], state_budget)


def ctmc_hitting_times(Q: RateMatrix, targets: Iterable[int]) -> np.ma.MaskedArray:
    """
    Expected time for a single walker to enter ``targets`` (1-based labels).

    Masked entries are infinite: the walker can get stuck away from the targets.
    """
    if not isinstance(Q, RateMatrix):
        raise ParameterError(f"expected RateMatrix, got {type(Q).__name__}")
    labels = sorted(set(int(t) for t in targets))
    if not labels:
        raise ParameterError("target set must not be empty")
    if labels[0] < 1 or labels[-1] > Q.n:
        raise ParameterError(f"target labels must lie in 1..{Q.n}")
    target = np.zeros(Q.n, dtype=bool)
    target[np.asarray(labels) - 1] = True
    values, finite, _, _ = _solve_hitting(KroneckerSumGraph([Q]), target)
    return np.ma.MaskedArray(values, mask=~finite)


def ctmc_mean_group_meeting_time(pursuers: Sequence[RateMatrix], evaders: Sequence[RateMatrix],
                                 state_budget: Optional[int] = None,
                                 result: Optional[CtmcMeetingResult] = None) -> float:
    """Meeting time averaged over independent stationary starts."""
    pursuers, evaders = validated_agents(pursuers, evaders, RateMatrix)
    chains = pursuers + evaders
    if not is_sa_overlap(chains, len(pursuers), periodic=False):
        raise ParameterError(UNDEFINED_MEAN)
    try:
        distributions = [stationary_distribution_ctmc(chain) for chain in chains]
    except ParameterError as e:
        raise ParameterError(UNDEFINED_MEAN) from e

    if result is None:
        result = ctmc_group_meeting_times(pursuers, evaders, state_budget)
    weights = reduce(np.kron, distributions)
    support = weights > 0
    if (support & ~result.finite).any():
        raise ParameterError(UNDEFINED_MEAN)
    return float(np.sum(weights[support] * result.values.data[support]))


def ctmc_mean_meeting_time(Qp: RateMatrix, Qe: RateMatrix, state_budget: Optional[int] = None,
                           result: Optional[CtmcMeetingResult] = None) -> float:
    return ctmc_mean_group_meeting_time([Qp], [Qe], state_budget, result)


def system_is_singular(Qp: RateMatrix, Qe: RateMatrix, state_budget: Optional[int] = None) -> bool:
    """Rank test on ``ctmc_system_matrix``; for small spaces."""
    matrix = ctmc_system_matrix(Qp, Qe, state_budget).toarray()
    return bool(np.linalg.matrix_rank(matrix) < matrix.shape[0])


__all__ = [
    'CtmcMeetingResult',
    'joint_generator',
    'ctmc_system_matrix',
    'ctmc_meeting_times',
    'ctmc_group_meeting_times',
    'ctmc_hitting_times',
    'ctmc_mean_meeting_time',
    'ctmc_mean_group_meeting_time',
    'system_is_singular',
]
