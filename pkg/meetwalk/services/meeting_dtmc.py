"""
Expected meeting times of discrete-time walkers.

Pursuers and evaders step synchronously and independently; the meeting
time from a start tuple is the expected first ``t >= 1`` at which some
pursuer and some evader occupy the same node. On the states where it is
finite, the vector of meeting times solves

    (I - P E) m = 1

with ``P`` the Kronecker product of all transition matrices and ``E`` the
diagonal matrix that zeroes the meeting-set columns.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from meetwalk.config import FIXED_POINT_RESIDUAL_TOL, ParameterError, get_dense_limit
from meetwalk.services.chain_analysis import decompose, is_sa_overlap, stationary_distribution
from meetwalk.services.graph_core import TransitionMatrix
from meetwalk.services.linear_solver import solve_system
from meetwalk.services.product_space import (
    FinitenessCertificate,
    MeetingSet,
    ProductIndex,
    forward_closure,
    is_convergent,
    product_adjacency,
    tainted_states,
)
from meetwalk.utils.text import format_labels, json_number

logger = logging.getLogger('meetwalk.dtmc')

UNDEFINED_MEAN = "mean meeting time undefined: stationary distributions not unique or meeting times not finite"


@dataclass(frozen=True, eq=False)
class MeetingTimeResult:
    """
    Meeting times for every start tuple, flattened row-major.

    ``values`` is a masked array; a masked entry means the meeting time is
    infinite.
    """

    L: int
    M: int
    n: int
    values: np.ma.MaskedArray = field(repr=False)
    residual: float
    method: str
    certificate: FinitenessCertificate
    time_unit: str = 'discrete'

    @property
    def index(self) -> ProductIndex:
        return ProductIndex(self.n, self.L + self.M)

    @property
    def finite(self) -> np.ndarray:
        return ~np.ma.getmaskarray(self.values)

    @property
    def all_finite(self) -> bool:
        return bool(self.finite.all())

    def value(self, labels: Sequence[int]) -> float:
        state = self.index.flatten(labels)
        if not self.finite[state]:
            return math.inf
        return float(self.values.data[state])

    @property
    def max(self) -> float:
        if not self.all_finite:
            return math.inf
        return float(self.values.data.max())

    def worst_start(self) -> Tuple[int, ...]:
        """Start tuple with the largest (possibly infinite) meeting time."""
        if not self.all_finite:
            return self.index.unflatten(int(np.flatnonzero(~self.finite)[0]))
        return self.index.unflatten(int(np.argmax(self.values.data)))

    def as_matrix(self) -> np.ma.MaskedArray:
        """``n x n`` view (pursuer label on rows) for the two-walker case."""
        if self.L != 1 or self.M != 1:
            raise ParameterError("a matrix view exists only for one pursuer and one evader")
        return self.values.reshape(self.n, self.n)

    def filled(self) -> np.ndarray:
        """Values with ``inf`` at infinite entries, for export only."""
        return self.values.filled(np.inf)

    def entries(self, starts: Optional[Iterable[Sequence[int]]] = None) -> List[Tuple[Tuple[int, ...], float]]:
        index = self.index
        if starts is None:
            states = range(index.states)
        else:
            states = sorted(index.flatten(s) for s in starts)
        result = []
        for state in states:
            value = float(self.values.data[state]) if self.finite[state] else math.inf
            result.append((index.unflatten(state), value))
        return result

    def to_dict(self, mean: Optional[float] = None,
                starts: Optional[Iterable[Sequence[int]]] = None) -> Dict:
        return {
            'L': self.L,
            'M': self.M,
            'n': self.n,
            'time_unit': self.time_unit,
            'values': {format_labels(labels): json_number(value) for labels, value in self.entries(starts)},
            'max': json_number(self.max),
            'mean': json_number(mean),
            'residual': self.residual,
            'certificate': self.certificate.to_dict(),
        }


def validated_agents(pursuers, evaders, kind) -> Tuple[list, list]:
    """Check agent lists: non-empty, of ``kind``, all of one dimension."""
    pursuers, evaders = list(pursuers), list(evaders)
    if not pursuers or not evaders:
        raise ParameterError("at least one pursuer and one evader are required")
    for chain in pursuers + evaders:
        if not isinstance(chain, kind):
            raise ParameterError(f"expected {kind.__name__}, got {type(chain).__name__}")
    n = pursuers[0].n
    if any(chain.n != n for chain in pursuers + evaders):
        raise ParameterError("dimension mismatch")
    return pursuers, evaders


def group_meeting_times(pursuers: Sequence[TransitionMatrix], evaders: Sequence[TransitionMatrix],
                        state_budget: Optional[int] = None) -> MeetingTimeResult:
    """
    Meeting times of ``L`` pursuers and ``M`` evaders from every start tuple.

    States from which the walkers may wander into a region that never meets
    are marked infinite; the system is solved on the rest.

    Raises:
        StateBudgetError: ``n ** (L + M)`` above the state budget
        SolverError: the iterative solve did not converge
    """
    pursuers, evaders = validated_agents(pursuers, evaders, TransitionMatrix)
    L, M = len(pursuers), len(evaders)
    graph = product_adjacency(pursuers + evaders, state_budget)
    meeting = MeetingSet.build(graph.n, L, M).mask
    finite = ~tainted_states(graph, meeting, discrete=True)

    unknown = np.flatnonzero(finite)
    keep = (~meeting[unknown]).astype(float)
    size = unknown.size
    logger.debug(f"Meeting system: {size} finite of {graph.states} states (L={L}, M={M}, n={graph.n})")

    def build():
        rows = graph.matrix_rows(unknown)[:, unknown] @ sp.diags(keep)
        return sp.identity(size, format='csr') - rows

    def matvec(z):
        full = np.zeros(graph.states)
        full[unknown] = z * keep
        return z - graph.matvec(full)[unknown]

    full = np.zeros(graph.states)
    residual, method = 0.0, 'none'
    if size:
        solution = solve_system(size, np.ones(size), build, matvec)
        full[unknown] = solution.x
        residual, method = solution.residual, solution.method
        if residual > FIXED_POINT_RESIDUAL_TOL:
            logger.warning(f"Meeting-time residual {residual:.3e} exceeds {FIXED_POINT_RESIDUAL_TOL}")

    return MeetingTimeResult(
        L=L, M=M, n=graph.n,
        values=np.ma.MaskedArray(full, mask=~finite),
        residual=residual,
        method=method,
        certificate=FinitenessCertificate.from_mask(graph.index, finite),
    )


def meeting_times(Pp: TransitionMatrix, Pe: TransitionMatrix,
                  state_budget: Optional[int] = None) -> MeetingTimeResult:
    """Meeting times of one pursuer and one evader from every start pair."""
    return group_meeting_times([Pp], [Pe], state_budget)


def meeting_time_pair(Pp: TransitionMatrix, Pe: TransitionMatrix, i: int, j: int,
                      state_budget: Optional[int] = None) -> float:
    """
    Meeting time from the single start pair ``(i, j)`` (1-based).

    Only the states reachable from ``(i, j)`` before meeting enter the solve.
    """
    validated_agents([Pp], [Pe], TransitionMatrix)
    graph = product_adjacency([Pp, Pe], state_budget)
    start = graph.index.flatten((i, j))
    meeting = MeetingSet.build(graph.n, 1, 1).mask

    closure = forward_closure(graph, start, meeting, discrete=True)
    closure &= ~meeting
    closure[start] = True
    states = np.flatnonzero(closure)
    keep = (~meeting[states]).astype(float)
    restricted = sp.csr_matrix(graph.matrix_rows(states)[:, states] @ sp.diags(keep))

    if not is_convergent(restricted):
        logger.debug(f"Start ({i}, {j}) can avoid meeting forever")
        return math.inf

    size = states.size
    solution = solve_system(
        size, np.ones(size),
        lambda: sp.identity(size, format='csr') - restricted,
        lambda z: z - restricted @ z,
    )
    return float(solution.x[int(np.searchsorted(states, start))])


def mean_group_meeting_time(pursuers: Sequence[TransitionMatrix], evaders: Sequence[TransitionMatrix],
                            state_budget: Optional[int] = None,
                            result: Optional[MeetingTimeResult] = None) -> float:
    """
    Meeting time averaged over independent stationary starts of all walkers.

    Raises:
        ParameterError: the tuple is not SA-overlap, or a stationary start
            has an infinite meeting time
    """
    pursuers, evaders = validated_agents(pursuers, evaders, TransitionMatrix)
    chains = pursuers + evaders
    if not is_sa_overlap(chains, len(pursuers)):
        raise ParameterError(UNDEFINED_MEAN)
    try:
        distributions = [stationary_distribution(chain) for chain in chains]
    except ParameterError as e:
        raise ParameterError(UNDEFINED_MEAN) from e

    if result is None:
        result = group_meeting_times(pursuers, evaders, state_budget)
    weights = reduce(np.kron, distributions)
    support = weights > 0
    if (support & ~result.finite).any():
        raise ParameterError(UNDEFINED_MEAN)
    return float(np.sum(weights[support] * result.values.data[support]))


def mean_meeting_time(Pp: TransitionMatrix, Pe: TransitionMatrix,
                      state_budget: Optional[int] = None,
                      result: Optional[MeetingTimeResult] = None) -> float:
    return mean_group_meeting_time([Pp], [Pe], state_budget, result)


def _require_irreducible(P: TransitionMatrix) -> None:
    if not decompose(P).is_irreducible:
        raise ParameterError("hitting times require an irreducible transition matrix")


def hitting_times(P: TransitionMatrix, state_budget: Optional[int] = None) -> np.ndarray:
    """
    Pairwise hitting times as meeting times with a frozen pursuer.

    ``H[i, j]`` is the expected number of steps for a walker started at ``j``
    to be at ``i`` at some ``t >= 1``; the diagonal holds return times.
    """
    _require_irreducible(P)
    result = meeting_times(TransitionMatrix.identity(P.n), P, state_budget)
    return np.asarray(result.as_matrix().data)


def first_passage_times(P: TransitionMatrix) -> np.ndarray:
    """
    Classical first-passage times, same layout as ``hitting_times``.

    For each target ``i`` the target row and column are deleted and
    ``(I - P_sub) h = 1`` is solved; the diagonal is ``1 + P[i, others] h``.
    """
    _require_irreducible(P)
    n = P.n
    H = np.zeros((n, n))
    dense = n <= get_dense_limit()
    matrix = P.toarray() if dense else sp.csr_matrix(P.matrix)
    for i in range(n):
        others = np.delete(np.arange(n), i)
        if others.size == 0:
            H[i, i] = 1.0
            continue
        sub = matrix[others][:, others]
        if dense:
            h = scipy.linalg.solve(np.eye(others.size) - sub, np.ones(others.size))
        else:
            h = spsolve(sp.csc_matrix(sp.identity(others.size) - sub), np.ones(others.size))
        H[i, others] = h
        row = matrix[i, others]
        H[i, i] = 1.0 + float(np.asarray(row.toarray() if sp.issparse(row) else row).ravel() @ h)
    return H


def mean_hitting_time(P: TransitionMatrix, target: Optional[Sequence[float]] = None,
                      state_budget: Optional[int] = None) -> float:
    """
    ``sum_ij target_i π_j H[i, j]``: hitting time of a target drawn from
    ``target`` by a walker started from its stationary distribution.
    """
    pi = stationary_distribution(P)
    if target is None:
        weights = pi
    else:
        weights = np.asarray(target, dtype=float)
        if weights.shape != (P.n,) or (weights < 0).any() or abs(weights.sum() - 1.0) > 1e-9:
            raise ParameterError("target weights must be a probability vector of length n")
    H = hitting_times(P, state_budget)
    return float(weights @ H @ pi)


def fixed_point_residual(Pp: TransitionMatrix, Pe: TransitionMatrix,
                         values: Union[MeetingTimeResult, np.ndarray]) -> float:
    """
    Max-norm of ``M - 1 1^T - Pp (M - M_d) Pe^T`` over the finite entries.
    """
    if isinstance(values, MeetingTimeResult):
        matrix = values.as_matrix()
    else:
        array = np.asarray(values, dtype=float)
        matrix = np.ma.MaskedArray(array, mask=~np.isfinite(array))
    finite = ~np.ma.getmaskarray(matrix)
    M = np.where(finite, np.ma.getdata(matrix), 0.0)
    off = M - np.diag(np.diag(M))
    expected = 1.0 + Pp.matrix @ (Pe.matrix @ off.T).T
    diff = np.abs(M - np.asarray(expected))
    return float(diff[finite].max()) if finite.any() else 0.0
