"""
Kronecker product and Kronecker sum state spaces of several walkers.

A joint state is the tuple of node labels ``(i_1..i_L, j_1..j_M)`` with the
pursuers first. States are flattened row-major (the last label cycles
fastest), so the joint transition matrix of independent walkers is exactly
``P_1 ⊗ ... ⊗ P_K`` and the joint generator is the Kronecker sum of the rate
matrices. Neither is ever materialized for the solvers: both graphs below
act on flat state vectors axis by axis.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp

from meetwalk.config import (
    ROW_SUM_TOL,
    ParameterError,
    StateBudgetError,
    get_state_budget,
)
from meetwalk.services.graph_core import RateMatrix, TransitionMatrix

logger = logging.getLogger('meetwalk.product_space')

CERTIFICATE_LIMIT = 100


@dataclass(frozen=True)
class ProductIndex:
    """Bijection between label tuples (1-based) and flat indices ``0..n**size - 1``."""

    n: int
    size: int

    def __post_init__(self):
        if self.n < 1 or self.size < 1:
            raise ParameterError(f"invalid product space: n={self.n}, size={self.size}")

    @property
    def dims(self) -> Tuple[int, ...]:
        return (self.n,) * self.size

    @property
    def states(self) -> int:
        return self.n ** self.size

    @property
    def strides(self) -> Tuple[int, ...]:
        return tuple(self.n ** (self.size - 1 - k) for k in range(self.size))

    def flatten(self, labels: Sequence[int]) -> int:
        if len(labels) != self.size:
            raise ParameterError(f"expected {self.size} labels, got {len(labels)}")
        for label in labels:
            if not 1 <= int(label) <= self.n:
                raise ParameterError(f"node label {label} outside 1..{self.n}")
        return int(np.ravel_multi_index(tuple(int(label) - 1 for label in labels), self.dims))

    def unflatten(self, index: int) -> Tuple[int, ...]:
        if not 0 <= int(index) < self.states:
            raise ParameterError(f"state index {index} outside 0..{self.states - 1}")
        return tuple(int(c) + 1 for c in np.unravel_index(int(index), self.dims))


def check_budget(n: int, size: int, state_budget: Optional[int] = None) -> int:
    """Number of product states, or StateBudgetError when it exceeds the budget."""
    budget = get_state_budget(state_budget)
    states = n ** size
    if states > budget:
        raise StateBudgetError(states, budget)
    return states


@dataclass(frozen=True, eq=False)
class MeetingSet:
    """States where some pursuer shares its node with some evader."""

    index: ProductIndex
    L: int
    M: int
    mask: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, n: int, L: int, M: int) -> 'MeetingSet':
        index = ProductIndex(n, L + M)
        mask = np.zeros(index.dims, dtype=bool)
        labels = np.arange(n)
        for l in range(L):
            pursuer_shape = [1] * (L + M)
            pursuer_shape[l] = n
            for m in range(M):
                evader_shape = [1] * (L + M)
                evader_shape[L + m] = n
                mask |= labels.reshape(pursuer_shape) == labels.reshape(evader_shape)
        return cls(index, L, M, mask.ravel())

    def __contains__(self, state: int) -> bool:
        return bool(self.mask[int(state)])

    def __len__(self) -> int:
        return int(self.mask.sum())

    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.mask)


def _contract(tensor: np.ndarray, matrix: sp.csr_matrix, axis: int) -> np.ndarray:
    """Apply ``matrix`` along one axis of ``tensor``."""
    moved = np.moveaxis(tensor, axis, 0)
    shape = moved.shape
    out = np.asarray(matrix @ moved.reshape(shape[0], -1))
    return np.moveaxis(out.reshape(shape), 0, axis)


class _ImplicitGraph:
    """Shared machinery of the two product-space graphs."""

    def __init__(self, matrices: Sequence[sp.csr_matrix], supports: Sequence[sp.csr_matrix]):
        if not matrices:
            raise ParameterError("at least one factor is required")
        n = matrices[0].shape[0]
        if any(m.shape != (n, n) for m in matrices):
            raise ParameterError("dimension mismatch")
        self.matrices = [sp.csr_matrix(m) for m in matrices]
        self.supports = [sp.csr_matrix(s, dtype=np.float32) for s in supports]
        self.supports_t = [sp.csr_matrix(s.T) for s in self.supports]
        self.index = ProductIndex(n, len(matrices))

    @property
    def n(self) -> int:
        return self.index.n

    @property
    def size(self) -> int:
        return self.index.size

    @property
    def states(self) -> int:
        return self.index.states

    def _tensor(self, vector: np.ndarray, dtype=None) -> np.ndarray:
        return np.asarray(vector, dtype=dtype).reshape(self.index.dims)

    def successors(self, state: int) -> Iterator[int]:
        rows = self.matrix_rows(np.asarray([state]))
        for col, val in zip(rows.indices, rows.data):
            if val > 0:
                yield int(col)


class KroneckerProductGraph(_ImplicitGraph):
    """
    Joint chain of synchronously stepping walkers.

    ``u -> v`` is an edge iff every factor has a positive entry from u's label
    to v's label in the same coordinate.
    """

    def __init__(self, factors: Sequence[TransitionMatrix]):
        super().__init__([f.matrix for f in factors], [f.support() for f in factors])

    def preimage(self, mask: np.ndarray) -> np.ndarray:
        """States with an edge into ``mask``."""
        tensor = self._tensor(mask, np.float32)
        for axis, support in enumerate(self.supports):
            tensor = _contract(tensor, support, axis)
        return tensor.ravel() > 0

    def image(self, mask: np.ndarray) -> np.ndarray:
        """States reachable in one step from ``mask``."""
        tensor = self._tensor(mask, np.float32)
        for axis, support in enumerate(self.supports_t):
            tensor = _contract(tensor, support, axis)
        return tensor.ravel() > 0

    def matvec(self, x: np.ndarray) -> np.ndarray:
        """``(P_1 ⊗ ... ⊗ P_K) x``."""
        tensor = self._tensor(x, float)
        for axis, matrix in enumerate(self.matrices):
            tensor = _contract(tensor, matrix, axis)
        return tensor.ravel()

    def matrix_rows(self, states: np.ndarray) -> sp.csr_matrix:
        """Rows of the joint transition matrix for ``states`` (shape ``len(states) x n**K``)."""
        labels = np.unravel_index(np.asarray(states, dtype=np.int64), self.index.dims)
        strides = self.index.strides
        indptr = [0]
        cols: List[np.ndarray] = []
        vals: List[np.ndarray] = []
        for r in range(len(states)):
            col = np.zeros(1, dtype=np.int64)
            val = np.ones(1)
            for k, matrix in enumerate(self.matrices):
                lo, hi = matrix.indptr[labels[k][r]], matrix.indptr[labels[k][r] + 1]
                idx, dat = matrix.indices[lo:hi], matrix.data[lo:hi]
                col = (col[:, None] + idx[None, :].astype(np.int64) * strides[k]).ravel()
                val = (val[:, None] * dat[None, :]).ravel()
            cols.append(col)
            vals.append(val)
            indptr.append(indptr[-1] + col.size)
        data = np.concatenate(vals) if vals else np.zeros(0)
        indices = np.concatenate(cols) if cols else np.zeros(0, dtype=np.int64)
        return sp.csr_matrix((data, indices, np.asarray(indptr)), shape=(len(states), self.states))

    def to_sparse(self) -> sp.csr_matrix:
        """Materialized ``P_1 ⊗ ... ⊗ P_K``; only for small spaces."""
        result = self.matrices[0]
        for matrix in self.matrices[1:]:
            result = sp.kron(result, matrix, format='csr')
        return sp.csr_matrix(result)


class KroneckerSumGraph(_ImplicitGraph):
    """
    Joint chain of independent continuous-time walkers.

    Every edge changes exactly one coordinate, through a positive off-diagonal
    rate of that coordinate's factor.
    """

    def __init__(self, rates: Sequence[RateMatrix]):
        super().__init__([q.matrix for q in rates], [q.support() for q in rates])
        self.exit_rates = [q.exit_rates() for q in rates]

    def preimage(self, mask: np.ndarray) -> np.ndarray:
        tensor = self._tensor(mask, np.float32)
        hit = np.zeros(self.index.dims, dtype=bool)
        for axis, support in enumerate(self.supports):
            hit |= _contract(tensor, support, axis) > 0
        return hit.ravel()

    def image(self, mask: np.ndarray) -> np.ndarray:
        tensor = self._tensor(mask, np.float32)
        hit = np.zeros(self.index.dims, dtype=bool)
        for axis, support in enumerate(self.supports_t):
            hit |= _contract(tensor, support, axis) > 0
        return hit.ravel()

    def matvec(self, x: np.ndarray) -> np.ndarray:
        """``(Σ_k I ⊗ .. ⊗ Q_k ⊗ .. ⊗ I) x``."""
        tensor = self._tensor(x, float)
        out = np.zeros(self.index.dims)
        for axis, matrix in enumerate(self.matrices):
            out += _contract(tensor, matrix, axis)
        return out.ravel()

    def matrix_rows(self, states: np.ndarray) -> sp.csr_matrix:
        """Rows of the joint generator for ``states``."""
        states = np.asarray(states, dtype=np.int64)
        labels = np.unravel_index(states, self.index.dims)
        strides = self.index.strides
        rows: List[np.ndarray] = []
        cols: List[np.ndarray] = []
        vals: List[np.ndarray] = []
        for r, state in enumerate(states):
            diagonal = 0.0
            for k, matrix in enumerate(self.matrices):
                here = labels[k][r]
                lo, hi = matrix.indptr[here], matrix.indptr[here + 1]
                idx, dat = matrix.indices[lo:hi], matrix.data[lo:hi]
                off = idx != here
                diagonal += float(dat[~off].sum())
                cols.append(state + (idx[off].astype(np.int64) - here) * strides[k])
                vals.append(dat[off])
                rows.append(np.full(int(off.sum()), r, dtype=np.int64))
            if diagonal != 0.0:
                cols.append(np.asarray([state]))
                vals.append(np.asarray([diagonal]))
                rows.append(np.asarray([r], dtype=np.int64))
        if rows:
            coo = sp.coo_matrix(
                (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                shape=(len(states), self.states),
            )
        else:
            coo = sp.coo_matrix((len(states), self.states))
        return coo.tocsr()

    def successors(self, state: int) -> Iterator[int]:
        rows = self.matrix_rows(np.asarray([state]))
        for col, val in zip(rows.indices, rows.data):
            if col != state and val > 0:
                yield int(col)

    def to_sparse(self) -> sp.csr_matrix:
        """Materialized Kronecker sum; only for small spaces."""
        n, size = self.n, self.size
        total = sp.csr_matrix((n ** size, n ** size))
        for k, matrix in enumerate(self.matrices):
            term = sp.identity(n ** k, format='csr')
            term = sp.kron(term, matrix, format='csr')
            term = sp.kron(term, sp.identity(n ** (size - 1 - k), format='csr'), format='csr')
            total = total + term
        return sp.csr_matrix(total)


ProductGraph = Union[KroneckerProductGraph, KroneckerSumGraph]


def _factor_list(factors) -> list:
    factors = list(factors)
    if not factors:
        raise ParameterError("at least one factor is required")
    n = factors[0].n
    if any(f.n != n for f in factors):
        raise ParameterError("dimension mismatch")
    return factors


def product_adjacency(factors: Sequence[TransitionMatrix], state_budget: Optional[int] = None) -> KroneckerProductGraph:
    factors = _factor_list(factors)
    if not all(isinstance(f, TransitionMatrix) for f in factors):
        raise ParameterError("product_adjacency expects transition matrices")
    check_budget(factors[0].n, len(factors), state_budget)
    return KroneckerProductGraph(factors)


def ctmc_product_adjacency(rates: Sequence[RateMatrix], state_budget: Optional[int] = None) -> KroneckerSumGraph:
    rates = _factor_list(rates)
    if not all(isinstance(q, RateMatrix) for q in rates):
        raise ParameterError("ctmc_product_adjacency expects rate matrices")
    check_budget(rates[0].n, len(rates), state_budget)
    return KroneckerSumGraph(rates)


def build_graph(factors, state_budget: Optional[int] = None) -> ProductGraph:
    """Product graph for transition matrices, Kronecker-sum graph for rate matrices."""
    factors = _factor_list(factors)
    if all(isinstance(f, TransitionMatrix) for f in factors):
        return product_adjacency(factors, state_budget)
    if all(isinstance(f, RateMatrix) for f in factors):
        return ctmc_product_adjacency(factors, state_budget)
    raise ParameterError("cannot mix transition and rate matrices")


def _split(factors, L: Optional[int], M: Optional[int]) -> Tuple[int, int]:
    size = len(factors)
    if L is None and M is None:
        L, M = size - 1, 1
    elif L is None:
        L = size - M
    elif M is None:
        M = size - L
    if L < 1 or M < 1 or L + M != size:
        raise ParameterError(f"cannot split {size} factors into L={L} pursuers and M={M} evaders")
    return L, M


def reverse_levels(graph: ProductGraph, target: np.ndarray) -> np.ndarray:
    """Reverse BFS levels to ``target``; -1 where it is unreachable."""
    dist = np.full(graph.states, -1, dtype=np.int64)
    dist[target] = 0
    frontier = target.copy()
    level = 0
    while frontier.any():
        level += 1
        frontier = graph.preimage(frontier) & (dist < 0)
        dist[frontier] = level
    return dist


def meeting_distances(factors, L: Optional[int] = None, M: Optional[int] = None,
                      state_budget: Optional[int] = None) -> np.ndarray:
    """Length of the shortest walk from every state into the meeting set (-1 if none)."""
    L, M = _split(factors, L, M)
    graph = build_graph(factors, state_budget)
    meeting = MeetingSet.build(graph.n, L, M)
    return reverse_levels(graph, meeting.mask)


def reaches_meeting_set(factors, L: Optional[int] = None, M: Optional[int] = None,
                        state_budget: Optional[int] = None) -> np.ndarray:
    """
    Per-state flag: some walk (possibly empty) leads into the meeting set.

    ``factors`` lists the pursuers' matrices then the evaders'; without ``L``
    and ``M`` the last factor is the only evader.
    """
    reached = meeting_distances(factors, L, M, state_budget) >= 0
    logger.debug(f"{int(reached.sum())} of {reached.size} product states reach the meeting set")
    return reached


def meeting_walk(factors: Sequence[TransitionMatrix], labels: Sequence[int],
                 L: Optional[int] = None, M: Optional[int] = None,
                 state_budget: Optional[int] = None) -> Optional[List[List[int]]]:
    """
    Shortest walk from ``labels`` into the meeting set, one node walk per factor.

    All walks have the same length; ``None`` when no such walk exists.
    """
    L, M = _split(factors, L, M)
    graph = product_adjacency(factors, state_budget)
    meeting = MeetingSet.build(graph.n, L, M)
    dist = reverse_levels(graph, meeting.mask)
    state = graph.index.flatten(labels)
    if dist[state] < 0:
        return None

    path = [state]
    while dist[state] > 0:
        state = next(v for v in graph.successors(state) if dist[v] == dist[state] - 1)
        path.append(state)
    tuples = [graph.index.unflatten(s) for s in path]
    return [[t[k] for t in tuples] for k in range(graph.size)]


def tainted_states(graph: ProductGraph, meeting: np.ndarray, discrete: bool) -> np.ndarray:
    """
    States whose expected time into the meeting set is infinite.

    Seeds are the non-meeting states with no walk into the meeting set; the
    taint then spreads backwards through non-meeting states. In discrete time
    a meeting state still has to step once, so meeting states inherit the
    taint from their successors; in continuous time they are the boundary and
    stay clean.
    """
    reached = reverse_levels(graph, meeting) >= 0
    tainted = ~meeting & ~reached
    frontier = tainted.copy()
    while frontier.any():
        grown = graph.preimage(frontier & ~meeting)
        if not discrete:
            grown &= ~meeting
        frontier = grown & ~tainted
        tainted |= frontier
    return tainted


def finite_region(factors, L: Optional[int] = None, M: Optional[int] = None,
                  state_budget: Optional[int] = None) -> np.ndarray:
    """Per-state flag: the expected meeting time from that state is finite."""
    L, M = _split(factors, L, M)
    graph = build_graph(factors, state_budget)
    meeting = MeetingSet.build(graph.n, L, M)
    return ~tainted_states(graph, meeting.mask, isinstance(graph, KroneckerProductGraph))


@dataclass(frozen=True)
class FinitenessCertificate:
    """Serializable summary of where meeting times are infinite."""

    all_finite: bool
    infinite_states: Tuple[Tuple[int, ...], ...] = ()
    infinite_count: int = 0

    @classmethod
    def from_mask(cls, index: ProductIndex, finite: np.ndarray) -> 'FinitenessCertificate':
        bad = np.flatnonzero(~finite)
        listed = tuple(index.unflatten(s) for s in bad[:CERTIFICATE_LIMIT])
        return cls(all_finite=bad.size == 0, infinite_states=listed, infinite_count=int(bad.size))

    def to_dict(self) -> dict:
        return {
            'all_finite': self.all_finite,
            'infinite_states': [list(t) for t in self.infinite_states],
        }


def finiteness_certificate(factors, L: Optional[int] = None, M: Optional[int] = None,
                           state_budget: Optional[int] = None) -> FinitenessCertificate:
    L, M = _split(factors, L, M)
    graph = build_graph(factors, state_budget)
    finite = finite_region(factors, L, M, state_budget)
    return FinitenessCertificate.from_mask(graph.index, finite)


def is_convergent(matrix) -> bool:
    """
    True iff powers of the substochastic ``matrix`` vanish.

    Equivalent test: every state has a walk in the support to a row whose sum
    is below ``1 - ROW_SUM_TOL``.
    """
    a = sp.csr_matrix(matrix, dtype=float)
    if a.shape[0] != a.shape[1]:
        raise ParameterError(f"matrix must be square, got shape {a.shape}")
    if a.nnz and a.data.min() < 0:
        raise ParameterError("substochastic matrix has negative entries")
    sums = np.asarray(a.sum(axis=1)).ravel()
    if sums.size and sums.max() > 1 + ROW_SUM_TOL:
        raise ParameterError("substochastic matrix has a row sum above 1")

    support = (a > 0).astype(np.float32).tocsr()
    reached = sums < 1 - ROW_SUM_TOL
    frontier = reached.copy()
    while frontier.any():
        frontier = (np.asarray(support @ frontier.astype(np.float32)).ravel() > 0) & ~reached
        reached |= frontier
    return bool(reached.all())


def masked_product_matrix(factors: Sequence[TransitionMatrix], L: Optional[int] = None,
                          M: Optional[int] = None, state_budget: Optional[int] = None) -> sp.csr_matrix:
    """``(P_1 ⊗ ... ⊗ P_K) E`` with the meeting-set columns zeroed, materialized."""
    L, M = _split(factors, L, M)
    graph = product_adjacency(factors, state_budget)
    meeting = MeetingSet.build(graph.n, L, M)
    keep = sp.diags((~meeting.mask).astype(float))
    return sp.csr_matrix(graph.to_sparse() @ keep)


def forward_closure(graph: ProductGraph, start: int, meeting: np.ndarray, discrete: bool) -> np.ndarray:
    """
    States reachable from ``start`` without passing through the meeting set.

    In discrete time the start itself always steps, even from a meeting state.
    """
    closure = np.zeros(graph.states, dtype=bool)
    closure[start] = True
    if not discrete and meeting[start]:
        return closure
    frontier = graph.image(closure) & ~closure
    closure |= frontier
    while frontier.any():
        frontier = graph.image(frontier & ~meeting) & ~closure
        closure |= frontier
    return closure
