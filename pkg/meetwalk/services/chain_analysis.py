"""
Structure of single chains and the sufficient conditions for finite meeting times.

A pair of chains is classified into four nested sets:

* one-ergodic: one of the two chains is irreducible and aperiodic
* SA-overlap: both chains have a single absorbing class, the two classes
  intersect and their periods are coprime
* all-overlap: every absorbing class of one chain intersects every absorbing
  class of the other, with coprime periods
* finite: every start pair has a finite meeting time

For rate matrices the same sets are used without the period conditions.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components, shortest_path

from meetwalk.config import STATIONARY_RESIDUAL_TOL, ParameterError
from meetwalk.services.graph_core import RateMatrix, TransitionMatrix
from meetwalk.services.product_space import MeetingSet, build_graph, reverse_levels

logger = logging.getLogger('meetwalk.chain_analysis')

Chain = Union[TransitionMatrix, RateMatrix]


@dataclass(frozen=True)
class ChainDecomposition:
    """Communicating classes (1-based labels) with their kind and period."""

    n: int
    classes: Tuple[Tuple[int, ...], ...]
    absorbing: Tuple[bool, ...]
    periods: Tuple[int, ...]

    def absorbing_classes(self) -> List[Tuple[int, ...]]:
        return [c for c, closed in zip(self.classes, self.absorbing) if closed]

    def absorbing_periods(self) -> List[int]:
        return [p for p, closed in zip(self.periods, self.absorbing) if closed]

    @property
    def is_irreducible(self) -> bool:
        return len(self.classes) == 1

    @property
    def is_ergodic(self) -> bool:
        return self.is_irreducible and self.periods[0] == 1

    @property
    def single_absorbing(self) -> bool:
        return sum(self.absorbing) == 1

    def to_dict(self) -> dict:
        return {
            'n': self.n,
            'classes': [
                {'nodes': list(c), 'kind': 'absorbing' if closed else 'transient', 'period': period}
                for c, closed, period in zip(self.classes, self.absorbing, self.periods)
            ],
        }


@dataclass(frozen=True)
class PairClassification:
    one_ergodic: bool
    sa_overlap: bool
    all_overlap: bool
    finite: bool
    witness: Optional[Tuple[int, ...]] = None

    def to_dict(self) -> dict:
        result = {
            'one_ergodic': self.one_ergodic,
            'sa_overlap': self.sa_overlap,
            'all_overlap': self.all_overlap,
            'finite': self.finite,
        }
        if self.witness is not None:
            result['witness'] = list(self.witness)
        return result


def _class_period(support: sp.csr_matrix, members: np.ndarray) -> int:
    """gcd of ``level(u) + 1 - level(v)`` over the edges inside one class."""
    sub = support[members][:, members].tocoo()
    if sub.nnz == 0:
        # single node without a self-loop
        return 1
    levels = shortest_path(support[members][:, members], directed=True, unweighted=True, indices=0)
    levels = levels.astype(np.int64)
    diffs = np.abs(levels[sub.row] + 1 - levels[sub.col])
    period = int(np.gcd.reduce(diffs))
    return period if period > 0 else 1


def decompose(chain: Chain) -> ChainDecomposition:
    """
    Communicating classes of the support digraph.

    Classes are ordered by their smallest node. A class is absorbing when no
    support edge leaves it.
    """
    support = chain.support()
    n = chain.n
    count, labels = connected_components(support, directed=True, connection='strong')

    coo = support.tocoo()
    leaving = labels[coo.row] != labels[coo.col]
    open_classes = set(labels[coo.row[leaving]].tolist())

    order = sorted(range(count), key=lambda c: int(np.flatnonzero(labels == c)[0]))
    classes, absorbing, periods = [], [], []
    for c in order:
        members = np.flatnonzero(labels == c)
        classes.append(tuple(int(i) + 1 for i in members))
        absorbing.append(c not in open_classes)
        periods.append(_class_period(support, members))

    logger.debug(f"Decomposed {n}-node chain into {count} classes, {sum(absorbing)} absorbing")
    return ChainDecomposition(n, tuple(classes), tuple(absorbing), tuple(periods))


def _solve_stationary(block: np.ndarray) -> np.ndarray:
    """Least-squares solve of ``x^T block = 0`` with ``sum(x) = 1``."""
    size = block.shape[0]
    a = np.vstack([block.T, np.ones((1, size))])
    b = np.zeros(size + 1)
    b[-1] = 1.0
    x = scipy.linalg.lstsq(a, b)[0]
    x = np.clip(x, 0.0, None)
    return x / x.sum()


def _stationary(chain: Chain, generator: Union[np.ndarray, sp.spmatrix]) -> np.ndarray:
    decomposition = decompose(chain)
    if not decomposition.single_absorbing:
        raise ParameterError("stationary distribution not unique")
    members = np.asarray(decomposition.absorbing_classes()[0]) - 1
    block = generator[members][:, members]
    block = block.toarray() if sp.issparse(block) else np.asarray(block)

    pi = np.zeros(chain.n)
    pi[members] = _solve_stationary(block)

    residual = float(np.max(np.abs(pi @ generator)))
    if residual > STATIONARY_RESIDUAL_TOL:
        logger.warning(f"Stationary distribution residual {residual:.3e} exceeds {STATIONARY_RESIDUAL_TOL}")
    return pi


def stationary_distribution(P: TransitionMatrix) -> np.ndarray:
    """Unique stationary distribution; zero on transient nodes."""
    generator = P.matrix - sp.identity(P.n, format='csr')
    return _stationary(P, sp.csr_matrix(generator))


def stationary_distribution_ctmc(Q: RateMatrix) -> np.ndarray:
    """Unique ``π`` with ``π^T Q = 0``."""
    return _stationary(Q, Q.matrix)


def _overlap(a: Sequence[int], b: Sequence[int]) -> bool:
    return bool(set(a) & set(b))


def _pair_flags(dp: ChainDecomposition, de: ChainDecomposition, periodic: bool) -> Tuple[bool, bool, bool]:
    def coprime(p: int, q: int) -> bool:
        return not periodic or math.gcd(p, q) == 1

    if periodic:
        one_ergodic = dp.is_ergodic or de.is_ergodic
    else:
        one_ergodic = dp.is_irreducible or de.is_irreducible

    sa_overlap = (
        dp.single_absorbing and de.single_absorbing
        and _overlap(dp.absorbing_classes()[0], de.absorbing_classes()[0])
        and coprime(dp.absorbing_periods()[0], de.absorbing_periods()[0])
    )

    all_overlap = all(
        _overlap(cp, ce) and coprime(pp, pe)
        for cp, pp in zip(dp.absorbing_classes(), dp.absorbing_periods())
        for ce, pe in zip(de.absorbing_classes(), de.absorbing_periods())
    )
    return one_ergodic, bool(sa_overlap), all_overlap


def _finite_flag(factors: Sequence[Chain], L: int, M: int,
                 state_budget: Optional[int]) -> Tuple[bool, Optional[Tuple[int, ...]]]:
    graph = build_graph(factors, state_budget)
    meeting = MeetingSet.build(graph.n, L, M)
    reached = reverse_levels(graph, meeting.mask) >= 0
    if reached.all():
        return True, None
    witness = graph.index.unflatten(int(np.flatnonzero(~reached)[0]))
    return False, witness


def _check_dimensions(chains: Sequence[Chain]) -> None:
    n = chains[0].n
    if any(chain.n != n for chain in chains):
        raise ParameterError("dimension mismatch")


def _classify(pursuers: Sequence[Chain], evaders: Sequence[Chain], periodic: bool,
              state_budget: Optional[int]) -> PairClassification:
    pursuers, evaders = list(pursuers), list(evaders)
    if not pursuers or not evaders:
        raise ParameterError("at least one pursuer and one evader are required")
    _check_dimensions(pursuers + evaders)

    p_dec = [decompose(P) for P in pursuers]
    e_dec = [decompose(P) for P in evaders]
    flags = {(i, j): _pair_flags(dp, de, periodic) for i, dp in enumerate(p_dec) for j, de in enumerate(e_dec)}

    one_ergodic = any(d.is_ergodic if periodic else d.is_irreducible for d in p_dec + e_dec)
    # each pursuer has to pair with some evader
    sa_overlap = all(any(flags[i, j][1] for j in range(len(e_dec))) for i in range(len(p_dec)))
    all_overlap = all(any(flags[i, j][2] for j in range(len(e_dec))) for i in range(len(p_dec)))

    finite, witness = _finite_flag(pursuers + evaders, len(pursuers), len(evaders), state_budget)
    return PairClassification(one_ergodic, sa_overlap, all_overlap, finite, witness)


def classify_pair(Pp: TransitionMatrix, Pe: TransitionMatrix,
                  state_budget: Optional[int] = None) -> PairClassification:
    return _classify([Pp], [Pe], True, state_budget)


def classify_tuple(pursuers: Sequence[TransitionMatrix], evaders: Sequence[TransitionMatrix],
                   state_budget: Optional[int] = None) -> PairClassification:
    """
    Tuple version of ``classify_pair``.

    one-ergodic holds when any single matrix is ergodic; SA-overlap and
    all-overlap hold when every pursuer's matrix pairs with some evader's
    matrix in the pairwise set.
    """
    return _classify(pursuers, evaders, True, state_budget)


def classify_pair_ctmc(Qp: RateMatrix, Qe: RateMatrix,
                       state_budget: Optional[int] = None) -> PairClassification:
    return _classify([Qp], [Qe], False, state_budget)


def classify_tuple_ctmc(pursuers: Sequence[RateMatrix], evaders: Sequence[RateMatrix],
                        state_budget: Optional[int] = None) -> PairClassification:
    return _classify(pursuers, evaders, False, state_budget)


def is_sa_overlap(chains: Sequence[Chain], L: int, periodic: bool = True) -> bool:
    """SA-overlap test for a pursuer/evader tuple, without the finiteness search."""
    p_dec = [decompose(c) for c in chains[:L]]
    e_dec = [decompose(c) for c in chains[L:]]
    return all(any(_pair_flags(dp, de, periodic)[1] for de in e_dec) for dp in p_dec)
