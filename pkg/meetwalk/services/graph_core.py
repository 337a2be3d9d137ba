"""
Digraphs, the standard graph families, and the matrices built on them.

Nodes are labelled ``1..n`` in every value that leaves this module (edge
lists, files, error messages); sparse matrices are indexed ``0..n-1``.
"""
from __future__ import annotations

import json
import logging
import os
import re
from dataclasses import dataclass
from typing import Dict, Iterable, List, Tuple, Union

import networkx as nx
import numpy as np
import pandas as pd
import scipy.sparse as sp

from meetwalk.config import ROW_SUM_TOL, GraphParseError, ParameterError
from meetwalk.utils.validation import (
    GRAPH_FAMILIES,
    valid_family,
    valid_node_label,
    valid_radius,
    valid_weight,
)

logger = logging.getLogger('meetwalk.graph_core')

Edge = Tuple[int, int, float]


@dataclass(frozen=True)
class Digraph:
    """Weighted digraph on nodes ``1..n``; a missing edge means weight 0."""

    n: int
    edges: Tuple[Edge, ...] = ()

    def __post_init__(self):
        if isinstance(self.n, bool) or not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ParameterError(f"node count must be a positive integer, got {self.n!r}")
        n = int(self.n)

        seen = set()
        normalized: List[Edge] = []
        for edge in self.edges:
            if len(edge) != 3:
                raise ParameterError(f"edge {edge!r} must be a (source, target, weight) triple")
            src, dst, weight = edge
            if not valid_node_label(src, n) or not valid_node_label(dst, n):
                raise ParameterError(f"edge ({src}, {dst}) has a node outside 1..{n}")
            if not valid_weight(weight):
                raise ParameterError(f"edge ({src}, {dst}) has invalid weight {weight!r}; weights must be > 0")
            key = (int(src), int(dst))
            if key in seen:
                raise ParameterError(f"duplicate edge ({src}, {dst})")
            seen.add(key)
            normalized.append((key[0], key[1], float(weight)))

        object.__setattr__(self, 'n', n)
        object.__setattr__(self, 'edges', tuple(sorted(normalized)))

    def adjacency(self) -> sp.csr_matrix:
        """Weighted adjacency, 0-based."""
        if not self.edges:
            return sp.csr_matrix((self.n, self.n), dtype=float)
        src, dst, weight = zip(*self.edges)
        rows = np.asarray(src, dtype=np.int64) - 1
        cols = np.asarray(dst, dtype=np.int64) - 1
        return sp.csr_matrix((np.asarray(weight, dtype=float), (rows, cols)), shape=(self.n, self.n))

    def edge_set(self) -> set:
        return {(src, dst) for src, dst, _ in self.edges}

    def is_symmetric(self) -> bool:
        pairs = self.edge_set()
        return all((dst, src) in pairs for src, dst in pairs)

    def out_degree(self, node: int) -> int:
        return sum(1 for src, _, _ in self.edges if src == node)


def _as_csr(matrix) -> sp.csr_matrix:
    if sp.issparse(matrix):
        result = sp.csr_matrix(matrix, dtype=float, copy=True)
    else:
        array = np.asarray(matrix, dtype=float)
        if array.ndim != 2:
            raise ParameterError(f"matrix must be two-dimensional, got shape {array.shape}")
        result = sp.csr_matrix(array)
    if result.shape[0] != result.shape[1] or result.shape[0] < 1:
        raise ParameterError(f"matrix must be square and non-empty, got shape {result.shape}")
    if not np.all(np.isfinite(result.data)):
        raise ParameterError("matrix has non-finite entries")
    result.eliminate_zeros()
    result.sort_indices()
    return result


def _entries(matrix: sp.csr_matrix) -> Dict[Tuple[int, int], float]:
    coo = matrix.tocoo()
    return {(int(r) + 1, int(c) + 1): float(v) for r, c, v in zip(coo.row, coo.col, coo.data)}


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """Row-stochastic matrix of a discrete-time chain."""

    matrix: sp.csr_matrix

    def __post_init__(self):
        m = _as_csr(self.matrix)
        if m.nnz and (m.data.min() < 0 or m.data.max() > 1 + ROW_SUM_TOL):
            raise ParameterError("transition probabilities must lie in [0, 1]")
        sums = np.asarray(m.sum(axis=1)).ravel()
        bad = np.flatnonzero(np.abs(sums - 1.0) > ROW_SUM_TOL)
        if bad.size:
            row = int(bad[0])
            raise ParameterError(f"row {row + 1} sums to {sums[row]!r}, not 1")
        object.__setattr__(self, 'matrix', m)

    @classmethod
    def from_dense(cls, array) -> 'TransitionMatrix':
        return cls(np.asarray(array, dtype=float))

    @classmethod
    def identity(cls, n: int) -> 'TransitionMatrix':
        return cls(sp.identity(n, format='csr', dtype=float))

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def support(self) -> sp.csr_matrix:
        """Boolean support digraph (an entry is an edge iff it is > 0)."""
        return (self.matrix > 0).astype(bool).tocsr()

    def entries(self) -> Dict[Tuple[int, int], float]:
        return _entries(self.matrix)


@dataclass(frozen=True, eq=False)
class RateMatrix:
    """Generator of a continuous-time chain: off-diagonal rates >= 0, zero row sums."""

    matrix: sp.csr_matrix

    def __post_init__(self):
        m = _as_csr(self.matrix)
        off = m - sp.diags(m.diagonal())
        off = sp.csr_matrix(off)
        off.eliminate_zeros()
        if off.nnz and off.data.min() < 0:
            raise ParameterError("off-diagonal rates must be >= 0")
        sums = np.asarray(m.sum(axis=1)).ravel()
        scale = max(1.0, float(np.abs(m.diagonal()).max(initial=0.0)))
        bad = np.flatnonzero(np.abs(sums) > ROW_SUM_TOL * scale)
        if bad.size:
            row = int(bad[0])
            raise ParameterError(f"row {row + 1} of the rate matrix sums to {sums[row]!r}, not 0")
        object.__setattr__(self, 'matrix', m)

    @classmethod
    def from_dense(cls, array) -> 'RateMatrix':
        return cls(np.asarray(array, dtype=float))

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def exit_rates(self) -> np.ndarray:
        return -self.matrix.diagonal()

    def support(self) -> sp.csr_matrix:
        """Boolean support of the positive off-diagonal rates."""
        off = sp.csr_matrix(self.matrix - sp.diags(self.matrix.diagonal()))
        off.eliminate_zeros()
        return (off > 0).astype(bool).tocsr()

    def scaled(self, factor: float) -> 'RateMatrix':
        if not factor > 0:
            raise ParameterError("rate scaling factor must be > 0")
        return RateMatrix(self.matrix * float(factor))

    def entries(self) -> Dict[Tuple[int, int], float]:
        return _entries(self.matrix)


Chain = Union[TransitionMatrix, RateMatrix]


def equal_neighbor_matrix(g: Digraph, self_loops: bool = True) -> TransitionMatrix:
    """
    Equal-neighbor random walk on ``g``; edge weights are ignored.

    Row ``i`` puts ``1/(outdeg(i) + [self_loops])`` on every out-neighbor and,
    with ``self_loops``, on ``i`` itself (an existing self-loop edge is counted
    once).
    """
    adj = g.adjacency()
    rows: List[int] = []
    cols: List[int] = []
    vals: List[float] = []
    for i in range(g.n):
        neighbors = set(adj.indices[adj.indptr[i]:adj.indptr[i + 1]].tolist())
        if self_loops:
            neighbors.add(i)
        if not neighbors:
            raise ParameterError(f"zero out-degree row: node {i + 1} has no out-neighbors")
        p = 1.0 / len(neighbors)
        for j in sorted(neighbors):
            rows.append(i)
            cols.append(j)
            vals.append(p)
    return TransitionMatrix(sp.csr_matrix((vals, (rows, cols)), shape=(g.n, g.n)))


def transition_matrix_from_digraph(g: Digraph) -> TransitionMatrix:
    """Use the edge weights of ``g`` as transition probabilities."""
    return TransitionMatrix(g.adjacency())


def rate_matrix_from_digraph(g: Digraph) -> RateMatrix:
    """
    Generator with ``q_ij`` = weight of edge (i, j) and ``q_ii`` = minus the row sum.

    Self-loop edges carry no rate and are dropped.
    """
    adj = g.adjacency().tolil()
    loops = [i for i in range(g.n) if adj[i, i] != 0]
    if loops:
        logger.debug(f"Dropping self-loop rates at nodes {[i + 1 for i in loops]}")
        for i in loops:
            adj[i, i] = 0.0
    off = sp.csr_matrix(adj)
    off.eliminate_zeros()
    diag = -np.asarray(off.sum(axis=1)).ravel()
    return RateMatrix(off + sp.diags(diag))


def matrix_to_digraph(chain: Chain) -> Digraph:
    """Edge-list view of a chain: probabilities (or off-diagonal rates) as weights."""
    if isinstance(chain, RateMatrix):
        source = sp.csr_matrix(chain.matrix - sp.diags(chain.matrix.diagonal()))
    else:
        source = chain.matrix
    coo = source.tocoo()
    edges = [(int(r) + 1, int(c) + 1, float(v)) for r, c, v in zip(coo.row, coo.col, coo.data) if v > 0]
    return Digraph(chain.n, tuple(edges))


# -- generators ---------------------------------------------------------------

def _require_int(name: str, value, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < minimum:
        raise ParameterError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def from_networkx(graph: nx.Graph) -> Digraph:
    """Encode an undirected networkx graph on nodes ``0..n-1`` as symmetric directed pairs."""
    n = graph.number_of_nodes()
    edges = set()
    for u, v in graph.edges():
        if u == v:
            continue
        edges.add((int(u) + 1, int(v) + 1))
        edges.add((int(v) + 1, int(u) + 1))
    return Digraph(n, tuple((src, dst, 1.0) for src, dst in sorted(edges)))


def _ring(n):
    n = _require_int('n', n, 1)
    return nx.cycle_graph(n)


def _path(n):
    n = _require_int('n', n, 1)
    return nx.path_graph(n)


def _star(n):
    n = _require_int('n', n, 1)
    # networkx puts the center at 0, i.e. node 1 once relabelled
    return nx.star_graph(n - 1)


def _lollipop(clique=10, tail=10, n=None):
    clique = _require_int('clique', clique, 1)
    tail = _require_int('tail', tail, 0)
    if n is not None and n != clique + tail:
        raise ParameterError(f"lollipop clique + tail must equal n ({clique} + {tail} != {n})")
    graph = nx.complete_graph(clique)
    nx.add_path(graph, range(clique - 1, clique + tail))
    return graph


def _lattice(rows=4, cols=5, n=None):
    rows = _require_int('rows', rows, 1)
    cols = _require_int('cols', cols, 1)
    if n is not None and n != rows * cols:
        raise ParameterError(f"lattice rows * cols must equal n ({rows} * {cols} != {n})")
    return nx.convert_node_labels_to_integers(nx.grid_2d_graph(rows, cols), ordering='sorted')


def _random_geometric(n, radius, seed=0):
    n = _require_int('n', n, 1)
    if not valid_radius(radius):
        raise ParameterError(f"radius must lie in (0, sqrt(2)], got {radius!r}")
    seed = _require_int('seed', seed, 0)
    return nx.random_geometric_graph(n, float(radius), seed=seed)


_GENERATORS = {
    'ring': _ring,
    'path': _path,
    'star': _star,
    'lollipop': _lollipop,
    'lattice': _lattice,
    'random_geometric': _random_geometric,
}


def generate(family: str, **params) -> Digraph:
    """
    Build one of the standard symmetric families.

    Args:
        family: one of ring, path, star, lollipop, lattice, random_geometric
        params: ``n`` for ring/path/star; ``clique``/``tail`` for lollipop;
            ``rows``/``cols`` for lattice; ``n``/``radius``/``seed`` for
            random_geometric. ``n`` is also accepted (and checked) by
            lollipop and lattice.

    Raises:
        ParameterError: unknown family or invalid parameters
    """
    if not valid_family(family):
        raise ParameterError(f"unknown graph family '{family}', expected one of {', '.join(GRAPH_FAMILIES)}")
    params = {key: value for key, value in params.items() if value is not None}
    try:
        graph = _GENERATORS[family](**params)
    except TypeError as exc:
        raise ParameterError(f"invalid parameters for {family}: {exc}") from exc
    digraph = from_networkx(graph)
    logger.debug(f"Generated {family} graph with {digraph.n} nodes and {len(digraph.edges)} directed edges")
    return digraph


# -- files --------------------------------------------------------------------

_EDGES_KEY = re.compile(r'"edges"\s*:\s*\[')


def _edge_line_numbers(text: str) -> List[int]:
    """Line number of every element of the top-level ``edges`` array."""
    match = _EDGES_KEY.search(text)
    if not match:
        return []
    decoder = json.JSONDecoder()
    pos = match.end()
    lines: List[int] = []
    while True:
        while pos < len(text) and text[pos] in ' \t\r\n,':
            pos += 1
        if pos >= len(text) or text[pos] == ']':
            break
        lines.append(text.count('\n', 0, pos) + 1)
        try:
            _, pos = decoder.raw_decode(text, pos)
        except json.JSONDecodeError:
            break
    return lines


def save_graph(g: Digraph, path: str) -> None:
    """Write ``{"n": ..., "edges": [[src, dst, weight], ...]}``, one edge per line."""
    lines = [json.dumps([src, dst, weight]) for src, dst, weight in g.edges]
    body = ",\n    ".join(lines)
    edges = f"[\n    {body}\n  ]" if lines else "[]"
    with open(path, 'w', encoding='utf-8') as fh:
        fh.write(f'{{\n  "n": {g.n},\n  "edges": {edges}\n}}\n')
    logger.debug(f"Saved graph with {g.n} nodes to {path}")


def load_graph(path: str) -> Digraph:
    """
    Read a graph file written by ``save_graph`` (any JSON layout is accepted).

    Raises:
        GraphParseError: malformed JSON or invalid content, with the line number
    """
    with open(path, encoding='utf-8') as fh:
        text = fh.read()

    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphParseError(exc.msg, line=exc.lineno, path=path) from exc

    if not isinstance(doc, dict) or 'n' not in doc or 'edges' not in doc:
        raise GraphParseError("expected an object with keys 'n' and 'edges'", line=1, path=path)
    n = doc['n']
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise GraphParseError(f"'n' must be a positive integer, got {n!r}", line=1, path=path)
    if not isinstance(doc['edges'], list):
        raise GraphParseError("'edges' must be a list", line=1, path=path)

    lines = _edge_line_numbers(text)
    seen = set()
    edges: List[Edge] = []
    for k, edge in enumerate(doc['edges']):
        line = lines[k] if k < len(lines) else None
        if not isinstance(edge, list) or len(edge) != 3:
            raise GraphParseError(f"edge {edge!r} must be a [source, target, weight] triple", line=line, path=path)
        src, dst, weight = edge
        for label in (src, dst):
            if not valid_node_label(label, n):
                raise GraphParseError(f"node index {label!r} outside 1..{n} (nodes are 1-based)", line=line, path=path)
        if not valid_weight(weight):
            raise GraphParseError(f"edge weight {weight!r} must be a positive finite number", line=line, path=path)
        if (src, dst) in seen:
            raise GraphParseError(f"duplicate edge ({src}, {dst})", line=line, path=path)
        seen.add((src, dst))
        edges.append((int(src), int(dst), float(weight)))

    return Digraph(n, tuple(edges))


def save_matrix(chain: Chain, path: str) -> None:
    """Export a chain as dense header-free CSV (``.csv``) or as the JSON edge format."""
    if os.path.splitext(path)[1].lower() == '.csv':
        pd.DataFrame(chain.toarray()).to_csv(path, header=False, index=False, float_format='%.17g')
    else:
        save_graph(matrix_to_digraph(chain), path)


def load_matrix(path: str, kind: str = 'transition') -> Chain:
    """
    Read a chain from CSV (dense, header-free) or from the JSON edge format.

    Args:
        path: ``.csv`` or ``.json`` file
        kind: 'transition' for a TransitionMatrix, 'rate' for a RateMatrix
    """
    if kind not in ('transition', 'rate'):
        raise ParameterError(f"unknown matrix kind '{kind}'")

    if os.path.splitext(path)[1].lower() == '.csv':
        try:
            frame = pd.read_csv(path, header=None)
        except (pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
            raise GraphParseError(f"malformed CSV matrix: {exc}", path=path) from exc
        try:
            array = frame.to_numpy(dtype=float)
        except ValueError as exc:
            raise GraphParseError(f"non-numeric entry in CSV matrix: {exc}", path=path) from exc
        for row_number, row in enumerate(array, start=1):
            if not np.all(np.isfinite(row)):
                raise GraphParseError("missing or non-finite entry", line=row_number, path=path)
        return TransitionMatrix(array) if kind == 'transition' else RateMatrix(array)

    graph = load_graph(path)
    if kind == 'transition':
        return transition_matrix_from_digraph(graph)
    return rate_matrix_from_digraph(graph)


__all__: Iterable[str] = [
    'Digraph',
    'TransitionMatrix',
    'RateMatrix',
    'equal_neighbor_matrix',
    'transition_matrix_from_digraph',
    'rate_matrix_from_digraph',
    'matrix_to_digraph',
    'generate',
    'from_networkx',
    'load_graph',
    'save_graph',
    'load_matrix',
    'save_matrix',
]
