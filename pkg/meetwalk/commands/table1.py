"""
Worst-case meeting and hitting times on the standard 20-node graphs.

Reference values are the published exact worst meeting times ``M_max`` and
worst hitting times ``H_max`` for equal-neighbor walks with self-loops.
"""
import logging
import time
from typing import Dict, List, Optional

import click
import numpy as np
from tabulate import tabulate

from meetwalk.commands.common import ExperimentConfig, emit, handled
from meetwalk.config import ParameterError
from meetwalk.services.graph_core import equal_neighbor_matrix, generate
from meetwalk.services.meeting_dtmc import first_passage_times, hitting_times, meeting_times
from meetwalk.utils.text import format_number, json_number

logger = logging.getLogger('meetwalk.cli')

TABLE1_NODES = 20

# family -> (M_max, H_max)
REFERENCE = {
    'ring': (83.7, 150.0),
    'path': (174.8, 551.0),
    'star': (8.0, 58.0),
    'lollipop': (224.0, 483.8),
    'lattice': (35.9, 83.7),
}

# averages over random instances with radii that were never published
RANDOM_GEOMETRIC_REFERENCE = {
    'dense': (22.7, 92.6),
    'sparse': (77.0, 319.6),
}


def worst_times(family: str, self_loops: bool = True, state_budget: Optional[int] = None, **params) -> Dict:
    """M_max, H_max and the gap between the two hitting-time solvers on one graph."""
    P = equal_neighbor_matrix(generate(family, **params), self_loops)
    result = meeting_times(P, P, state_budget)
    row = {'m_max': result.max, 'h_max': None, 'h_check': None}
    try:
        H = hitting_times(P, state_budget)
    except ParameterError as e:
        logger.info(f"No hitting times for {family}: {e}")
        return row
    row['h_max'] = float(H.max())
    row['h_check'] = float(np.max(np.abs(H - first_passage_times(P))))
    return row


def _diff(computed: Optional[float], reference: Optional[float]) -> Optional[float]:
    if computed is None or reference is None or np.isinf(computed):
        return None
    return abs(round(computed, 1) - reference)


def table_rows(clique: int, tail: int, rows: int, cols: int, radii: List[float], seed: int,
               self_loops: bool = True, state_budget: Optional[int] = None) -> List[Dict]:
    configs = [
        ('ring', {'n': TABLE1_NODES}),
        ('path', {'n': TABLE1_NODES}),
        ('star', {'n': TABLE1_NODES}),
        ('lollipop', {'clique': clique, 'tail': tail}),
        ('lattice', {'rows': rows, 'cols': cols}),
    ]
    table = []
    for family, params in configs:
        computed = worst_times(family, self_loops, state_budget, **params)
        reference_m, reference_h = REFERENCE[family]
        table.append({
            'graph': family,
            'params': params,
            'comparable': True,
            'm_max': json_number(computed['m_max']),
            'reference_m_max': reference_m,
            'm_diff': _diff(computed['m_max'], reference_m),
            'h_max': json_number(computed['h_max']),
            'reference_h_max': reference_h,
            'h_diff': _diff(computed['h_max'], reference_h),
            'h_check': computed['h_check'],
        })

    for radius in radii:
        params = {'n': TABLE1_NODES, 'radius': radius, 'seed': seed}
        computed = worst_times('random_geometric', self_loops, state_budget, **params)
        table.append({
            'graph': 'random_geometric',
            'params': params,
            'comparable': False,
            'note': 'not comparable to published averages',
            'm_max': json_number(computed['m_max']),
            'reference_m_max': None,
            'm_diff': None,
            'h_max': json_number(computed['h_max']),
            'reference_h_max': None,
            'h_diff': None,
            'h_check': computed['h_check'],
        })
    return table


def sweep_lollipop(self_loops: bool = True, state_budget: Optional[int] = None) -> List[Dict]:
    """Every clique/tail split of the 20 nodes."""
    sweep = []
    for clique in range(1, TABLE1_NODES + 1):
        computed = worst_times('lollipop', self_loops, state_budget, clique=clique, tail=TABLE1_NODES - clique)
        sweep.append({
            'clique': clique,
            'tail': TABLE1_NODES - clique,
            'm_max': json_number(computed['m_max']),
            'h_max': json_number(computed['h_max']),
        })
    return sweep


def _label(row: Dict) -> str:
    params = ",".join(f"{key}={value}" for key, value in row['params'].items() if key != 'n')
    return f"{row['graph']}({params})" if params else row['graph']


def _render(document: dict) -> str:
    headers = ['graph', 'M_max', 'published', '|diff|', 'H_max', 'published', '|diff|', 'H vs classical']
    rows = []
    for row in document['rows']:
        rows.append([
            _label(row),
            format_number(row['m_max']),
            format_number(row['reference_m_max']),
            format_number(row['m_diff']),
            format_number(row['h_max']),
            format_number(row['reference_h_max']),
            format_number(row['h_diff']),
            format_number(row['h_check']),
        ])
    lines = [tabulate(rows, headers=headers, tablefmt='simple', disable_numparse=True)]
    if any(not row['comparable'] for row in document['rows']):
        reference = ", ".join(
            f"{name} M_max {m} / H_max {h}" for name, (m, h) in RANDOM_GEOMETRIC_REFERENCE.items()
        )
        lines.append(f"random_geometric rows are not comparable to published averages ({reference})")
    if document.get('lollipop_sweep'):
        sweep = [
            [entry['clique'], entry['tail'], format_number(entry['m_max']), format_number(entry['h_max'])]
            for entry in document['lollipop_sweep']
        ]
        lines.append("")
        lines.append(tabulate(sweep, headers=['clique', 'tail', 'M_max', 'H_max'], tablefmt='simple',
                              disable_numparse=True))
    lines.append(f"elapsed: {document['elapsed_seconds']:.2f} s")
    return "\n".join(lines)


@click.command('table1')
@click.option('--clique', type=int, default=10, show_default=True, help='Lollipop clique size.')
@click.option('--tail', type=int, default=10, show_default=True, help='Lollipop tail length.')
@click.option('--rows', type=int, default=4, show_default=True, help='Lattice rows.')
@click.option('--cols', type=int, default=5, show_default=True, help='Lattice columns.')
@click.option('--radius', 'radii', type=float, multiple=True, help='Add a random geometric row; repeatable.')
@click.option('--seed', type=int, default=0, show_default=True, help='Seed of the random geometric graphs.')
@click.option('--self-loops/--no-self-loops', default=True, show_default=True)
@click.option('--lollipop-sweep', is_flag=True, help='Also report every lollipop clique/tail split.')
@click.option('--json/--human', 'as_json', default=False)
@click.option('--output', type=click.Path(dir_okay=False))
@click.option('--state-budget', type=int)
@handled
def table1(clique, tail, rows, cols, radii, seed, self_loops, lollipop_sweep, as_json, output, state_budget):
    """Reproduce the worst meeting and hitting times of the 20-node graphs."""
    if clique + tail != TABLE1_NODES or rows * cols != TABLE1_NODES:
        raise ParameterError(f"lollipop and lattice must have {TABLE1_NODES} nodes")
    config = ExperimentConfig(
        command='table1',
        params={'n': TABLE1_NODES, 'clique': clique, 'tail': tail, 'rows': rows, 'cols': cols},
        self_loops=self_loops,
        output=output,
        seed=seed,
        extra={'radii': list(radii)} if radii else {},
    )

    started = time.perf_counter()
    document = {'rows': table_rows(clique, tail, rows, cols, list(radii), seed, self_loops, state_budget)}
    if lollipop_sweep:
        document['lollipop_sweep'] = lollipop_sweep_rows = sweep_lollipop(self_loops, state_budget)
        logger.debug(f"Lollipop sweep computed {len(lollipop_sweep_rows)} splits")
    document['elapsed_seconds'] = time.perf_counter() - started
    emit(config, document, 'table1.yml', as_json, _render)


