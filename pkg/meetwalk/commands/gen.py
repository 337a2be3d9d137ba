import logging

import click
from tabulate import tabulate

from meetwalk.commands.common import emit, graph_options, handled, make_config, output_options, load_digraph
from meetwalk.services.graph_core import (
    equal_neighbor_matrix,
    rate_matrix_from_digraph,
    save_graph,
    save_matrix,
)

logger = logging.getLogger('meetwalk.cli')


def _render(document: dict) -> str:
    graph = document['graph']
    rows = [
        ['nodes', graph['n']],
        ['directed edges', len(graph['edges'])],
        ['symmetric', document['symmetric']],
    ]
    if document.get('graph_file'):
        rows.append(['graph file', document['graph_file']])
    if document.get('matrix_file'):
        rows.append(['matrix file', document['matrix_file']])
    return tabulate(rows, tablefmt='plain')


@click.command('gen')
@graph_options
@click.option('--self-loops/--no-self-loops', default=True, show_default=True,
              help='Self-loops of the exported equal-neighbor matrix.')
@click.option('--ctmc', is_flag=True, help='Export the unit-rate generator instead of the transition matrix.')
@click.option('--graph-out', type=click.Path(dir_okay=False), help='Write the graph JSON file.')
@click.option('--matrix-out', type=click.Path(dir_okay=False), help='Write the matrix (.csv or .json).')
@output_options
@handled
def gen(graph_out, matrix_out, as_json, state_budget, **options):
    """Generate a standard graph and optionally export it and its matrix."""
    config = make_config('gen', options)
    config.extra = {key: value for key, value in (('graph_out', graph_out), ('matrix_out', matrix_out)) if value}
    graph = load_digraph(config)

    if graph_out:
        save_graph(graph, graph_out)
    if matrix_out:
        chain = rate_matrix_from_digraph(graph) if config.ctmc else equal_neighbor_matrix(graph, config.self_loops)
        save_matrix(chain, matrix_out)
        logger.info(f"Matrix written to {matrix_out}")

    document = {
        'graph': {'n': graph.n, 'edges': [list(edge) for edge in graph.edges]},
        'symmetric': graph.is_symmetric(),
        'graph_file': graph_out,
        'matrix_file': matrix_out,
    }
    emit(config, document, 'gen.yml', as_json, _render)
