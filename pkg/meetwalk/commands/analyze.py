import click
from tabulate import tabulate

from meetwalk.commands.common import (
    build_agents,
    chain_options,
    emit,
    graph_options,
    handled,
    make_config,
    output_options,
)
from meetwalk.config import ParameterError
from meetwalk.services.chain_analysis import (
    classify_tuple,
    classify_tuple_ctmc,
    decompose,
    stationary_distribution,
    stationary_distribution_ctmc,
)
from meetwalk.services.product_space import finiteness_certificate
from meetwalk.utils.text import format_labels, format_number


def _chain_report(role: str, position: int, chain, ctmc: bool) -> dict:
    report = {'role': role, 'index': position, **decompose(chain).to_dict()}
    try:
        pi = stationary_distribution_ctmc(chain) if ctmc else stationary_distribution(chain)
        report['stationary'] = [float(p) for p in pi]
    except ParameterError:
        report['stationary'] = None
    return report


def _render(document: dict) -> str:
    lines = []
    for chain in document['chains']:
        lines.append(f"{chain['role']} {chain['index']}:")
        rows = [
            [format_labels(c['nodes']), c['kind'], c['period']]
            for c in chain['classes']
        ]
        lines.append(tabulate(rows, headers=['class', 'kind', 'period'], tablefmt='simple'))
        if chain['stationary'] is not None:
            lines.append("stationary: " + " ".join(format_number(p) for p in chain['stationary']))
        else:
            lines.append("stationary: not unique")
        lines.append("")

    classification = document['classification']
    rows = [[name, classification[name]] for name in ('one_ergodic', 'sa_overlap', 'all_overlap', 'finite')]
    lines.append(tabulate(rows, headers=['set', 'member'], tablefmt='simple'))
    if 'witness' in classification:
        lines.append(f"witness: ({format_labels(classification['witness'])})")
    infinite = document['certificate']['infinite_states']
    if infinite:
        shown = ", ".join(f"({format_labels(t)})" for t in infinite[:10])
        lines.append(f"infinite meeting times from: {shown}{' ...' if len(infinite) > 10 else ''}")
    return "\n".join(lines)


@click.command('analyze')
@graph_options
@chain_options
@output_options
@handled
def analyze(as_json, state_budget, **options):
    """Classes, periods and finite-meeting-time conditions of the walkers."""
    config = make_config('analyze', options)
    pursuers, evaders = build_agents(config)

    chains = [_chain_report('pursuer', k + 1, P, config.ctmc) for k, P in enumerate(pursuers)]
    chains += [_chain_report('evader', k + 1, P, config.ctmc) for k, P in enumerate(evaders)]

    classify = classify_tuple_ctmc if config.ctmc else classify_tuple
    classification = classify(pursuers, evaders, state_budget=state_budget)
    certificate = finiteness_certificate(pursuers + evaders, config.L, config.M, state_budget)

    document = {
        'chains': chains,
        'classification': classification.to_dict(),
        'certificate': certificate.to_dict(),
    }
    emit(config, document, 'analyze.yml', as_json, _render)
