import logging
import math

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
    parse_starts,
)
from meetwalk.config import DEFAULT_CTMC_JUMPS, DEFAULT_DTMC_HORIZON, ParameterError
from meetwalk.services.mc_oracle import simulate_ctmc, simulate_dtmc
from meetwalk.services.meeting_ctmc import ctmc_group_meeting_times
from meetwalk.services.meeting_dtmc import group_meeting_times
from meetwalk.utils.text import format_labels, format_number, json_number

logger = logging.getLogger('meetwalk.cli')


def _render(document: dict) -> str:
    rows = [
        ['start', format_labels(document['start'])],
        ['mean', format_number(document['mean'])],
        ['std error', format_number(document['std_error'])],
        ['trials', document['trials']],
        ['censored', document['censored']],
        ['horizon', document['horizon']],
        ['closed form', format_number(document['closed_form'])],
    ]
    text = tabulate(rows, tablefmt='plain', disable_numparse=True)
    if document['lower_bound_only']:
        text += "\n(some trials were censored: the mean is a lower bound only)"
    return text


@click.command('simulate')
@graph_options
@chain_options
@click.option('--start', help='Start tuple such as "1,2". Default: the worst start of the closed form.')
@click.option('--trials', type=int, default=10 ** 5, show_default=True)
@click.option('--horizon', type=int, help='Step cap (discrete time) or jump cap (continuous time).')
@click.option('--workers', type=int, help='Worker threads (default MEETWALK_SIM_WORKERS).')
@output_options
@handled
def simulate(start, trials, horizon, workers, as_json, state_budget, **options):
    """Monte Carlo estimate of a meeting time."""
    config = make_config('simulate', options)
    pursuers, evaders = build_agents(config)

    solve = ctmc_group_meeting_times if config.ctmc else group_meeting_times
    closed_form = None
    if start:
        labels = parse_starts([start])[0]
    else:
        result = solve(pursuers, evaders, state_budget)
        labels = result.worst_start()
        closed_form = result.value(labels)
        logger.info(f"Simulating from the worst start ({format_labels(labels)})")
        if math.isinf(closed_form):
            logger.warning(f"Start {format_labels(labels)} never meets; every trial runs to the horizon, "
                           "pass --horizon to bound the run")
    if len(labels) != config.L + config.M:
        raise ParameterError(f"--start needs {config.L + config.M} labels")

    if config.ctmc:
        horizon = horizon or DEFAULT_CTMC_JUMPS
        estimate = simulate_ctmc(pursuers, evaders, labels, trials, horizon, config.seed, workers)
    else:
        horizon = horizon or DEFAULT_DTMC_HORIZON
        estimate = simulate_dtmc(pursuers, evaders, labels, trials, horizon, config.seed, workers)

    config.extra = {'trials': trials, 'horizon': horizon}
    document = {'start': list(labels), 'closed_form': json_number(closed_form), **estimate.to_dict()}
    emit(config, document, 'simulate.yml', as_json, _render)
