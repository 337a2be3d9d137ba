import logging

import click
import pandas as pd
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
from meetwalk.config import ParameterError
from meetwalk.services.meeting_ctmc import ctmc_group_meeting_times, ctmc_mean_group_meeting_time
from meetwalk.services.meeting_dtmc import group_meeting_times, mean_group_meeting_time
from meetwalk.utils.text import format_number

logger = logging.getLogger('meetwalk.cli')


def _render(document: dict) -> str:
    rows = [[labels, format_number(value)] for labels, value in document['values'].items()]
    table = tabulate(rows, headers=['start', 'meeting time'], tablefmt='simple', disable_numparse=True)
    summary = tabulate(
        [
            ['max', format_number(document['max'])],
            ['mean', format_number(document['mean'])],
            ['residual', f"{document['residual']:.3g}"],
            ['time unit', document['time_unit']],
        ],
        tablefmt='plain',
    )
    return f"{table}\n\n{summary}"


@click.command('meet')
@graph_options
@chain_options
@click.option('--start', 'starts', multiple=True, help='Start tuple such as "1,2"; repeatable. Default: all.')
@click.option('--matrix-out', type=click.Path(dir_okay=False), help='CSV of the n x n meeting times (L = M = 1).')
@output_options
@handled
def meet(starts, matrix_out, as_json, state_budget, **options):
    """Expected meeting times from every (or the selected) start tuple."""
    config = make_config('meet', options)
    pursuers, evaders = build_agents(config)
    selected = parse_starts(starts) or None

    if config.ctmc:
        result = ctmc_group_meeting_times(pursuers, evaders, state_budget)
        mean_of = ctmc_mean_group_meeting_time
    else:
        result = group_meeting_times(pursuers, evaders, state_budget)
        mean_of = mean_group_meeting_time

    try:
        mean = mean_of(pursuers, evaders, state_budget, result=result)
    except ParameterError as e:
        logger.info(f"No mean meeting time: {e}")
        mean = None

    if matrix_out:
        pd.DataFrame(result.as_matrix().filled(float('inf'))).to_csv(
            matrix_out, header=False, index=False, float_format='%.17g'
        )
        config.extra['matrix_out'] = matrix_out

    emit(config, result.to_dict(mean=mean, starts=selected), 'meet.yml', as_json, _render)
