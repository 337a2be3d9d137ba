"""
Options and plumbing shared by every subcommand.
"""
import functools
import json
import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import click
import jsonschema
import yaml

from meetwalk.config import MeetwalkError, ParameterError, handle_error, validate_output_enabled
from meetwalk.services.graph_core import (
    Digraph,
    equal_neighbor_matrix,
    generate,
    load_graph,
    load_matrix,
    rate_matrix_from_digraph,
)
from meetwalk.utils.general import schema_path
from meetwalk.utils.text import parse_labels
from meetwalk.utils.validation import GRAPH_FAMILIES

logger = logging.getLogger('meetwalk.cli')


@dataclass
class ExperimentConfig:
    """Everything needed to rerun a command; echoed with every result."""

    command: str
    family: Optional[str] = None
    params: Dict[str, Any] = field(default_factory=dict)
    graph_path: Optional[str] = None
    self_loops: bool = True
    pursuer_matrices: List[str] = field(default_factory=list)
    evader_matrices: List[str] = field(default_factory=list)
    L: int = 1
    M: int = 1
    ctmc: bool = False
    output: Optional[str] = None
    seed: int = 0
    extra: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {key: value for key, value in asdict(self).items() if value not in (None, [], {})}

    def header(self) -> str:
        parts = [self.command]
        if self.family:
            parts.append(f"family={self.family}")
        parts.extend(f"{key}={value}" for key, value in self.params.items())
        if self.graph_path:
            parts.append(f"graph={self.graph_path}")
        if self.pursuer_matrices:
            parts.append(f"pursuer_matrices={','.join(self.pursuer_matrices)}")
        if self.evader_matrices:
            parts.append(f"evader_matrices={','.join(self.evader_matrices)}")
        parts.append(f"L={self.L} M={self.M}")
        parts.append('ctmc' if self.ctmc else ('self_loops' if self.self_loops else 'no_self_loops'))
        parts.append(f"seed={self.seed}")
        parts.extend(f"{key}={value}" for key, value in self.extra.items())
        return "# " + " ".join(parts)


def graph_options(func: Callable) -> Callable:
    options = [
        click.option('--family', type=click.Choice(GRAPH_FAMILIES), help='Standard graph family.'),
        click.option('--n', 'n', type=int, help='Number of nodes.'),
        click.option('--clique', type=int, help='Lollipop clique size.'),
        click.option('--tail', type=int, help='Lollipop tail length.'),
        click.option('--rows', type=int, help='Lattice rows.'),
        click.option('--cols', type=int, help='Lattice columns.'),
        click.option('--radius', type=float, help='Random geometric connection radius.'),
        click.option('--seed', type=int, default=0, show_default=True, help='Seed for random graphs and simulations.'),
        click.option('--graph', 'graph_path', type=click.Path(dir_okay=False), help='Graph JSON file.'),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def chain_options(func: Callable) -> Callable:
    options = [
        click.option('--self-loops/--no-self-loops', default=True, show_default=True,
                     help='Equal-neighbor walks stay put with the same probability as each move.'),
        click.option('--pursuer-matrix', 'pursuer_matrices', multiple=True, type=click.Path(dir_okay=False),
                     help='Explicit pursuer matrix (CSV or JSON); repeat for several pursuers.'),
        click.option('--evader-matrix', 'evader_matrices', multiple=True, type=click.Path(dir_okay=False),
                     help='Explicit evader matrix (CSV or JSON); repeat for several evaders.'),
        click.option('--L', 'L', type=int, help='Number of pursuers.'),
        click.option('--M', 'M', type=int, help='Number of evaders.'),
        click.option('--ctmc', is_flag=True, help='Continuous-time walkers (unit rates on graph edges).'),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def output_options(func: Callable) -> Callable:
    options = [
        click.option('--json/--human', 'as_json', default=False, help='Output format.'),
        click.option('--output', type=click.Path(dir_okay=False), help='Write the report to a file.'),
        click.option('--state-budget', type=int, help='Maximum number of product states.'),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def make_config(command: str, options: Dict[str, Any]) -> ExperimentConfig:
    params = {
        key: options.get(key)
        for key in ('n', 'clique', 'tail', 'rows', 'cols', 'radius')
        if options.get(key) is not None
    }
    if options.get('family') == 'random_geometric':
        params['seed'] = options.get('seed', 0)
    pursuers = list(options.get('pursuer_matrices') or [])
    evaders = list(options.get('evader_matrices') or [])
    L = options.get('L') or (len(pursuers) or 1)
    M = options.get('M') or (len(evaders) or 1)
    if pursuers and len(pursuers) != L:
        raise ParameterError(f"--L {L} does not match {len(pursuers)} pursuer matrices")
    if evaders and len(evaders) != M:
        raise ParameterError(f"--M {M} does not match {len(evaders)} evader matrices")
    if L < 1 or M < 1:
        raise ParameterError("--L and --M must be >= 1")
    return ExperimentConfig(
        command=command,
        family=options.get('family'),
        params=params,
        graph_path=options.get('graph_path'),
        self_loops=options.get('self_loops', True),
        pursuer_matrices=pursuers,
        evader_matrices=evaders,
        L=L,
        M=M,
        ctmc=bool(options.get('ctmc')),
        output=options.get('output'),
        seed=options.get('seed') or 0,
    )


def load_digraph(config: ExperimentConfig) -> Digraph:
    if config.graph_path and config.family:
        raise ParameterError("use either --family or --graph, not both")
    if config.graph_path:
        return load_graph(config.graph_path)
    if config.family:
        return generate(config.family, **config.params)
    raise ParameterError("a graph source is required (--family or --graph)")


def build_agents(config: ExperimentConfig) -> Tuple[list, list]:
    """Pursuer and evader chains from matrix files, or from the graph source."""
    kind = 'rate' if config.ctmc else 'transition'
    pursuers = [load_matrix(path, kind) for path in config.pursuer_matrices]
    evaders = [load_matrix(path, kind) for path in config.evader_matrices]

    if len(pursuers) < config.L or len(evaders) < config.M:
        graph = load_digraph(config)
        chain = rate_matrix_from_digraph(graph) if config.ctmc else equal_neighbor_matrix(graph, config.self_loops)
        if not pursuers:
            pursuers = [chain] * config.L
        if not evaders:
            evaders = [chain] * config.M
    return pursuers, evaders


def parse_starts(values) -> List[Tuple[int, ...]]:
    starts = []
    for text in values or ():
        try:
            starts.append(parse_labels(text))
        except ValueError as e:
            raise ParameterError(str(e)) from e
    return starts


def load_schema(filename: str) -> dict:
    """Published JSON schema of a command's output, from its YAML document."""
    with open(schema_path(filename), encoding='utf-8') as fh:
        spec = yaml.safe_load(fh)
    return spec['responses'][0]['content']['application/json']['schema']


def validate_document(document: dict, filename: str) -> None:
    try:
        jsonschema.validate(document, load_schema(filename))
    except jsonschema.ValidationError as e:
        raise MeetwalkError(f"output does not match {filename}: {e.message}") from e


def emit(config: ExperimentConfig, document: dict, schema: str, as_json: bool,
         render_human: Callable[[dict], str]) -> None:
    """Validate, render and write (or print) one report."""
    document = {'config': config.to_dict(), **document}
    if validate_output_enabled():
        validate_document(document, schema)

    if as_json:
        text = json.dumps(document, indent=2, allow_nan=False)
    else:
        text = config.header() + "\n" + render_human(document)

    if config.output:
        with open(config.output, 'w', encoding='utf-8') as fh:
            fh.write(text + "\n")
        logger.info(f"Report written to {config.output}")
    else:
        click.echo(text)


def handled(func: Callable) -> Callable:
    """Map exceptions raised by a command body to ``error: ...`` and an exit code."""
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        ctx = click.get_current_context()
        try:
            return func(*args, **kwargs)
        except (click.exceptions.Exit, click.ClickException, click.Abort):
            raise
        except Exception as e:
            code, message = handle_error(e)
            click.echo(f"error: {message}", err=True)
            ctx.exit(code)
    return wrapper

