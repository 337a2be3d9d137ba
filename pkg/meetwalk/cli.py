"""
Command-line entry point: ``meetwalk <command>`` or ``python -m meetwalk``.
"""
import logging
import os
import sys

import click

from meetwalk.commands.analyze import analyze
from meetwalk.commands.gen import gen
from meetwalk.commands.meet import meet
from meetwalk.commands.simulate import simulate
from meetwalk.commands.table1 import table1
from meetwalk.utils.env_loader import env_load, get_env


def configure_logging(verbose: bool = False) -> None:
    """Configure root logging once per interpreter to prevent duplicate output."""
    if getattr(configure_logging, "_configured", False):
        if verbose:
            logging.getLogger('meetwalk').setLevel(logging.DEBUG)
        return

    level_name = (get_env("MEETWALK_LOG_LEVEL", "INFO") or "INFO").upper()
    level = logging.DEBUG if verbose else getattr(logging, level_name, logging.INFO)

    root_logger = logging.getLogger()
    root_logger.setLevel(level)

    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    # stdout carries the reports
    stderr_handler = logging.StreamHandler(sys.stderr)
    stderr_handler.setLevel(level)
    stderr_handler.setFormatter(logging.Formatter('(%(name)s) | [%(levelname)s] | %(message)s'))
    root_logger.addHandler(stderr_handler)

    log_dir = get_env("MEETWALK_LOG_DIR")
    if log_dir:
        os.makedirs(log_dir, exist_ok=True)
        file_handler = logging.FileHandler(os.path.join(log_dir, 'meetwalk.log'))
        file_handler.setLevel(logging.WARNING)
        file_handler.setFormatter(logging.Formatter('%(asctime)s | (%(name)s) | [%(levelname)s] | %(message)s'))
        root_logger.addHandler(file_handler)

    logging.getLogger('meetwalk').setLevel(level)

    configure_logging._configured = True


@click.group()
@click.option('--verbose', is_flag=True, help='Debug logging on stderr.')
@click.option('--env-file', default='.env', show_default=True, help='Optional dotenv file with MEETWALK_* settings.')
def main(verbose, env_file):
    """Expected meeting times of random walkers on digraphs."""
    env_load(env_file)
    configure_logging(verbose)


main.add_command(gen)
main.add_command(analyze)
main.add_command(meet)
main.add_command(simulate)
main.add_command(table1)
