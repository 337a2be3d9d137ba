"""
Runtime configuration and the error registry.

Settings are read at call time from the environment (optionally from a
``.env`` file), so a test or a CLI flag can change them without reloading
the package. Exceptions raised anywhere in the package are mapped to process
exit codes through ``errorhandler``.
"""
import logging
from typing import Callable, Dict, Optional, Type

from meetwalk.utils.env_loader import get_env
from meetwalk.utils.text import to_bool

logger = logging.getLogger('meetwalk.config')

DEFAULT_STATE_BUDGET = 10 ** 7
DEFAULT_DENSE_LIMIT = 5000
DEFAULT_SOLVER_RTOL = 1e-10
DEFAULT_SOLVER_MAXITER = 10 ** 5
DEFAULT_SIM_WORKERS = 4

# Tolerances used by the domain types
ROW_SUM_TOL = 1e-12
STATIONARY_RESIDUAL_TOL = 1e-10
FIXED_POINT_RESIDUAL_TOL = 1e-9

# Monte Carlo defaults
DEFAULT_DTMC_HORIZON = 10 ** 6
DEFAULT_CTMC_JUMPS = 10 ** 6
SIMULATION_BLOCK_SIZE = 4096


class MeetwalkError(Exception):
    """Base exception for meetwalk"""
    exit_code = 1


class ParameterError(MeetwalkError, ValueError):
    """Invalid input or violated precondition"""
    exit_code = 2


class GraphParseError(ParameterError):
    """Malformed graph or matrix file"""

    def __init__(self, message: str, line: Optional[int] = None, path: Optional[str] = None):
        self.line = line
        self.path = path
        where = ""
        if path:
            where = f"{path}:"
        if line is not None:
            where = f"{where}{line}:"
        super().__init__(f"{where} {message}".strip() if where else message)


class StateBudgetError(MeetwalkError):
    """Product state space larger than the configured budget"""
    exit_code = 3

    def __init__(self, states: int, budget: int):
        self.states = states
        self.budget = budget
        super().__init__(
            f"product state space has {states} states, over the budget of {budget} "
            f"(raise MEETWALK_STATE_BUDGET or --state-budget)"
        )


class SolverError(MeetwalkError):
    """Iterative solver did not reach the requested tolerance"""
    exit_code = 3


# Exception type -> handler returning (exit code, message)
_ERROR_HANDLERS: Dict[Type[BaseException], Callable[[BaseException], tuple]] = {}


def errorhandler(exc_type: Type[BaseException]):
    """Register a handler that turns ``exc_type`` into ``(exit_code, message)``."""
    def decorator(func):
        _ERROR_HANDLERS[exc_type] = func
        return func
    return decorator


def handle_error(exc: BaseException) -> tuple:
    """Resolve the most specific registered handler along the exception's MRO."""
    for klass in type(exc).__mro__:
        handler = _ERROR_HANDLERS.get(klass)
        if handler is not None:
            return handler(exc)
    logger.exception(f"Unhandled {type(exc).__name__}: {exc}")
    return 1, f"unexpected error: {exc}"


@errorhandler(MeetwalkError)
def handle_meetwalk_error(e):
    logger.error(f"{type(e).__name__}: {e}")
    return e.exit_code, str(e)


@errorhandler(OSError)
def handle_io_error(e):
    logger.error(f"I/O error: {e}")
    return 4, f"I/O error: {e}"


def _positive_number(key: str, default, cast):
    raw_value = (get_env(key, "") or "").strip()
    if not raw_value:
        return default
    try:
        value = cast(float(raw_value)) if cast is int else cast(raw_value)
    except (TypeError, ValueError):
        logger.warning(f"Ignoring invalid {key}={raw_value!r}, using {default}")
        return default
    if value <= 0:
        logger.warning(f"Ignoring non-positive {key}={raw_value!r}, using {default}")
        return default
    return value


def get_state_budget(override: Optional[int] = None) -> int:
    """Maximum number of product states any single operation may touch."""
    if override is not None:
        return int(override)
    return _positive_number("MEETWALK_STATE_BUDGET", DEFAULT_STATE_BUDGET, int)


def get_dense_limit() -> int:
    """Largest system dimension solved with a dense direct solver."""
    return _positive_number("MEETWALK_DENSE_LIMIT", DEFAULT_DENSE_LIMIT, int)


def get_solver_rtol() -> float:
    return _positive_number("MEETWALK_SOLVER_RTOL", DEFAULT_SOLVER_RTOL, float)


def get_solver_maxiter() -> int:
    return _positive_number("MEETWALK_SOLVER_MAXITER", DEFAULT_SOLVER_MAXITER, int)


def get_sim_workers() -> int:
    return _positive_number("MEETWALK_SIM_WORKERS", DEFAULT_SIM_WORKERS, int)


def validate_output_enabled() -> bool:
    return to_bool(get_env("MEETWALK_VALIDATE_OUTPUT", "true"))
