"""
Environment variables loader.

Centralised helper around python-dotenv: ``env_load()`` reads the ``.env``
file at most once per process, ``get_env()`` returns a variable after making
sure the file has been loaded.
"""

import logging
import os
from typing import Optional

logger = logging.getLogger('meetwalk.config')

_env_loaded = False
_env_file_path = None


def env_load(env_file: str = '.env', force_reload: bool = False) -> bool:
    """
    Make sure environment variables from ``env_file`` are loaded.

    Args:
        env_file: Path to the .env file (default: '.env')
        force_reload: Reload even when the file was loaded before

    Returns:
        bool: True when the environment is usable
    """
    global _env_loaded, _env_file_path

    if _env_loaded and not force_reload and _env_file_path == env_file:
        return True

    try:
        from dotenv import load_dotenv
    except ImportError:
        logger.error("python-dotenv package not found. Install it with: pip install python-dotenv")
        return False

    if not os.path.exists(env_file):
        logger.debug(f"Environment file {env_file} not found, using process environment only")
        _env_loaded = True
        _env_file_path = env_file
        return True

    try:
        load_dotenv(env_file, override=force_reload)
    except Exception as e:
        logger.error(f"Unexpected error loading environment variables from {env_file}: {e}")
        return False

    _env_loaded = True
    _env_file_path = env_file
    logger.debug(f"Environment variables loaded from {env_file}")
    return True


def get_env(key: str, default: Optional[str] = None, required: bool = False) -> Optional[str]:
    """
    Read an environment variable, loading the .env file first.

    Args:
        key: Environment variable key
        default: Value returned when the key is not set
        required: Raise when the key is missing and no default is given

    Returns:
        str: Value of the environment variable

    Raises:
        ValueError: When ``required`` is set and the key is missing
    """
    env_load()

    value = os.getenv(key, default)

    if required and value is None:
        raise ValueError(f"Required environment variable '{key}' not found")

    return value
