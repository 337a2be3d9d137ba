"""
General utilities for common functionality.
"""

import os

from meetwalk.utils.env_loader import get_env


def schema_path(filename: str) -> str:
    """
    Return the path of a published output schema under ``commands/specs``.

    ``MEETWALK_SPECS_DIR`` overrides the location (useful when the package is
    vendored somewhere without its data files).
    """
    override = get_env("MEETWALK_SPECS_DIR")
    if override:
        candidate = os.path.join(override, filename)
        if os.path.exists(candidate):
            return candidate

    package_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    return os.path.join(package_root, "commands", "specs", filename)
