import math
from typing import Iterable, Optional


def to_bool(value) -> bool:
    return str(value).strip().lower() in ("true", "1", "yes", "on")


def format_labels(labels: Iterable[int]) -> str:
    """Render a start tuple of 1-based labels as ``"1,2,3"``."""
    return ",".join(str(int(label)) for label in labels)


def parse_labels(text: str) -> tuple:
    """Parse ``"1,2"`` (or ``"1 2"``) into a tuple of ints."""
    parts = [p for p in text.replace(" ", ",").split(",") if p.strip()]
    try:
        return tuple(int(p) for p in parts)
    except ValueError as exc:
        raise ValueError(f"invalid start tuple '{text}'") from exc


def format_number(value: Optional[float], digits: int = 6) -> str:
    """Human-mode number formatting: ``digits`` significant digits, ``inf`` kept readable."""
    if value is None:
        return "-"
    if isinstance(value, str):
        return value
    if math.isinf(value):
        return "inf"
    return f"{value:.{digits}g}"


def json_number(value: Optional[float]):
    """JSON-mode number: full precision, infinity as the string ``"inf"``."""
    if value is None:
        return None
    value = float(value)
    if math.isinf(value):
        return "inf"
    return value
