import math
from typing import Sequence

GRAPH_FAMILIES = ('ring', 'path', 'star', 'lollipop', 'lattice', 'random_geometric')


def valid_family(family: str) -> bool:
    return family in GRAPH_FAMILIES


def valid_node_label(label, n: int) -> bool:
    if isinstance(label, bool):
        return False
    try:
        value = int(label)
    except (TypeError, ValueError):
        return False
    if value != label:
        return False
    return 1 <= value <= n


def valid_weight(weight) -> bool:
    """Edge weights are finite and strictly positive (absence of an edge encodes 0)."""
    if isinstance(weight, bool):
        return False
    try:
        value = float(weight)
    except (TypeError, ValueError):
        return False
    return math.isfinite(value) and value > 0


def valid_start(labels: Sequence[int], n: int, size: int) -> bool:
    if len(labels) != size:
        return False
    return all(valid_node_label(label, n) for label in labels)


def valid_radius(radius) -> bool:
    try:
        value = float(radius)
    except (TypeError, ValueError):
        return False
    return 0 < value <= math.sqrt(2)
