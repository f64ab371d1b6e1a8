"""Success rate and success weighted by path length."""
from __future__ import annotations

from typing import Sequence

from ..core import ValidationError


def spl_term(success: int, path_length: float, shortest_length: float) -> float:
    return success * shortest_length / max(path_length, shortest_length)


def compute_metrics(results: Sequence) -> tuple[float, float]:
    """(SR, SPL) in percent over ``results``.

    SPL uses the usual ``l / max(p, l)`` ratio, so longer paths score lower.
    """
    if not results:
        raise ValidationError("compute_metrics needs at least one episode")
    for r in results:
        if not r.shortest_length > 0:
            raise ValidationError("every episode needs shortest_length > 0")
    n = len(results)
    sr = 100.0 * sum(r.success for r in results) / n
    spl = 100.0 * sum(spl_term(r.success, r.path_length, r.shortest_length) for r in results) / n
    return sr, spl
