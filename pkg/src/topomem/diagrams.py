"""Distances and functional summaries of dimension-1 persistence diagrams."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import ValidationError
from .topology import PersistenceDiagram


def _as_pairs(pd: PersistenceDiagram | np.ndarray | list) -> np.ndarray:
    if isinstance(pd, PersistenceDiagram):
        return pd.pairs(1)
    return np.asarray(pd, dtype=float).reshape(-1, 2)


def augmented_cost(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Squared-distance cost matrix with one diagonal slot per point.

    Rows are the ``n`` points of ``a`` then ``m`` diagonal slots; columns are the
    ``m`` points of ``b`` then ``n`` diagonal slots. A point may only use its own
    diagonal slot; diagonal-to-diagonal is free.
    """
    n, m = len(a), len(b)
    big = np.inf
    cost = np.zeros((n + m, m + n))
    if n and m:
        cost[:n, :m] = ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2)
    # squared distance from (b, d) to its projection ((b+d)/2, (b+d)/2)
    diag_a = (a[:, 1] - a[:, 0]) ** 2 / 2.0
    diag_b = (b[:, 1] - b[:, 0]) ** 2 / 2.0
    ua = np.full((n, n), big)
    np.fill_diagonal(ua, diag_a)
    cost[:n, m:] = ua
    lb = np.full((m, m), big)
    np.fill_diagonal(lb, diag_b)
    cost[n:, :m] = lb
    return cost


def wasserstein2(a, b) -> float:
    """2-Wasserstein distance between two dimension-1 diagrams."""
    pa, pb = _as_pairs(a), _as_pairs(b)
    if len(pa) == 0 and len(pb) == 0:
        return 0.0
    if not (np.all(np.isfinite(pa)) and np.all(np.isfinite(pb))):
        raise ValidationError("wasserstein2 needs finite (clamped) diagrams")
    cost = augmented_cost(pa, pb)
    rows, cols = linear_sum_assignment(cost)
    # correctly rounded, so the result does not depend on summation order
    return math.sqrt(math.fsum(cost[rows, cols].tolist()))


@dataclass(frozen=True)
class Landscape:
    grid: np.ndarray
    values: np.ndarray

    @property
    def spacing(self) -> float:
        # cell-centred grid starting half a cell in
        return float(2.0 * self.grid[0]) if len(self.grid) else 0.0


def landscape_grid(grid_count: int = 64, eps_max: float = 5.0) -> np.ndarray:
    """Centres of ``grid_count`` equal cells covering [0, eps_max]."""
    if grid_count < 2:
        raise ValidationError(f"grid_count must be >= 2, got {grid_count}")
    h = eps_max / grid_count
    return (np.arange(grid_count) + 0.5) * h


def landscape_values(pd, t) -> np.ndarray:
    """Pointwise max over pairs of the tent ``min(t - b, d - t)``, clipped at 0."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    pairs = _as_pairs(pd)
    if len(pairs) == 0:
        return np.zeros_like(t)
    tents = np.minimum(t[None, :] - pairs[:, :1], pairs[:, 1:] - t[None, :])
    return np.maximum(tents.max(axis=0), 0.0)


def landscape(pd, grid_count: int = 64, eps_max: float = 5.0) -> Landscape:
    """First landscape layer sampled on :func:`landscape_grid`."""
    grid = landscape_grid(grid_count, eps_max)
    return Landscape(grid, landscape_values(pd, grid))


def landscape_distance(a: Landscape, b: Landscape) -> float:
    """Discrete L2 norm of the difference, weighted by the grid spacing."""
    if a.grid.shape != b.grid.shape or not np.array_equal(a.grid, b.grid):
        raise ValidationError("landscapes sampled on different grids")
    diff = a.values - b.values
    return math.sqrt(float(diff @ diff) * a.spacing)


def combined_distance(a, b, w_wasserstein: float = 0.7, w_landscape: float = 0.3) -> float:
    """Weighted sum of the diagram and landscape distances of two signatures."""
    return (w_wasserstein * wasserstein2(a.pd1, b.pd1)
            + w_landscape * landscape_distance(a.landscape, b.landscape))


def format_landscape(ls: Landscape) -> str:
    lines = ["t,value"] + [f"{t!r},{v!r}" for t, v in zip(ls.grid.tolist(), ls.values.tolist())]
    return "\n".join(lines) + "\n"


def parse_landscape(text: str) -> Landscape:
    ts, vs = [], []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("t,"):
            continue
        try:
            t, v = (float(x) for x in line.split(","))
        except ValueError:
            raise ValidationError(f"line {lineno}: expected t,value") from None
        ts.append(t)
        vs.append(v)
    if len(ts) < 2:
        raise ValidationError("landscape file needs at least two samples")
    return Landscape(np.array(ts), np.array(vs))


def load_landscape(path: str | Path) -> Landscape:
    return parse_landscape(Path(path).read_text(encoding="utf-8"))
