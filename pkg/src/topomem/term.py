"""Temporal scene-graph memory: cross-snapshot instance links, velocities and extrapolation."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .core import Config, SceneGraphSnapshot, SceneNode, ValidationError


class OrderingError(ValidationError):
    """Snapshot pushed out of timestep order."""


@dataclass(frozen=True)
class TemporalEdge:
    from_node: tuple[int, str]
    to_node: tuple[int, str]
    weight: float
    dt: int


def similarity(a: SceneNode, b: SceneNode, alpha_sim: float = 0.5, sigma_p: float = 1.0) -> float:
    """Label agreement blended with exponential spatial closeness, in [0, 1]."""
    if sigma_p <= 0:
        raise ValidationError(f"sigma_p must be > 0, got {sigma_p}")
    same = 1.0 if a.label == b.label else 0.0
    dist = math.dist(a.position, b.position)
    return alpha_sim * same + (1.0 - alpha_sim) * math.exp(-dist / sigma_p)


def edge_weight(a: SceneNode, b: SceneNode, gamma: float, lam: float) -> float:
    delta = math.dist(a.features, b.features)
    return gamma * math.exp(-lam * delta)


class TemporalMemory:
    """Sliding window of the most recent ``K`` snapshots.

    Temporal edges only join consecutive retained snapshots. Velocities are
    keyed by semantic label and refreshed on every push from the newest pair.
    """

    def __init__(self, K: int = 100) -> None:
        self.K = K
        self.window: deque[SceneGraphSnapshot] = deque()
        self.temporal_edges: list[TemporalEdge] = []
        self.velocities: dict[str, np.ndarray] = {}

    def __len__(self) -> int:
        return len(self.window)

    @property
    def newest(self) -> SceneGraphSnapshot | None:
        return self.window[-1] if self.window else None

    def snapshot_at(self, t: int) -> SceneGraphSnapshot | None:
        for g in self.window:
            if g.timestep == t:
                return g
        return None


def push_snapshot(mem: TemporalMemory, g: SceneGraphSnapshot, cfg: Config) -> int:
    """Append ``g``, link it to the previous snapshot and evict beyond ``K``.

    Returns the number of temporal edges created.
    """
    prev = mem.newest
    if prev is not None and g.timestep <= prev.timestep:
        raise OrderingError(f"snapshot timestep {g.timestep} not after {prev.timestep}")
    created = 0
    if prev is not None:
        dt = g.timestep - prev.timestep
        for v in prev.nodes:
            for u in g.nodes:
                if similarity(v, u, cfg.alpha_sim, cfg.sigma_p) > cfg.tau:
                    mem.temporal_edges.append(TemporalEdge(
                        (prev.timestep, v.id), (g.timestep, u.id),
                        edge_weight(v, u, cfg.gamma, cfg.lambda_), dt))
                    created += 1
    mem.window.append(g)
    while len(mem.window) > mem.K:
        gone = mem.window.popleft().timestep
        mem.temporal_edges = [e for e in mem.temporal_edges if e.from_node[0] != gone]
    _refresh_velocities(mem)
    return created


def _best_link(mem: TemporalMemory, label: str) -> tuple[SceneNode, SceneNode, int] | None:
    if len(mem.window) < 2:
        return None
    prev, cur = mem.window[-2], mem.window[-1]
    best = None
    best_key = None
    for e in mem.temporal_edges:
        if e.from_node[0] != prev.timestep or e.to_node[0] != cur.timestep:
            continue
        a = prev.node(e.from_node[1])
        b = cur.node(e.to_node[1])
        if a.label != label or b.label != label:
            continue
        key = (-e.weight, b.id, a.id)
        if best_key is None or key < best_key:
            best_key, best = key, (a, b, e.dt)
    return best


def estimate_velocity(mem: TemporalMemory, label: str) -> np.ndarray | None:
    """Displacement per timestep of ``label`` across the two newest snapshots."""
    link = _best_link(mem, label)
    if link is None:
        return None
    a, b, dt = link
    return (b.p - a.p) / dt


def _refresh_velocities(mem: TemporalMemory) -> None:
    cur = mem.newest
    if cur is None:
        return
    for label in sorted({n.label for n in cur.nodes}):
        v = estimate_velocity(mem, label)
        if v is not None:
            mem.velocities[label] = v


def predict_position(mem: TemporalMemory, node: SceneNode, k: int) -> np.ndarray:
    if k < 1:
        raise ValidationError(f"prediction horizon must be >= 1, got {k}")
    v = mem.velocities.get(node.label)
    if v is None:
        return node.p.copy()
    return node.p + k * v


def query_history(mem: TemporalMemory, label: str,
                  window: tuple[int, int]) -> list[tuple[int, np.ndarray]]:
    lo, hi = window
    if lo > hi:
        raise ValidationError(f"interval endpoints out of order: {window}")
    out = []
    for g in mem.window:
        if lo <= g.timestep <= hi:
            out.extend((g.timestep, n.p) for n in g.nodes if n.label == label)
    return out
