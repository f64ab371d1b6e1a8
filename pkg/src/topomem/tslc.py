"""Loop-closure detection from topological signatures of trajectory segments."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import Config, Trajectory, ValidationError
from .diagrams import Landscape, combined_distance, landscape, landscape_grid
from .topology import (PersistenceDiagram, embed_enhanced, embed_poses, filter_diagram,
                       persistence_dim1)


class TrajectoryTooShort(ValidationError):
    pass


@dataclass(frozen=True)
class TopologicalSignature:
    pd1: PersistenceDiagram
    landscape: Landscape
    anchor: tuple[float, float]
    created_at: int


@dataclass(frozen=True)
class LoopDetection:
    detected: bool
    matched_index: int | None
    confidence: float
    d_min: float

    @classmethod
    def null(cls) -> "LoopDetection":
        return cls(False, None, 0.0, math.inf)


@dataclass
class SignatureStore:
    entries: list[TopologicalSignature] = field(default_factory=list)
    comparisons: int = 0

    def append(self, sig: TopologicalSignature) -> None:
        if self.entries and sig.created_at < self.entries[-1].created_at:
            raise ValidationError("signatures must be appended in creation order")
        self.entries.append(sig)

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, i: int) -> TopologicalSignature:
        return self.entries[i]

    def dumps(self) -> str:
        return "".join(json.dumps(signature_to_dict(s), sort_keys=True) + "\n"
                       for s in self.entries)

    @classmethod
    def loads(cls, text: str) -> "SignatureStore":
        store = cls()
        for line in text.splitlines():
            if line.strip():
                store.append(signature_from_dict(json.loads(line)))
        return store

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "SignatureStore":
        return cls.loads(Path(path).read_text(encoding="utf-8"))


def signature_to_dict(sig: TopologicalSignature) -> dict:
    ls = sig.landscape
    return {
        "anchor": list(sig.anchor),
        "created_at": sig.created_at,
        "pd1": [list(p) for p in sig.pd1.dim1_pairs],
        "eps_max": sig.pd1.eps_max,
        "landscape": ls.values.tolist(),
    }


def signature_from_dict(d: dict) -> TopologicalSignature:
    eps_max = float(d["eps_max"])
    values = np.array(d["landscape"], dtype=float)
    grid = landscape_grid(len(values), eps_max)
    pd = PersistenceDiagram([tuple(p) for p in d["pd1"]], eps_max=eps_max)
    return TopologicalSignature(pd, Landscape(grid, values),
                                (float(d["anchor"][0]), float(d["anchor"][1])),
                                int(d["created_at"]))


def compute_signature(segment: Trajectory, cfg: Config, features: np.ndarray | None = None,
                      basis: np.ndarray | None = None) -> TopologicalSignature:
    """Signature of a trajectory segment, anchored at its final position.

    With ``features`` (one row per point) and a 3-row ``basis``, points are
    embedded with the appended visual projection.
    """
    if len(segment) < cfg.min_traj_len:
        raise TrajectoryTooShort(
            f"segment has {len(segment)} points, min_traj_len is {cfg.min_traj_len}")
    poses = segment.poses
    if features is not None:
        if basis is None:
            raise ValidationError("features given without a projection basis")
        feats = np.asarray(features, dtype=float)
        if len(feats) != len(poses):
            raise ValidationError("one feature row per trajectory point required")
        cloud = np.array([embed_enhanced(p, f, basis, cfg.r, cfg.alpha_vis)
                          for p, f in zip(poses, feats)])
    else:
        cloud = embed_poses(poses, cfg.r)
    pd1 = filter_diagram(persistence_dim1(cloud, cfg.eps_max), cfg.tau_p)
    pd1 = PersistenceDiagram(pd1.dim1_pairs, [], 0, pd1.eps_max)
    last_t, last = segment[-1]
    return TopologicalSignature(pd1, landscape(pd1, cfg.landscape_grid, cfg.eps_max),
                                (last.x, last.y), last_t)


def check_loop(store: SignatureStore, traj: Trajectory, cfg: Config,
               features: np.ndarray | None = None,
               basis: np.ndarray | None = None) -> LoopDetection:
    """Compare the newest segment against nearby stored signatures, then store it."""
    if len(traj) < cfg.min_traj_len:
        return LoopDetection.null()
    segment = traj.tail(cfg.segment_len)
    if features is not None:
        features = np.asarray(features)[-len(segment):]
    sig = compute_signature(segment, cfg, features, basis)
    d_min = math.inf
    best = None
    for j, other in enumerate(store.entries):
        if math.dist(sig.anchor, other.anchor) > cfg.R_search:
            continue
        store.comparisons += 1
        d = combined_distance(sig, other, cfg.w_wasserstein, cfg.w_landscape)
        # strict: earliest signature wins exact ties
        if d < d_min:
            d_min, best = d, j
    store.append(sig)
    if best is None:
        return LoopDetection(False, None, 0.0, math.inf)
    return LoopDetection(d_min < cfg.theta_w, best, confidence(d_min, cfg.theta_w), d_min)


def confidence(d_min: float, theta_w: float) -> float:
    return math.exp(-d_min / theta_w)


def cadence_gate(t: int, cfg: Config) -> bool:
    return t % cfg.cadence == 0
