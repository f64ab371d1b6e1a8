"""Shared domain types: poses, trajectories, scene graphs, goals and run configuration."""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Iterable, Iterator, Sequence

import numpy as np
import yaml


class ValidationError(ValueError):
    """Raised when a value violates a documented invariant."""


class ConfigParseError(ValidationError):
    """Raised for malformed configuration documents."""


def normalize_angle(theta: float) -> float:
    """Wrap ``theta`` into ``[-pi, pi)``."""
    theta = float(theta)
    if not math.isfinite(theta):
        raise ValidationError(f"angle must be finite, got {theta!r}")
    wrapped = math.fmod(theta + math.pi, 2.0 * math.pi)
    if wrapped < 0.0:
        wrapped += 2.0 * math.pi
    wrapped -= math.pi
    # fmod rounding can land exactly on +pi
    if wrapped >= math.pi:
        wrapped -= 2.0 * math.pi
    return wrapped


def _finite_vec(values: Iterable[float], name: str, dim: int | None = None) -> tuple[float, ...]:
    vec = tuple(float(v) for v in values)
    if dim is not None and len(vec) != dim:
        raise ValidationError(f"{name} must have {dim} components, got {len(vec)}")
    if not all(math.isfinite(v) for v in vec):
        raise ValidationError(f"{name} has non-finite components: {vec}")
    return vec


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    theta: float = 0.0

    def __post_init__(self) -> None:
        _finite_vec((self.x, self.y), "pose position")
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "theta", normalize_angle(self.theta))

    @property
    def xy(self) -> np.ndarray:
        return np.array([self.x, self.y])


class Trajectory:
    """Append-only sequence of ``(timestep, Pose)`` with strictly increasing timesteps."""

    def __init__(self, points: Iterable[tuple[int, Pose]] = ()) -> None:
        self._points: list[tuple[int, Pose]] = []
        for t, pose in points:
            self.append(t, pose)

    def append(self, t: int, pose: Pose) -> None:
        t = int(t)
        if t < 0:
            raise ValidationError(f"timestep must be non-negative, got {t}")
        if self._points and t <= self._points[-1][0]:
            raise ValidationError(
                f"timesteps must increase strictly: {t} after {self._points[-1][0]}")
        self._points.append((t, pose))

    @property
    def points(self) -> tuple[tuple[int, Pose], ...]:
        return tuple(self._points)

    @property
    def poses(self) -> list[Pose]:
        return [p for _, p in self._points]

    def tail(self, n: int) -> "Trajectory":
        """The most recent ``n`` points as a new trajectory."""
        return Trajectory(self._points[-n:] if n > 0 else [])

    def __len__(self) -> int:
        return len(self._points)

    def __iter__(self) -> Iterator[tuple[int, Pose]]:
        return iter(self._points)

    def __getitem__(self, i: int) -> tuple[int, Pose]:
        return self._points[i]


@dataclass(frozen=True)
class SceneNode:
    id: str
    label: str
    position: tuple[float, float, float]
    features: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "position", _finite_vec(self.position, "node position", 3))
        feats = _finite_vec(self.features, "node features")
        if len(feats) < 1:
            raise ValidationError("node features must have at least one component")
        object.__setattr__(self, "features", feats)

    @property
    def p(self) -> np.ndarray:
        return np.asarray(self.position)

    @property
    def f(self) -> np.ndarray:
        return np.asarray(self.features)


@dataclass(frozen=True)
class SceneGraphSnapshot:
    timestep: int
    nodes: tuple[SceneNode, ...] = ()
    spatial_edges: tuple[tuple[str, str, str], ...] = ()

    def __post_init__(self) -> None:
        if int(self.timestep) < 0:
            raise ValidationError("snapshot timestep must be non-negative")
        nodes = tuple(sorted(self.nodes, key=lambda n: n.id))
        ids = [n.id for n in nodes]
        if len(set(ids)) != len(ids):
            raise ValidationError(f"duplicate node ids in snapshot {self.timestep}")
        dims = {len(n.features) for n in nodes}
        if len(dims) > 1:
            raise ValidationError(f"mixed feature dimensionality {sorted(dims)}")
        known = set(ids)
        edges = []
        for a, b, rel in self.spatial_edges:
            if a not in known or b not in known:
                raise ValidationError(f"edge ({a}, {b}) references a missing node")
            edges.append((min(a, b), max(a, b), rel))
        object.__setattr__(self, "timestep", int(self.timestep))
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "spatial_edges", tuple(sorted(set(edges))))

    def node(self, node_id: str) -> SceneNode:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)


@dataclass(frozen=True)
class GoalSpec:
    label: str
    features: tuple[float, ...]
    true_position: tuple[float, float, float] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "features", _finite_vec(self.features, "goal features"))
        if self.true_position is not None:
            object.__setattr__(self, "true_position",
                               _finite_vec(self.true_position, "goal position", 3))


@dataclass(frozen=True)
class Config:
    # temporal memory
    K: int = 100
    gamma: float = 0.95
    lambda_: float = 1.0
    tau: float = 0.5
    alpha_sim: float = 0.5
    sigma_p: float = 1.0
    # topological signatures
    r: float = 0.5
    eps_max: float = 5.0
    tau_p: float = 0.1
    theta_w: float = 2.0
    alpha_vis: float = 0.5
    R_search: float = 10.0
    cadence: int = 10
    min_traj_len: int = 10
    segment_len: int = 50
    landscape_grid: int = 64
    w_wasserstein: float = 0.7
    w_landscape: float = 0.3
    # simulator
    step_budget: int = 500
    forward_step: float = 0.25
    turn_angle_deg: float = 30.0
    success_radius: float = 1.0
    blacklist_radius: float = 1.0
    match_threshold: float = 0.8
    fov_deg: float = 79.0
    map_range: float = 2.0
    detect_range: float = 4.0
    position_noise: float = 0.05
    feature_noise: float = 0.05
    feature_noise_per_m: float = 0.06
    goal_bias: float = 4.0
    goal_bias_scale: float = 2.0
    candidate_min_cos: float = 0.5
    sensor_dropout: float = 0.5

    def __post_init__(self) -> None:
        checks = [
            (self.K >= 1, "K", "must be >= 1"),
            (0.0 < self.gamma < 1.0, "gamma", "must lie in (0, 1)"),
            (self.lambda_ > 0.0, "lambda", "must be > 0"),
            (0.0 <= self.tau <= 1.0, "tau", "must lie in [0, 1]"),
            (0.0 <= self.alpha_sim <= 1.0, "alpha_sim", "must lie in [0, 1]"),
            (self.sigma_p > 0.0, "sigma_p", "must be > 0"),
            (self.r >= 0.0, "r", "must be >= 0"),
            (self.eps_max > 0.0, "eps_max", "must be > 0"),
            (self.tau_p >= 0.0, "tau_p", "must be >= 0"),
            (self.theta_w > 0.0, "theta_w", "must be > 0"),
            (self.alpha_vis >= 0.0, "alpha_vis", "must be >= 0"),
            (self.R_search >= 0.0, "R_search", "must be >= 0"),
            (self.cadence >= 1, "cadence", "must be >= 1"),
            (self.min_traj_len >= 1, "min_traj_len", "must be >= 1"),
            (self.segment_len >= self.min_traj_len, "segment_len", "must be >= min_traj_len"),
            (self.landscape_grid >= 2, "landscape_grid", "must be >= 2"),
            (self.w_wasserstein >= 0.0 and self.w_landscape >= 0.0, "w_wasserstein",
             "distance weights must be >= 0"),
            (self.step_budget >= 1, "step_budget", "must be >= 1"),
            (self.forward_step > 0.0, "forward_step", "must be > 0"),
            (0.0 < self.fov_deg <= 360.0, "fov_deg", "must lie in (0, 360]"),
            (-1.0 <= self.match_threshold <= 1.0, "match_threshold", "must lie in [-1, 1]"),
            (0.0 <= self.sensor_dropout < 1.0, "sensor_dropout", "must lie in [0, 1)"),
            (self.map_range > 0.0 and self.detect_range > 0.0, "map_range", "ranges must be > 0"),
        ]
        for ok, key, msg in checks:
            if not ok:
                raise ValidationError(f"config value {key!r} {msg}")

    def to_dict(self) -> dict[str, Any]:
        return {_external_name(f.name): getattr(self, f.name) for f in fields(self)}

    def replace(self, **changes: Any) -> "Config":
        return dataclasses.replace(self, **changes)


def _external_name(name: str) -> str:
    # `lambda` is a keyword; the file format uses the bare name
    return "lambda" if name == "lambda_" else name


_CONFIG_FIELDS = {_external_name(f.name): f for f in fields(Config)}


def config_from_mapping(data: dict[str, Any] | None) -> Config:
    """Build a Config from a flat mapping; absent keys keep their defaults."""
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigParseError("config document must be a flat key/value mapping")
    kwargs: dict[str, Any] = {}
    for key, value in data.items():
        if key not in _CONFIG_FIELDS:
            raise ConfigParseError(f"unknown config key {key!r}")
        f = _CONFIG_FIELDS[key]
        default = f.default
        if isinstance(value, bool) or isinstance(value, (dict, list)) or value is None:
            raise ConfigParseError(f"config key {key!r} has non-scalar value {value!r}")
        try:
            if isinstance(default, int):
                if isinstance(value, float) and not value.is_integer():
                    raise ValueError
                value = int(value)
            else:
                value = float(value)
        except (TypeError, ValueError):
            raise ConfigParseError(f"config key {key!r} has invalid value {value!r}") from None
        kwargs[f.name] = value
    return Config(**kwargs)


def parse_config(text: str) -> Config:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigParseError(f"malformed config document: {exc}") from None
    return config_from_mapping(data)


def load_config(path: str | Path | None) -> Config:
    """Read a YAML config file. ``None`` gives the defaults."""
    if path is None:
        return Config()
    return parse_config(Path(path).read_text(encoding="utf-8"))


def dump_config(cfg: Config) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=True)


# -- trajectory files -------------------------------------------------------

def parse_trajectory(text: str) -> Trajectory:
    """Parse ``t,x,y,theta`` records; a leading header line is skipped."""
    traj = Trajectory()
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if lineno == 1 and not _is_number(row[0]):
            continue
        if len(row) != 4:
            raise ValidationError(f"line {lineno}: expected 4 fields t,x,y,theta, got {len(row)}")
        try:
            t = int(row[0])
            x, y, th = (float(c) for c in row[1:])
        except ValueError:
            raise ValidationError(f"line {lineno}: non-numeric field in {row}") from None
        traj.append(t, Pose(x, y, th))
    return traj


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def load_trajectory(path: str | Path) -> Trajectory:
    return parse_trajectory(Path(path).read_text(encoding="utf-8"))


def format_trajectory(traj: Trajectory) -> str:
    lines = ["t,x,y,theta"]
    lines += [f"{t},{p.x!r},{p.y!r},{p.theta!r}" for t, p in traj]
    return "\n".join(lines) + "\n"


# -- snapshot documents -----------------------------------------------------

def snapshot_to_dict(g: SceneGraphSnapshot) -> dict[str, Any]:
    return {
        "timestep": g.timestep,
        "nodes": [{"id": n.id, "label": n.label, "position": list(n.position),
                   "features": list(n.features)} for n in g.nodes],
        "edges": [list(e) for e in g.spatial_edges],
    }


def snapshot_from_dict(data: dict[str, Any]) -> SceneGraphSnapshot:
    try:
        nodes = tuple(SceneNode(str(n["id"]), str(n["label"]), tuple(n["position"]),
                                tuple(n["features"])) for n in data.get("nodes", []))
        edges = tuple((str(e[0]), str(e[1]), str(e[2]) if len(e) > 2 else "near")
                      for e in data.get("edges", []))
        return SceneGraphSnapshot(int(data["timestep"]), nodes, edges)
    except (KeyError, TypeError, IndexError) as exc:
        raise ValidationError(f"malformed snapshot document: {exc!r}") from None


def parse_snapshot(text: str) -> SceneGraphSnapshot:
    return snapshot_from_dict(json.loads(text))


def cosine(a: Sequence[float], b: Sequence[float]) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(a @ b / (na * nb))
