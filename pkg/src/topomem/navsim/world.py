"""Occupancy-grid worlds: file format, validation, geometry helpers and a seeded generator.

A world is a text grid (``#`` blocked, ``.`` free, ``S`` start, ``G`` goal) plus a
JSON sidecar with the resolution, start heading, goal label/feature seed and the
object list. Cell ``(row, col)`` has its centre at
``x = (col + 0.5) * res``, ``y = (row + 0.5) * res``.
"""
from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..core import GoalSpec, ValidationError

FEATURE_DIM = 16
LABELS = ("chair", "table", "sofa", "bed", "plant", "tv", "sink", "toilet", "lamp", "shelf")


class WorldError(ValidationError):
    pass


def template_features(seed: int, dim: int = FEATURE_DIM) -> np.ndarray:
    v = np.random.default_rng(seed).normal(size=dim)
    return v / np.linalg.norm(v)


@dataclass
class WorldObject:
    id: str
    label: str
    cell: tuple[int, int]
    feature_seed: int
    waypoints: list[tuple[int, int]] = field(default_factory=list)
    speed: float = 0.05
    features: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.features = template_features(self.feature_seed)


@dataclass
class GridWorld:
    name: str
    blocked: np.ndarray
    resolution: float
    start: tuple[int, int]
    start_heading: float
    goal_cell: tuple[int, int]
    goal: GoalSpec
    objects: list[WorldObject]

    @property
    def shape(self) -> tuple[int, int]:
        return self.blocked.shape

    def cell_center(self, cell: tuple[int, int]) -> np.ndarray:
        r, c = cell
        return np.array([(c + 0.5) * self.resolution, (r + 0.5) * self.resolution])

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        return int(math.floor(y / self.resolution)), int(math.floor(x / self.resolution))

    def in_bounds(self, cell: tuple[int, int]) -> bool:
        return 0 <= cell[0] < self.blocked.shape[0] and 0 <= cell[1] < self.blocked.shape[1]

    def is_free(self, cell: tuple[int, int]) -> bool:
        return self.in_bounds(cell) and not self.blocked[cell]

    def object_position(self, obj: WorldObject, t: int) -> np.ndarray:
        """World position (x, y, 0) of ``obj`` at step ``t``; waypoints are ping-ponged."""
        if not obj.waypoints:
            x, y = self.cell_center(obj.cell)
            return np.array([x, y, 0.0])
        pts = [self.cell_center(obj.cell)] + [self.cell_center(w) for w in obj.waypoints]
        seg = [float(np.linalg.norm(b - a)) for a, b in zip(pts, pts[1:])]
        total = sum(seg)
        if total == 0:
            return np.array([*pts[0], 0.0])
        s = (obj.speed * t) % (2 * total)
        if s > total:
            s = 2 * total - s
        for a, b, L in zip(pts, pts[1:], seg):
            if s <= L and L > 0:
                p = a + (b - a) * (s / L)
                return np.array([p[0], p[1], 0.0])
            s -= L
        return np.array([*pts[-1], 0.0])


# -- parsing ----------------------------------------------------------------

def parse_world(grid_text: str, sidecar: dict, name: str = "world") -> GridWorld:
    rows = [ln.rstrip("\n") for ln in grid_text.splitlines() if ln.strip()]
    if not rows:
        raise WorldError("world grid is empty")
    width = max(len(r) for r in rows)
    blocked = np.ones((len(rows), width), dtype=bool)
    start = goal = None
    for i, row in enumerate(rows):
        for j, ch in enumerate(row):
            if ch == "#":
                continue
            if ch not in ".SG":
                raise WorldError(f"unknown grid character {ch!r} at row {i}, col {j}")
            blocked[i, j] = False
            if ch == "S":
                if start is not None:
                    raise WorldError("world has more than one start cell")
                start = (i, j)
            elif ch == "G":
                if goal is not None:
                    raise WorldError("world has more than one goal cell")
                goal = (i, j)
    if start is None:
        raise WorldError("world has no start cell 'S'")
    if goal is None:
        raise WorldError("world has no goal cell 'G'")
    res = float(sidecar.get("resolution", 0.5))
    if res <= 0:
        raise WorldError("resolution must be > 0")
    g = sidecar.get("goal", {})
    goal_label = str(g.get("label", "goal"))
    goal_seed = int(g.get("feature_seed", 0))
    objects = [WorldObject("goal", goal_label, goal, goal_seed)]
    for k, o in enumerate(sidecar.get("objects", [])):
        try:
            objects.append(WorldObject(
                str(o.get("id", f"o{k:02d}")), str(o["label"]), tuple(o["cell"]),
                int(o.get("feature_seed", 1000 + k)),
                [tuple(w) for w in o.get("waypoints", [])], float(o.get("speed", 0.05))))
        except (KeyError, TypeError) as exc:
            raise WorldError(f"malformed object entry {k}: {exc!r}") from None
    gx, gy = (goal[1] + 0.5) * res, (goal[0] + 0.5) * res
    world = GridWorld(
        name=str(sidecar.get("name", name)), blocked=blocked, resolution=res, start=start,
        start_heading=float(sidecar.get("start_heading", 0.0)), goal_cell=goal,
        goal=GoalSpec(goal_label, tuple(template_features(goal_seed)), (gx, gy, 0.0)),
        objects=objects)
    validate_world(world)
    return world


def validate_world(world: GridWorld) -> None:
    if not world.is_free(world.start):
        raise WorldError("start cell must be free")
    if not world.is_free(world.goal_cell):
        raise WorldError("goal cell must be free")
    ids = [o.id for o in world.objects]
    if len(set(ids)) != len(ids):
        raise WorldError("object ids must be unique")
    for o in world.objects:
        for cell in [o.cell, *o.waypoints]:
            if not world.is_free(tuple(cell)):
                raise WorldError(f"object {o.id} placed on a blocked or out-of-bounds cell {cell}")
    if not math.isfinite(shortest_path_length(world)):
        raise WorldError("no free path between start and goal")


def load_world(path: str | Path) -> GridWorld:
    path = Path(path)
    if not path.exists():
        raise WorldError(f"world file not found: {path}")
    sidecar_path = path.with_suffix(".json")
    sidecar = {}
    if sidecar_path.exists():
        try:
            sidecar = json.loads(sidecar_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise WorldError(f"malformed sidecar {sidecar_path.name}: {exc}") from None
    return parse_world(path.read_text(encoding="utf-8"), sidecar, name=path.stem)


def format_grid(world: GridWorld) -> str:
    lines = []
    for i in range(world.blocked.shape[0]):
        row = []
        for j in range(world.blocked.shape[1]):
            if (i, j) == world.start:
                row.append("S")
            elif (i, j) == world.goal_cell:
                row.append("G")
            else:
                row.append("#" if world.blocked[i, j] else ".")
        lines.append("".join(row))
    return "\n".join(lines) + "\n"


def world_sidecar(world: GridWorld, goal_seed: int) -> dict:
    objs = []
    for o in world.objects:
        if o.id == "goal":
            continue
        d = {"id": o.id, "label": o.label, "cell": list(o.cell), "feature_seed": o.feature_seed}
        if o.waypoints:
            d["waypoints"] = [list(w) for w in o.waypoints]
            d["speed"] = o.speed
        objs.append(d)
    return {"name": world.name, "resolution": world.resolution,
            "start_heading": world.start_heading,
            "goal": {"label": world.goal.label, "feature_seed": goal_seed}, "objects": objs}


def save_world(world: GridWorld, path: str | Path, goal_seed: int) -> None:
    path = Path(path)
    path.write_text(format_grid(world), encoding="utf-8")
    path.with_suffix(".json").write_text(
        json.dumps(world_sidecar(world, goal_seed), indent=1, sort_keys=True) + "\n",
        encoding="utf-8")


# -- geometry ---------------------------------------------------------------

def line_of_sight(blocked: np.ndarray, a: np.ndarray, b: np.ndarray, res: float) -> bool:
    """True if the segment a-b crosses no blocked cell (sampled at res/8)."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    n = max(2, int(math.ceil(np.linalg.norm(b - a) / (res / 8.0))) + 1)
    ts = np.linspace(0.0, 1.0, n)
    pts = a[None, :] + ts[:, None] * (b - a)[None, :]
    rows = np.floor(pts[:, 1] / res).astype(int)
    cols = np.floor(pts[:, 0] / res).astype(int)
    h, w = blocked.shape
    if rows.min() < 0 or cols.min() < 0 or rows.max() >= h or cols.max() >= w:
        return False
    return not blocked[rows, cols].any()


def bresenham(a: tuple[int, int], b: tuple[int, int]) -> list[tuple[int, int]]:
    (r0, c0), (r1, c1) = a, b
    dr, dc = abs(r1 - r0), abs(c1 - c0)
    sr, sc = (1 if r1 > r0 else -1), (1 if c1 > c0 else -1)
    err = dc - dr
    cells = []
    r, c = r0, c0
    while True:
        cells.append((r, c))
        if (r, c) == (r1, c1):
            return cells
        e2 = 2 * err
        if e2 > -dr:
            err -= dr
            c += sc
        if e2 < dc:
            err += dc
            r += sr


_NEIGHBORS = [(-1, 0), (1, 0), (0, -1), (0, 1), (-1, -1), (-1, 1), (1, -1), (1, 1)]


def shortest_path_length(world: GridWorld, start: tuple[int, int] | None = None,
                         goal: tuple[int, int] | None = None) -> float:
    """Any-angle (Theta*) shortest path length in metres between cell centres."""
    start = world.start if start is None else start
    goal = world.goal_cell if goal is None else goal
    free = ~world.blocked
    res = world.resolution
    center = world.cell_center
    g = {start: 0.0}
    parent = {start: start}
    goal_xy = center(goal)
    heap = [(float(np.linalg.norm(center(start) - goal_xy)), 0.0, start)]
    closed = set()
    h, w = free.shape
    while heap:
        _, gs, s = heapq.heappop(heap)
        if s in closed:
            continue
        if s == goal:
            return gs
        closed.add(s)
        for dr, dc in _NEIGHBORS:
            n = (s[0] + dr, s[1] + dc)
            if not (0 <= n[0] < h and 0 <= n[1] < w) or not free[n] or n in closed:
                continue
            if dr and dc and not (free[s[0] + dr, s[1]] and free[s[0], s[1] + dc]):
                continue
            p = parent[s]
            if line_of_sight(world.blocked, center(p), center(n), res):
                cand, par = g[p] + float(np.linalg.norm(center(p) - center(n))), p
            else:
                cand, par = gs + res * math.hypot(dr, dc), s
            if cand < g.get(n, math.inf):
                g[n] = cand
                parent[n] = par
                heapq.heappush(heap, (cand + float(np.linalg.norm(center(n) - goal_xy)), cand, n))
    return math.inf
