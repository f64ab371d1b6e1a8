"""Agent loop: sensing, motion, frontier selection and full episodes under each ablation."""
from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from ..core import Config, GoalSpec, Pose, SceneGraphSnapshot, SceneNode, Trajectory, cosine
from ..core import ValidationError, normalize_angle
from ..term import TemporalMemory, predict_position, push_snapshot
from ..tslc import SignatureStore, cadence_gate, check_loop
from .world import GridWorld, bresenham, line_of_sight, shortest_path_length

ACTIONS = ("forward", "turn-left", "turn-right", "stop")
ABLATIONS = ("full", "no-term", "no-tslc", "baseline")

UNKNOWN, FREE, BLOCKED = -1, 0, 1


@dataclass
class EpisodeResult:
    success: int
    path_length: float
    shortest_length: float
    steps: int
    loop_detections: int
    revisited_cells: int
    collisions: int = 0

    def __post_init__(self) -> None:
        if self.success not in (0, 1):
            raise ValidationError("success must be 0 or 1")
        if self.path_length < 0 or not self.shortest_length > 0:
            raise ValidationError("need path_length >= 0 and shortest_length > 0")


@dataclass
class AgentState:
    pose: Pose
    trajectory: Trajectory
    belief: np.ndarray
    resolution: float
    memory: TemporalMemory = field(default_factory=TemporalMemory)
    sig_store: SignatureStore = field(default_factory=SignatureStore)
    blacklist: list[tuple[float, float, float]] = field(default_factory=list)
    t: int = 0
    stopped: bool = False
    collisions: int = 0
    path_length: float = 0.0
    visited: set = field(default_factory=set)
    revisited_cells: int = 0
    loop_detections: int = 0

    @property
    def cell(self) -> tuple[int, int]:
        return (int(math.floor(self.pose.y / self.resolution)),
                int(math.floor(self.pose.x / self.resolution)))


def initial_state(world: GridWorld, cfg: Config) -> AgentState:
    x, y = world.cell_center(world.start)
    pose = Pose(x, y, world.start_heading)
    state = AgentState(pose, Trajectory([(0, pose)]),
                       np.full(world.shape, UNKNOWN, dtype=np.int8), world.resolution,
                       memory=TemporalMemory(cfg.K))
    state.visited.add(state.cell)
    state.belief[state.cell] = FREE
    update_belief(world, state.belief, pose, math.radians(cfg.fov_deg), cfg.map_range)
    return state


# -- perception -------------------------------------------------------------

def _visible(world: GridWorld, pose: Pose, target: np.ndarray, fov: float, max_range: float) -> bool:
    dx, dy = target[0] - pose.x, target[1] - pose.y
    dist = math.hypot(dx, dy)
    if dist > max_range:
        return False
    if dist > 1e-9 and fov < 2 * math.pi:
        if abs(normalize_angle(math.atan2(dy, dx) - pose.theta)) > fov / 2 + 1e-12:
            return False
    a = world.cell_of(pose.x, pose.y)
    b = world.cell_of(target[0], target[1])
    return not any(world.blocked[c] for c in bresenham(a, b)[1:-1])


def sense(world: GridWorld, pose: Pose, fov: float, max_range: float,
          noise_seed: int | np.random.Generator | None = 0, t: int = 0,
          position_noise: float = 0.05, feature_noise: float = 0.0,
          feature_noise_per_m: float = 0.0) -> SceneGraphSnapshot:
    """Objects in range and field of view with grid line of sight.

    Positions get Gaussian noise of std ``position_noise``; features get
    ``feature_noise + feature_noise_per_m * distance``. Co-visible objects
    closer than 2 m share a ``near`` edge.
    """
    rng = noise_seed if isinstance(noise_seed, np.random.Generator) else np.random.default_rng(noise_seed)
    nodes = []
    for obj in world.objects:
        p = world.object_position(obj, t)
        if not _visible(world, pose, p, fov, max_range):
            continue
        dist = math.hypot(p[0] - pose.x, p[1] - pose.y)
        noise_p = rng.normal(0.0, position_noise, 2) if position_noise > 0 else np.zeros(2)
        sigma_f = feature_noise + feature_noise_per_m * dist
        f = obj.features + (rng.normal(0.0, sigma_f, obj.features.shape) if sigma_f > 0 else 0.0)
        nodes.append(SceneNode(obj.id, obj.label,
                               (p[0] + noise_p[0], p[1] + noise_p[1], p[2]), tuple(f)))
    edges = []
    for i, a in enumerate(nodes):
        for b in nodes[i + 1:]:
            if math.dist(a.position, b.position) < 2.0:
                edges.append((a.id, b.id, "near"))
    return SceneGraphSnapshot(t, tuple(nodes), tuple(edges))


def _ray_table(fov: float, max_range: float, res: float) -> tuple[np.ndarray, np.ndarray]:
    n_rays = max(3, int(math.ceil(math.degrees(fov) / 3.0)) + 1)
    angles = np.linspace(-fov / 2, fov / 2, n_rays)
    dists = np.arange(res / 4, max_range + 1e-9, res / 4)
    return angles, dists


def update_belief(world: GridWorld, belief: np.ndarray, pose: Pose, fov: float,
                  max_range: float, dropout: float = 0.0,
                  rng: np.random.Generator | None = None) -> None:
    """Ray-cast the true grid from ``pose``; mark cells free up to the first wall.

    With ``dropout`` > 0 each free cell in view is missed independently with
    that probability (depth holes), so unknown specks can survive a pass.
    """
    angles, dists = _ray_table(fov, max_range, world.resolution)
    th = pose.theta + angles
    xs = pose.x + np.cos(th)[:, None] * dists[None, :]
    ys = pose.y + np.sin(th)[:, None] * dists[None, :]
    rows = np.floor(ys / world.resolution).astype(int)
    cols = np.floor(xs / world.resolution).astype(int)
    h, w = world.shape
    inside = (rows >= 0) & (rows < h) & (cols >= 0) & (cols < w)
    rows_c = np.clip(rows, 0, h - 1)
    cols_c = np.clip(cols, 0, w - 1)
    hit = world.blocked[rows_c, cols_c] | ~inside
    seen_hit = np.cumsum(hit, axis=1)
    free = (seen_hit == 0) & inside
    first = hit & (seen_hit == 1) & inside
    fr, fc = rows_c[free], cols_c[free]
    if dropout > 0.0 and len(fr):
        cells = np.unique(fr * w + fc)
        keep = cells[(rng if rng is not None else np.random.default_rng(0)).random(len(cells)) >= dropout]
        fr, fc = keep // w, keep % w
    belief[fr, fc] = FREE
    belief[rows_c[first], cols_c[first]] = BLOCKED


# -- motion -----------------------------------------------------------------

def step(world: GridWorld, state: AgentState, action: str, cfg: Config | None = None) -> AgentState:
    """Apply one action in place and return the state."""
    cfg = cfg or Config()
    if action not in ACTIONS:
        raise ValidationError(f"unknown action {action!r}")
    if state.stopped:
        return state
    pose = state.pose
    if action == "stop":
        state.stopped = True
    elif action == "forward":
        nx = pose.x + cfg.forward_step * math.cos(pose.theta)
        ny = pose.y + cfg.forward_step * math.sin(pose.theta)
        cell = world.cell_of(nx, ny)
        if world.is_free(cell):
            state.path_length += math.hypot(nx - pose.x, ny - pose.y)
            pose = Pose(nx, ny, pose.theta)
        else:
            state.collisions += 1
            if world.in_bounds(cell):
                state.belief[cell] = BLOCKED
    else:
        sign = 1.0 if action == "turn-left" else -1.0
        pose = Pose(pose.x, pose.y, pose.theta + sign * math.radians(cfg.turn_angle_deg))
    state.t += 1
    state.pose = pose
    state.trajectory.append(state.t, pose)
    cell = state.cell
    if cell != world.cell_of(state.trajectory[-2][1].x, state.trajectory[-2][1].y):
        if cell in state.visited:
            state.revisited_cells += 1
        state.visited.add(cell)
    return state


# -- planning ---------------------------------------------------------------

def _grid_graph(passable: np.ndarray, res: float) -> csr_matrix:
    h, w = passable.shape
    idx = np.arange(h * w).reshape(h, w)
    src, dst, wt = [], [], []
    for dr, dc in ((0, 1), (1, 0), (1, 1), (1, -1)):
        r0, r1 = max(0, -dr), h - max(0, dr)
        c0, c1 = max(0, -dc), w - max(0, dc)
        a = passable[r0:r1, c0:c1]
        b = passable[r0 + dr:r1 + dr, c0 + dc:c1 + dc]
        ok = a & b
        if dr and dc:
            # no corner cutting
            ok &= passable[r0 + dr:r1 + dr, c0:c1] & passable[r0:r1, c0 + dc:c1 + dc]
        s = idx[r0:r1, c0:c1][ok]
        d = idx[r0 + dr:r1 + dr, c0 + dc:c1 + dc][ok]
        cost = res * (math.sqrt(2.0) if dr and dc else 1.0)
        src += [s, d]
        dst += [d, s]
        wt += [np.full(s.size, cost), np.full(s.size, cost)]
    src, dst, wt = np.concatenate(src), np.concatenate(dst), np.concatenate(wt)
    return csr_matrix((wt, (src, dst)), shape=(h * w, h * w))


def plan_distances(belief: np.ndarray, src: tuple[int, int], res: float,
                   optimistic: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Geodesic distances (m) and predecessors from ``src`` over known-free cells.

    With ``optimistic`` unknown cells are treated as free.
    """
    passable = belief == FREE
    if optimistic:
        passable = passable | (belief == UNKNOWN)
    passable = passable.copy()
    passable[src] = True
    h, w = belief.shape
    dist, pred = dijkstra(_grid_graph(passable, res), indices=src[0] * w + src[1],
                          return_predecessors=True)
    return dist.reshape(h, w), pred


def extract_path(pred: np.ndarray, shape: tuple[int, int], target: tuple[int, int]) -> list[tuple[int, int]]:
    h, w = shape
    node = target[0] * w + target[1]
    path = []
    while node >= 0:
        path.append((node // w, node % w))
        node = pred[node]
    return path[::-1]


def frontier_cells(belief: np.ndarray) -> np.ndarray:
    """Known-free cells with a 4-neighbour of unknown occupancy, as (row, col) rows."""
    unknown = belief == UNKNOWN
    near = np.zeros_like(unknown)
    near[1:, :] |= unknown[:-1, :]
    near[:-1, :] |= unknown[1:, :]
    near[:, 1:] |= unknown[:, :-1]
    near[:, :-1] |= unknown[:, 1:]
    return np.argwhere((belief == FREE) & near)


def in_blacklist(points: np.ndarray, blacklist) -> np.ndarray:
    pts = np.atleast_2d(points)
    mask = np.zeros(len(pts), dtype=bool)
    for bx, by, br in blacklist:
        mask |= np.hypot(pts[:, 0] - bx, pts[:, 1] - by) <= br
    return mask


@dataclass(frozen=True)
class GoalCandidate:
    position: np.ndarray
    cos: float
    last_seen: int


def goal_candidates(mem: TemporalMemory, goal: GoalSpec, t_now: int,
                    merge_radius: float = 1.0) -> list[GoalCandidate]:
    """Goal-labelled instances in memory, merged by proximity, newest sighting first.

    Each candidate carries the best feature cosine seen for it and its
    extrapolated position at ``t_now``.
    """
    sightings = []
    for g in mem.window:
        for n in g.nodes:
            if n.label == goal.label:
                sightings.append((g.timestep, n, cosine(n.features, goal.features)))
    clusters: list[list] = []
    for t, n, c in reversed(sightings):
        for cl in clusters:
            if math.dist(cl[1].position, n.position) <= merge_radius:
                cl[2] = max(cl[2], c)
                break
        else:
            clusters.append([t, n, c])
    out = []
    for t, n, c in clusters:
        k = t_now - t
        pos = predict_position(mem, n, k) if k >= 1 else n.p
        out.append(GoalCandidate(pos, c, t))
    return out


def frontier_scores(dist: np.ndarray, frontiers: np.ndarray, res: float,
                    candidates: list[GoalCandidate], cfg: Config) -> np.ndarray:
    """Path cost minus goal bias for each frontier cell (lower is better)."""
    cost = dist[frontiers[:, 0], frontiers[:, 1]].astype(float)
    if candidates:
        centers = (frontiers[:, ::-1] + 0.5) * res
        bias = np.zeros(len(frontiers))
        for c in candidates:
            d = np.hypot(centers[:, 0] - c.position[0], centers[:, 1] - c.position[1])
            bias = np.maximum(bias, cfg.goal_bias * max(c.cos, 0.0) * np.exp(-d / cfg.goal_bias_scale))
        cost = cost - bias
    return cost


def select_frontier(state: AgentState, goal: GoalSpec, cfg: Config,
                    candidates: list[GoalCandidate] | None = None,
                    exclude: set | None = None,
                    ignore_blacklist: bool = False) -> tuple[int, int] | None:
    """Best reachable frontier not inside a blacklisted region, or ``None``."""
    fr = frontier_cells(state.belief)
    if exclude:
        fr = np.array([f for f in fr.tolist() if tuple(f) not in exclude], dtype=int).reshape(-1, 2)
    if len(fr) == 0:
        return None
    if state.blacklist and not ignore_blacklist:
        centers = (fr[:, ::-1] + 0.5) * state.resolution
        fr = fr[~in_blacklist(centers, state.blacklist)]
        if len(fr) == 0:
            return None
    dist, _ = plan_distances(state.belief, state.cell, state.resolution)
    reach = np.isfinite(dist[fr[:, 0], fr[:, 1]])
    fr = fr[reach]
    if len(fr) == 0:
        return None
    if candidates is None:
        candidates = goal_candidates(state.memory, goal, state.t) if len(state.memory) else []
        candidates = [c for c in candidates if c.cos >= cfg.candidate_min_cos]
    scores = frontier_scores(dist, fr, state.resolution, candidates, cfg)
    # ties broken by (row, col)
    order = np.lexsort((fr[:, 1], fr[:, 0], scores))
    return tuple(int(v) for v in fr[order[0]])


# -- control ----------------------------------------------------------------

def steer(pose: Pose, target_xy: np.ndarray, cfg: Config) -> str:
    desired = math.atan2(target_xy[1] - pose.y, target_xy[0] - pose.x)
    delta = normalize_angle(desired - pose.theta)
    half = math.radians(cfg.turn_angle_deg) / 2 + 1e-9
    if abs(delta) <= half:
        return "forward"
    return "turn-left" if delta > 0 else "turn-right"


def turn_toward(pose: Pose, heading: float, cfg: Config) -> str | None:
    delta = normalize_angle(heading - pose.theta)
    if abs(delta) <= math.radians(cfg.turn_angle_deg) / 2 + 1e-9:
        return None
    return "turn-left" if delta > 0 else "turn-right"


class Navigator:
    """Follows a grid path to a target cell, replanning when the path breaks."""

    def __init__(self, world_shape: tuple[int, int], res: float) -> None:
        self.shape = world_shape
        self.res = res
        self.target: tuple[int, int] | None = None
        self.path: list[tuple[int, int]] = []
        self.optimistic = False
        self.bumped = False

    def set_target(self, target: tuple[int, int] | None, optimistic: bool = False) -> None:
        if target != self.target or optimistic != self.optimistic:
            self.target = target
            self.optimistic = optimistic
            self.path = []

    def _replan(self, state: AgentState) -> bool:
        dist, pred = plan_distances(state.belief, state.cell, self.res, self.optimistic)
        if not np.isfinite(dist[self.target]):
            self.path = []
            return False
        self.path = extract_path(pred, self.shape, self.target)
        return True

    def action(self, state: AgentState, cfg: Config) -> str | None:
        """Next action toward the target, or None when unreachable."""
        if self.target is None:
            return None
        cell = state.cell
        if cell in self.path:
            self.path = self.path[self.path.index(cell):]
        else:
            self.path = []
        if not self.path or any(state.belief[c] == BLOCKED for c in self.path):
            if not self._replan(state):
                return None
        if len(self.path) == 1:
            return steer(state.pose, self._center(cell), cfg)
        here = np.array([state.pose.x, state.pose.y])
        walls = state.belief == BLOCKED
        look = self.path[1]
        if not self.bumped:
            for cand in self.path[2:4]:
                if line_of_sight(walls, here, self._center(cand), self.res):
                    look = cand
        return steer(state.pose, self._center(look), cfg)

    def _center(self, cell: tuple[int, int]) -> np.ndarray:
        return np.array([(cell[1] + 0.5) * self.res, (cell[0] + 0.5) * self.res])


# -- episodes ---------------------------------------------------------------

def episode_rng(world: GridWorld, seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), zlib.crc32(world.name.encode())]))


def run_episode(world: GridWorld, cfg: Config, seed: int, ablation: str = "full",
                trace: list | None = None) -> EpisodeResult:
    """One navigation episode. ``trace`` (if given) collects per-step records."""
    if ablation not in ABLATIONS:
        raise ValidationError(f"unknown ablation {ablation!r}; expected one of {ABLATIONS}")
    use_term = ablation in ("full", "no-tslc")
    use_tslc = ablation in ("full", "no-term")
    rng = episode_rng(world, seed)
    state = initial_state(world, cfg)
    fov = math.radians(cfg.fov_deg)
    goal = world.goal
    res = world.resolution
    nav = Navigator(world.shape, res)
    goal_estimate: np.ndarray | None = None
    inspected: list[np.ndarray] = []
    dead: set[tuple[int, int]] = set()
    look_turns = 0
    mode = "frontier"

    for _ in range(cfg.step_budget):
        t = state.t
        snap = sense(world, state.pose, fov, cfg.detect_range, rng, t, cfg.position_noise,
                     cfg.feature_noise, cfg.feature_noise_per_m)
        if use_term:
            push_snapshot(state.memory, snap, cfg)
        for n in snap.nodes:
            if n.label == goal.label and cosine(n.features, goal.features) > cfg.match_threshold:
                goal_estimate = np.array(n.position[:2])
        added = []
        if use_tslc and t > 0 and cadence_gate(t, cfg):
            det = check_loop(state.sig_store, state.trajectory, cfg)
            if det.detected:
                state.loop_detections += 1
                matched = state.sig_store[det.matched_index]
                ax, ay = matched.anchor
                region = (ax, ay, cfg.blacklist_radius)
                # a match whose segment overlaps the current one is the agent's own
                # recent past, not a revisit; only act on disjoint segments
                revisit = matched.created_at <= t - cfg.segment_len
                if revisit and region not in state.blacklist:
                    state.blacklist.append(region)
                    added.append(list(region))

        action = None
        if goal_estimate is not None:
            mode = "goal"
            if math.dist(goal_estimate, (state.pose.x, state.pose.y)) <= 0.3:
                action = "stop"
            else:
                nav.set_target(_clip_cell(world, goal_estimate), optimistic=True)
                action = nav.action(state, cfg)
                if action is None or nav.target == state.cell and len(nav.path) <= 1:
                    action = steer(state.pose, goal_estimate, cfg)
        if action is None and use_term:
            cand = _pick_candidate(state, goal, cfg, inspected, world)
            if cand is not None:
                mode = "candidate"
                nav.set_target(_clip_cell(world, cand.position[:2]), optimistic=True)
                action = nav.action(state, cfg)
                if action is None:
                    inspected.append(cand.position[:2].copy())
        if action is None:
            if mode != "frontier":
                nav.set_target(None)
                mode = "frontier"
            action, look_turns = _frontier_action(state, nav, goal, cfg, dead, look_turns, use_term)
        if action is None:
            action = "stop"
        if trace is not None:
            trace.append({"t": t, "x": state.pose.x, "y": state.pose.y, "theta": state.pose.theta,
                          "action": action, "mode": mode})
            if added:
                trace[-1]["blacklist"] = added
        before_cell, before_hits = state.cell, state.collisions
        step(world, state, action, cfg)
        if state.collisions > before_hits:
            nav.bumped = True
            nav.path = []
        elif state.cell != before_cell:
            nav.bumped = False
        update_belief(world, state.belief, state.pose, fov, cfg.map_range,
                      cfg.sensor_dropout, rng)
        if state.stopped:
            break

    gx, gy, _ = goal.true_position
    success = int(state.stopped and math.hypot(state.pose.x - gx, state.pose.y - gy) <= cfg.success_radius)
    return EpisodeResult(success, state.path_length, shortest_path_length(world), state.t,
                         state.loop_detections, state.revisited_cells, state.collisions)


def _clip_cell(world: GridWorld, xy) -> tuple[int, int]:
    h, w = world.shape
    r, c = world.cell_of(float(xy[0]), float(xy[1]))
    return min(max(r, 0), h - 1), min(max(c, 0), w - 1)


def _pick_candidate(state: AgentState, goal: GoalSpec, cfg: Config, inspected: list,
                    world: GridWorld) -> GoalCandidate | None:
    if not len(state.memory):
        return None
    here = np.array([state.pose.x, state.pose.y])
    best = None
    for c in goal_candidates(state.memory, goal, state.t):
        if c.cos < cfg.candidate_min_cos:
            continue
        p = c.position[:2]
        if any(np.linalg.norm(p - q) <= 1.0 for q in inspected):
            continue
        if np.linalg.norm(p - here) <= 1.0:
            # seen up close without matching: not the goal instance
            inspected.append(p.copy())
            continue
        if best is None or c.cos > best.cos:
            best = c
    return best


def _frontier_action(state: AgentState, nav: Navigator, goal: GoalSpec, cfg: Config,
                     dead: set, look_turns: int, use_term: bool) -> tuple[str | None, int]:
    frontiers = {tuple(f) for f in frontier_cells(state.belief).tolist()}
    tgt = nav.target
    need = (tgt is None or tgt not in frontiers or tgt in dead
            or (state.blacklist and in_blacklist(
                np.array([[(tgt[1] + 0.5) * state.resolution, (tgt[0] + 0.5) * state.resolution]]),
                state.blacklist)[0])
            or cadence_gate(state.t, cfg))
    if need:
        cands = None if use_term else []
        new = select_frontier(state, goal, cfg, candidates=cands, exclude=dead)
        if new is None:
            # every remaining frontier is blacklisted: fall back to the full set
            new = select_frontier(state, goal, cfg, candidates=cands, exclude=dead,
                                  ignore_blacklist=True)
        if new != tgt:
            look_turns = 0
        nav.set_target(new)
    if nav.target is None:
        return None, look_turns
    if state.cell == nav.target:
        heading = _unknown_heading(state.belief, nav.target)
        turn = turn_toward(state.pose, heading, cfg) if heading is not None else None
        if turn is None or look_turns >= 12:
            dead.add(nav.target)
            nav.set_target(None)
            return _frontier_action(state, nav, goal, cfg, dead, 0, use_term)
        return turn, look_turns + 1
    action = nav.action(state, cfg)
    if action is None:
        dead.add(nav.target)
        nav.set_target(None)
        return _frontier_action(state, nav, goal, cfg, dead, 0, use_term)
    return action, look_turns


def _unknown_heading(belief: np.ndarray, cell: tuple[int, int]) -> float | None:
    h, w = belief.shape
    for dr, dc in ((0, 1), (-1, 0), (0, -1), (1, 0)):
        r, c = cell[0] + dr, cell[1] + dc
        if 0 <= r < h and 0 <= c < w and belief[r, c] == UNKNOWN:
            return math.atan2(dr, dc)
    return None
