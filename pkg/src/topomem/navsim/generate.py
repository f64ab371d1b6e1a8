"""Seeded generator for loop-heavy grid worlds (rings, figure-eights, room cycles, blocks)."""
from __future__ import annotations

import numpy as np

from ..core import GoalSpec
from .world import LABELS, GridWorld, WorldObject, template_features, validate_world

KINDS = ("ring", "figure8", "rooms", "blocks")


def _border(h: int, w: int) -> np.ndarray:
    g = np.zeros((h, w), dtype=bool)
    g[0, :] = g[-1, :] = True
    g[:, 0] = g[:, -1] = True
    return g


def _ring(rng: np.random.Generator) -> np.ndarray:
    h, w = int(rng.integers(20, 25)), int(rng.integers(22, 28))
    g = _border(h, w)
    cw = int(rng.integers(3, 5))
    g[cw + 1:h - cw - 1, cw + 1:w - cw - 1] = True
    # dead-end alcoves cut into the central block
    for _ in range(int(rng.integers(2, 4))):
        r = int(rng.integers(cw + 2, h - cw - 3))
        c = int(rng.integers(cw + 2, w - cw - 3))
        g[r:r + 2, c:c + 3] = False
        side = int(rng.integers(4))
        if side == 0:
            g[cw + 1:r, c + 1] = False
        elif side == 1:
            g[r + 2:h - cw - 1, c + 1] = False
        elif side == 2:
            g[r, cw + 1:c] = False
        else:
            g[r, c + 3:w - cw - 1] = False
    return g


def _figure8(rng: np.random.Generator) -> np.ndarray:
    h, w = int(rng.integers(18, 23)), int(rng.integers(30, 36))
    g = _border(h, w)
    cw = int(rng.integers(3, 5))
    mid = w // 2
    g[cw + 1:h - cw - 1, cw + 1:mid - cw // 2] = True
    g[cw + 1:h - cw - 1, mid + (cw + 1) // 2 + 1:w - cw - 1] = True
    for lo, hi in ((cw + 1, mid - cw // 2), (mid + (cw + 1) // 2 + 1, w - cw - 1)):
        r = int(rng.integers(cw + 2, h - cw - 3))
        c = int(rng.integers(lo + 1, max(lo + 2, hi - 3)))
        g[r:r + 2, c:c + 2] = False
        g[r, lo:c] = False
    return g


def _rooms(rng: np.random.Generator) -> np.ndarray:
    h, w = int(rng.integers(22, 27)), int(rng.integers(22, 27))
    g = _border(h, w)
    rr = int(rng.integers(h // 2 - 2, h // 2 + 3))
    cc = int(rng.integers(w // 2 - 2, w // 2 + 3))
    g[rr, :] = True
    g[:, cc] = True
    # a door in each of the four wall segments makes a cycle through all rooms
    for lo, hi, fixed, horizontal in ((1, cc, rr, True), (cc + 1, w - 1, rr, True),
                                      (1, rr, cc, False), (rr + 1, h - 1, cc, False)):
        d = int(rng.integers(lo + 1, hi - 2))
        if horizontal:
            g[fixed, d:d + 2] = False
        else:
            g[d:d + 2, fixed] = False
    # furniture blocks
    for _ in range(int(rng.integers(3, 6))):
        r, c = int(rng.integers(2, h - 4)), int(rng.integers(2, w - 4))
        g[r:r + 2, c:c + 2] = True
    return g


def _blocks(rng: np.random.Generator) -> np.ndarray:
    nb_r, nb_c = int(rng.integers(2, 4)), int(rng.integers(2, 4))
    cw = int(rng.integers(2, 4))
    bs = int(rng.integers(3, 6))
    h = nb_r * (bs + cw) + cw + 2
    w = nb_c * (bs + cw) + cw + 2
    g = _border(h, w)
    for i in range(nb_r):
        for j in range(nb_c):
            r0 = 1 + cw + i * (bs + cw)
            c0 = 1 + cw + j * (bs + cw)
            g[r0:r0 + bs, c0:c0 + bs] = True
    # close a few corridor segments so some routes dead-end
    for _ in range(int(rng.integers(1, 3))):
        i, j = int(rng.integers(nb_r)), int(rng.integers(nb_c))
        r0 = 1 + cw + i * (bs + cw)
        c0 = 1 + cw + j * (bs + cw) + bs
        g[r0:r0 + bs, c0:c0 + cw] = True
    return g


_BUILDERS = {"ring": _ring, "figure8": _figure8, "rooms": _rooms, "blocks": _blocks}


def _largest_component(free: np.ndarray) -> np.ndarray:
    from scipy.ndimage import label
    lab, n = label(free)
    if n == 0:
        return free
    sizes = np.bincount(lab.ravel())
    sizes[0] = 0
    return lab == int(np.argmax(sizes))


def generate_world(kind: str, seed: int, n_objects: int = 8, n_distractors: int = 2,
                   resolution: float = 0.5) -> tuple[GridWorld, int]:
    """Build a random world of ``kind``. Returns the world and its goal feature seed."""
    rng = np.random.default_rng(seed)
    blocked = _BUILDERS[kind](rng)
    free = _largest_component(~blocked)
    blocked = ~free
    cells = [tuple(int(v) for v in c) for c in np.argwhere(free)]
    # start near one end, goal far away in geodesic terms
    start = cells[int(rng.integers(len(cells)))]
    dist = _bfs(free, start)
    far = sorted((d, c) for c, d in dist.items())
    top = far[int(len(far) * 0.7):]
    goal = top[int(rng.integers(len(top)))][1]
    goal_label = str(rng.choice(LABELS))
    goal_seed = int(rng.integers(1, 10**6))
    taken = {start, goal}
    objects: list[WorldObject] = []

    def free_cell() -> tuple[int, int]:
        while True:
            c = cells[int(rng.integers(len(cells)))]
            if c not in taken:
                taken.add(c)
                return c

    for k in range(n_distractors):
        objects.append(WorldObject(f"d{k}", goal_label, free_cell(), int(rng.integers(1, 10**6))))
    others = [l for l in LABELS if l != goal_label]
    for k in range(n_objects):
        objects.append(WorldObject(f"o{k:02d}", str(rng.choice(others)), free_cell(),
                                   int(rng.integers(1, 10**6))))
    # one object shuttles along a short free segment
    mover = objects[-1]
    path = [c for c in cells if c[0] == mover.cell[0] and abs(c[1] - mover.cell[1]) <= 4]
    far_end = max(path, key=lambda c: abs(c[1] - mover.cell[1]))
    if far_end != mover.cell:
        mover.waypoints = [far_end]
    res = resolution
    gx, gy = (goal[1] + 0.5) * res, (goal[0] + 0.5) * res
    world = GridWorld(
        name=f"{kind}_{seed:03d}", blocked=blocked, resolution=res, start=start,
        start_heading=0.0, goal_cell=goal,
        goal=GoalSpec(goal_label, tuple(template_features(goal_seed)), (gx, gy, 0.0)),
        objects=[WorldObject("goal", goal_label, goal, goal_seed)] + objects)
    validate_world(world)
    return world, goal_seed


def _bfs(free: np.ndarray, start: tuple[int, int]) -> dict[tuple[int, int], int]:
    from collections import deque
    dist = {start: 0}
    q = deque([start])
    h, w = free.shape
    while q:
        r, c = q.popleft()
        for dr, dc in ((0, 1), (1, 0), (0, -1), (-1, 0)):
            n = (r + dr, c + dc)
            if 0 <= n[0] < h and 0 <= n[1] < w and free[n] and n not in dist:
                dist[n] = dist[(r, c)] + 1
                q.append(n)
    return dist
