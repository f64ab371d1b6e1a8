"""Trajectory embedding, Vietoris-Rips filtrations and persistent homology over F2.

Simplices are tuples of point indices in increasing order. A filtration lists
every simplex of dimension 0-2 sorted by ``(value, dimension, vertices)``, which
makes the column order of the boundary matrix, and so the pairing, deterministic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core import Pose, ValidationError


class StructuralError(ValidationError):
    """Filtration is missing a face or is out of order."""


# -- embedding --------------------------------------------------------------

def embed_pose(p: Pose, r: float = 0.5) -> np.ndarray:
    return np.array([p.x, p.y, r * math.sin(p.theta)])


def embed_poses(poses: Sequence[Pose], r: float = 0.5) -> np.ndarray:
    if not poses:
        return np.zeros((0, 3))
    return np.array([[p.x, p.y, r * math.sin(p.theta)] for p in poses])


def embed_enhanced(p: Pose, f: Sequence[float], basis: np.ndarray, r: float = 0.5,
                   alpha_vis: float = 0.5) -> np.ndarray:
    """Pose embedding concatenated with the weighted projection of ``f`` onto ``basis``."""
    f = np.asarray(f, dtype=float)
    basis = np.asarray(basis, dtype=float)
    if basis.ndim != 2 or basis.shape[0] != 3 or f.ndim != 1 or basis.shape[1] != f.shape[0]:
        raise ValidationError(
            f"basis {basis.shape} incompatible with feature vector of length {f.shape}")
    gram = basis @ basis.T
    if not np.allclose(gram, np.eye(3), atol=1e-8):
        raise ValidationError("projection basis rows are not orthonormal")
    return np.concatenate([embed_pose(p, r), alpha_vis * (basis @ f)])


@dataclass(frozen=True)
class Basis:
    """Top-3 right singular vectors, as rows, of a feature matrix."""
    rows: np.ndarray
    rank: int
    degenerate: bool


def top3_basis(features: np.ndarray) -> Basis:
    features = np.asarray(features, dtype=float)
    if features.ndim != 2 or features.shape[0] < 3 or features.shape[1] < 3:
        raise ValidationError(f"need a t x d matrix with t, d >= 3, got {features.shape}")
    _, s, vt = np.linalg.svd(features, full_matrices=True)
    tol = max(features.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > tol))
    # rows beyond the numerical rank come from the orthonormal complement in vt
    rows = vt[:3].copy()
    for i in range(3):
        nz = np.flatnonzero(np.abs(rows[i]) > 1e-12)
        if nz.size and rows[i, nz[0]] < 0:
            rows[i] = -rows[i]
    return Basis(rows, rank, rank < 3)


# -- filtration -------------------------------------------------------------

@dataclass
class Filtration:
    simplices: list[tuple[int, ...]]
    values: list[float]
    n_points: int
    eps_max: float

    def __len__(self) -> int:
        return len(self.simplices)

    def index(self) -> dict[tuple[int, ...], int]:
        return {s: i for i, s in enumerate(self.simplices)}

    def counts(self) -> tuple[int, int, int]:
        dims = [len(s) - 1 for s in self.simplices]
        return dims.count(0), dims.count(1), dims.count(2)


@dataclass(frozen=True)
class EmbeddedCloud:
    points: np.ndarray
    source_range: tuple[int, int] = (0, 0)

    def __post_init__(self) -> None:
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.size and not np.all(np.isfinite(pts)):
            raise ValidationError("embedded cloud has non-finite coordinates")
        object.__setattr__(self, "points", pts)


def pairwise_distances(points: np.ndarray) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    diff = pts[:, None, :] - pts[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def build_vr_filtration(cloud: EmbeddedCloud | np.ndarray, eps_max: float = 5.0) -> Filtration:
    pts = cloud.points if isinstance(cloud, EmbeddedCloud) else np.atleast_2d(np.asarray(cloud, float))
    n = pts.shape[0]
    if n < 1:
        raise ValidationError("filtration needs at least one point")
    dist = pairwise_distances(pts)
    adj = dist <= eps_max
    np.fill_diagonal(adj, False)

    simplices: list[tuple[int, ...]] = [(i,) for i in range(n)]
    values: list[float] = [0.0] * n
    iu, ju = np.nonzero(np.triu(adj, 1))
    for i, j in zip(iu.tolist(), ju.tolist()):
        simplices.append((i, j))
        values.append(float(dist[i, j]))
        ks = np.flatnonzero(adj[i, j + 1:] & adj[j, j + 1:]) + j + 1
        for k in ks.tolist():
            simplices.append((i, j, k))
            values.append(float(max(dist[i, j], dist[i, k], dist[j, k])))

    order = sorted(range(len(simplices)),
                   key=lambda s: (values[s], len(simplices[s]), simplices[s]))
    return Filtration([simplices[s] for s in order], [values[s] for s in order], n, float(eps_max))


def boundary(simplex: Sequence[int]) -> list[tuple[int, ...]]:
    """Codimension-1 faces; over F2 the alternating signs vanish."""
    s = tuple(simplex)
    if len(s) <= 1:
        return []
    return [s[:i] + s[i + 1:] for i in range(len(s))]


def boundary_columns(filt: Filtration) -> list[set[int]]:
    idx = filt.index()
    cols = []
    for j, s in enumerate(filt.simplices):
        col = set()
        for face in boundary(s):
            i = idx.get(face)
            if i is None:
                raise StructuralError(f"face {face} of simplex {s} missing from filtration")
            if i >= j or filt.values[i] > filt.values[j]:
                raise StructuralError(f"face {face} appears after simplex {s}")
            col.add(i)
        cols.append(col)
    return cols


# -- persistence ------------------------------------------------------------

@dataclass
class PersistenceDiagram:
    dim1_pairs: list[tuple[float, float]] = field(default_factory=list)
    dim0_pairs: list[tuple[float, float]] = field(default_factory=list)
    essential_dim2: int = 0
    eps_max: float = math.inf

    @property
    def betti0(self) -> int:
        return sum(1 for _, d in self.dim0_pairs if math.isinf(d))

    def pairs(self, dim: int = 1) -> np.ndarray:
        src = self.dim1_pairs if dim == 1 else self.dim0_pairs
        return np.array(src, dtype=float).reshape(-1, 2)

    def persistence(self) -> np.ndarray:
        p = self.pairs(1)
        return p[:, 1] - p[:, 0]


def reduce_boundary(filt: Filtration) -> tuple[list[set[int]], dict[int, int]]:
    """Left-to-right column reduction. Returns reduced columns and ``pivot -> column``."""
    cols = boundary_columns(filt)
    owner: dict[int, int] = {}
    for j, col in enumerate(cols):
        while col:
            low = max(col)
            k = owner.get(low)
            if k is None:
                owner[low] = j
                break
            col ^= cols[k]
    return cols, owner


def compute_persistence(filt: Filtration) -> PersistenceDiagram:
    """Standard persistence pairing by boundary-matrix reduction over F2.

    Dimension-1 classes still alive at ``eps_max`` get death ``eps_max``;
    essential dimension-0 classes keep death ``inf``.
    """
    cols, owner = reduce_boundary(filt)
    dims = [len(s) - 1 for s in filt.simplices]
    vals = filt.values
    pd = PersistenceDiagram(eps_max=filt.eps_max)
    paired = set(owner) | set(owner.values())
    for low, j in owner.items():
        birth, death = vals[low], vals[j]
        if dims[low] == 0:
            pd.dim0_pairs.append((birth, death))
        elif dims[low] == 1:
            pd.dim1_pairs.append((birth, death))
    for i, d in enumerate(dims):
        if i in paired or cols[i]:
            continue
        if d == 0:
            pd.dim0_pairs.append((vals[i], math.inf))
        elif d == 1:
            pd.dim1_pairs.append((vals[i], filt.eps_max))
        elif d == 2:
            pd.essential_dim2 += 1
    pd.dim0_pairs.sort()
    pd.dim1_pairs.sort()
    return pd


def persistence_dim1(points: np.ndarray, eps_max: float = 5.0) -> PersistenceDiagram:
    """Dimension 0 and 1 pairs of the Rips filtration of ``points``.

    Same pairing as :func:`compute_persistence`, computed by reducing the
    coboundary matrix with clearing. Edges that merge components are paired
    through union-find and never reduced; the remaining edge columns are mostly
    apparent pairs. Far cheaper than reducing every triangle column.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n = pts.shape[0]
    pd = PersistenceDiagram(eps_max=float(eps_max))
    if n == 0:
        return pd
    dist = pairwise_distances(pts)
    adj = dist <= eps_max
    np.fill_diagonal(adj, False)
    iu, ju = np.nonzero(np.triu(adj, 1))
    elen = dist[iu, ju]
    # filtration order for edges: (value, vertices)
    order = np.lexsort((ju, iu, elen))
    edges = [(int(iu[o]), int(ju[o])) for o in order]
    lens = [float(elen[o]) for o in order]

    # dimension 0 through union-find with the elder rule (older = lower index)
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    negative = [False] * len(edges)
    for e, (i, j) in enumerate(edges):
        ri, rj = find(i), find(j)
        if ri == rj:
            continue
        young = max(ri, rj)
        parent[young] = min(ri, rj)
        negative[e] = True
        pd.dim0_pairs.append((0.0, lens[e]))
    roots = {find(i) for i in range(n)}
    pd.dim0_pairs.extend((0.0, math.inf) for _ in roots)
    pd.dim0_pairs.sort()

    # Triangles are keyed by one integer that sorts like (diameter, i, j, k):
    # a diameter is always some edge length, so its rank among distinct
    # lengths stands in for the float.
    uniq = np.unique(elen)
    drank = np.searchsorted(uniq, dist).astype(np.int64)
    n3 = n * n * n
    none = np.iinfo(np.int64).max
    ei = iu[order].astype(np.int64)
    ej = ju[order].astype(np.int64)
    ks = np.arange(n, dtype=np.int64)

    def cofacet_keys(rows: np.ndarray) -> np.ndarray:
        i, j = ei[rows, None], ej[rows, None]
        valid = adj[ei[rows]] & adj[ej[rows]]
        dr = np.maximum(np.maximum(drank[ei[rows]], drank[ej[rows]]), drank[i, j])
        lo = np.minimum(ks, i)
        hi = np.maximum(ks, j)
        keys = dr * n3 + (lo * n + (i + j + ks - lo - hi)) * n + hi
        return np.where(valid, keys, none)

    owner: dict[int, int] = {}
    reduced: dict[int, set[int]] = {}
    block = max(1, 200_000 // n)
    for stop in range(len(edges), 0, -block):
        rows = np.arange(max(0, stop - block), stop)
        keys = cofacet_keys(rows)
        pivots = keys.min(axis=1).tolist()
        for r in range(len(rows) - 1, -1, -1):
            e = int(rows[r])
            if negative[e]:
                continue
            piv = pivots[r]
            if piv == none:
                pd.dim1_pairs.append((lens[e], float(eps_max)))
                continue
            if piv not in owner:
                # apparent pair, no reduction needed
                owner[piv] = e
                pd.dim1_pairs.append((lens[e], float(uniq[piv // n3])))
                continue
            col = _column(keys[r], none)
            while col:
                piv = min(col)
                other = owner.get(piv)
                if other is None:
                    owner[piv] = e
                    reduced[e] = col
                    pd.dim1_pairs.append((lens[e], float(uniq[piv // n3])))
                    break
                if other not in reduced:
                    reduced[other] = _column(cofacet_keys(np.array([other]))[0], none)
                col ^= reduced[other]
            else:
                pd.dim1_pairs.append((lens[e], float(eps_max)))
    pd.dim1_pairs.sort()
    return pd


def _column(keys: np.ndarray, none: int) -> set[int]:
    return set(keys[keys != none].tolist())


def filter_diagram(pd: PersistenceDiagram, tau_p: float = 0.1) -> PersistenceDiagram:
    """Drop dimension-1 pairs with persistence ``<= tau_p``."""
    if tau_p < 0:
        raise ValidationError(f"tau_p must be >= 0, got {tau_p}")
    kept = [(b, d) for b, d in pd.dim1_pairs if d - b > tau_p]
    return PersistenceDiagram(kept, list(pd.dim0_pairs), pd.essential_dim2, pd.eps_max)


# -- union-find oracle ------------------------------------------------------

class UnionFind:
    def __init__(self, n: int) -> None:
        self.parent = list(range(n))
        self.rank = [0] * n
        self.count = n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        self.count -= 1
        return True


def connected_components(filt: Filtration, eps: float) -> int:
    """Components of the 1-skeleton restricted to values ``<= eps``."""
    uf = UnionFind(filt.n_points)
    for s, v in zip(filt.simplices, filt.values):
        if len(s) == 2 and v <= eps:
            uf.union(*s)
    return uf.count


# -- export -----------------------------------------------------------------

def format_diagram(pd: PersistenceDiagram, dims: Iterable[int] = (1,)) -> str:
    rows = []
    for dim in dims:
        src = pd.dim1_pairs if dim == 1 else pd.dim0_pairs
        for b, d in src:
            if math.isinf(d):
                d = pd.eps_max
            rows.append((dim, b, d))
    rows.sort()
    lines = ["dim,birth,death"] + [f"{dim},{b!r},{d!r}" for dim, b, d in rows]
    return "\n".join(lines) + "\n"


def parse_diagram(text: str) -> PersistenceDiagram:
    pd = PersistenceDiagram()
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("dim"):
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise ValidationError(f"line {lineno}: expected dim,birth,death")
        try:
            dim, b, d = int(parts[0]), float(parts[1]), float(parts[2])
        except ValueError:
            raise ValidationError(f"line {lineno}: non-numeric field") from None
        if not (math.isfinite(b) and math.isfinite(d)) or d < b:
            raise ValidationError(f"line {lineno}: invalid pair ({b}, {d})")
        (pd.dim1_pairs if dim == 1 else pd.dim0_pairs).append((b, d))
    pd.dim1_pairs.sort()
    pd.dim0_pairs.sort()
    return pd


def load_diagram(path: str | Path) -> PersistenceDiagram:
    return parse_diagram(Path(path).read_text(encoding="utf-8"))
