"""Independent brute-force oracles used by the test suite.

Nothing here calls the reduction or assignment code under test.
"""
from __future__ import annotations

import itertools
import math
from collections import Counter

import numpy as np


def f2_rank(columns: list[int]) -> int:
    """Rank over F2 of column vectors packed as Python int bitmasks."""
    basis: dict[int, int] = {}
    rank = 0
    for v in columns:
        while v:
            top = v.bit_length() - 1
            if top not in basis:
                basis[top] = v
                rank += 1
                break
            v ^= basis[top]
    return rank


def rips_complex(dist: np.ndarray, eps_max: float):
    """All simplices of dimension <= 2 with their Rips values, by brute force over triples.

    Takes the distance matrix so float rounding of the metric is shared with
    the code under test; only the combinatorics are recomputed here.
    """
    d = np.asarray(dist, dtype=float).tolist()
    n = len(d)
    out = [((i,), 0.0) for i in range(n)]
    for i, j in itertools.combinations(range(n), 2):
        if d[i][j] <= eps_max:
            out.append(((i, j), d[i][j]))
    for i, j, k in itertools.combinations(range(n), 3):
        v = max(d[i][j], d[i][k], d[j][k])
        if v <= eps_max:
            out.append(((i, j, k), v))
    out.sort(key=lambda sv: (sv[1], len(sv[0]), sv[0]))
    return [s for s, _ in out], [v for _, v in out]


def persistence_by_ranks(simplices, values, eps_max: float) -> Counter:
    """Persistence pairs from persistent Betti numbers (inclusion-exclusion on ranks).

    ``beta_p(a, b)`` = dim Z_p(K_a) - dim(B_p(K_b) restricted to K_a), with every
    dimension obtained from F2 ranks of boundary matrices. Returns a multiset of
    ``(dim, birth, death)``; essential dim-0 classes die at ``inf`` and essential
    dim-1 classes at ``eps_max``.
    """
    index = {s: i for i, s in enumerate(simplices)}
    N = len(simplices)
    dims = [len(s) - 1 for s in simplices]

    def col(j: int) -> int:
        s = simplices[j]
        mask = 0
        for k in range(len(s)):
            if len(s) > 1:
                mask |= 1 << index[s[:k] + s[k + 1:]]
        return mask

    cols = [col(j) for j in range(N)]
    cache: dict = {}

    def beta(p: int, a: int, b: int) -> int:
        # complexes K_a, K_b are the first a+1 and b+1 simplices
        key = (p, a, b)
        if key in cache:
            return cache[key]
        if a < 0:
            return 0
        in_a = [j for j in range(a + 1) if dims[j] == p]
        n_p = len(in_a)
        rank_dp = f2_rank([cols[j] for j in in_a]) if p > 0 else 0
        z = n_p - rank_dp
        higher = [cols[j] for j in range(b + 1) if dims[j] == p + 1]
        outside = 0
        for j in range(a + 1, N):
            outside |= 1 << j
        bd = f2_rank(higher) - f2_rank([c & outside for c in higher])
        cache[key] = z - bd
        return cache[key]

    pairs: Counter = Counter()
    for p in (0, 1):
        births = [i for i in range(N) if dims[i] == p]
        deaths = [j for j in range(N) if dims[j] == p + 1]
        for i in births:
            alive = beta(p, i, N - 1) - beta(p, i - 1, N - 1)
            for j in deaths:
                if j <= i:
                    continue
                mu = (beta(p, i, j - 1) - beta(p, i, j)
                      - beta(p, i - 1, j - 1) + beta(p, i - 1, j))
                if mu:
                    pairs[(p, values[i], values[j])] += mu
            if alive:
                pairs[(p, values[i], math.inf if p == 0 else eps_max)] += alive
    return pairs


def betti_numbers(simplices) -> list[int]:
    index = {s: i for i, s in enumerate(simplices)}
    by_dim: dict[int, list[int]] = {0: [], 1: [], 2: []}
    for s in simplices:
        mask = 0
        if len(s) > 1:
            for k in range(len(s)):
                mask |= 1 << index[s[:k] + s[k + 1:]]
        by_dim[len(s) - 1].append(mask)
    ranks = {p: f2_rank(by_dim[p]) if p > 0 else 0 for p in by_dim}
    ranks[3] = 0
    return [len(by_dim[p]) - ranks[p] - ranks[p + 1] for p in (0, 1, 2)]


def brute_w2(a, b) -> float:
    """2-Wasserstein by enumerating every partial matching."""
    a = [tuple(map(float, p)) for p in a]
    b = [tuple(map(float, p)) for p in b]
    diag = lambda p: (p[1] - p[0]) ** 2 / 2.0  # noqa: E731
    best = math.inf
    n, m = len(a), len(b)
    for k in range(min(n, m) + 1):
        for ia in itertools.combinations(range(n), k):
            for ib in itertools.permutations(range(m), k):
                terms = []
                match = dict(zip(ia, ib))
                for i in range(n):
                    if i in match:
                        q = b[match[i]]
                        terms.append((a[i][0] - q[0]) ** 2 + (a[i][1] - q[1]) ** 2)
                    else:
                        terms.append(diag(a[i]))
                used = set(ib)
                terms += [diag(b[j]) for j in range(m) if j not in used]
                best = min(best, math.fsum(terms))
    return math.sqrt(best)
