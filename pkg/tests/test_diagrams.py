import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import brute_w2
from topomem.core import ValidationError
from topomem.diagrams import (Landscape, augmented_cost, combined_distance, format_landscape,
                              landscape, landscape_distance, landscape_grid, landscape_values,
                              parse_landscape, wasserstein2)
from topomem.topology import PersistenceDiagram

pair = st.tuples(st.floats(0, 4), st.floats(0, 3)).map(lambda bp: (bp[0], bp[0] + bp[1]))
diagrams = st.lists(pair, max_size=4)


def test_single_point_to_empty():
    assert abs(wasserstein2([(1.0, 2.0)], []) - 1 / math.sqrt(2)) < 1e-12
    assert wasserstein2([], []) == 0.0


def test_point_to_point():
    assert wasserstein2([(0.0, 1.0)], [(0.0, 2.0)]) == 1.0


def test_augmented_cost_shape_and_forbidden_slots():
    c = augmented_cost(np.array([[0.0, 1.0], [1.0, 3.0]]), np.array([[0.0, 2.0]]))
    assert c.shape == (3, 3)
    assert c[0, 1] == 0.5 and math.isinf(c[0, 2]) and c[2, 1] == 0.0


@given(diagrams, diagrams)
def test_matches_exhaustive_oracle_and_symmetric(a, b):
    w = wasserstein2(a, b)
    assert w == brute_w2(a, b)
    assert w == wasserstein2(b, a)


@given(diagrams, diagrams, diagrams)
def test_triangle_inequality(a, b, c):
    assert wasserstein2(a, c) <= wasserstein2(a, b) + wasserstein2(b, c) + 1e-9


@given(diagrams, st.floats(0, 0.2))
def test_stability_under_perturbation(a, eps):
    # moving every point by at most eps in sup norm moves W2 by at most sqrt(2 n) eps
    b = [(x + eps, y + eps) for x, y in a]
    assert wasserstein2(a, b) <= math.sqrt(2 * len(a)) * eps + 1e-12


def test_rejects_infinite_pairs():
    with pytest.raises(ValidationError):
        wasserstein2([(0.0, math.inf)], [])


def test_landscape_tent_values():
    vals = landscape_values([(1.0, 3.0)], [1.5, 2.0, 2.5, 3.5])
    assert np.allclose(vals, [0.5, 1.0, 0.5, 0.0])


def test_landscape_of_empty_is_zero():
    ls = landscape(PersistenceDiagram(), 64, 5.0)
    assert ls.values.shape == (64,) and not ls.values.any()


def test_landscape_grid_cells():
    g = landscape_grid(4, 2.0)
    assert np.allclose(g, [0.25, 0.75, 1.25, 1.75])
    with pytest.raises(ValidationError):
        landscape_grid(1, 1.0)


def test_landscape_distance_constant_one():
    grid = landscape_grid(64, 5.0)
    one = Landscape(grid, np.ones(64))
    zero = Landscape(grid, np.zeros(64))
    assert abs(landscape_distance(one, zero) - math.sqrt(5)) < 1e-12


def test_landscape_distance_grid_mismatch():
    with pytest.raises(ValidationError):
        landscape_distance(landscape([], 32), landscape([], 64))


def test_landscape_l2_matches_quadrature():
    # tent of height 1 over [0, 2]: squared L2 norm is 2/3
    ls = landscape([(0.0, 2.0)], 4000, 5.0)
    zero = landscape([], 4000, 5.0)
    assert landscape_distance(ls, zero) == pytest.approx(math.sqrt(2 / 3), rel=1e-5)


def test_combined_distance_weights():
    class Sig:
        def __init__(self, pairs):
            self.pd1 = PersistenceDiagram(list(pairs))
            self.landscape = landscape(self.pd1)
    a, b = Sig([(0.0, 1.0)]), Sig([(0.0, 2.0)])
    expected = 0.7 * 1.0 + 0.3 * landscape_distance(a.landscape, b.landscape)
    assert combined_distance(a, b) == pytest.approx(expected, abs=1e-15)
    assert combined_distance(a, a) == 0.0


def test_landscape_file_roundtrip():
    ls = landscape([(0.5, 2.0)], 16, 5.0)
    back = parse_landscape(format_landscape(ls))
    assert np.array_equal(back.grid, ls.grid) and np.array_equal(back.values, ls.values)
    with pytest.raises(ValidationError):
        parse_landscape("t,value\n1,x\n")
