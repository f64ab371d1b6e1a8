import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from topomem.core import Config, SceneGraphSnapshot, SceneNode, ValidationError
from topomem.term import (OrderingError, TemporalMemory, edge_weight, estimate_velocity,
                          predict_position, push_snapshot, query_history, similarity)

CFG = Config()


def node(id_, label, pos, feat=(1.0, 0.0)):
    return SceneNode(id_, label, tuple(pos), tuple(feat))


def snap(t, *nodes):
    return SceneGraphSnapshot(t, tuple(nodes))


coords = st.floats(-20, 20)
labels = st.sampled_from(["chair", "table", "sofa"])


@given(labels, labels, st.tuples(coords, coords, coords), st.tuples(coords, coords, coords),
       st.floats(0, 1), st.floats(0.05, 5))
def test_similarity_symmetric_and_bounded(la, lb, pa, pb, alpha, sigma):
    a, b = node("a", la, pa), node("b", lb, pb)
    s = similarity(a, b, alpha, sigma)
    assert s == similarity(b, a, alpha, sigma)
    assert 0.0 <= s <= 1.0


def test_similarity_rejects_bad_sigma():
    with pytest.raises(ValidationError):
        similarity(node("a", "x", (0, 0, 0)), node("b", "x", (0, 0, 0)), 0.5, 0.0)


def test_edge_weight_values():
    a = node("a", "chair", (0, 0, 0), (1.0, 0.0))
    b = node("b", "chair", (0, 0, 0), (0.0, 1.0))
    # identical features: gamma; features sqrt(2) apart: gamma * e^{-sqrt 2}
    assert edge_weight(a, a, 0.95, 1.0) == 0.95
    assert abs(edge_weight(a, b, 0.95, 1.0) - 0.95 * math.exp(-math.sqrt(2))) < 1e-12


def test_push_links_similar_nodes_and_weights_recompute():
    mem = TemporalMemory(CFG.K)
    push_snapshot(mem, snap(0, node("c1", "chair", (0, 0, 0), (1.0, 0.2))), CFG)
    created = push_snapshot(mem, snap(1, node("c1", "chair", (0.1, 0, 0), (0.9, 0.3)),
                                      node("t1", "table", (9, 9, 0))), CFG)
    assert created == 1
    e = mem.temporal_edges[0]
    a, b = mem.window[0].node("c1"), mem.window[1].node("c1")
    assert abs(e.weight - CFG.gamma * math.exp(-CFG.lambda_ * math.dist(a.features, b.features))) < 1e-12
    assert e.dt == 1 and e.from_node == (0, "c1") and e.to_node == (1, "c1")


def test_ordering_error():
    mem = TemporalMemory()
    push_snapshot(mem, snap(5), CFG)
    with pytest.raises(OrderingError):
        push_snapshot(mem, snap(5), CFG)


def test_window_bound_and_edge_eviction():
    mem = TemporalMemory(CFG.K)
    for t in range(1000):
        push_snapshot(mem, snap(t, node("a", "chair", (0.01 * t, 0, 0))), CFG)
        assert len(mem) <= CFG.K
    oldest = mem.window[0].timestep
    assert all(e.from_node[0] >= oldest for e in mem.temporal_edges)
    assert len(mem.temporal_edges) == CFG.K - 1


@given(st.tuples(coords, coords, coords), st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.just(0.0)),
       st.integers(1, 50))
def test_constant_velocity_prediction(p0, v, k):
    cfg = Config(tau=0.4)
    mem = TemporalMemory()
    pa = np.array(p0)
    pb = pa + np.array(v)
    push_snapshot(mem, snap(0, node("m", "chair", pa)), cfg)
    push_snapshot(mem, snap(1, node("m", "chair", pb)), cfg)
    vel = estimate_velocity(mem, "chair")
    assert np.allclose(vel, np.array(v), atol=1e-9)
    pred = predict_position(mem, mem.newest.node("m"), k)
    assert np.allclose(pred, pb + k * (pb - pa), atol=1e-9)


def test_prediction_without_velocity_is_identity_and_k_checked():
    mem = TemporalMemory()
    n = node("a", "lamp", (1, 2, 0))
    push_snapshot(mem, snap(0, n), CFG)
    assert np.array_equal(predict_position(mem, n, 3), n.p)
    with pytest.raises(ValidationError):
        predict_position(mem, n, 0)


def test_velocity_uses_elapsed_time():
    mem = TemporalMemory()
    push_snapshot(mem, snap(0, node("m", "sofa", (0, 0, 0))), CFG)
    push_snapshot(mem, snap(4, node("m", "sofa", (0.4, 0, 0))), CFG)
    assert np.allclose(estimate_velocity(mem, "sofa"), [0.1, 0, 0])


def test_query_history():
    mem = TemporalMemory()
    for t in range(5):
        push_snapshot(mem, snap(t, node("a", "tv", (t, 0, 0)), node("b", "bed", (0, t, 0))), CFG)
    hist = query_history(mem, "tv", (1, 3))
    assert [t for t, _ in hist] == [1, 2, 3]
    assert np.array_equal(hist[-1][1], [3, 0, 0])
    with pytest.raises(ValidationError):
        query_history(mem, "tv", (3, 1))
