import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from topomem.core import (Config, ConfigParseError, GoalSpec, Pose, SceneGraphSnapshot, SceneNode,
                          Trajectory, ValidationError, config_from_mapping, cosine, dump_config,
                          format_trajectory, load_config, normalize_angle, parse_config,
                          parse_snapshot, parse_trajectory, snapshot_to_dict)
import json


@given(st.floats(-1e6, 1e6))
def test_normalize_angle_range(theta):
    w = normalize_angle(theta)
    assert -math.pi <= w < math.pi
    assert math.isclose(math.cos(w), math.cos(theta), abs_tol=1e-6)


def test_pose_wraps_heading():
    assert Pose(0, 0, 3 * math.pi).theta == pytest.approx(-math.pi)
    with pytest.raises(ValidationError):
        Pose(float("nan"), 0.0)


def test_trajectory_strictly_increasing():
    tr = Trajectory([(0, Pose(0, 0)), (1, Pose(1, 0))])
    with pytest.raises(ValidationError):
        tr.append(1, Pose(2, 0))
    assert len(tr.tail(1)) == 1 and tr.tail(5).points == tr.points


def test_trajectory_roundtrip():
    tr = Trajectory((t, Pose(0.1 * t, -0.2 * t, 0.3 * t)) for t in range(12))
    back = parse_trajectory(format_trajectory(tr))
    assert back.points == tr.points


def test_trajectory_parse_errors():
    with pytest.raises(ValidationError, match="line 2"):
        parse_trajectory("t,x,y,theta\n0,1,2\n")
    with pytest.raises(ValidationError):
        parse_trajectory("0,0,0,0\n0,1,1,0\n")


def test_snapshot_sorted_and_validated():
    a = SceneNode("b", "chair", (0, 0, 0), (1.0, 0.0))
    b = SceneNode("a", "table", (1, 0, 0), (0.0, 1.0))
    g = SceneGraphSnapshot(3, (a, b), (("b", "a", "near"),))
    assert [n.id for n in g.nodes] == ["a", "b"]
    assert g.spatial_edges == (("a", "b", "near"),)
    with pytest.raises(ValidationError):
        SceneGraphSnapshot(0, (a, a))
    with pytest.raises(ValidationError):
        SceneGraphSnapshot(0, (a,), (("a", "zz", "near"),))
    back = parse_snapshot(json.dumps(snapshot_to_dict(g)))
    assert back == g


def test_goal_spec_checks_finite():
    with pytest.raises(ValidationError):
        GoalSpec("chair", (float("inf"),))


def test_config_defaults_bind_algorithm_literals():
    cfg = Config()
    assert (cfg.tau_p, cfg.w_wasserstein, cfg.w_landscape, cfg.min_traj_len) == (0.1, 0.7, 0.3, 10)
    assert (cfg.K, cfg.gamma, cfg.theta_w, cfg.R_search, cfg.cadence) == (100, 0.95, 2.0, 10.0, 10)


def test_config_parse_and_errors(tmp_path):
    cfg = parse_config("K: 20\nlambda: 2.5\n")
    assert cfg.K == 20 and cfg.lambda_ == 2.5
    assert parse_config(dump_config(cfg)) == cfg
    with pytest.raises(ConfigParseError, match="bogus"):
        parse_config("bogus: 1\n")
    with pytest.raises(ConfigParseError, match="K"):
        config_from_mapping({"K": 1.5})
    with pytest.raises(ConfigParseError):
        parse_config("K: [1, 2\n")
    with pytest.raises(ValidationError, match="gamma"):
        config_from_mapping({"gamma": 1.5})
    p = tmp_path / "c.yaml"
    p.write_text("theta_w: 3\n")
    assert load_config(p).theta_w == 3.0
    assert load_config(None) == Config()


def test_cosine():
    assert cosine([1, 0], [0, 1]) == 0.0
    assert cosine([2, 0], [1, 0]) == pytest.approx(1.0)
    assert cosine([0, 0], [1, 0]) == 0.0
    v = np.array([0.3, -0.4])
    assert cosine(v, -v) == pytest.approx(-1.0)


@pytest.mark.parametrize("field,value", [("sensor_dropout", 1.0), ("sensor_dropout", -0.1),
                                         ("map_range", 0.0), ("detect_range", -1.0)])
def test_config_rejects_bad_sensing(field, value):
    with pytest.raises(ValidationError):
        Config(**{field: value})
