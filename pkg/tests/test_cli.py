import json
import re
import subprocess
import sys
from pathlib import Path

import pytest

from conftest import FIXTURES
from topomem import cli
from topomem.navsim.world import load_world, save_world
from topomem.navsim.generate import generate_world

GOLDEN = Path(__file__).parent / "golden"


def run_cli(*args):
    return subprocess.run([sys.executable, "-m", "topomem.cli", *map(str, args)],
                          capture_output=True, text=True)


def test_run_matches_golden_record():
    r = run_cli("run", "--world", FIXTURES / "corridor.txt", "--seed", 1)
    assert r.returncode == 0
    assert r.stdout == (GOLDEN / "corridor_seed1.jsonl").read_text()
    assert json.loads(r.stdout)["success"] == 1


def test_run_baseline_has_no_loop_detections(capsys):
    assert cli.main(["run", "--world", str(FIXTURES / "corridor.txt"), "--seed", "1",
                     "--ablation", "baseline"]) == 0
    assert json.loads(capsys.readouterr().out)["loop_detections"] == 0


def test_exit_code_matrix(tmp_path, capsys):
    bad_world = tmp_path / "bad.txt"
    bad_world.write_text("#####\n#S#G#\n#####\n")
    bad_cfg = tmp_path / "bad.yaml"
    bad_cfg.write_text("nope: 1\n")
    short = FIXTURES / "short.csv"
    cases = [
        (["frobnicate"], 1),
        (["run", "--world", str(FIXTURES / "corridor.txt"), "--bogus"], 1),
        (["run", "--world", str(tmp_path / "missing.txt")], 1),
        (["run", "--world", str(bad_world)], 1),
        (["run", "--world", str(FIXTURES / "corridor.txt"), "--config", str(bad_cfg)], 1),
        (["run", "--world", str(FIXTURES / "corridor.txt"), "--ablation", "most"], 1),
        (["compute-pd", "--trajectory", str(short)], 1),
        (["sweep", "--worlds", str(tmp_path / "none")], 1),
        (["sweep", "--worlds", str(FIXTURES), "--seeds", "x-y"], 1),
        (["compute-pd", "--trajectory", str(FIXTURES / "circle.csv")], 0),
    ]
    for argv, code in cases:
        assert exit_code(argv) == code, argv
    err = capsys.readouterr().err
    assert "usage:" in err
    assert "min_traj_len" in err
    assert "path" in err


def exit_code(argv):
    try:
        return cli.main(argv)
    except SystemExit as exc:  # argparse usage errors
        return exc.code


def test_unknown_verb_subprocess_usage_on_stderr():
    r = run_cli("frobnicate")
    assert r.returncode == 1 and "usage:" in r.stderr and r.stdout == ""
    h = run_cli("--help")
    assert h.returncode == 0 and "compute-pd" in h.stdout


def test_compute_pd_outputs(tmp_path):
    out = tmp_path / "pd.csv"
    assert cli.main(["compute-pd", "--trajectory", str(FIXTURES / "circle.csv"), "--out", str(out)]) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "dim,birth,death"
    pairs = [tuple(map(float, r.split(",")[1:])) for r in rows[1:]]
    assert sum(1 for b, d in pairs if d - b > 1) == 1
    assert cli.main(["compute-pd", "--trajectory", str(FIXTURES / "collinear.csv"),
                     "--out", str(out)]) == 0
    assert out.read_text() == "dim,birth,death\n"


def test_compare_diagrams_and_landscape(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    a.write_text("dim,birth,death\n1,1.0,2.0\n")
    b.write_text("dim,birth,death\n")
    assert cli.main(["compare-diagrams", str(a), str(b)]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert abs(rec["wasserstein2"] - 2 ** -0.5) < 1e-12
    assert rec["combined"] == pytest.approx(0.7 * rec["wasserstein2"] + 0.3 * rec["landscape_distance"])
    ls = tmp_path / "ls.csv"
    assert cli.main(["landscape", "--diagram", str(a), "--out", str(ls)]) == 0
    lines = ls.read_text().splitlines()
    assert lines[0] == "t,value" and len(lines) == 65


def _suite(tmp_path, n=1):
    d = tmp_path / "worlds"
    d.mkdir()
    for k in range(n):
        w, s = generate_world("ring", 200 + k)
        save_world(w, d / f"{w.name}.txt", s)
    return d


def test_sweep_cardinality_and_determinism(tmp_path):
    d = _suite(tmp_path)
    out1, out2 = tmp_path / "r1.jsonl", tmp_path / "r2.jsonl"
    args = ["sweep", "--worlds", str(d), "--seeds", "0", "--ablations", "full,baseline"]
    assert cli.main(args + ["--out", str(out1)]) == 0
    assert cli.main(args + ["--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    recs = [json.loads(l) for l in out1.read_text().splitlines()]
    eps = [r for r in recs if not r.get("summary")]
    summ = [r for r in recs if r.get("summary")]
    assert len(eps) == 2 and [r["ablation"] for r in summ] == ["full", "baseline"]
    assert all({"seed", "ablation", "success", "path_length", "shortest_length", "steps",
                "loop_detections", "revisited_cells"} <= set(r) for r in eps)
    assert all(s["SPL"] <= s["SR"] for s in summ)


def test_sweep_crash_writes_incomplete_file(tmp_path, monkeypatch):
    d = _suite(tmp_path)
    calls = {"n": 0}
    import topomem.navsim.sweep as sw
    real = sw.run_episode

    def flaky(*a, **k):
        calls["n"] += 1
        if calls["n"] == 2:
            raise RuntimeError("boom")
        return real(*a, **k)

    monkeypatch.setattr(sw, "run_episode", flaky)
    out = tmp_path / "r.jsonl"
    rc = cli.main(["sweep", "--worlds", str(d), "--seeds", "0-1", "--ablations", "full",
                   "--out", str(out)])
    assert rc == 2
    recs = [json.loads(l) for l in out.read_text().splitlines()]
    assert len(recs) == 2 and recs[-1]["incomplete"] is True


def test_parse_seeds():
    assert cli.parse_seeds("0-3") == [0, 1, 2, 3]
    assert cli.parse_seeds("5") == [5]
    assert cli.parse_seeds("1,4") == [1, 4]


def _markers(svg):
    return re.findall(r'<circle cx="([\d.]+)" cy="([\d.]+)"', svg)


def test_plot_diagrams(tmp_path):
    empty, one = tmp_path / "e.csv", tmp_path / "o.csv"
    empty.write_text("dim,birth,death\n")
    one.write_text("dim,birth,death\n1,1,2\n")
    for src in (empty, one):
        for k in (1, 2):
            assert cli.main(["plot", "--input", str(src), "--output", str(tmp_path / f"{src.stem}{k}.svg")]) == 0
    e1 = (tmp_path / "e1.svg").read_text()
    assert _markers(e1) == [] and 'stroke-dasharray' in e1
    o1 = (tmp_path / "o1.svg").read_text()
    assert o1 == (tmp_path / "o2.svg").read_text()
    (cx, cy), = _markers(o1)
    # 320 px plot area over [0, 5]: (1, 2) maps to (40 + 64, 360 - 128)
    assert (float(cx), float(cy)) == (104.0, 232.0)
    assert float(cy) < 360 - (float(cx) - 40)  # above the diagonal


def test_plot_landscape_trace_results(tmp_path):
    pd = tmp_path / "a.csv"
    pd.write_text("dim,birth,death\n1,1.0,2.0\n")
    ls = tmp_path / "ls.csv"
    cli.main(["landscape", "--diagram", str(pd), "--out", str(ls)])
    assert cli.main(["plot", "--input", str(ls), "--output", str(tmp_path / "ls.svg")]) == 0
    assert "<polyline" in (tmp_path / "ls.svg").read_text()
    trace = tmp_path / "trace.jsonl"
    assert cli.main(["run", "--world", str(FIXTURES / "figure8.txt"), "--seed", "1",
                     "--trace", str(trace)]) == 0
    assert cli.main(["plot", "--input", str(trace), "--output", str(tmp_path / "t.svg"),
                     "--world", str(FIXTURES / "figure8.txt")]) == 0
    svg = (tmp_path / "t.svg").read_text()
    assert "<polyline" in svg and "<rect" in svg
    bad = tmp_path / "bad.txt"
    bad.write_text("hello\n")
    assert cli.main(["plot", "--input", str(bad), "--output", str(tmp_path / "x.svg")]) == 1
    assert not (tmp_path / "x.svg").exists()
