"""Command-line entry point: ``topomem <verb> ...``.

Exit codes: 0 success, 1 invalid input or usage, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .core import ValidationError, load_config, load_trajectory
from .diagrams import (Landscape, format_landscape, landscape, landscape_distance,
                       parse_landscape, wasserstein2)
from .navsim.sim import ABLATIONS, run_episode
from .navsim.sweep import dumps_records, load_suite, sweep
from .navsim.world import load_world
from .svg import bar_svg, diagram_svg, landscape_svg, trajectory_svg
from .topology import format_diagram, load_diagram, parse_diagram
from .tslc import TrajectoryTooShort, compute_signature

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # usage problems are validation failures
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


class _Incomplete(RuntimeError):
    pass


def _dump(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True)


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _require(path: str, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise ValidationError(f"{what} not found: {p}")
    return p


def parse_seeds(spec: str) -> list[int]:
    """``"0-9"`` (inclusive), ``"3"`` or ``"1,4,7"``."""
    try:
        if "-" in spec.strip("-") and "," not in spec:
            lo, hi = spec.split("-", 1)
            seeds = list(range(int(lo), int(hi) + 1))
        else:
            seeds = [int(s) for s in spec.split(",") if s.strip()]
    except ValueError:
        raise ValidationError(f"malformed seed range {spec!r}") from None
    if not seeds:
        raise ValidationError(f"empty seed range {spec!r}")
    return seeds


def _ablations(spec: str) -> list[str]:
    tags = [s.strip() for s in spec.split(",") if s.strip()]
    for t in tags:
        if t not in ABLATIONS:
            raise ValidationError(f"unknown ablation {t!r}; expected one of {ABLATIONS}")
    if not tags:
        raise ValidationError("no ablations given")
    return tags


# -- verbs ------------------------------------------------------------------

def cmd_run(args) -> int:
    world = load_world(_require(args.world, "world file"))
    cfg = load_config(args.config and _require(args.config, "config file"))
    trace = [] if args.trace else None
    res = run_episode(world, cfg, args.seed, args.ablation, trace=trace)
    rec = dataclasses.asdict(res)
    rec.update(world=world.name, seed=args.seed, ablation=args.ablation)
    if trace is not None:
        _write(args.trace, "".join(_dump(r) + "\n" for r in trace))
    print(_dump(rec))
    return EXIT_OK


def cmd_sweep(args) -> int:
    worlds = load_suite(args.worlds)
    cfg = load_config(args.config and _require(args.config, "config file"))
    seeds = parse_seeds(args.seeds)
    ablations = _ablations(args.ablations)
    done: list[dict] = []
    try:
        records, summary = sweep(worlds, cfg, seeds, ablations, progress=done.append)
    except Exception as exc:
        _write(args.out, dumps_records(done + [{"incomplete": True, "error": repr(exc)}]))
        raise _Incomplete(f"sweep aborted after {len(done)} episodes: {exc!r}") from exc
    _write(args.out, dumps_records(records + summary))
    if args.out not in (None, "-"):
        sys.stdout.write(dumps_records(summary))
    return EXIT_OK


def cmd_compute_pd(args) -> int:
    cfg = load_config(args.config and _require(args.config, "config file"))
    traj = load_trajectory(_require(args.trajectory, "trajectory file"))
    if len(traj) < cfg.min_traj_len:
        raise TrajectoryTooShort(
            f"trajectory has {len(traj)} points; min_traj_len is {cfg.min_traj_len}")
    sig = compute_signature(traj, cfg)
    _write(args.out, format_diagram(sig.pd1, dims=(1,)))
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = load_config(args.config and _require(args.config, "config file"))
    a = load_diagram(_require(args.a, "diagram file"))
    b = load_diagram(_require(args.b, "diagram file"))
    w2 = wasserstein2(a, b)
    ld = landscape_distance(landscape(a, cfg.landscape_grid, cfg.eps_max),
                            landscape(b, cfg.landscape_grid, cfg.eps_max))
    print(_dump({"wasserstein2": w2, "landscape_distance": ld,
                 "combined": cfg.w_wasserstein * w2 + cfg.w_landscape * ld}))
    return EXIT_OK


def cmd_landscape(args) -> int:
    cfg = load_config(args.config and _require(args.config, "config file"))
    pd = load_diagram(_require(args.diagram, "diagram file"))
    _write(args.out, format_landscape(landscape(pd, cfg.landscape_grid, cfg.eps_max)))
    return EXIT_OK


def _input_kind(text: str) -> str:
    first = next((ln.strip() for ln in text.splitlines() if ln.strip()), "")
    if first.startswith("dim,") or first == "":
        return "diagram"
    if first.startswith("t,value"):
        return "landscape"
    if first.startswith("{"):
        rec = json.loads(first)
        if "x" in rec and "y" in rec:
            return "trace"
        if "ablation" in rec:
            return "results"
    raise ValidationError("unrecognised plot input: expected a diagram, landscape, "
                          "trace or results file")


def cmd_plot(args) -> int:
    text = _require(args.input, "plot input").read_text(encoding="utf-8")
    try:
        kind = _input_kind(text)
    except json.JSONDecodeError:
        raise ValidationError("unrecognised plot input: malformed JSON lines") from None
    cfg = load_config(args.config and _require(args.config, "config file"))
    if kind == "diagram":
        svg = diagram_svg(parse_diagram(text).pairs(1), cfg.eps_max)
    elif kind == "landscape":
        ls: Landscape = parse_landscape(text)
        svg = landscape_svg(ls.grid, ls.values)
    elif kind == "trace":
        recs = [json.loads(ln) for ln in text.splitlines() if ln.strip()]
        pts = [(r["x"], r["y"]) for r in recs]
        circles = [tuple(b) for r in recs for b in r.get("blacklist", [])]
        world = load_world(_require(args.world, "world file")) if args.world else None
        svg = trajectory_svg(pts, circles, None if world is None else world.blocked,
                             0.5 if world is None else world.resolution)
    else:
        recs = [json.loads(ln) for ln in text.splitlines() if ln.strip()]
        summ = [r for r in recs if r.get("summary")]
        svg = bar_svg([r["ablation"] for r in summ], [r["SPL"] for r in summ], "SPL (%)")
    Path(args.output).write_text(svg, encoding="utf-8")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="topomem", description="Temporal memory and topological loop closure "
                                             "for training-free navigation.")
    sub = p.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run one episode and print its record")
    r.add_argument("--world", required=True)
    r.add_argument("--config")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--ablation", choices=ABLATIONS, default="full")
    r.add_argument("--trace", help="write per-step JSON lines here")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="run worlds x seeds x ablations")
    s.add_argument("--worlds", required=True, help="directory of world files")
    s.add_argument("--config")
    s.add_argument("--seeds", default="0-9", help="e.g. 0-9 or 1,3,5")
    s.add_argument("--ablations", default=",".join(ABLATIONS))
    s.add_argument("--out", help="results file (default: stdout)")
    s.set_defaults(func=cmd_sweep)

    c = sub.add_parser("compute-pd", help="filtered dim-1 diagram of a trajectory file")
    c.add_argument("--trajectory", required=True)
    c.add_argument("--config")
    c.add_argument("--out")
    c.set_defaults(func=cmd_compute_pd)

    d = sub.add_parser("compare-diagrams", help="distances between two diagram files")
    d.add_argument("a")
    d.add_argument("b")
    d.add_argument("--config")
    d.set_defaults(func=cmd_compare)

    ls = sub.add_parser("landscape", help="sample the landscape of a diagram file")
    ls.add_argument("--diagram", required=True)
    ls.add_argument("--config")
    ls.add_argument("--out")
    ls.set_defaults(func=cmd_landscape)

    pl = sub.add_parser("plot", help="render a diagram, landscape, trace or results file as SVG")
    pl.add_argument("--input", required=True)
    pl.add_argument("--output", required=True)
    pl.add_argument("--world", help="draw the trace over this world's walls")
    pl.add_argument("--config")
    pl.set_defaults(func=cmd_plot)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"topomem {args.verb}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except _Incomplete as exc:
        print(f"topomem {args.verb}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # anything else is a runtime failure
        print(f"topomem {args.verb}: runtime error: {exc!r}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
