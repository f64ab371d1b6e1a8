"""Ablation sweeps over a directory of worlds, with line-delimited JSON records."""
from __future__ import annotations

import dataclasses
import json
from pathlib import Path
from typing import Iterable

from ..core import Config, ValidationError
from .metrics import compute_metrics
from .sim import ABLATIONS, EpisodeResult, run_episode
from .world import GridWorld, load_world

BUNDLED_WORLDS = Path(__file__).resolve().parents[1] / "worlds"


def world_paths(directory: str | Path) -> list[Path]:
    d = Path(directory)
    if not d.is_dir():
        raise ValidationError(f"world directory not found: {d}")
    paths = sorted(d.glob("*.txt"))
    if not paths:
        raise ValidationError(f"no world files (*.txt) in {d}")
    return paths


def load_suite(directory: str | Path = BUNDLED_WORLDS) -> list[GridWorld]:
    return [load_world(p) for p in world_paths(directory)]


def episode_record(world: GridWorld, seed: int, ablation: str, res: EpisodeResult) -> dict:
    rec = dataclasses.asdict(res)
    rec.update(world=world.name, seed=int(seed), ablation=ablation)
    return rec


def summarize(records: list[dict], ablations: Iterable[str]) -> list[dict]:
    """Per-ablation SR/SPL (percent) plus mean path length and revisits."""
    out = []
    for ab in ablations:
        rows = [r for r in records if r["ablation"] == ab]
        if not rows:
            continue
        results = [EpisodeResult(r["success"], r["path_length"], r["shortest_length"], r["steps"],
                                 r["loop_detections"], r["revisited_cells"], r["collisions"])
                   for r in rows]
        sr, spl = compute_metrics(results)
        n = len(rows)
        out.append({"summary": True, "ablation": ab, "episodes": n, "SR": sr, "SPL": spl,
                    "mean_path_length": sum(r["path_length"] for r in rows) / n,
                    "mean_revisited_cells": sum(r["revisited_cells"] for r in rows) / n,
                    "mean_loop_detections": sum(r["loop_detections"] for r in rows) / n})
    return out


def sweep(worlds: list[GridWorld], cfg: Config, seeds: Iterable[int],
          ablations: Iterable[str] = ABLATIONS, progress=None) -> tuple[list[dict], list[dict]]:
    """Run the full world x seed x ablation product in a fixed order."""
    ablations = list(ablations)
    for ab in ablations:
        if ab not in ABLATIONS:
            raise ValidationError(f"unknown ablation {ab!r}; expected one of {ABLATIONS}")
    seeds = list(seeds)
    records = []
    for world in worlds:
        for seed in seeds:
            for ab in ablations:
                records.append(episode_record(world, seed, ab, run_episode(world, cfg, seed, ab)))
                if progress is not None:
                    progress(records[-1])
    return records, summarize(records, ablations)


def dumps_records(records: list[dict]) -> str:
    return "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)
