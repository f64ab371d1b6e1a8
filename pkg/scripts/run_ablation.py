"""Run the bundled-suite ablation (20 worlds x 10 seeds x 4 ablations) and print the table."""
import argparse
import time
from pathlib import Path

from topomem.core import load_config
from topomem.navsim.sweep import BUNDLED_WORLDS, dumps_records, load_suite, sweep


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--worlds", default=str(BUNDLED_WORLDS))
    ap.add_argument("--config", default=None)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--out", default="ablation_results.jsonl")
    args = ap.parse_args()
    t0 = time.perf_counter()
    records, summary = sweep(load_suite(args.worlds), load_config(args.config), range(args.seeds))
    Path(args.out).write_text(dumps_records(records + summary), encoding="utf-8")
    print(f"{'ablation':10s} {'SR':>6s} {'SPL':>6s} {'path':>6s} {'revisits':>8s} {'loops':>6s}")
    for s in summary:
        print(f"{s['ablation']:10s} {s['SR']:6.2f} {s['SPL']:6.2f} {s['mean_path_length']:6.2f}"
              f" {s['mean_revisited_cells']:8.2f} {s['mean_loop_detections']:6.2f}")
    print(f"{len(records)} episodes in {time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    main()
