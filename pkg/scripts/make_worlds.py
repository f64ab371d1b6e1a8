"""Regenerate the bundled 20-world suite (five worlds of each kind)."""
import argparse
from pathlib import Path

from topomem.navsim.generate import KINDS, generate_world
from topomem.navsim.world import save_world

SUITE_SEEDS = range(100, 105)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "src/topomem/worlds"))
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for kind in KINDS:
        for seed in SUITE_SEEDS:
            world, goal_seed = generate_world(kind, seed)
            save_world(world, out / f"{world.name}.txt", goal_seed)
            print(world.name, world.shape)


if __name__ == "__main__":
    main()
