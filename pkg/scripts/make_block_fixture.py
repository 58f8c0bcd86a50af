"""Generate the synthetic 50-block bid fixture used by the replay tests.

Bids look roughly like fee-market data: gas limits from a few common sizes
and prices drawn log-normally around a drifting level, with some decimal
prices to exercise exact parsing.
"""

import argparse
import json
import math
import random
from pathlib import Path

GAS_SIZES = [21_000, 46_000, 65_000, 120_000, 180_000, 250_000]


def make_blocks(n_blocks: int = 50, seed: int = 7, first_block: int = 1000):
    rng = random.Random(seed)
    level = 30.0
    blocks = []
    for k in range(n_blocks):
        level *= math.exp(rng.gauss(0, 0.08))
        bids = []
        for _ in range(rng.randint(15, 45)):
            price = level * math.exp(rng.gauss(0, 0.35))
            # quarter-gwei ticks, written as decimal strings
            price = f"{round(price * 4) / 4:.2f}"
            bids.append([price, rng.choice(GAS_SIZES)])
        blocks.append({"block": first_block + k, "bids": bids})
    return blocks


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "tests" / "data" / "blocks50.jsonl"))
    ap.add_argument("--blocks", type=int, default=50)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    with open(args.out, "w") as fh:
        for block in make_blocks(args.blocks, args.seed):
            fh.write(json.dumps(block) + "\n")
    print(f"wrote {args.blocks} blocks to {args.out}")


if __name__ == "__main__":
    main()
