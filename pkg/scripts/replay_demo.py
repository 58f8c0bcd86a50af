"""Replay a block-bid file through the serial monopoly and compare to a baseline.

Without ``--paid-prices`` the baseline charges each block its own
market-clearing price.
"""

import argparse
from fractions import Fraction
from pathlib import Path

from serial_monopoly.curve import to_fraction
from serial_monopoly.ingest import conservation_holds, parse_blocks, replay_with_baseline

DEFAULT_DATA = Path(__file__).resolve().parents[1] / "tests" / "data" / "blocks50.jsonl"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("data", nargs="?", default=str(DEFAULT_DATA))
    ap.add_argument("--supply", default="1500000")
    ap.add_argument("--paid-prices")
    args = ap.parse_args()

    batches = parse_blocks(args.data)
    paid = None
    if args.paid_prices:
        paid = [to_fraction(x) for x in Path(args.paid_prices).read_text().split()]
    _, report = replay_with_baseline(batches, Fraction(args.supply), paid)
    print(f"blocks: {len(batches)}  rationed: {sum(b.rationed for b in report.per_block)}")
    print(f"conservation: {conservation_holds(batches, report)}")
    print(f"revenue  serial {float(report.serial_revenue):.6g}  baseline {float(report.baseline_revenue):.6g}"
          f"  ratio {float(report.revenue_ratio):.4f}")
    print(f"welfare  serial {float(report.serial_welfare):.6g}  baseline {float(report.baseline_welfare):.6g}"
          f"  ratio {float(report.welfare_ratio):.4f}")


if __name__ == "__main__":
    main()
