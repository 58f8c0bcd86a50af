"""Long float run on uniform demand: price path CSV plus windowed extremes.

Reproduces the oscillation picture for Q(p) = 1 - p (supply 1 by default):
prices descend towards p_ser = 1/4 and periodically jump back to 1/2.
"""

import argparse
import json
import time
from fractions import Fraction
from pathlib import Path

from serial_monopoly.analytics import market_points, theoretical_delta_bound
from serial_monopoly.curve import DemandCurve
from serial_monopoly.dynamics import run, write_trace_csv
from serial_monopoly.verify import count_jumps, empirical_delta, estimate_extremes


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--horizon", type=int, default=100_000)
    ap.add_argument("--supply", default="1")
    ap.add_argument("--out", default="out/uniform_long")
    args = ap.parse_args()

    Q = DemandCurve.linear(1, 1)
    s = Fraction(args.supply)
    pts = market_points(Q, s)
    start = time.perf_counter()
    trace = run(Q, s, args.horizon, "float")
    elapsed = time.perf_counter() - start

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_trace_csv(trace, out / "trace.csv")
    lo, hi = estimate_extremes(trace, 0.5)
    p_star = (pts.p_ser + pts.p_mon) / 2
    summary = {
        "horizon": args.horizon,
        "seconds": round(elapsed, 2),
        "trailing_half_min": lo,
        "trailing_half_max": hi,
        "p_ser": float(pts.p_ser),
        "p_mon": float(pts.p_mon),
        "jumps": count_jumps(trace, pts),
        "empirical_delta": empirical_delta(trace, p_star).max_gap,
        "delta_bound": theoretical_delta_bound(Q, s, p_star, pts),
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary, indent=2))


if __name__ == "__main__":
    main()
