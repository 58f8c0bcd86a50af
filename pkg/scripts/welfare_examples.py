"""Welfare ratio SW_ser / SW_eq for the worked demand families."""

from fractions import Fraction

from serial_monopoly.analytics import market_points, welfare_ratio
from serial_monopoly.families import DemandFamilySpec

CASES = [
    ("uniform", DemandFamilySpec("uniform", {}), 1),
    ("stepped M=10", DemandFamilySpec("stepped", {"M": 10, "eps": "1e-6"}), 10),
    ("stepped M=100", DemandFamilySpec("stepped", {"M": 100, "eps": "1e-6"}), 100),
    ("stepped M=1000", DemandFamilySpec("stepped", {"M": 1000, "eps": "1e-6"}), 1000),
    ("equal revenue H=e^2", DemandFamilySpec("equal_revenue", {"log_H": 2}), 1),
    ("equal revenue H=e^4", DemandFamilySpec("equal_revenue", {"log_H": 4}), 1),
]


def main():
    print(f"{'instance':<22} {'ratio':>10} {'SW_ser':>12} {'SW_eq':>12} {'SW_mon':>12}")
    for name, spec, s in CASES:
        pts = market_points(spec.build(10_000), Fraction(s))
        r = welfare_ratio(pts)
        print(f"{name:<22} {float(r):>10.6f} {float(pts.SW_ser):>12.4f} "
              f"{float(pts.SW_eq):>12.4f} {float(pts.SW_mon):>12.4f}")


if __name__ == "__main__":
    main()
