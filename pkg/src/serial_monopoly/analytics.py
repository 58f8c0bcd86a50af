"""Characteristic market points: equilibrium, monopoly and serial monopoly."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Optional

from .curve import CurveError, DemandCurve, revenue_maximizer


@dataclass(frozen=True)
class MarketPoints:
    p_eq: Fraction
    q_eq: Fraction
    p_mon: Fraction
    q_mon: Fraction
    p_ser: Fraction
    q_ser: Fraction
    SW_eq: Fraction
    SW_mon: Fraction
    SW_ser: Fraction
    REV_eq: Fraction
    REV_mon: Fraction
    supply: Fraction
    H: Optional[Fraction]  # None when P(s) = 0, i.e. the gap is infinite

    @property
    def H_infinite(self) -> bool:
        return self.H is None

    @property
    def revenue_gap(self) -> bool:
        """Whether monopoly revenue strictly exceeds equilibrium revenue."""
        return self.REV_mon > self.REV_eq

    def to_dict(self) -> dict:
        exact, decimal = {}, {}
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "H" and value is None:
                exact["H"], decimal["H"] = "inf", math.inf
                continue
            exact[f.name] = str(value)
            decimal[f.name] = float(value)
        exact["H_infinite"] = self.H_infinite
        exact["revenue_gap"] = self.revenue_gap
        exact["decimal"] = decimal
        return exact


def equilibrium_price(Q: DemandCurve, s):
    """Largest price at which demand covers supply; zero under excess supply."""
    if Q(0) < s:
        return s - s
    return Q.inverse(s)


def serial_price(Q: DemandCurve, p_mon, q_mon, s):
    """``p_mon * q_mon / s``, raised to the largest price with the same demand."""
    base = p_mon * q_mon / s
    level = Q(base)
    if level <= 0:
        return base
    return max(base, Q.inverse(level))


def market_points(Q: DemandCurve, s) -> MarketPoints:
    if not Q:
        raise CurveError("degenerate demand: zero curve")
    if not s > 0:
        raise CurveError("supply must be positive")
    p_eq = equilibrium_price(Q, s)
    q_eq = min(s, Q(p_eq))
    p_mon, q_mon, rev_mon = revenue_maximizer(Q, s)
    p_ser = serial_price(Q, p_mon, q_mon, s)
    q_ser = Q(p_ser)
    p_top = Q.p_max
    return MarketPoints(
        p_eq=p_eq,
        q_eq=q_eq,
        p_mon=p_mon,
        q_mon=q_mon,
        p_ser=p_ser,
        q_ser=q_ser,
        SW_eq=Q.welfare_above(p_eq),
        SW_mon=Q.welfare_above(p_mon),
        SW_ser=Q.welfare_above(p_ser),
        REV_eq=p_eq * q_eq,
        REV_mon=rev_mon,
        supply=s,
        H=(p_top / p_eq) if p_eq > 0 else None,
    )


def welfare_ratio(points: MarketPoints):
    if not points.SW_eq > 0:
        raise CurveError("equilibrium welfare is zero")
    return points.SW_ser / points.SW_eq


def _to_decimal(x: Fraction) -> Decimal:
    x = Fraction(x)
    return Decimal(x.numerator) / Decimal(x.denominator)


def theoretical_delta_bound(Q: DemandCurve, s, p_star, points: MarketPoints | None = None) -> int:
    """Recurrence gap guaranteeing a price at or below ``p_star``.

    With ``p = (p_star + p_ser)/2`` and ``d0 = s / (Q(p) - Q(p_star))`` this is
    the smallest integer ``d`` with
    ``ln d > ln(1 + d0) + 2 (Q(p_ser) - Q(p_mon)) p_mon / (s (p_star - p_ser))``.
    """
    pts = points or market_points(Q, s)
    if not p_star > pts.p_ser:
        raise CurveError(f"p_star={p_star} must exceed p_ser={pts.p_ser}")
    mid = (p_star + pts.p_ser) / 2
    drop = Q(mid) - Q(p_star)
    if not drop > 0:
        raise CurveError("demand is flat between (p_star + p_ser)/2 and p_star")
    d0 = Fraction(s) / drop
    exponent = 2 * (Q(pts.p_ser) - Q(pts.p_mon)) * pts.p_mon / (s * (p_star - pts.p_ser))
    with localcontext() as ctx:
        ctx.prec = 60
        threshold = (1 + _to_decimal(d0)) * _to_decimal(exponent).exp()
        return int(threshold.to_integral_value(rounding="ROUND_FLOOR")) + 1
