"""Strategic bidders: time-invariant bid shading, declared demand, regret.

Bidders are infinitesimal price takers who bid once at birth.  A bidder
born at ``t`` with value ``v`` and bid ``b`` pays the first price ``p^{t'} <= b``
with ``t' >= t`` and gets ``v - p^{t'}``, or nothing if no such step exists
within the horizon.
"""

from __future__ import annotations

import csv
import io
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Literal, Optional, Sequence

from .analytics import equilibrium_price
from .curve import CurveError, DemandCurve, canonicalize, to_fraction
from .dynamics import Mode, Trace, run


@dataclass(frozen=True)
class ManipulationFn:
    """Monotone bid map ``v -> m(v)`` with ``m(v) <= v``.

    ``table`` knots are joined linearly starting at ``(0, 0)`` and ``m`` is
    constant after the last knot; ``clamp(c)`` is the table ``[(0,0), (c,c)]``.
    """

    kind: Literal["identity", "clamp", "table"]
    knots: tuple[tuple[Fraction, Fraction], ...] = ()

    @classmethod
    def identity(cls) -> "ManipulationFn":
        return cls("identity")

    @classmethod
    def clamp(cls, threshold) -> "ManipulationFn":
        c = to_fraction(threshold)
        if c < 0:
            raise CurveError("clamp threshold must be non-negative")
        knots = ((Fraction(0), Fraction(0)),) if c == 0 else ((Fraction(0), Fraction(0)), (c, c))
        return cls("clamp", knots)

    @classmethod
    def table(cls, knots: Iterable[tuple]) -> "ManipulationFn":
        pts = tuple((to_fraction(v), to_fraction(b)) for v, b in knots)
        if not pts or pts[0] != (0, 0):
            raise CurveError("table knots must start at (0, 0)")
        for (v0, b0), (v1, b1) in zip(pts, pts[1:]):
            if not v1 > v0:
                raise CurveError("table knot values must be strictly increasing")
            if b1 < b0:
                raise CurveError(f"manipulation is not monotone between v={v0} and v={v1}")
        for v, b in pts:
            if b > v or b < 0:
                raise CurveError(f"bid {b} for value {v} outside [0, v]")
        return cls("table", pts)

    @property
    def threshold(self):
        return self.knots[-1][1] if self.kind == "clamp" else None

    def __call__(self, v):
        if self.kind == "identity":
            return v
        vs = [k[0] for k in self.knots]
        i = bisect_right(vs, v)
        if i >= len(vs):
            return self.knots[-1][1]
        (v0, b0), (v1, b1) = self.knots[i - 1], self.knots[i]
        return b0 + (b1 - b0) * (v - v0) / (v1 - v0)

    # inverse images, used for true-value accounting
    def lowest_value(self, b):
        """``min{v : m(v) >= b}``, or ``None`` when no value bids that high."""
        if self.kind == "identity":
            return b
        if b <= 0:
            return Fraction(0)
        for (v0, b0), (v1, b1) in zip(self.knots, self.knots[1:]):
            if b1 >= b:
                return v0 + (b - b0) * (v1 - v0) / (b1 - b0)
        return None

    def highest_value(self, b):
        """``max{v : m(v) <= b}``, or ``None`` when unbounded."""
        if self.kind == "identity":
            return b
        last = None
        for i, (v, kb) in enumerate(self.knots):
            if kb <= b:
                last = i
        if last is None:
            return None
        if last == len(self.knots) - 1:
            return None
        (v0, b0), (v1, b1) = self.knots[last], self.knots[last + 1]
        return v0 + (b - b0) * (v1 - v0) / (b1 - b0)

    def levels(self) -> list:
        return sorted({b for _, b in self.knots})


def induced_demand(Q: DemandCurve, m: ManipulationFn) -> DemandCurve:
    """Declared demand ``Q~(b) = Q({v : m(v) >= b})``."""
    if m.kind == "identity":
        return Q
    events = [(x, y) for x, y in Q.points]
    qx = {x for x, _ in events}
    for v, _ in m.knots:
        if v not in qx and v <= Q.p_max:
            events.append((v, Q(v)))
    events.sort(key=lambda e: e[0])  # stable: keeps Q's own vertical drops ordered
    mapped = [(m(v), y) for v, y in events]
    if mapped[-1][1] != 0:
        mapped.append((mapped[-1][0], Fraction(0)))
    # keep only first and last breakpoint of each equal-price run
    pts = []
    for i, (b, y) in enumerate(mapped):
        if 0 < i < len(mapped) - 1 and mapped[i - 1][0] == b == mapped[i + 1][0]:
            continue
        pts.append((b, y))
    return DemandCurve(tuple(canonicalize(pts)))


def true_value_fn(Q: DemandCurve, m: ManipulationFn):
    """Welfare hook valuing sold units at their bidders' true values.

    A declared bid off any flat part of ``m`` reveals its value uniquely; a
    bid at a flat level ``b`` pools all values in ``[v_lo, v_hi]`` and is valued
    at their average.  Rationed atoms are assumed drawn proportionally, which
    keeps that average the same for every cohort.
    """
    if m.kind == "identity":
        return None
    levels = m.levels()

    def atom_value(b):
        lo = m.lowest_value(b)
        hi = m.highest_value(b)
        if lo is None:
            return b
        hi_mass = Q(hi) if hi is not None else 0
        hi_welfare = Q.welfare_above(hi) if hi is not None else 0
        mass = Q(lo) - hi_mass
        if mass <= 0:
            return lo
        return (Q.welfare_above(lo) - hi_welfare) / mass

    def value_fn(D: DemandCurve, pent: DemandCurve, price, quantity):
        # S(b) = units sold with bid >= b
        sold = [(price, quantity), (price, D.right_limit(price))]
        sold += [(x, y) for x, y in D.points if x > price]
        if sold[-1][1] != 0:
            sold.append((sold[-1][0], 0))
        total = 0
        for (x0, y0), (x1, y1) in zip(sold, sold[1:]):
            if y0 == y1:
                continue
            if x0 == x1:
                total += (y0 - y1) * atom_value(x0)
                continue
            density = (y0 - y1) / (x1 - x0)
            cuts = [x0] + [b for b in levels if x0 < b < x1] + [x1]
            for a, c in zip(cuts, cuts[1:]):
                va = m.highest_value(a)
                vc = m.lowest_value(c)
                total += density * (c - a) * (va + vc) / 2
        return total

    return value_fn


def run_strategic(Q: DemandCurve, s, m: ManipulationFn, T: int, mode: Mode = "exact", **kwargs) -> Trace:
    """Serial monopoly on the declared demand, welfare counted at true values.

    When no price yields positive declared revenue the leader sells at the
    market-clearing price zero.
    """
    declared = induced_demand(Q, m)
    return run(
        declared,
        s,
        T,
        mode,
        value_fn=true_value_fn(Q, m),
        zero_revenue="clear",
        strict=False,
        check_gap=False,
        **kwargs,
    )


@dataclass(frozen=True)
class PriceTrajectory:
    prices: tuple[tuple[int, object], ...]

    def __post_init__(self):
        ts = [t for t, _ in self.prices]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("trajectory steps must be strictly increasing")

    @classmethod
    def from_prices(cls, prices: Sequence, start: int = 1) -> "PriceTrajectory":
        return cls(tuple((start + i, p) for i, p in enumerate(prices)))

    @classmethod
    def from_trace(cls, trace: Trace) -> "PriceTrajectory":
        return cls(tuple((r.t, r.price) for r in trace.records))

    def suffix(self, birth_t: int) -> list:
        return [(t, p) for t, p in self.prices if t >= birth_t]


def outcome(trajectory: PriceTrajectory, birth_t: int, v, bid):
    """``(service step or None, utility)`` of bidding ``bid`` with value ``v``."""
    for t, p in trajectory.suffix(birth_t):
        if p <= bid:
            return t, v - p
    return None, v - v


def best_response(trajectory: PriceTrajectory, birth_t: int, v):
    """Utility-maximizing single bid for a bidder born at ``birth_t``.

    Bidding a running-minimum price ``pi`` buys at its first occurrence, so
    the candidates are the strict running minima from ``birth_t`` on.  Ties
    go to the lowest bid.  If no price is below ``v`` the bidder abstains by
    bidding under every price.
    """
    future = trajectory.suffix(birth_t)
    if not future:
        raise ValueError(f"trajectory has no prices at or after step {birth_t}")
    best_bid, best_u = None, None
    running = None
    for _, p in future:
        if running is None or p < running:
            running = p
            u = v - p
            if best_u is None or u >= best_u:
                best_bid, best_u = p, u
    if best_u <= 0:
        return v - v, v - v
    return best_bid, best_u


@dataclass
class RegretRow:
    value: object
    equilibrium_bid: object
    equilibrium_utility: object
    best_bid: object
    best_utility: object
    regret: object
    birth: int


@dataclass
class GapResult:
    max_regret: object
    witness: Optional[RegretRow]
    rows: list[RegretRow]
    trace: Trace
    horizon_truncated: bool = True

    def regret_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["value", "equilibrium_bid", "equilibrium_utility", "best_bid", "best_utility", "regret"])
        for r in self.rows:
            w.writerow([str(r.value), str(r.equilibrium_bid), str(r.equilibrium_utility),
                        str(r.best_bid), str(r.best_utility), str(r.regret)])
        return buf.getvalue()


def equilibrium_gap(
    Q: DemandCurve,
    s,
    horizon: int,
    value_grid: Sequence,
    m: ManipulationFn | None = None,
    births: Sequence[int] | None = None,
) -> GapResult:
    """Largest utility a bidder could gain by deviating from ``m``.

    Everyone else bids by ``m`` (default ``clamp(p_eq)``).  Regret is the gap
    between the best single bid and ``m(v)`` on the finite trajectory, over
    every value in ``value_grid`` and every birth step (all of them by
    default).  ``rows`` holds the worst birth step per value.
    """
    if m is None:
        m = ManipulationFn.clamp(equilibrium_price(Q, s))
    trace = run_strategic(Q, s, m, horizon)
    prices = trace.prices
    n = len(prices)
    births = list(births) if births is not None else list(range(1, n + 1))
    # suffix minima give the best attainable price from each birth step
    suffix_min = [None] * (n + 1)
    for i in range(n - 1, -1, -1):
        suffix_min[i] = prices[i] if suffix_min[i + 1] is None else min(prices[i], suffix_min[i + 1])

    rows, worst = [], None
    for v in value_grid:
        bid = m(v)
        # next_served[i]: first index >= i with price <= bid
        next_served = [None] * (n + 1)
        for i in range(n - 1, -1, -1):
            next_served[i] = i if prices[i] <= bid else next_served[i + 1]
        row = None
        for b in births:
            i = b - 1
            j = next_served[i]
            eq_u = v - prices[j] if j is not None else v - v
            floor = suffix_min[i]
            best_u = v - floor if v > floor else v - v
            best_bid = floor if v > floor else v - v
            regret = best_u - eq_u
            if row is None or regret > row.regret:
                row = RegretRow(v, bid, eq_u, best_bid, best_u, regret, b)
        rows.append(row)
        if worst is None or row.regret > worst.regret:
            worst = row
    max_regret = worst.regret if worst else Fraction(0)
    return GapResult(max_regret, worst, rows, trace)


def is_flat(trace: Trace) -> bool:
    prices = trace.prices
    return all(p == prices[0] for p in prices)


def uniqueness_evidence(Q: DemandCurve, s, c, horizon: int, value_grid: Sequence) -> dict:
    """Which equilibrium condition ``clamp(c)`` with ``c != p_eq`` breaks.

    ``fluctuates``: prices are not constant; ``regret``: some bidder gains by
    deviating; ``over_demand``: a leader had to sell at a price where declared
    demand exceeds supply, which monopoly pricing on an equilibrium never does.
    """
    m = ManipulationFn.clamp(c)
    gap = equilibrium_gap(Q, s, horizon, value_grid, m)
    probe = run_strategic(Q, s, m, horizon, keep_curves=True)
    over = any(probe.demand_at(r.t, r.price) > r.quantity for r in probe.records)
    return {
        "fluctuates": not is_flat(gap.trace),
        "regret": gap.max_regret > 0,
        "over_demand": over,
        "max_regret": gap.max_regret,
    }
