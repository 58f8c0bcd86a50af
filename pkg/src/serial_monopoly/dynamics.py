"""Serial-monopoly engine: pent-up demand evolving under daily revenue maximization."""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path
from typing import Callable, Literal, Optional

from .curve import CurveError, DemandCurve, revenue_maximizer

Mode = Literal["exact", "float"]

# float-mode pruning / tie tolerance (relative)
FLOAT_TOL = 1e-12

# value_fn(D, pent_after, price, quantity) -> welfare of the units sold
ValueFn = Callable[[DemandCurve, DemandCurve, object, object], object]


class RevenueGapWarning(UserWarning):
    """Monopoly revenue does not exceed equilibrium revenue; sandwich bounds need not hold."""


@dataclass(frozen=True)
class MarketState:
    t: int
    pent: DemandCurve
    daily: DemandCurve
    supply: object

    def demand(self) -> DemandCurve:
        return self.pent + self.daily


@dataclass(frozen=True)
class StepRecord:
    t: int
    price: object
    quantity: object
    revenue: object
    welfare_delta: object
    breakpoints: int


@dataclass
class Trace:
    records: list[StepRecord]
    final_state: MarketState
    mode: Mode = "exact"
    # pent-up curves Z^0..Z^T, kept on request for probing D^t
    pents: Optional[list[DemandCurve]] = None

    def __len__(self) -> int:
        return len(self.records)

    @property
    def prices(self) -> list:
        return [r.price for r in self.records]

    @property
    def quantities(self) -> list:
        return [r.quantity for r in self.records]

    def demand_at(self, t: int, p):
        """``D^t(p) = Z^{t-1}(p) + Q(p)`` for a recorded step ``t``."""
        if self.pents is None:
            raise ValueError("trace was run without keep_curves=True")
        if not 1 <= t <= len(self.records):
            raise IndexError(f"step {t} outside 1..{len(self.records)}")
        return self.pents[t - 1](p) + self.final_state.daily(p)

    def with_record(self, t: int, **changes) -> "Trace":
        """Copy with step ``t`` altered (used to build corrupted traces)."""
        records = list(self.records)
        records[t - 1] = replace(records[t - 1], **changes)
        return Trace(records, self.final_state, self.mode, self.pents)


def init(Q: DemandCurve, s, *, strict: bool = True, check_gap: bool = True) -> MarketState:
    """Day-zero state with no pent-up demand."""
    if not Q:
        raise CurveError("daily demand is the zero curve")
    if not s > 0:
        raise CurveError("supply must be positive")
    if strict and not Q.is_strictly_decreasing():
        raise CurveError("daily demand must be strictly decreasing on its support")
    if check_gap:
        from .analytics import market_points

        pts = market_points(Q if Q.is_exact else Q.to_exact(), Fraction(s))
        if not pts.revenue_gap:
            warnings.warn(
                f"monopoly revenue {pts.REV_mon} does not exceed equilibrium revenue {pts.REV_eq}",
                RevenueGapWarning,
                stacklevel=2,
            )
    return MarketState(0, DemandCurve.zero(), Q, s)


def _default_value(D: DemandCurve, pent: DemandCurve, price, quantity):
    return D.welfare_above(0) - pent.welfare_above(0)


def step(
    state: MarketState,
    *,
    tol: float = 0.0,
    value_fn: ValueFn | None = None,
    zero_revenue: str = "error",
) -> tuple[MarketState, StepRecord]:
    D = state.pent + state.daily
    p, q, rev = revenue_maximizer(D, state.supply, tie_tol=tol, zero_revenue=zero_revenue)
    pent = D.residual_after_sale(p, q, tol=tol)
    welfare = (value_fn or _default_value)(D, pent, p, q)
    t = state.t + 1
    return MarketState(t, pent, state.daily, state.supply), StepRecord(t, p, q, rev, welfare, len(pent))


def run(
    Q: DemandCurve,
    s,
    T: int,
    mode: Mode = "exact",
    *,
    keep_curves: bool = False,
    value_fn: ValueFn | None = None,
    zero_revenue: str = "error",
    strict: bool = True,
    check_gap: bool = True,
) -> Trace:
    """``T`` days of serial monopoly starting from no pent-up demand.

    Float mode runs the same algorithm in double precision with breakpoint
    pruning and tie detection at a relative tolerance of ``FLOAT_TOL``.
    """
    if T < 1:
        raise ValueError("horizon must be at least 1")
    if mode not in ("exact", "float"):
        raise ValueError(f"unknown mode {mode!r}")
    state = init(Q, s, strict=strict, check_gap=check_gap)
    tol = 0.0
    if mode == "float":
        state = MarketState(0, DemandCurve.zero(), Q.to_float(), float(s))
        tol = FLOAT_TOL
    else:
        state = MarketState(0, DemandCurve.zero(), Q.to_exact(), Fraction(s))
    pents = [state.pent] if keep_curves else None
    records = []
    for _ in range(T):
        state, rec = step(state, tol=tol, value_fn=value_fn, zero_revenue=zero_revenue)
        records.append(rec)
        if pents is not None:
            pents.append(state.pent)
    return Trace(records, state, mode, pents)


def demand_at(state: MarketState, p):
    """Total demand the next monopolist will face at price ``p``."""
    return state.pent(p) + state.daily(p)


# ---- CSV output --------------------------------------------------------------

CSV_HEADER = ["t", "price", "quantity", "revenue", "welfare_delta", "breakpoints"]


def _decimal(x) -> str:
    return format(float(x), ".17g")


def trace_rows(trace: Trace, exact: bool = False) -> list[list[str]]:
    fmt = str if exact else _decimal
    return [
        [str(r.t), fmt(r.price), fmt(r.quantity), fmt(r.revenue), fmt(r.welfare_delta), str(r.breakpoints)]
        for r in trace.records
    ]


def trace_csv(trace: Trace, exact: bool = False) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    writer.writerows(trace_rows(trace, exact))
    return buf.getvalue()


def write_trace_csv(trace: Trace, path) -> list[Path]:
    """Write ``path`` (decimal) and, for exact traces, ``<stem>.exact.csv``."""
    path = Path(path)
    path.write_text(trace_csv(trace))
    written = [path]
    if trace.mode == "exact":
        exact_path = path.with_name(path.stem + ".exact.csv")
        exact_path.write_text(trace_csv(trace, exact=True))
        written.append(exact_path)
    return written
