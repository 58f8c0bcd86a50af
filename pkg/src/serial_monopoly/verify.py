"""Executable checks of the proven dynamics properties on finite traces.

Exact traces are checked with exact comparisons.  Float traces use
``FLOAT_CHECK_TOL`` (relative).  Limit statements are only ever reported as
windowed estimates.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

from .analytics import MarketPoints, market_points, theoretical_delta_bound, welfare_ratio
from .curve import CurveError, DemandCurve
from .dynamics import Mode, Trace, run

FLOAT_CHECK_TOL = 1e-9

PASS, FAIL, SKIPPED = "pass", "fail", "skipped"


@dataclass
class CheckResult:
    name: str
    status: str
    witness: Optional[dict] = None
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.status == PASS


def _jsonable(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


@dataclass
class VerifyReport:
    checks: list[CheckResult]
    horizon: int
    mode: Mode
    evidence: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(c.status != FAIL for c in self.checks)

    def to_json(self) -> str:
        payload = {
            "horizon": self.horizon,
            "mode": self.mode,
            "ok": self.ok,
            "checks": [_jsonable(asdict(c)) for c in self.checks],
            "evidence": _jsonable(self.evidence),
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def _le(a, b, exact: bool) -> bool:
    if exact:
        return a <= b
    return a <= b + FLOAT_CHECK_TOL * max(abs(b), 1)


def _eq(a, b, exact: bool) -> bool:
    if exact:
        return a == b
    return abs(a - b) <= FLOAT_CHECK_TOL * max(abs(b), 1)


def _exact(trace: Trace) -> bool:
    return trace.mode == "exact"


def check_sandwich(trace: Trace, points: MarketPoints) -> CheckResult:
    name = "sandwich"
    if not points.revenue_gap:
        return CheckResult(name, SKIPPED, detail="REV_mon <= REV_eq")
    exact = _exact(trace)
    lo, hi = (points.p_ser, points.p_mon) if exact else (float(points.p_ser), float(points.p_mon))
    for r in trace.records:
        if not (_le(lo, r.price, exact) and _le(r.price, hi, exact)):
            return CheckResult(name, FAIL, {"t": r.t, "price": r.price, "p_ser": lo, "p_mon": hi})
    return CheckResult(name, PASS)


def check_descent_or_jump(trace: Trace, points: MarketPoints) -> CheckResult:
    name = "descent_or_jump"
    exact = _exact(trace)
    p_mon = points.p_mon if exact else float(points.p_mon)
    prices = trace.prices
    for i in range(1, len(prices)):
        p, prev = prices[i], prices[i - 1]
        if _eq(p, p_mon, exact):
            continue
        if not p < prev:
            return CheckResult(name, FAIL, {"t": i + 1, "price": p, "previous": prev, "p_mon": p_mon})
    return CheckResult(name, PASS)


def check_conservation(
    trace: Trace,
    points: MarketPoints,
    p_samples: Sequence,
    demand_at: Callable[[int, object], object] | None = None,
) -> CheckResult:
    """Unsupplied demand below ``p_ser`` is conserved as pent-up demand.

    For every recorded ``T`` and sample ``p``:
    ``sum_{t<T} q^t == T*Q(p) - D^T(p)`` and, for ``p < p_ser``,
    ``D^T(p) - D^T(p_ser) == T*(Q(p) - Q(p_ser))``.
    """
    name = "conservation"
    for p in p_samples:
        if p > points.p_ser:
            raise CurveError(f"sample {p} lies above p_ser={points.p_ser}")
    probe = demand_at or trace.demand_at
    Q = trace.final_state.daily
    exact = _exact(trace)
    p_ser = points.p_ser if exact else float(points.p_ser)
    samples = list(p_samples) if exact else [float(p) for p in p_samples]
    sold = 0
    for T in range(1, len(trace) + 1):
        d_ser = probe(T, p_ser)
        for p in samples:
            d = probe(T, p)
            rhs = T * Q(p) - d
            if not _eq(sold, rhs, exact):
                return CheckResult(name, FAIL, {"T": T, "p": p, "sold": sold, "rhs": rhs, "identity": "pent-up"})
            if p < p_ser:
                lhs = d - d_ser
                want = T * (Q(p) - Q(p_ser))
                if not _eq(lhs, want, exact):
                    return CheckResult(name, FAIL, {"T": T, "p": p, "lhs": lhs, "rhs": want, "identity": "below-serial"})
        sold += trace.records[T - 1].quantity
    return CheckResult(name, PASS)


def check_welfare_bound(points: MarketPoints) -> CheckResult:
    name = "welfare_bound"
    if not points.SW_eq > 0:
        return CheckResult(name, SKIPPED, detail="SW_eq = 0")
    ratio = welfare_ratio(points)
    conds = {
        "half": points.SW_ser >= points.SW_eq / 2,
        "above_monopoly": points.SW_ser >= points.SW_mon,
        "above_eq_minus_rev": points.SW_ser >= points.SW_eq - points.REV_mon,
    }
    failed = [k for k, ok in conds.items() if not ok]
    witness = {"ratio": ratio, "SW_ser": points.SW_ser, "SW_eq": points.SW_eq, "failed": failed}
    return CheckResult(name, FAIL if failed else PASS, witness)


def estimate_extremes(trace: Trace, window_fraction: float = 0.5) -> tuple[float, float]:
    """Min and max price over the trailing ``window_fraction`` of the trace."""
    if not 0 < window_fraction <= 1:
        raise ValueError("window_fraction must lie in (0, 1]")
    prices = trace.prices
    n = max(1, math.ceil(len(prices) * window_fraction))
    tail = prices[-n:]
    return min(tail), max(tail)


@dataclass(frozen=True)
class DeltaMeasure:
    """Longest completed gap between visits at or below a threshold.

    ``open_gap`` is the trailing stretch with no visit yet; it is not a
    completed interval.  ``max_gap`` falls back to it when nothing completed.
    """

    max_gap: int
    open_gap: int
    completed: int


def empirical_delta(trace: Trace, p_threshold) -> DeltaMeasure:
    exact = _exact(trace)
    thr = p_threshold if exact else float(p_threshold)
    last, gaps = 0, []
    for r in trace.records:
        if _le(r.price, thr, exact):
            gaps.append(r.t - last)
            last = r.t
    open_gap = len(trace) - last
    max_gap = max(gaps) if gaps else open_gap
    return DeltaMeasure(max_gap, open_gap, len(gaps))


def count_jumps(trace: Trace, points: MarketPoints) -> int:
    exact = _exact(trace)
    p_mon = points.p_mon if exact else float(points.p_mon)
    return sum(1 for r in trace.records if _eq(r.price, p_mon, exact))


def check_delta_bound(trace: Trace, points: MarketPoints, p_star=None) -> CheckResult:
    name = "delta_bound"
    if not points.revenue_gap:
        return CheckResult(name, SKIPPED, detail="REV_mon <= REV_eq")
    if not points.p_mon > points.p_ser:
        return CheckResult(name, SKIPPED, detail="p_ser = p_mon; no price strictly between")
    p_star = p_star if p_star is not None else (points.p_ser + points.p_mon) / 2
    Q = trace.final_state.daily
    bound = theoretical_delta_bound(Q if Q.is_exact else Q.to_exact(), points.supply, p_star, points)
    measure = empirical_delta(trace, p_star)
    witness = {"p_star": p_star, "bound": bound, "max_gap": measure.max_gap,
               "open_gap": measure.open_gap, "completed": measure.completed}
    if measure.completed and measure.max_gap > bound:
        return CheckResult(name, FAIL, witness)
    return CheckResult(name, PASS, witness)


def default_samples(points: MarketPoints, n: int = 10) -> list:
    """``n`` evenly spaced prices in ``[0, p_ser]``; the last one is ``p_ser``."""
    return [points.p_ser * Fraction(i, n - 1) for i in range(n)] if n > 1 else [points.p_ser]


def verify_trace(trace: Trace, points: MarketPoints, p_samples: Sequence | None = None) -> VerifyReport:
    checks = [
        check_sandwich(trace, points),
        check_descent_or_jump(trace, points),
    ]
    if trace.pents is not None:
        checks.append(check_conservation(trace, points, p_samples or default_samples(points)))
    checks.append(check_welfare_bound(points))
    checks.append(check_delta_bound(trace, points))
    inf_est, sup_est = estimate_extremes(trace, 0.5)
    evidence = {
        "window_fraction": 0.5,
        "inf_estimate": float(inf_est),
        "sup_estimate": float(sup_est),
        "p_ser": float(points.p_ser),
        "p_mon": float(points.p_mon),
        "inf_relative_gap": float((Fraction(inf_est) - points.p_ser) / points.p_ser) if points.p_ser else None,
        "jumps": count_jumps(trace, points),
    }
    return VerifyReport(checks, len(trace), trace.mode, evidence)


def verify_run(Q: DemandCurve, s, T: int, mode: Mode = "exact") -> VerifyReport:
    points = market_points(Q, s)
    trace = run(Q, s, T, mode, keep_curves=True, check_gap=False)
    return verify_trace(trace, points)
