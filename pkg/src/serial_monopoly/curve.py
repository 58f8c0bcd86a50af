"""Piecewise-linear demand curves with exact (Fraction) or float coordinates.

A curve is stored as its breakpoints ``(price, quantity)``.  Prices are
weakly increasing; two consecutive breakpoints may share a price, which
encodes a vertical drop (an atom of demand at that price).  Quantities are
non-negative, weakly decreasing, and the last one is zero.

Evaluation follows the usual demand convention ``D(p) = mass bidding >= p``:
below the first breakpoint the curve is constant, above the last one it is
zero, and at a vertical drop it returns the upper value.
"""

from __future__ import annotations

import json
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence, Union

Number = Union[Fraction, int, float]

__all__ = [
    "AtomCurve",
    "CurveError",
    "DemandCurve",
    "Number",
    "canonicalize",
    "revenue_maximizer",
    "to_fraction",
]


class CurveError(ValueError):
    """Invalid curve data or an operation outside its domain."""


def to_fraction(x) -> Fraction:
    """Parse ints, Fractions, decimal/rational strings and floats exactly."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise CurveError(f"not a number: {x!r}")
    if isinstance(x, (int, float)):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise CurveError(f"not a rational number: {x!r}") from exc
    raise CurveError(f"not a number: {x!r}")


def _cross(x0, y0, x1, y1, x2, y2):
    return (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)


def canonicalize(points: Sequence[tuple[Number, Number]], tol: float = 0.0) -> list[tuple[Number, Number]]:
    """Minimal breakpoint list describing the same function.

    Removes duplicates and collinear interior points, leading flat points
    (redundant under the constant extension) and trailing zeros.  With
    ``tol > 0`` (float mode) points whose removal moves the curve by less
    than ``tol`` relative to its height are pruned as well.
    """
    if not points:
        return []
    scale = max(abs(points[0][1]), 1) if tol else 0
    out: list[tuple[Number, Number]] = []
    for pt in points:
        if out and pt[0] == out[-1][0] and pt[1] == out[-1][1]:
            continue
        while len(out) >= 2:
            (x0, y0), (x1, y1) = out[-2], out[-1]
            c = _cross(x0, y0, x1, y1, pt[0], pt[1])
            if c == 0 or (tol and abs(c) <= tol * scale * max(pt[0] - x0, tol)):
                out.pop()
            else:
                break
        out.append(pt)
    # leading flat run: constant extension already covers it
    while len(out) >= 2 and out[0][0] < out[1][0] and abs(out[0][1] - out[1][1]) <= tol * scale:
        out.pop(0)
    # cut after the first zero quantity
    for i, (_, y) in enumerate(out):
        if y == 0:
            del out[i + 1:]
            break
    if len(out) == 1 and out[0][1] == 0:
        return []
    return out


@dataclass(frozen=True)
class DemandCurve:
    """Weakly decreasing, finitely supported piecewise-linear demand."""

    points: tuple[tuple[Number, Number], ...] = ()
    _xs: tuple = field(init=False, repr=False, compare=False)
    _ys: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pts = tuple((x, y) for x, y in self.points)
        xs = tuple(x for x, _ in pts)
        ys = tuple(y for _, y in pts)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "_xs", xs)
        object.__setattr__(self, "_ys", ys)
        if not pts:
            return
        if xs[0] < 0:
            raise CurveError(f"negative price {xs[0]}")
        if ys[-1] != 0:
            raise CurveError("last breakpoint must have zero quantity")
        for i in range(1, len(pts)):
            if xs[i] < xs[i - 1]:
                raise CurveError(f"prices not sorted at breakpoint {i}")
            if ys[i] > ys[i - 1]:
                raise CurveError(f"quantity increases at breakpoint {i}")
            if i >= 2 and xs[i] == xs[i - 1] == xs[i - 2]:
                raise CurveError(f"more than two breakpoints at price {xs[i]}")
        if ys[0] < 0:
            raise CurveError("negative quantity")

    # ---- construction -------------------------------------------------
    @classmethod
    def from_points(cls, points: Iterable[tuple], *, exact: bool = True, tol: float = 0.0) -> "DemandCurve":
        conv = to_fraction if exact else float
        pts = [(conv(x), conv(y)) for x, y in points]
        return cls(tuple(canonicalize(pts, tol)))

    @classmethod
    def zero(cls) -> "DemandCurve":
        return cls(())

    @classmethod
    def linear(cls, intercept, high) -> "DemandCurve":
        """``intercept * (1 - p/high)`` on ``[0, high]``."""
        return cls.from_points([(0, intercept), (high, 0)])

    def to_float(self) -> "DemandCurve":
        return DemandCurve(tuple((float(x), float(y)) for x, y in self.points))

    def to_exact(self) -> "DemandCurve":
        return DemandCurve(tuple((Fraction(x), Fraction(y)) for x, y in self.points))

    @property
    def is_exact(self) -> bool:
        return all(not isinstance(x, float) for x in self._xs)

    # ---- queries ------------------------------------------------------
    def __len__(self) -> int:
        return len(self.points)

    def __bool__(self) -> bool:
        return bool(self.points)

    @property
    def p_min(self):
        return self._xs[0] if self._xs else 0

    @property
    def p_max(self):
        return self._xs[-1] if self._xs else 0

    def __call__(self, p):
        xs, ys = self._xs, self._ys
        if not xs:
            return 0
        if p <= xs[0]:
            return ys[0]
        if p > xs[-1]:
            return ys[-1]
        i = bisect_left(xs, p)
        if xs[i] == p:
            return ys[i]
        x0, y0, x1, y1 = xs[i - 1], ys[i - 1], xs[i], ys[i]
        return y0 + (y1 - y0) * (p - x0) / (x1 - x0)

    def right_limit(self, p):
        """``lim_{x -> p+} D(x)``; differs from ``D(p)`` only at an atom."""
        xs, ys = self._xs, self._ys
        if not xs:
            return 0
        if p < xs[0]:
            return ys[0]
        if p >= xs[-1]:
            return ys[-1]
        i = bisect_right(xs, p)
        if xs[i - 1] == p:
            return ys[i - 1]
        x0, y0, x1, y1 = xs[i - 1], ys[i - 1], xs[i], ys[i]
        return y0 + (y1 - y0) * (p - x0) / (x1 - x0)

    def is_strictly_decreasing(self) -> bool:
        """No flat segment on the support (vertical drops are allowed)."""
        xs, ys = self._xs, self._ys
        return all(not (xs[i] < xs[i + 1] and ys[i] == ys[i + 1]) for i in range(len(xs) - 1))

    def is_continuous(self) -> bool:
        xs = self._xs
        return all(xs[i] != xs[i + 1] for i in range(len(xs) - 1))

    def inverse(self, q):
        """Largest price ``p`` with ``D(p) >= q``."""
        xs, ys = self._xs, self._ys
        if not xs:
            raise CurveError("inverse of the zero curve")
        if q < 0 or q > ys[0]:
            raise CurveError(f"quantity {q} outside [0, {ys[0]}]")
        # ys is weakly decreasing: find the last index with ys[j] >= q
        j = len(ys) - 1
        while ys[j] < q:
            j -= 1
        if j == len(ys) - 1 or xs[j + 1] == xs[j]:
            return xs[j]
        x0, y0, x1, y1 = xs[j], ys[j], xs[j + 1], ys[j + 1]
        return x0 + (y0 - q) * (x1 - x0) / (y0 - y1)

    # ---- algebra ------------------------------------------------------
    def __add__(self, other: "DemandCurve") -> "DemandCurve":
        if not isinstance(other, DemandCurve):
            return NotImplemented
        if not other.points:
            return self
        if not self.points:
            return other
        pts = []
        for x in sorted(set(self._xs) | set(other._xs)):
            top = self(x) + other(x)
            low = self.right_limit(x) + other.right_limit(x)
            pts.append((x, top))
            if low != top:
                pts.append((x, low))
        return DemandCurve(tuple(canonicalize(pts)))

    def residual_after_sale(self, price, quantity, tol: float = 0.0) -> "DemandCurve":
        """Pent-up demand left after selling ``quantity`` at ``price``.

        ``Z(p) = D(p) - quantity`` for ``p <= price`` and ``0`` above.  The
        sold quantity must lie between the right limit and the value of the
        curve at ``price``; on a continuous curve that means equality.
        """
        top = self(price)
        low = self.right_limit(price)
        # exact mode must not mix in a float zero
        slack = tol * max(abs(self._ys[0]) if self._ys else 0, 1) if tol else 0
        if quantity > top + slack or quantity < low - slack:
            raise CurveError(
                f"sale ({price}, {quantity}) does not clear the curve: "
                f"D(p)={top}, D(p+)={low}"
            )
        zero = quantity - quantity
        pts = [(x, y - quantity) for x, y in self.points if x < price]
        if tol:
            pts = [(x, max(y, zero)) for x, y in pts]
        rest = top - quantity
        if tol and rest <= slack:
            rest = zero
        pts.append((price, rest))
        if rest != 0:
            pts.append((price, zero))
        return DemandCurve(tuple(canonicalize(pts, tol)))

    def welfare_above(self, p=0):
        """Total value of the demand units willing to pay at least ``p``.

        Equals ``p * D(p) + integral_p^inf D(x) dx``.
        """
        if p < 0:
            raise CurveError("welfare_above needs p >= 0")
        xs, ys = self._xs, self._ys
        if not xs:
            return 0
        total = p * self(p)
        if p < xs[0]:
            total += ys[0] * (xs[0] - p)
            start = 0
        else:
            start = bisect_right(xs, p)
            if start >= len(xs):
                return total
            total += (xs[start] - p) * (self.right_limit(p) + ys[start]) / 2
        for i in range(start, len(xs) - 1):
            total += (xs[i + 1] - xs[i]) * (ys[i] + ys[i + 1]) / 2
        return total

    # ---- serialization -----------------------------------------------
    def to_json(self) -> str:
        return json.dumps([[str(Fraction(x)), str(Fraction(y))] for x, y in self.points])

    @classmethod
    def from_json(cls, text: str) -> "DemandCurve":
        data = json.loads(text)
        if not isinstance(data, list):
            raise CurveError("curve JSON must be an array of [price, quantity] pairs")
        return cls.from_points(data)


def revenue_maximizer(curve: DemandCurve, s, *, tie_tol: float = 0.0, zero_revenue: str = "error"):
    """Global maximizer of ``p * min(s, curve(p))``.

    Returns ``(price, quantity, revenue)`` with ``quantity = min(s, curve(price))``.
    Among maximizers the largest price wins (within ``tie_tol`` relative
    revenue in float mode).  When the best revenue is zero,
    ``zero_revenue="clear"`` sells ``min(s, curve(0))`` at price zero instead
    of raising.
    """
    if not s > 0:
        raise CurveError("supply must be positive")
    xs, ys = curve._xs, curve._ys
    cands = list(xs)
    for i in range(len(xs) - 1):
        x0, y0, x1, y1 = xs[i], ys[i], xs[i + 1], ys[i + 1]
        if x0 == x1 or y0 == y1:
            continue
        slope = (y1 - y0) / (x1 - x0)
        lo = x0
        if y0 > s:
            if y1 >= s:
                continue
            lo = x0 + (s - y0) / slope
            cands.append(lo)
        # revenue p*(y0 + slope*(p - x0)) peaks at its vertex
        vertex = (x0 - y0 / slope) / 2
        cands.append(min(max(vertex, lo), x1))

    best_p, best_r = None, None
    for p in cands:
        r = p * min(s, curve(p))
        if best_r is None or r > best_r:
            best_p, best_r = p, r
    if best_r is None or best_r <= 0:
        if zero_revenue == "clear" and curve:
            zero = s - s
            q = min(s, curve(zero))
            return zero, q, zero * q
        raise CurveError("degenerate curve: no positive revenue at any price")
    if tie_tol:
        cut = best_r - tie_tol * abs(best_r)
        for p in cands:
            if p > best_p and p * min(s, curve(p)) >= cut:
                best_p = p
        best_r = best_p * min(s, curve(best_p))
    else:
        for p in cands:
            if p > best_p and p * min(s, curve(p)) == best_r:
                best_p = p
    q = min(s, curve(best_p))
    return best_p, q, best_p * q


@dataclass(frozen=True)
class AtomCurve:
    """Step demand from a multiset of ``(price, quantity, arrival_tag)`` atoms."""

    atoms: tuple[tuple[Fraction, Fraction, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(tuple(a) for a in self.atoms))
        for price, qty, _ in self.atoms:
            if not qty > 0:
                raise CurveError(f"atom quantity must be positive, got {qty}")
            if price < 0:
                raise CurveError(f"negative atom price {price}")

    def __call__(self, p):
        return sum((q for price, q, _ in self.atoms if price >= p), Fraction(0))

    def __len__(self) -> int:
        return len(self.atoms)

    def prices(self) -> list:
        """Distinct atom prices, highest first."""
        return sorted({price for price, _, _ in self.atoms}, reverse=True)

    def total(self):
        return sum((q for _, q, _ in self.atoms), Fraction(0))
