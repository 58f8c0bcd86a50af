"""Named demand families and their exact piecewise-linear builders."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from .curve import CurveError, DemandCurve, to_fraction

# dyadic grid used to round transcendental node coordinates
_GRID = 2**40

FAMILIES = ("uniform", "equal_revenue", "stepped", "points")


@dataclass(frozen=True)
class DemandFamilySpec:
    """A family name plus parameters, e.g. ``DemandFamilySpec("stepped", {"M": 100})``.

    Families:

    * ``uniform(mass=1, high=1)``: ``mass * (1 - p/high)`` on ``[0, high]``.
    * ``equal_revenue(H | log_H)``: ``1/p`` on ``[1, H]``, geometric nodes.
    * ``stepped(M, eps=1e-6)``: ``M-1`` units at price 1 plus one unit at
      ``M+1``, smoothed with ``eps`` mass so it is continuous and strictly
      decreasing.
    * ``points(breakpoints)``: an explicit breakpoint list.
    """

    family: str
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise CurveError(f"unknown demand family {self.family!r}; expected one of {FAMILIES}")

    def build(self, nodes: int = 10_000) -> DemandCurve:
        return approximate_pl(self, nodes)


def _positive(params, key, default=None) -> Fraction:
    raw = params.get(key, default)
    if raw is None:
        raise CurveError(f"missing parameter {key!r}")
    value = to_fraction(raw)
    if value <= 0:
        raise CurveError(f"parameter {key!r} must be positive, got {raw!r}")
    return value


def _dyadic(x: float) -> Fraction:
    return Fraction(round(x * _GRID), _GRID)


def approximate_pl(family: DemandFamilySpec, nodes: int = 10_000) -> DemandCurve:
    """Exact piecewise-linear curve for ``family``.

    Linear families are reproduced exactly.  For ``equal_revenue`` the curve
    interpolates ``1/p`` at ``nodes`` geometrically spaced prices in
    ``[1, H]`` (coordinates rounded to a 2**-40 grid) and reaches zero at ``H``.
    """
    if nodes < 2:
        raise CurveError("need at least two nodes")
    params = family.params
    if family.family == "uniform":
        return DemandCurve.linear(_positive(params, "mass", 1), _positive(params, "high", 1))

    if family.family == "points":
        pts = params.get("breakpoints")
        if not pts:
            raise CurveError("points family needs a non-empty 'breakpoints' list")
        return DemandCurve.from_points(pts)

    if family.family == "stepped":
        M = _positive(params, "M")
        eps = _positive(params, "eps", Fraction(1, 10**6))
        if M < 2:
            raise CurveError("stepped family needs M >= 2")
        if eps >= Fraction(1, 2):
            raise CurveError("stepped family needs eps < 1/2")
        return DemandCurve.from_points([
            (0, M + eps),
            (1, M),
            (1 + eps, 1 + eps),
            (M + 1, 1),
            (M + 1 + eps, 0),
        ])

    # equal_revenue
    if "log_H" in params:
        H = math.exp(float(to_fraction(params["log_H"])))
    else:
        H = float(_positive(params, "H"))
    if not H > 1:
        raise CurveError("equal_revenue needs H > 1")
    n = nodes
    log_h = math.log(H)
    pts = [(Fraction(1), Fraction(1))]
    for i in range(1, n - 1):
        x = _dyadic(math.exp(log_h * i / (n - 1)))
        y = _dyadic(1 / float(x))
        if x <= pts[-1][0] or y >= pts[-1][1]:
            continue  # grid collision at extreme node counts
        pts.append((x, y))
    pts.append((_dyadic(H), Fraction(0)))
    return DemandCurve(tuple(pts))


def parse_family(text: str, params: dict | None = None) -> DemandFamilySpec:
    """Parse CLI shorthand like ``uniform`` or ``stepped:M=100,eps=1e-6``."""
    name, _, rest = text.partition(":")
    merged: dict[str, Any] = dict(params or {})
    for item in filter(None, rest.split(",")):
        key, sep, value = item.partition("=")
        if not sep:
            raise CurveError(f"bad family parameter {item!r}; expected key=value")
        merged[key.strip()] = value.strip()
    return DemandFamilySpec(name.strip(), merged)
