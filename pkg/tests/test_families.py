import math
from fractions import Fraction as F

import pytest

from serial_monopoly.curve import CurveError, DemandCurve
from serial_monopoly.families import DemandFamilySpec, approximate_pl, parse_family


def test_uniform_is_exact_line():
    for nodes in (2, 10, 10_000):
        assert approximate_pl(DemandFamilySpec("uniform", {}), nodes) == DemandCurve.linear(1, 1)


def test_equal_revenue_tracks_reciprocal():
    c = approximate_pl(DemandFamilySpec("equal_revenue", {"log_H": 2}), 10_000)
    H = math.exp(2)
    assert c(1) == 1
    assert abs(float(c(F(H)))) < 1e-9
    assert c.is_strictly_decreasing()
    # 100 sample prices away from the final drop segment
    worst = max(abs(float(c(F(1 + (H - 1.01) * i / 99))) - 1 / (1 + (H - 1.01) * i / 99)) for i in range(100))
    assert worst < 1e-6


def test_stepped_matches_step_definition():
    c = approximate_pl(DemandFamilySpec("stepped", {"M": 100, "eps": "1e-6"}))
    delta = F(1, 10**4)
    assert abs(c(1 - delta) - 100) < F(1, 10**5)
    assert abs(c(101 - delta) - 1) < F(1, 10**5)
    assert c(102) == 0
    assert c.is_strictly_decreasing()


@pytest.mark.parametrize("spec", [
    DemandFamilySpec("stepped", {"M": 1}),
    DemandFamilySpec("stepped", {"M": 10, "eps": 0}),
    DemandFamilySpec("equal_revenue", {"H": 1}),
    DemandFamilySpec("equal_revenue", {}),
    DemandFamilySpec("uniform", {"high": -1}),
])
def test_invalid_parameters(spec):
    with pytest.raises(CurveError):
        spec.build(100)


def test_unknown_family_and_nodes():
    with pytest.raises(CurveError):
        DemandFamilySpec("cubic", {})
    with pytest.raises(CurveError):
        approximate_pl(DemandFamilySpec("uniform", {}), 1)


def test_parse_family():
    spec = parse_family("stepped:M=100,eps=1e-6")
    assert spec.family == "stepped" and spec.params == {"M": "100", "eps": "1e-6"}
    assert parse_family("uniform").params == {}
    with pytest.raises(CurveError):
        parse_family("stepped:M")


def test_points_family():
    c = DemandFamilySpec("points", {"breakpoints": [["0", "3/2"], ["1/2", "1/2"], ["1", "0"]]}).build()
    assert c(F(1, 4)) == 1
