"""One test per acceptance criterion; each prints a single pass/fail line."""

import random
import subprocess
import sys
import time
from dataclasses import replace
from fractions import Fraction as F
from pathlib import Path

import pytest

from serial_monopoly.analytics import market_points, theoretical_delta_bound, welfare_ratio
from serial_monopoly.curve import DemandCurve
from serial_monopoly.dynamics import StepRecord, Trace, run
from serial_monopoly.families import DemandFamilySpec
from serial_monopoly.ingest import BidBatch, clearing_price, conservation_holds, parse_blocks, replay, replay_with_baseline
from serial_monopoly.strategic import ManipulationFn, PriceTrajectory, best_response, equilibrium_gap, outcome, run_strategic
from serial_monopoly.verify import (FAIL, PASS, check_conservation, check_delta_bound, check_descent_or_jump,
                                    check_sandwich, check_welfare_bound, count_jumps, default_samples,
                                    empirical_delta, estimate_extremes)

UNIFORM = DemandCurve.linear(1, 1)
DATA = Path(__file__).parent / "data"


@pytest.fixture
def report(capsys):
    lines = []

    def emit(n, ok, detail):
        lines.append(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok

    yield emit
    with capsys.disabled():
        for line in lines:
            print("\n" + line, end="")


@pytest.fixture(scope="module")
def exact_2000():
    start = time.perf_counter()
    tr = run(UNIFORM, 1, 2000, keep_curves=True)
    return tr, time.perf_counter() - start


def test_c01_golden_sequence(report):
    start = time.perf_counter()
    tr = run(UNIFORM, 1, 4)
    elapsed = time.perf_counter() - start
    ok = (tr.prices == [F(1, 2), F(3, 8), F(7, 24), F(1, 2)]
          and tr.quantities == [F(1, 2), F(3, 4), F(7, 8), F(1, 2)] and elapsed < 1)
    assert report(1, ok, f"prices {' '.join(map(str, tr.prices))} in {elapsed:.3f}s")


def test_c02_market_points(report):
    p = market_points(UNIFORM, 1)
    got = (p.p_mon, p.q_mon, p.p_ser, p.q_ser, p.SW_eq, p.SW_mon, p.SW_ser)
    ok = got == (F(1, 2), F(1, 2), F(1, 4), F(3, 4), F(1, 2), F(3, 8), F(15, 32))
    assert report(2, ok, " ".join(map(str, got)))


def _random_curve(rng):
    n = rng.randint(3, 10)
    xs = [F(rng.randint(0, 4), 4)]
    for _ in range(n - 1):
        xs.append(xs[-1] + F(rng.randint(1, 12), rng.randint(1, 6)))
    drops = [F(rng.randint(1, 12), rng.randint(1, 6)) for _ in range(n - 1)]
    ys = [sum(drops)]
    for d in drops:
        ys.append(ys[-1] - d)
    return DemandCurve.from_points(list(zip(xs, ys)))


def test_c03_welfare_ratios(report):
    r_uni = welfare_ratio(market_points(UNIFORM, 1))
    stepped = DemandFamilySpec("stepped", {"M": 100, "eps": "1e-6"}).build()
    r_step = welfare_ratio(market_points(stepped, 100))
    er = DemandFamilySpec("equal_revenue", {"log_H": 2}).build(10_000)
    r_er = welfare_ratio(market_points(er, 1))
    rng = random.Random(20240601)
    sweep_ok = 0
    for _ in range(200):
        Q = _random_curve(rng)
        s = F(rng.randint(1, 16), rng.randint(1, 8))
        p = market_points(Q, s)
        sweep_ok += welfare_ratio(p) >= F(1, 2) and p.SW_ser >= max(p.SW_mon, p.SW_eq - p.REV_mon)
    ok = (r_uni == F(15, 16) and abs(r_step - F(101, 200)) <= F(1, 1000) and r_er >= F(99, 100)
          and sweep_ok == 200)
    assert report(3, ok, f"uniform {r_uni}, stepped {float(r_step):.6f}, equal-revenue {float(r_er):.6f}, "
                         f"sweep {sweep_ok}/200")


def test_c04_exact_trace_checks(report, exact_2000):
    tr, run_time = exact_2000
    pts = market_points(UNIFORM, 1)
    start = time.perf_counter()
    samples = [F(i, 40) for i in range(10)]  # 10 prices in [0, 1/4)
    results = [check_sandwich(tr, pts), check_descent_or_jump(tr, pts),
               check_conservation(tr, pts, samples)]
    elapsed = run_time + time.perf_counter() - start
    ok = all(r.status == PASS for r in results) and elapsed < 10
    assert report(4, ok, f"{', '.join(r.name + '=' + r.status for r in results)} in {elapsed:.2f}s")


def test_c05_asymptotic_evidence(report, exact_2000):
    pts = market_points(UNIFORM, 1)
    start = time.perf_counter()
    tr = run(UNIFORM, 1, 100_000, "float")
    elapsed = time.perf_counter() - start
    lo, hi = estimate_extremes(tr, 0.5)
    jumps = count_jumps(tr, pts)
    p_star = (pts.p_ser + pts.p_mon) / 2
    gap = empirical_delta(tr, p_star)
    bound = theoretical_delta_bound(UNIFORM, 1, p_star, pts)
    bound_at_mon = theoretical_delta_bound(UNIFORM, 1, pts.p_mon, pts)
    prefix = max(abs(float(a) - b) for a, b in zip(exact_2000[0].prices, tr.prices))
    ok = (abs(hi - 0.5) <= 1e-9 * 0.5 and abs(lo - 0.25) <= 0.01 * 0.25 and jumps >= 100
          and gap.max_gap <= bound and elapsed < 60 and prefix <= 1e-9)
    assert report(5, ok, f"sup {hi}, inf {lo:.8f}, jumps {jumps}, delta {gap.max_gap} <= bound {bound} "
                         f"(bound is 25 only at p*=p_mon: {bound_at_mon}), prefix err {prefix:.1e}, {elapsed:.1f}s")


def test_c06_strategic_equilibrium(report):
    s = F(3, 4)
    tr = run_strategic(UNIFORM, s, ManipulationFn.clamp(F(1, 4)), 1000)
    gap = equilibrium_gap(UNIFORM, s, 1000, [F(i, 100) for i in range(101)])
    ok = set(tr.prices) == {F(1, 4)} and set(tr.quantities) == {s} and gap.max_regret == 0
    assert report(6, ok, f"prices {set(map(str, tr.prices))}, max regret {gap.max_regret}")


def test_c07_deviation_witness(report):
    traj = PriceTrajectory.from_prices(run(UNIFORM, 1, 4).prices)
    v = F(9, 20)
    bid, best = best_response(traj, 1, v)
    truthful = outcome(traj, 1, v, v)[1]
    grid_best = max(outcome(traj, 1, v, F(i, 10_000))[1] for i in range(10_001))
    ok = (bid, best, truthful, best - truthful) == (F(7, 24), F(19, 120), F(9, 120), F(1, 12)) and grid_best == best
    assert report(7, ok, f"bid {bid}, utility {best} vs truthful {truthful}, gain {best - truthful}, grid {grid_best}")


def test_c08_replay(report):
    tr, _ = replay([BidBatch(1, ((F(10), F(3), 0), (F(5), F(4), 1), (F(2), F(5), 2)))], 6)
    batches = parse_blocks(DATA / "blocks50.jsonl")
    _, rep = replay_with_baseline(batches, F(1_500_000))
    ok = ((tr.records[0].price, tr.records[0].quantity) == (10, 3) and len(batches) == 50
          and conservation_holds(batches, rep) and rep.serial_revenue >= rep.baseline_revenue)
    assert report(8, ok, f"fixture p={tr.records[0].price} q={tr.records[0].quantity}; 50 blocks revenue ratio "
                         f"{float(rep.revenue_ratio):.4f}, conservation {conservation_holds(batches, rep)}")


def test_c09_negative_controls(report):
    tr = run(UNIFORM, 1, 30, keep_curves=True)
    pts = market_points(UNIFORM, 1)
    long_gap = [StepRecord(t, F(1, 4) if t in (1, 202) else F(1, 2), F(0), F(0), F(0), 0) for t in range(1, 203)]
    results = [
        check_sandwich(tr.with_record(5, price=F(1, 8)), pts),
        check_descent_or_jump(tr.with_record(3, price=tr.records[1].price), pts),
        check_conservation(tr.with_record(2, quantity=F(1)), pts, default_samples(pts)),
        check_welfare_bound(replace(pts, SW_ser=F(1, 5))),
        check_delta_bound(Trace(long_gap, tr.final_state), pts),
    ]
    ok = all(r.status == FAIL and r.witness for r in results)
    assert report(9, ok, ", ".join(f"{r.name}={r.status}" for r in results))


def test_c10_repro_deterministic(report):
    cmd = [sys.executable, "-m", "serial_monopoly.cli", "repro"]
    a = subprocess.run(cmd, capture_output=True).stdout
    b = subprocess.run(cmd, capture_output=True).stdout
    ok = a == b and a.strip().endswith(b"passed")
    assert report(10, ok, f"two runs byte-identical: {a == b} ({len(a)} bytes)")
