"""Command-line front end.

Exit codes: 0 success, 1 a check failed, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Optional

import yaml

from .analytics import market_points, welfare_ratio
from .curve import CurveError, DemandCurve, to_fraction
from .dynamics import run, trace_csv, write_trace_csv
from .families import DemandFamilySpec, parse_family
from .ingest import (DataError, FetchError, clearing_price, conservation_holds, fetch_blocks,
                     parse_blocks, replay_with_baseline, write_jsonl, BidBatch)
from .strategic import (ManipulationFn, PriceTrajectory, best_response, equilibrium_gap,
                        run_strategic)
from .verify import verify_run

log = logging.getLogger("serial_monopoly")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    demand: DemandFamilySpec = field(default_factory=lambda: DemandFamilySpec("uniform", {}))
    supply: Fraction = Fraction(1)
    horizon: int = 100
    mode: str = "exact"
    seed: int = 0
    output_dir: Optional[Path] = None
    nodes: int = 10_000

    def __post_init__(self):
        if isinstance(self.horizon, bool) or not isinstance(self.horizon, int):
            raise ConfigError(f"horizon must be an integer, got {self.horizon!r}")
        if self.horizon < 1:
            raise ConfigError("horizon must be at least 1")
        if not self.supply > 0:
            raise ConfigError("supply must be positive")
        if self.mode not in ("exact", "float"):
            raise ConfigError(f"mode must be 'exact' or 'float', got {self.mode!r}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int):
            raise ConfigError(f"seed must be an integer, got {self.seed!r}")

    def curve(self) -> DemandCurve:
        return self.demand.build(self.nodes)


_CONFIG_KEYS = {"demand", "supply", "horizon", "mode", "seed", "output_dir", "nodes"}
_DEMAND_KEYS = {"family", "params", "points", "file"}


def _demand_from_mapping(raw: Any, base: Path) -> DemandFamilySpec:
    if isinstance(raw, str):
        return parse_family(raw)
    if not isinstance(raw, dict):
        raise ConfigError("demand must be a family string or a mapping")
    unknown = set(raw) - _DEMAND_KEYS
    if unknown:
        raise ConfigError(f"unknown demand key(s): {', '.join(sorted(unknown))}")
    if "file" in raw:
        curve = DemandCurve.from_json((base / raw["file"]).read_text())
        return DemandFamilySpec("points", {"breakpoints": [list(p) for p in curve.points]})
    if "points" in raw:
        return DemandFamilySpec("points", {"breakpoints": raw["points"]})
    if "family" not in raw:
        raise ConfigError("demand needs one of family, points or file")
    params = raw.get("params") or {}
    if not isinstance(params, dict):
        raise ConfigError("demand.params must be a mapping")
    return DemandFamilySpec(str(raw["family"]), dict(params))


def load_config(path) -> RunConfig:
    """Validated :class:`RunConfig` from a YAML file."""
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text()) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    unknown = set(raw) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    kwargs: dict[str, Any] = {}
    try:
        if "demand" in raw:
            kwargs["demand"] = _demand_from_mapping(raw["demand"], path.parent)
        if "supply" in raw:
            kwargs["supply"] = to_fraction(raw["supply"])
    except CurveError as exc:
        raise ConfigError(str(exc)) from None
    for key in ("horizon", "seed", "nodes"):
        if key in raw:
            kwargs[key] = raw[key]
    if "mode" in raw:
        kwargs["mode"] = raw["mode"]
    if raw.get("output_dir") is not None:
        kwargs["output_dir"] = Path(raw["output_dir"])
    if "nodes" in kwargs and (not isinstance(kwargs["nodes"], int) or kwargs["nodes"] < 2):
        raise ConfigError("nodes must be an integer >= 2")
    return RunConfig(**kwargs)


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """File values first, then any flags that were given."""
    cfg = load_config(args.config) if getattr(args, "config", None) else RunConfig()
    changes: dict[str, Any] = {}
    if getattr(args, "demand", None):
        changes["demand"] = parse_family(args.demand)
    if getattr(args, "supply", None) is not None:
        changes["supply"] = to_fraction(args.supply)
    for key in ("horizon", "mode", "seed", "nodes"):
        if getattr(args, key, None) is not None:
            changes[key] = getattr(args, key)
    if getattr(args, "output_dir", None) is not None:
        changes["output_dir"] = Path(args.output_dir)
    return replace(cfg, **changes)


# ---- output helpers ------------------------------------------------------------

def _emit(text: str, out_dir: Optional[Path], name: str) -> None:
    if out_dir is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / name).write_text(text)
    log.info("wrote %s", out_dir / name)


# ---- subcommands ---------------------------------------------------------------

def cmd_analyze(args) -> int:
    cfg = resolve_config(args)
    Q = cfg.curve()
    pts = market_points(Q if Q.is_exact else Q.to_exact(), cfg.supply)
    payload = pts.to_dict()
    if pts.SW_eq > 0:
        ratio = welfare_ratio(pts)
        payload["welfare_ratio"] = str(ratio)
        payload["decimal"]["welfare_ratio"] = float(ratio)
    _emit(json.dumps(payload, indent=2, sort_keys=True), cfg.output_dir, "market_points.json")
    return 0


def cmd_simulate(args) -> int:
    cfg = resolve_config(args)
    trace = run(cfg.curve(), cfg.supply, cfg.horizon, cfg.mode, check_gap=False)
    if cfg.output_dir is None:
        sys.stdout.write(trace_csv(trace, exact=args.exact and cfg.mode == "exact"))
    else:
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
        for path in write_trace_csv(trace, cfg.output_dir / "trace.csv"):
            log.info("wrote %s", path)
    return 0


def cmd_verify(args) -> int:
    cfg = resolve_config(args)
    report = verify_run(cfg.curve(), cfg.supply, cfg.horizon, cfg.mode)
    _emit(report.to_json(), cfg.output_dir, "verify.json")
    return 0 if report.ok else 1


def cmd_strategic(args) -> int:
    cfg = resolve_config(args)
    Q = cfg.curve()
    Q = Q if Q.is_exact else Q.to_exact()
    if args.identity:
        m = ManipulationFn.identity()
    elif args.clamp is not None:
        m = ManipulationFn.clamp(args.clamp)
    else:
        m = None  # clamp at the equilibrium price
    top = Q.p_max
    grid = [top * Fraction(i, args.grid - 1) for i in range(args.grid)]
    gap = equilibrium_gap(Q, cfg.supply, cfg.horizon, grid, m)
    summary = {
        "max_regret": str(gap.max_regret),
        "witness_value": str(gap.witness.value) if gap.witness else None,
        "witness_birth": gap.witness.birth if gap.witness else None,
        "flat": len(set(gap.trace.prices)) == 1,
        "caveats": ["regret is measured on a finite horizon"],
    }
    if cfg.output_dir is None:
        sys.stdout.write(json.dumps(summary, indent=2) + "\n")
    else:
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
        write_trace_csv(gap.trace, cfg.output_dir / "equilibrium_trace.csv")
        (cfg.output_dir / "regret.csv").write_text(gap.regret_csv())
        (cfg.output_dir / "strategic.json").write_text(json.dumps(summary, indent=2) + "\n")
    return 0


def _read_prices(path: Path) -> list[Fraction]:
    return [to_fraction(line.strip()) for line in path.read_text().splitlines() if line.strip()]


def cmd_replay(args) -> int:
    batches = parse_blocks(args.data, args.format)
    paid = _read_prices(Path(args.paid_prices)) if args.paid_prices else None
    s = to_fraction(args.supply)
    _, report = replay_with_baseline(batches, s, paid)
    if not conservation_holds(batches, report):
        log.error("replay conservation failed")
        return 1
    out = Path(args.output_dir) if args.output_dir else None
    _emit(report.to_json(), out, "replay.json")
    return 0


def cmd_fetch(args) -> int:
    batches = fetch_blocks(args.endpoint, args.first, args.last, workers=args.workers)
    write_jsonl(batches, args.out)
    log.info("wrote %d blocks to %s", len(batches), args.out)
    return 0


# ---- repro ---------------------------------------------------------------------

def _golden_checks() -> list[tuple[str, Callable[[], tuple[bool, str]]]]:
    F = Fraction
    uniform = DemandCurve.linear(1, 1)

    def trajectory():
        tr = run(uniform, 1, 7)
        want = [F(1, 2), F(3, 8), F(7, 24), F(1, 2), F(3, 8), F(13, 48), F(1, 2)]
        return tr.prices == want, " ".join(str(p) for p in tr.prices)

    def quantities():
        tr = run(uniform, 1, 4)
        want = [F(1, 2), F(3, 4), F(7, 8), F(1, 2)]
        return tr.quantities == want, " ".join(str(q) for q in tr.quantities)

    def residuals():
        z1 = uniform.residual_after_sale(F(1, 2), F(1, 2))
        d2 = z1 + uniform
        z2 = d2.residual_after_sale(F(3, 8), F(3, 4))
        ok = z1(F(1, 4)) == F(1, 4) and d2(F(1, 4)) == 1 and z2(F(1, 4)) == F(1, 4) and z2(F(3, 8)) == 0
        return ok, f"Z1(1/4)={z1(F(1, 4))} D2(1/4)={d2(F(1, 4))} Z2(1/4)={z2(F(1, 4))}"

    def points():
        p = market_points(uniform, 1)
        got = (p.p_mon, p.q_mon, p.p_ser, p.q_ser, p.SW_eq, p.SW_mon, p.SW_ser)
        want = (F(1, 2), F(1, 2), F(1, 4), F(3, 4), F(1, 2), F(3, 8), F(15, 32))
        return got == want, " ".join(str(x) for x in got)

    def uniform_ratio():
        r = welfare_ratio(market_points(uniform, 1))
        return r == F(15, 16), str(r)

    def stepped_ratio():
        Q = DemandFamilySpec("stepped", {"M": 100, "eps": "1e-6"}).build()
        r = welfare_ratio(market_points(Q, 100))
        return abs(r - F(101, 200)) <= F(1, 1000), format(float(r), ".9f")

    def equal_revenue_ratio():
        Q = DemandFamilySpec("equal_revenue", {"log_H": 2}).build(10_000)
        r = welfare_ratio(market_points(Q, 1))
        return r >= F(99, 100), format(float(r), ".9f")

    def deviation():
        traj = PriceTrajectory.from_prices([F(1, 2), F(3, 8), F(7, 24), F(1, 2)])
        bid, u = best_response(traj, 1, F(9, 20))
        gain = u - (F(9, 20) - F(3, 8))
        return (bid, u, gain) == (F(7, 24), F(19, 120), F(1, 12)), f"bid={bid} utility={u} gain={gain}"

    def equilibrium():
        tr = run_strategic(uniform, F(3, 4), ManipulationFn.clamp(F(1, 4)), 100)
        ok = set(tr.prices) == {F(1, 4)} and set(tr.quantities) == {F(3, 4)}
        return ok, f"prices={sorted(set(map(str, tr.prices)))}"

    def replay_fixture():
        batch = BidBatch(1, ((F(10), F(3), 0), (F(5), F(4), 1), (F(2), F(5), 2)))
        tr, _ = replay_with_baseline([batch], 6)
        r = tr.records[0]
        return (r.price, r.quantity) == (10, 3), f"p={r.price} q={r.quantity}"

    def clearing():
        batch = BidBatch(1, ((F(10), F(3), 0), (F(5), F(4), 1)))
        p = clearing_price(batch, 6)
        return p == 5, f"p={p}"

    return [
        ("uniform trajectory", trajectory),
        ("uniform quantities", quantities),
        ("pent-up residuals", residuals),
        ("uniform market points", points),
        ("uniform welfare ratio", uniform_ratio),
        ("stepped welfare ratio", stepped_ratio),
        ("equal-revenue welfare ratio", equal_revenue_ratio),
        ("shading deviation", deviation),
        ("clamp equilibrium", equilibrium),
        ("replay tie-break", replay_fixture),
        ("per-block clearing price", clearing),
    ]


def repro_table() -> tuple[bool, str]:
    lines, all_ok = [], True
    for name, fn in _golden_checks():
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashing check is a failing check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        all_ok &= ok
        lines.append(f"{'PASS' if ok else 'FAIL'}  {name:<30} {detail}")
    lines.append(f"{sum(l.startswith('PASS') for l in lines)}/{len(lines)} passed")
    return all_ok, "\n".join(lines) + "\n"


def cmd_repro(args) -> int:
    ok, table = repro_table()
    sys.stdout.write(table)
    return 0 if ok else 1


# ---- parser --------------------------------------------------------------------

def _model_flags(p: argparse.ArgumentParser, horizon: bool = True) -> None:
    p.add_argument("--config", help="YAML run config; flags override it")
    p.add_argument("--demand", help="family, e.g. uniform or stepped:M=100,eps=1e-6")
    p.add_argument("--supply", help="supply per step (rational string)")
    p.add_argument("--nodes", type=int, help="nodes for non-linear families")
    p.add_argument("--output-dir", dest="output_dir", help="write files here instead of stdout")
    if horizon:
        p.add_argument("--horizon", type=int)
        p.add_argument("--mode", choices=["exact", "float"])
        p.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="serial-monopoly", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="market points as JSON")
    _model_flags(p, horizon=False)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="trace CSV")
    _model_flags(p)
    p.add_argument("--exact", action="store_true", help="exact rationals on stdout")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="check report JSON; exit 1 on failure")
    _model_flags(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("strategic", help="equilibrium trace and regret table")
    _model_flags(p)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--clamp", help="clamp threshold (default: equilibrium price)")
    group.add_argument("--identity", action="store_true", help="truthful bidding")
    p.add_argument("--grid", type=int, default=101, help="value grid size")
    p.set_defaults(func=cmd_strategic)

    p = sub.add_parser("replay", help="replay per-block bids; report JSON")
    p.add_argument("data")
    p.add_argument("--format", choices=["jsonl", "csv"])
    p.add_argument("--supply", required=True)
    p.add_argument("--paid-prices", dest="paid_prices", help="one paid price per line")
    p.add_argument("--output-dir", dest="output_dir")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("fetch", help="download blocks over JSON-RPC to JSONL")
    p.add_argument("--endpoint", help="JSON-RPC URL (default: $SM_RPC_URL)")
    p.add_argument("--first", type=int, required=True)
    p.add_argument("--last", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=4)
    p.set_defaults(func=cmd_fetch)

    p = sub.add_parser("repro", help="golden example table")
    p.set_defaults(func=cmd_repro)
    return parser


def run_cli(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    logging.captureWarnings(True)
    try:
        return args.func(args)
    except (ConfigError, CurveError, DataError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FetchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
