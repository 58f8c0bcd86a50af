"""Per-block bid data: loading, JSON-RPC fetching and serial-monopoly replay.

Step demand can over-demand at the chosen price, which the continuous model
never does.  Replay then serves exactly ``s`` units, oldest block first and
lowest arrival tag within a block, splitting the marginal atom.
"""

from __future__ import annotations

import csv
import json
import logging
import os
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .curve import AtomCurve, CurveError, to_fraction
from .dynamics import MarketState, StepRecord, Trace

log = logging.getLogger(__name__)

RPC_ENV = "SM_RPC_URL"


class DataError(ValueError):
    """Malformed bid data."""


class FetchError(RuntimeError):
    def __init__(self, block: int, message: str):
        super().__init__(f"block {block}: {message}")
        self.block = block


@dataclass(frozen=True)
class BidBatch:
    block_id: int
    bids: tuple[tuple[Fraction, Fraction, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "bids", tuple(tuple(b) for b in self.bids))
        tags = [tag for _, _, tag in self.bids]
        if len(set(tags)) != len(tags):
            raise DataError(f"block {self.block_id}: duplicate arrival tags")
        for price, qty, _ in self.bids:
            if not qty > 0:
                raise DataError(f"block {self.block_id}: non-positive quantity {qty}")
            if price < 0:
                raise DataError(f"block {self.block_id}: negative price {price}")

    def curve(self) -> AtomCurve:
        return AtomCurve(self.bids)

    def total(self) -> Fraction:
        return sum((q for _, q, _ in self.bids), Fraction(0))


# ---- parsing -----------------------------------------------------------------

def _num(raw, where: str) -> Fraction:
    try:
        return to_fraction(raw)
    except CurveError as exc:
        raise DataError(f"{where}: {exc}") from None


def parse_blocks(path, fmt: str | None = None) -> list[BidBatch]:
    """Load ``jsonl`` (``{"block": n, "bids": [[price, qty], ...]}``) or ``csv``
    (``block,price,quantity``) bid data.  Arrival tags follow file order."""
    path = Path(path)
    fmt = fmt or path.suffix.lstrip(".").lower()
    text = path.read_text()
    if not text.strip():
        raise DataError(f"{path}: empty file")
    if fmt == "jsonl":
        return _parse_jsonl(text)
    if fmt == "csv":
        return _parse_csv(text)
    raise DataError(f"unknown bid data format {fmt!r}")


def _parse_jsonl(text: str) -> list[BidBatch]:
    batches, tag = [], 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        where = f"line {lineno}"
        try:
            obj = json.loads(line, parse_float=Fraction)
        except json.JSONDecodeError as exc:
            raise DataError(f"{where}: invalid JSON ({exc.msg})") from None
        if not isinstance(obj, dict) or "block" not in obj or "bids" not in obj:
            raise DataError(f"{where}: expected an object with 'block' and 'bids'")
        if not isinstance(obj["block"], int) or not isinstance(obj["bids"], list):
            raise DataError(f"{where}: 'block' must be an integer and 'bids' a list")
        bids = []
        for bid in obj["bids"]:
            if not isinstance(bid, list) or len(bid) != 2:
                raise DataError(f"{where}: each bid must be [price, quantity]")
            bids.append((_num(bid[0], where), _num(bid[1], where), tag))
            tag += 1
        try:
            batches.append(BidBatch(obj["block"], tuple(bids)))
        except DataError as exc:
            raise DataError(f"{where}: {exc}") from None
    return batches


def _parse_csv(text: str) -> list[BidBatch]:
    grouped: dict[int, list] = {}
    order: list[int] = []
    tag = 0
    for lineno, row in enumerate(csv.reader(text.splitlines()), start=1):
        if not row or not "".join(row).strip():
            continue
        if lineno == 1 and row[0].strip().lower() == "block":
            continue
        where = f"line {lineno}"
        if len(row) != 3:
            raise DataError(f"{where}: expected block,price,quantity")
        try:
            block = int(row[0])
        except ValueError:
            raise DataError(f"{where}: bad block number {row[0]!r}") from None
        if order and block < order[-1]:
            raise DataError(f"{where}: rows must be sorted by block")
        if block not in grouped:
            grouped[block] = []
            order.append(block)
        grouped[block].append((_num(row[1], where), _num(row[2], where), tag))
        tag += 1
    if not order:
        raise DataError("no bid rows")
    return [BidBatch(b, tuple(grouped[b])) for b in order]


def write_jsonl(batches: Sequence[BidBatch], path) -> None:
    with open(path, "w") as fh:
        for batch in batches:
            bids = [[str(p), str(q)] for p, q, _ in batch.bids]
            fh.write(json.dumps({"block": batch.block_id, "bids": bids}) + "\n")


# ---- JSON-RPC ----------------------------------------------------------------

def _rpc(endpoint: str, method: str, params: list, req_id: int, timeout: float):
    body = json.dumps({"jsonrpc": "2.0", "id": req_id, "method": method, "params": params}).encode()
    req = urllib.request.Request(endpoint, data=body, headers={"Content-Type": "application/json"})
    with urllib.request.urlopen(req, timeout=timeout) as resp:
        payload = json.loads(resp.read())
    if "error" in payload and payload["error"]:
        raise RuntimeError(f"RPC error: {payload['error']}")
    if "result" not in payload:
        raise RuntimeError("response has no result")
    return payload["result"]


def _hex(raw, what: str) -> int:
    if not isinstance(raw, str) or not raw.startswith("0x"):
        raise ValueError(f"{what} is not a hex quantity: {raw!r}")
    return int(raw, 16)


def latest_block(endpoint: str, timeout: float = 30.0) -> int:
    return _hex(_rpc(endpoint, "eth_blockNumber", [], 0, timeout), "block number")


def _fetch_one(endpoint: str, number: int, timeout: float) -> BidBatch:
    try:
        block = _rpc(endpoint, "eth_getBlockByNumber", [hex(number), True], number, timeout)
    except (urllib.error.URLError, OSError, ValueError, RuntimeError) as exc:
        raise FetchError(number, f"request failed: {exc}") from None
    if not isinstance(block, dict):
        raise FetchError(number, "block not found")
    txs = block.get("transactions")
    if not isinstance(txs, list):
        raise FetchError(number, "response has no 'transactions' list")
    bids = []
    for i, tx in enumerate(txs):
        if not isinstance(tx, dict):
            raise FetchError(number, f"transaction {i} is not an object (need full transactions)")
        try:
            qty = _hex(tx["gas"], "gas")
            raw_price = tx.get("maxFeePerGas") or tx["gasPrice"]
            price = _hex(raw_price, "price")
        except (KeyError, ValueError) as exc:
            raise FetchError(number, f"transaction {i}: missing or bad field {exc}") from None
        if qty > 0:
            bids.append((Fraction(price), Fraction(qty), i))
    return BidBatch(number, tuple(bids))


def fetch_blocks(endpoint_url: str | None, first_block: int, last_block: int,
                 *, workers: int = 4, timeout: float = 30.0) -> list[BidBatch]:
    """Blocks ``first_block..last_block`` via ``eth_getBlockByNumber``.

    Any failing block raises :class:`FetchError`; partial results are never
    returned.
    """
    endpoint = endpoint_url or os.environ.get(RPC_ENV)
    if not endpoint:
        raise ValueError(f"no RPC endpoint given and {RPC_ENV} is unset")
    if last_block < first_block:
        raise ValueError("last_block precedes first_block")
    numbers = list(range(first_block, last_block + 1))
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        return list(pool.map(lambda n: _fetch_one(endpoint, n, timeout), numbers))


# ---- replay ------------------------------------------------------------------

@dataclass
class BlockOutcome:
    block_id: int
    serial_price: Fraction
    serial_quantity: Fraction
    serial_revenue: Fraction
    serial_welfare: Fraction
    pent_after: Fraction
    rationed: bool


@dataclass
class ReplayReport:
    per_block: list[BlockOutcome]
    serial_revenue: Fraction
    serial_welfare: Fraction
    baseline_revenue: Fraction | None = None
    baseline_welfare: Fraction | None = None
    caveats: list[str] = field(default_factory=list)

    @property
    def revenue_ratio(self):
        if not self.baseline_revenue:
            return None
        return self.serial_revenue / self.baseline_revenue

    @property
    def welfare_ratio(self):
        if not self.baseline_welfare:
            return None
        return self.serial_welfare / self.baseline_welfare

    def to_json(self) -> str:
        def s(x):
            return None if x is None else str(x)

        def d(x):
            return None if x is None else float(x)

        payload = {
            "per_block": [
                {
                    "block_id": b.block_id,
                    "serial_price": s(b.serial_price),
                    "serial_quantity": s(b.serial_quantity),
                    "serial_revenue": s(b.serial_revenue),
                    "serial_welfare": s(b.serial_welfare),
                    "pent_after": s(b.pent_after),
                    "rationed": b.rationed,
                }
                for b in self.per_block
            ],
            "totals": {
                "serial_revenue": s(self.serial_revenue),
                "serial_welfare": s(self.serial_welfare),
                "baseline_revenue": s(self.baseline_revenue),
                "baseline_welfare": s(self.baseline_welfare),
            },
            "ratios": {"revenue_ratio": d(self.revenue_ratio), "welfare_ratio": d(self.welfare_ratio)},
            "caveats": self.caveats,
        }
        return json.dumps(payload, indent=2)


def _serve(atoms: list, price, s):
    """Sell at ``price``: returns (sold, welfare, remaining atoms, rationed)."""
    eligible = [a for a in atoms if a[0] >= price]
    rest = [a for a in atoms if a[0] < price]
    demand = sum((a[1] for a in eligible), Fraction(0))
    if demand <= s:
        welfare = sum((a[0] * a[1] for a in eligible), Fraction(0))
        return demand, welfare, rest, False
    left = s
    welfare = Fraction(0)
    remaining = []
    for atom in sorted(eligible, key=lambda a: (a[2], a[3])):
        take = min(left, atom[1])
        welfare += take * atom[0]
        left -= take
        if take < atom[1]:
            remaining.append((atom[0], atom[1] - take, atom[2], atom[3]))
    # keep pent-up atoms in arrival order
    remaining = sorted(rest + remaining, key=lambda a: (a[2], a[3]))
    return s, welfare, remaining, True


def step_argmax(atoms: list, s):
    """Revenue-maximizing atom price (ties to the highest) and its revenue."""
    best_p, best_r = None, None
    demand = Fraction(0)
    by_price: dict = {}
    for a in atoms:
        by_price[a[0]] = by_price.get(a[0], Fraction(0)) + a[1]
    for p in sorted(by_price, reverse=True):
        demand += by_price[p]
        r = p * min(s, demand)
        if best_r is None or r > best_r:
            best_p, best_r = p, r
    return best_p, best_r


def replay(batches: Sequence[BidBatch], s) -> tuple[Trace, ReplayReport]:
    """Serial monopoly over blocks; unsold bids stay pending for later blocks."""
    s = to_fraction(s)
    if not s > 0:
        raise ValueError("supply must be positive")
    # atom: (price, qty, block order, arrival tag)
    pending: list = []
    records, outcomes = [], []
    caveats = []
    rev_total = wel_total = Fraction(0)
    for k, batch in enumerate(batches):
        atoms = pending + [(p, q, k, tag) for p, q, tag in batch.bids]
        if not atoms:
            price = Fraction(0)
            sold, welfare, pending, rationed = Fraction(0), Fraction(0), [], False
        else:
            price, _ = step_argmax(atoms, s)
            sold, welfare, pending, rationed = _serve(atoms, price, s)
        if rationed:
            caveats.append(f"block {batch.block_id}: demand at {price} exceeded supply; rationed by arrival")
        revenue = price * sold
        rev_total += revenue
        wel_total += welfare
        left = sum((a[1] for a in pending), Fraction(0))
        outcomes.append(BlockOutcome(batch.block_id, price, sold, revenue, welfare, left, rationed))
        records.append(StepRecord(k + 1, price, sold, revenue, welfare, len(pending)))
    final = MarketState(len(records), AtomCurve(tuple((a[0], a[1], a[3]) for a in pending)), None, s)
    report = ReplayReport(outcomes, rev_total, wel_total, caveats=caveats)
    return Trace(records, final, "exact"), report


def baseline_metrics(batches: Sequence[BidBatch], paid_prices: Sequence, s) -> tuple[Fraction, Fraction]:
    """Revenue and bid-valued welfare when each block charges its paid price.

    Each block serves its own bids at or above the paid price, at most ``s``
    units, with the same arrival-order rationing.
    """
    if len(paid_prices) != len(batches):
        raise ValueError(f"{len(paid_prices)} paid prices for {len(batches)} blocks")
    s = to_fraction(s)
    revenue = welfare = Fraction(0)
    for k, (batch, paid) in enumerate(zip(batches, paid_prices)):
        paid = to_fraction(paid)
        atoms = [(p, q, k, tag) for p, q, tag in batch.bids]
        sold, w, _, _ = _serve(atoms, paid, s)
        revenue += paid * sold
        welfare += w
    return revenue, welfare


def clearing_price(batch: BidBatch, s) -> Fraction:
    """Highest atom price at which the block's own bids fill ``s``.

    With excess supply this is the lowest bid (everyone fits).
    """
    if not batch.bids:
        return Fraction(0)
    demand = Fraction(0)
    prices = sorted({p for p, _, _ in batch.bids}, reverse=True)
    for p in prices:
        demand += sum(q for bp, q, _ in batch.bids if bp == p)
        if demand >= s:
            return p
    return prices[-1]


def replay_with_baseline(batches: Sequence[BidBatch], s, paid_prices: Sequence | None = None):
    """Replay plus baseline totals; paid prices default to per-block clearing prices."""
    trace, report = replay(batches, s)
    if paid_prices is None:
        paid_prices = [clearing_price(b, to_fraction(s)) for b in batches]
        report.caveats.append("baseline paid prices are per-block market-clearing prices")
    report.baseline_revenue, report.baseline_welfare = baseline_metrics(batches, paid_prices, s)
    return trace, report


def conservation_holds(batches: Sequence[BidBatch], report: ReplayReport) -> bool:
    """Bid volume equals sold volume plus pending volume after every block."""
    arrived = sold = Fraction(0)
    for batch, out in zip(batches, report.per_block):
        arrived += batch.total()
        sold += out.serial_quantity
        if arrived != sold + out.pent_after:
            return False
    return True
