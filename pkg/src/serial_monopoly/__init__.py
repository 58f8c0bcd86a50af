"""Serial-monopoly pricing dynamics: exact simulation, verification and replay."""

from .analytics import MarketPoints, market_points, theoretical_delta_bound, welfare_ratio
from .curve import AtomCurve, CurveError, DemandCurve, canonicalize, revenue_maximizer
from .dynamics import MarketState, StepRecord, Trace, run, step
from .families import DemandFamilySpec, approximate_pl
from .ingest import BidBatch, ReplayReport, baseline_metrics, fetch_blocks, parse_blocks, replay
from .strategic import ManipulationFn, PriceTrajectory, best_response, equilibrium_gap, induced_demand, run_strategic
from .verify import VerifyReport, verify_run, verify_trace

__all__ = [
    "AtomCurve", "BidBatch", "CurveError", "DemandCurve", "DemandFamilySpec", "ManipulationFn",
    "MarketPoints", "MarketState", "PriceTrajectory", "ReplayReport", "StepRecord", "Trace",
    "VerifyReport", "approximate_pl", "baseline_metrics", "best_response", "canonicalize",
    "equilibrium_gap", "fetch_blocks", "induced_demand", "market_points", "parse_blocks",
    "replay", "revenue_maximizer", "run", "run_strategic", "step", "theoretical_delta_bound",
    "verify_run", "verify_trace", "welfare_ratio",
]
