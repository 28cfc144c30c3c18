"""Simulation engine and mechanism-design toolkit for selling federated
models through prior-independent auctions."""

from .clients import BidStrategy, ClientState, EvalStrategy, LearningCurve, deviation_sweep
from .mechanism import (
    Ledger,
    Matching,
    MatchingMode,
    MechanismConfig,
    PaymentRule,
    RoundOutcome,
    SimulationResult,
    allocation_decision,
    draw_matching,
    run_round,
    run_simulation,
    settle_round,
)

__version__ = "0.1.0"
