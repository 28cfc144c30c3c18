"""Two-stage double auction over an empty leakage graph."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateMarketError
from .auctions import circuit_auction
from .club_good import club_good_mechanism
from .model import Allocation, MarketInstance


@dataclass(frozen=True)
class DoubleAuctionResult:
    allocation: Allocation
    revenue: float
    buyer_winners: tuple
    unit_payments: np.ndarray  # forward-stage payments per unit of quality
    gain: float


def run_double_auction(instance: MarketInstance, rng: np.random.Generator) -> DoubleAuctionResult:
    """Forward stage then backward stage.

    Buyers run a circuit auction on their per-unit values; winners pay
    ``g(A) * unit_payment`` and receive quality ``g(A)``. Sellers then run
    the club-good mechanism on negated costs with cost function
    ``-(sum of unit payments) * g(A)``: the cheaper half of the sampled
    sellers join and each is paid the median cost.
    """
    instance.require_empty_graph("run_double_auction")
    if instance.n < 2:
        raise DegenerateMarketError(f"degenerate market: forward auction needs >= 2 buyers, got {instance.n}")
    buyer_winners, unit_payments = circuit_auction(instance.buyer_values, rng)
    scale = float(unit_payments.sum())

    def backward_cost(sellers):
        return -scale * instance.gain_fn(sellers)

    backward = club_good_mechanism([-c for c in instance.seller_costs], backward_cost, rng)
    participation = np.zeros(instance.m, dtype=bool)
    participation[list(backward.winners)] = True
    gain = instance.gain_fn(backward.winners)

    qualities = np.zeros(instance.n)
    qualities[list(buyer_winners)] = gain
    buyer_transfers = gain * unit_payments
    seller_transfers = np.where(participation, -backward.payments, 0.0)
    allocation = Allocation(participation, qualities, buyer_transfers, seller_transfers)
    return DoubleAuctionResult(allocation, allocation.revenue, buyer_winners, unit_payments, gain)
