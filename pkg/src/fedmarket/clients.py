"""Synthetic clients standing in for real training and scoring.

Model quality follows a saturating learning curve driven by the client's
data share, bids and evaluation reports follow configurable strategies,
and per-round utility is valuation times end-of-round quality minus the
money the client paid.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Sequence

from .errors import InvalidConfigError, InvalidInputError

logger = logging.getLogger(__name__)

BID_KINDS = ("truthful", "fixed", "shaded")
EVAL_KINDS = ("truthful", "noisy", "adversarial")


def _clamp01(x):
    return float(min(1.0, max(0.0, x)))


@dataclass(frozen=True)
class BidStrategy:
    """How a client turns its valuation into a bid.

    ``value`` is the fixed bid for ``fixed`` and the multiplier for ``shaded``.
    """

    kind: str = "truthful"
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in BID_KINDS:
            raise InvalidConfigError(f"unknown bid strategy {self.kind!r}", "bid_strategy.kind")

    @classmethod
    def truthful(cls):
        return cls("truthful")

    @classmethod
    def fixed(cls, bid):
        return cls("fixed", float(bid))

    @classmethod
    def shaded(cls, factor):
        return cls("shaded", float(factor))


@dataclass(frozen=True)
class EvalStrategy:
    """How a client reports scores of models it evaluates.

    ``value`` is the noise half-width for ``noisy`` (uniform on
    ``[-value, value]``) and the additive offset for ``adversarial``.
    """

    kind: str = "truthful"
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in EVAL_KINDS:
            raise InvalidConfigError(f"unknown eval strategy {self.kind!r}", "eval_strategy.kind")
        if self.kind == "noisy" and self.value < 0:
            raise InvalidConfigError("noise width must be >= 0", "eval_strategy.value")

    @classmethod
    def truthful(cls):
        return cls("truthful")

    @classmethod
    def noisy(cls, sigma):
        return cls("noisy", float(sigma))

    @classmethod
    def adversarial(cls, offset):
        return cls("adversarial", float(offset))

    def report(self, true_score: float, unit_noise: float = 0.0) -> float:
        """Score this evaluator reports; ``unit_noise`` is a draw from [-1, 1]."""
        if self.kind == "truthful":
            return float(true_score)
        if self.kind == "noisy":
            return _clamp01(true_score + self.value * unit_noise)
        return _clamp01(true_score + self.value)


@dataclass(frozen=True)
class LearningCurve:
    """Saturating quality dynamics: each step closes a ``rate`` fraction of
    the gap to a ceiling that grows linearly with the data share."""

    rate: float = 0.4
    base: float = 0.6
    slope: float = 0.35

    def __post_init__(self):
        if not 0.0 < self.rate <= 1.0:
            raise InvalidConfigError("rate must be in (0, 1]", "curve.rate")
        if not 0.0 <= self.base <= 1.0:
            raise InvalidConfigError("base must be in [0, 1]", "curve.base")
        if self.slope < 0.0:
            raise InvalidConfigError("slope must be >= 0", "curve.slope")

    def ceiling(self, data_share: float) -> float:
        return min(1.0, self.base + self.slope * data_share)


@dataclass
class ClientState:
    valuation: float
    data_share: float
    quality: float = 0.0
    bid_strategy: BidStrategy = field(default_factory=BidStrategy)
    eval_strategy: EvalStrategy = field(default_factory=EvalStrategy)
    curve: LearningCurve = field(default_factory=LearningCurve)
    cumulative_utility: float = 0.0

    def __post_init__(self):
        if not self.valuation >= 0.0:
            raise InvalidConfigError("valuation must be >= 0", "valuation")
        if not 0.0 < self.data_share <= 1.0:
            raise InvalidConfigError("data_share must be in (0, 1]", "data_share")
        if not 0.0 <= self.quality <= 1.0:
            raise InvalidConfigError("quality must be in [0, 1]", "quality")

    def copy(self) -> "ClientState":
        return dataclasses.replace(self)


def train_step(state: ClientState) -> float:
    """Return the quality after one incremental training step.

    Quality at or above the curve ceiling (e.g. after receiving a better
    model) is left unchanged, so training never lowers quality.
    """
    ceiling = state.curve.ceiling(state.data_share)
    if state.quality >= ceiling:
        return state.quality
    return state.quality + state.curve.rate * (ceiling - state.quality)


def emit_bid(state: ClientState) -> float:
    strategy = state.bid_strategy
    if strategy.kind == "truthful":
        bid = state.valuation
    elif strategy.kind == "fixed":
        bid = strategy.value
    else:
        bid = strategy.value * state.valuation
    if bid < 0:
        logger.warning("negative bid %r clamped to 0", bid)
        return 0.0
    return float(bid)


def round_utility(valuation: float, quality: float, transfer: float) -> float:
    """Utility of one round: valuation times end-of-round quality, minus payment."""
    return valuation * quality - transfer


@dataclass(frozen=True)
class SweepPoint:
    bid: float
    cumulative_utility: float
    total_transfer: int
    wins: int


def deviation_sweep(config, scenario: Sequence[ClientState], client: int, grid: Sequence[float]):
    """Re-run the whole simulation with ``client`` bidding each grid value.

    Every grid point uses the same seed, so all other randomness is shared
    and only the deviating bid differs between runs.
    """
    from .mechanism import run_simulation

    grid = [float(b) for b in grid]
    if not grid:
        raise InvalidInputError("bid grid is empty")
    if not 0 <= client < len(scenario):
        raise InvalidInputError(f"client index {client} out of range for {len(scenario)} clients")
    points = []
    for bid in grid:
        clients = [c.copy() for c in scenario]
        clients[client] = dataclasses.replace(clients[client], bid_strategy=BidStrategy.fixed(bid))
        result = run_simulation(config, clients)
        points.append(
            SweepPoint(
                bid=bid,
                cumulative_utility=result.cumulative_utilities[client],
                total_transfer=result.ledger.transfers[client],
                wins=sum(client in r.winners for r in result.rounds),
            )
        )
    return points

