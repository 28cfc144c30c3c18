"""Round engine for the federated model auction.

Each round every client trains, peers evaluate the models, the server
matches each client with a random peer, and a client receives the best
aggregate model only if its bid-weighted gain strictly beats its peer's.
Winners pay the peer's bid-weighted gain; everyone pays its evaluation
punishments.
"""

from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import functions
from .clients import ClientState, emit_bid, round_utility, train_step
from .errors import InvalidConfigError, InvalidInputError
from .fedeval import fed_eval
from .money import from_nanos, to_nanos


class MatchingMode(str, enum.Enum):
    UNIFORM_PERMUTATION = "uniform_permutation"
    DERANGEMENT = "derangement"


class PaymentRule(str, enum.Enum):
    PEER_GAIN = "peer_gain"
    OWN_GAIN = "own_gain"


@dataclass(frozen=True)
class MechanismConfig:
    num_clients: int
    num_rounds: int
    thresh_fn: Callable = field(default_factory=lambda: functions.constant_thresh(0.0))
    punish_fn: Callable = field(default_factory=functions.zero_punish)
    aggr_fn: Callable = functions.aggr_max
    matching_mode: MatchingMode = MatchingMode.UNIFORM_PERMUTATION
    payment_rule: PaymentRule = PaymentRule.PEER_GAIN
    rng_seed: int = 0

    def __post_init__(self):
        if self.num_clients < 2:
            raise InvalidConfigError("need at least 2 clients", "mechanism.num_clients")
        if self.num_rounds < 1:
            raise InvalidConfigError("need at least 1 round", "mechanism.num_rounds")
        if not 0 <= self.rng_seed < 2**64:
            raise InvalidConfigError("seed must be an unsigned 64-bit integer", "mechanism.rng_seed")
        object.__setattr__(self, "matching_mode", MatchingMode(self.matching_mode))
        object.__setattr__(self, "payment_rule", PaymentRule(self.payment_rule))


@dataclass(frozen=True)
class Matching:
    perm: tuple

    def __post_init__(self):
        perm = tuple(int(x) for x in self.perm)
        if sorted(perm) != list(range(len(perm))):
            raise InvalidInputError(f"not a permutation: {perm}")
        object.__setattr__(self, "perm", perm)

    def __getitem__(self, i):
        return self.perm[i]

    def __len__(self):
        return len(self.perm)

    @property
    def is_derangement(self):
        return all(p != i for i, p in enumerate(self.perm))


@dataclass
class Ledger:
    """Cumulative per-client transfers and punishments, in nano-units."""

    transfers: list
    punishments: list

    @classmethod
    def empty(cls, k):
        return cls([0] * k, [0] * k)

    def record(self, transfers, punishments):
        for i, (t, p) in enumerate(zip(transfers, punishments)):
            self.transfers[i] += int(t)
            self.punishments[i] += int(p)

    @property
    def revenue(self):
        return sum(self.transfers)


@dataclass(frozen=True)
class RoundOutcome:
    round_index: int
    bids: tuple
    qualities: tuple  # end of round, after model transfer
    scores: tuple
    aggregate_scores: tuple
    best_score: float
    best_owner: int
    matching: tuple
    winners: tuple
    auction_payments: tuple  # nano-units
    punishments: tuple  # nano-units
    transfers: tuple  # nano-units, positive = client pays
    utilities: tuple
    assignment: tuple = ()
    individual_reports: tuple = ()
    aggregate_reports: tuple = ()

    @property
    def revenue(self):
        return sum(self.transfers)

    def winner_predicate(self):
        """Recompute the winner set from the stored bids, scores and matching."""
        gains = [b * (self.best_score - s) for b, s in zip(self.bids, self.scores)]
        return tuple(i for i, j in enumerate(self.matching) if gains[i] > gains[j])

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data):
        def tup(x):
            return tuple(tup(v) for v in x) if isinstance(x, (list, tuple)) else x

        return cls(**{k: tup(v) for k, v in data.items()})


@dataclass
class SimulationResult:
    rounds: tuple
    ledger: Ledger
    cumulative_utilities: tuple
    final_qualities: tuple


def draw_matching(k: int, mode=MatchingMode.UNIFORM_PERMUTATION, rng=None) -> Matching:
    """Uniform random permutation, or uniform derangement by rejection."""
    if k < 2:
        raise InvalidConfigError(f"matching needs k >= 2, got {k}", "mechanism.num_clients")
    mode = MatchingMode(mode)
    rng = np.random.default_rng() if rng is None else rng
    while True:
        perm = rng.permutation(k)
        if mode is MatchingMode.UNIFORM_PERMUTATION or np.all(perm != np.arange(k)):
            return Matching(tuple(perm.tolist()))


def allocation_decision(bids, scores, best_score, matching, payment_rule=PaymentRule.PEER_GAIN):
    """Return ``(winners, auction_payments)``; payments are in nano-units."""
    bids = np.asarray(bids, dtype=float)
    scores = np.asarray(scores, dtype=float)
    perm = list(matching.perm if isinstance(matching, Matching) else matching)
    k = len(bids)
    if len(scores) != k or len(perm) != k:
        raise InvalidInputError(f"length mismatch: bids={k}, scores={len(scores)}, matching={len(perm)}")
    if not np.all(np.isfinite(bids)) or np.any(bids < 0):
        raise InvalidInputError("bids must be finite and non-negative")
    rule = PaymentRule(payment_rule)
    gains = bids * (best_score - scores)
    winners = []
    payments = [0] * k
    for i in range(k):
        j = perm[i]
        if gains[i] > gains[j]:
            winners.append(i)
            if rule is PaymentRule.PEER_GAIN:
                payments[i] = to_nanos(gains[j])
            else:
                payments[i] = to_nanos(bids[j] * (best_score - scores[i]))
    return tuple(winners), tuple(payments)


def settle_round(winners, auction_payments, punishments, ledger: Ledger | None = None):
    """Total transfer per client: auction payment (winners only) plus punishment."""
    winners = set(winners)
    transfers = tuple(
        (int(auction_payments[i]) if i in winners else 0) + int(p) for i, p in enumerate(punishments)
    )
    if ledger is not None:
        ledger.record(transfers, punishments)
    return transfers


def run_round(clients: Sequence[ClientState], config: MechanismConfig, rng, bids=None, round_index=0, ledger=None):
    """Advance every client by one federated round, mutating their quality
    and cumulative utility, and return the immutable round record."""
    k = len(clients)
    if bids is None:
        bids = [emit_bid(c) for c in clients]
    bids = tuple(float(b) for b in bids)
    for c in clients:
        c.quality = train_step(c)

    ev = fed_eval(clients, bids, config, rng)
    matching = draw_matching(k, config.matching_mode, rng)
    winners, payments = allocation_decision(bids, ev.scores, ev.best_score, matching, config.payment_rule)
    transfers = settle_round(winners, payments, ev.punishments, ledger)

    for i in winners:
        # a rational client never swaps in a worse model
        clients[i].quality = max(clients[i].quality, ev.best_score)
    utilities = []
    for c, t in zip(clients, transfers):
        u = round_utility(c.valuation, c.quality, from_nanos(t))
        c.cumulative_utility += u
        utilities.append(u)

    def nan_to_none(m):
        return tuple(tuple(None if np.isnan(x) else float(x) for x in row) for row in m)

    return RoundOutcome(
        round_index=round_index,
        bids=bids,
        qualities=tuple(float(c.quality) for c in clients),
        scores=tuple(ev.scores),
        aggregate_scores=tuple(ev.consensus.aggregate_scores),
        best_score=float(ev.best_score),
        best_owner=ev.best_owner,
        matching=matching.perm,
        winners=winners,
        auction_payments=payments,
        punishments=tuple(ev.punishments),
        transfers=transfers,
        utilities=tuple(utilities),
        assignment=tuple(tuple(int(x) for x in row) for row in ev.assignment.matrix),
        individual_reports=nan_to_none(ev.reports.individual),
        aggregate_reports=nan_to_none(ev.reports.aggregated),
    )


def run_simulation(config: MechanismConfig, scenario: Sequence[ClientState]) -> SimulationResult:
    """Run ``config.num_rounds`` rounds on copies of the scenario's clients.

    Bids are emitted once at initialisation and held for the whole run.
    """
    if len(scenario) != config.num_clients:
        raise InvalidConfigError(
            f"scenario has {len(scenario)} clients but num_clients={config.num_clients}", "clients"
        )
    clients = [c.copy() for c in scenario]
    for c in clients:
        c.cumulative_utility = 0.0
    rng = np.random.default_rng(config.rng_seed)
    bids = [emit_bid(c) for c in clients]
    ledger = Ledger.empty(len(clients))
    rounds = tuple(
        run_round(clients, config, rng, bids=bids, round_index=r, ledger=ledger) for r in range(config.num_rounds)
    )
    return SimulationResult(
        rounds=rounds,
        ledger=ledger,
        cumulative_utilities=tuple(c.cumulative_utility for c in clients),
        final_qualities=tuple(c.quality for c in clients),
    )
