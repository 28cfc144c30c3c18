"""Peer evaluation round: evaluator assignment, score reports, median
consensus and deviation punishments.

Indexing convention: ``matrix[i, j]`` concerns model ``i`` and client
``j``. ``assignment.matrix[i, j]`` is true when client ``j`` receives and
evaluates model ``i``; report matrices use the same layout, with NaN where
no report exists.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .clients import ClientState, EvalStrategy
from .errors import InvalidConfigError
from .money import to_nanos


def _frozen(arr):
    arr = np.array(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class EvaluationAssignment:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=bool)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("assignment must be a square matrix")
        if not m.diagonal().all():
            raise ValueError("every client must evaluate its own model")
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def k(self):
        return self.matrix.shape[0]

    def evaluators_of(self, model: int) -> list[int]:
        """Clients that receive (and score) ``model``."""
        return np.flatnonzero(self.matrix[model]).tolist()

    def received_by(self, client: int) -> list[int]:
        """Models ``client`` receives; its aggregate is built from these."""
        return np.flatnonzero(self.matrix[:, client]).tolist()

    def __eq__(self, other):
        return isinstance(other, EvaluationAssignment) and np.array_equal(self.matrix, other.matrix)


@dataclass(frozen=True, eq=False)
class ScoreReports:
    """``individual[i, j]``: score of model ``i`` reported by ``j``.
    ``aggregated[i, j]``: score of client ``i``'s aggregate reported by ``j``."""

    individual: np.ndarray
    aggregated: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "individual", _frozen(np.asarray(self.individual, dtype=float)))
        object.__setattr__(self, "aggregated", _frozen(np.asarray(self.aggregated, dtype=float)))

    def __eq__(self, other):
        return (
            isinstance(other, ScoreReports)
            and np.array_equal(self.individual, other.individual, equal_nan=True)
            and np.array_equal(self.aggregated, other.aggregated, equal_nan=True)
        )


@dataclass(frozen=True)
class ConsensusResult:
    scores: tuple
    aggregate_scores: tuple
    best: float
    best_owner: int


@dataclass(frozen=True)
class FedEvalOutcome:
    punishments: tuple  # nano-units
    scores: tuple
    best_score: float
    best_owner: int
    assignment: EvaluationAssignment
    reports: ScoreReports
    consensus: ConsensusResult


def assign_evaluators(bids: Sequence[float], thresh_fn: Callable, rng: np.random.Generator):
    """Draw the Bernoulli evaluator assignment.

    One uniform is drawn per cell, diagonal included, and compared against
    the row's transmission probability. The draw count is independent of the
    bids, so raising one bid under a fixed seed can only add evaluators.
    """
    bids = np.asarray(bids, dtype=float)
    k = len(bids)
    probs = np.array([thresh_fn(b) for b in bids], dtype=float)
    if not np.all((probs >= 0.0) & (probs <= 1.0)):
        raise InvalidConfigError(f"thresh_fn returned values outside [0, 1]: {probs.tolist()}", "mechanism.thresh")
    u = rng.random((k, k))
    a = u < probs[:, None]
    np.fill_diagonal(a, True)
    return EvaluationAssignment(a)


def synthesize_reports(
    assignment: EvaluationAssignment,
    true_qualities: Sequence[float],
    aggr_fn: Callable,
    evaluator_strategies: Sequence[EvalStrategy],
    data_shares: Sequence[float] | None = None,
    rng: np.random.Generator | None = None,
):
    """Simulate every evaluator's reports from true model qualities.

    Two k-by-k matrices of unit noise are drawn whenever ``rng`` is given,
    whether or not any evaluator is noisy, to keep random streams aligned.
    """
    q = np.asarray(true_qualities, dtype=float)
    k = len(q)
    shares = np.ones(k) if data_shares is None else np.asarray(data_shares, dtype=float)
    if rng is not None:
        noise_ind = rng.uniform(-1.0, 1.0, (k, k))
        noise_agg = rng.uniform(-1.0, 1.0, (k, k))
    else:
        noise_ind = noise_agg = np.zeros((k, k))

    aggregates = np.empty(k)
    for i in range(k):
        members = assignment.received_by(i)
        aggregates[i] = aggr_fn(q[members], shares[members])

    individual = np.full((k, k), np.nan)
    aggregated = np.full((k, k), np.nan)
    a = assignment.matrix
    for i in range(k):
        for j in range(k):
            if a[i, j]:
                strategy = evaluator_strategies[j]
                individual[i, j] = strategy.report(q[i], noise_ind[i, j])
                aggregated[i, j] = strategy.report(aggregates[i], noise_agg[i, j])
    return ScoreReports(individual, aggregated)


def median_consensus(reports: ScoreReports, assignment: EvaluationAssignment):
    k = assignment.k
    scores = []
    agg_scores = []
    for i in range(k):
        mask = assignment.matrix[i]
        scores.append(float(np.median(reports.individual[i, mask])))
        agg_scores.append(float(np.median(reports.aggregated[i, mask])))
    # np.argmax returns the first maximiser: ties go to the lowest index
    owner = int(np.argmax(agg_scores))
    return ConsensusResult(tuple(scores), tuple(agg_scores), agg_scores[owner], owner)


def compute_punishments(reports, consensus, assignment, punish_fn):
    """Per-evaluator punishment in nano-units, summed over all its reports."""
    if punish_fn(0.0) != 0:
        raise InvalidConfigError("punish_fn(0) must be 0", "mechanism.punish")
    k = assignment.k
    totals = [0.0] * k
    s = np.asarray(consensus.scores)
    s_agg = np.asarray(consensus.aggregate_scores)
    for i in range(k):
        for j in assignment.evaluators_of(i):
            amount = punish_fn(reports.individual[i, j] - s[i]) + punish_fn(reports.aggregated[i, j] - s_agg[i])
            if amount < 0:
                raise InvalidConfigError(f"punish_fn returned negative amount {amount}", "mechanism.punish")
            totals[j] += amount
    return tuple(to_nanos(x) for x in totals)


def fed_eval(clients: Sequence[ClientState], bids, config, rng):
    """Run one peer-evaluation pass over the clients' current qualities."""
    qualities = [c.quality for c in clients]
    shares = [c.data_share for c in clients]
    strategies = [c.eval_strategy for c in clients]
    assignment = assign_evaluators(bids, config.thresh_fn, rng)
    reports = synthesize_reports(assignment, qualities, config.aggr_fn, strategies, shares, rng)
    consensus = median_consensus(reports, assignment)
    punishments = compute_punishments(reports, consensus, assignment, config.punish_fn)
    return FedEvalOutcome(
        punishments=punishments,
        scores=consensus.scores,
        best_score=consensus.best,
        best_owner=consensus.best_owner,
        assignment=assignment,
        reports=reports,
        consensus=consensus,
    )


def consensus_error_by_adversaries(evaluators, offset, honest_quality, rng=None, honest_noise=0.0, trials=1):
    """Worst consensus error on one model as adversarial evaluators are added.

    ``evaluators`` clients all score a model of quality ``honest_quality``;
    for each adversary count ``a`` in ``0..evaluators`` the last ``a`` of them
    report with ``offset``. Returns ``[(a, max |consensus - quality|), ...]``.
    """
    m = int(evaluators)
    assignment = EvaluationAssignment(np.ones((m, m), dtype=bool))
    qualities = [honest_quality] * m
    honest = EvalStrategy.noisy(honest_noise) if honest_noise > 0 else EvalStrategy.truthful()
    rows = []
    for a in range(m + 1):
        strategies = [honest] * (m - a) + [EvalStrategy.adversarial(offset)] * a
        worst = 0.0
        for _ in range(trials):
            reports = synthesize_reports(assignment, qualities, lambda q, s: float(np.max(q)), strategies, rng=rng)
            consensus = median_consensus(reports, assignment)
            worst = max(worst, abs(consensus.scores[0] - honest_quality))
        rows.append((a, worst))
    return rows
