"""Digital-goods auctions and the benchmarks used to judge them."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..errors import ContractViolationError, InvalidInputError, SearchError

NO_THRESHOLD = None


def circuit_auction(bids: Sequence[float], rng: np.random.Generator):
    """Compare every agent with its successor on a uniformly random cycle.

    An agent wins iff its bid strictly exceeds its successor's and then
    pays the successor's bid. Returns ``(winners, payments)``.
    """
    bids = np.asarray(bids, dtype=float)
    n = len(bids)
    if n < 2:
        raise InvalidInputError(f"circuit auction needs at least 2 agents, got {n}")
    if np.any(bids < 0):
        raise InvalidInputError("bids must be non-negative")
    order = rng.permutation(n)
    successor = np.empty(n, dtype=int)
    successor[order] = np.roll(order, -1)
    peer = bids[successor]
    won = bids > peer
    payments = np.where(won, peer, 0.0)
    return tuple(np.flatnonzero(won).tolist()), payments


def opt_single_price(values: Sequence[float]):
    """Best single posted price and its revenue; ties go to the lower price."""
    v = np.sort(np.asarray(values, dtype=float))[::-1]
    if len(v) == 0:
        raise InvalidInputError("values must be non-empty")
    best_price, best_rev = 0.0, -1.0
    # descending sweep: price v[i] sells to i + 1 buyers; ">=" keeps the lower price on ties
    for i, p in enumerate(v):
        rev = float(p) * (i + 1)
        if rev >= best_rev:
            best_price, best_rev = float(p), rev
    return best_price, best_rev


def posted_price_payments(values, price):
    values = np.asarray(values, dtype=float)
    return np.where(values >= price, price, 0.0)


def opt_price_mechanism(values, rng=None):
    """Oracle that knows the values and posts the optimal single price."""
    price, _ = opt_single_price(values)
    return posted_price_payments(values, price)


def circuit_mechanism(values, rng):
    return circuit_auction(values, rng)[1]


def alpha_beta_filter(values, alpha: float) -> bool:
    """Whether the profile lies in the benchmark domain ``OPT >= alpha * max``."""
    if alpha < 0:
        raise InvalidInputError("alpha must be non-negative")
    _, opt = opt_single_price(values)
    return opt >= alpha * float(np.max(values))


def vcg_digital_good(values):
    """Everyone receives the replicable good; nobody imposes an externality,
    so every VCG payment is zero."""
    return np.zeros(len(values))


def uniform_sampler(n, low=0.0, high=1.0):
    def sample(rng):
        return rng.uniform(low, high, n)

    return sample


@dataclass(frozen=True)
class CompetitivenessReport:
    trials: int
    evaluated: int
    mean_opt: float
    mean_revenue: float
    ratio_of_means: float
    worst_ratio: float | None
    zero_revenue_count: int
    opts: tuple
    revenues: tuple


def measure_competitiveness(
    mechanism: Callable,
    sampler: Callable,
    trials: int,
    rng: np.random.Generator,
    alpha: float | None = None,
) -> CompetitivenessReport:
    """Empirical OPT/revenue ratios over sampled value profiles.

    Profiles outside the ``alpha`` benchmark domain are skipped. Zero-revenue
    instances are tallied and excluded from the worst-case ratio.
    """
    if trials < 1:
        raise InvalidInputError("trials must be >= 1")
    opts, revenues = [], []
    for _ in range(trials):
        values = sampler(rng)
        if alpha is not None and not alpha_beta_filter(values, alpha):
            continue
        _, opt = opt_single_price(values)
        revenue = math.fsum(mechanism(values, rng))
        opts.append(opt)
        revenues.append(revenue)
    zero = sum(r <= 0 for r in revenues)
    ratios = [o / r for o, r in zip(opts, revenues) if r > 0]
    mean_opt = float(np.mean(opts)) if opts else math.nan
    mean_rev = float(np.mean(revenues)) if revenues else math.nan
    if not opts:
        ratio = math.nan
    elif mean_rev > 0:
        ratio = mean_opt / mean_rev
    else:
        ratio = math.inf
    return CompetitivenessReport(
        trials=trials,
        evaluated=len(opts),
        mean_opt=mean_opt,
        mean_revenue=mean_rev,
        ratio_of_means=ratio,
        worst_ratio=max(ratios) if ratios else None,
        zero_revenue_count=int(zero),
        opts=tuple(opts),
        revenues=tuple(revenues),
    )


def threshold_payment(allocation_rule, agent: int, profile, interval, tol: float = 1e-9, probes: int = 16):
    """Infimum report at which ``agent`` still wins, others held fixed.

    ``allocation_rule(profile)`` returns a per-agent win indicator. Returns
    the interval bottom if the agent already wins there, and
    :data:`NO_THRESHOLD` if it never wins inside the interval.
    """
    lo, hi = (float(x) for x in interval)
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo >= hi:
        raise SearchError(f"interval {interval!r} does not bracket a search range")
    profile = [float(x) for x in profile]

    def wins(report):
        profile[agent] = report
        return bool(allocation_rule(list(profile))[agent])

    samples = np.linspace(lo, hi, probes)
    outcome = [wins(x) for x in samples]
    for a, b in zip(outcome, outcome[1:]):
        if a and not b:
            raise ContractViolationError("allocation rule is not monotone in the agent's report")
    if outcome[0]:
        return lo
    if not outcome[-1]:
        return NO_THRESHOLD
    first = outcome.index(True)
    lo, hi = float(samples[first - 1]), float(samples[first])
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if wins(mid):
            hi = mid
        else:
            lo = mid
    return hi
