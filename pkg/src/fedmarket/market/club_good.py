"""Random-sampling mechanism for the club-good (seller side) problem and
its exhaustive oracle."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..errors import SizeError

MAX_BRUTEFORCE = 20


@dataclass(frozen=True, eq=False)
class ClubGoodResult:
    winners: tuple
    payments: np.ndarray
    surplus: float
    candidates: tuple
    median_bid: float | None


def _surplus(amounts, members, cost_fn):
    # summed in ascending index order so mechanism and oracle round alike
    return sum(float(amounts[i]) for i in sorted(members)) - cost_fn(tuple(sorted(members)))


def club_good_mechanism(bids: Sequence[float], cost_fn: Callable, rng: np.random.Generator) -> ClubGoodResult:
    """Sample candidates with probability 1/2, reject the lower half of the
    candidates by bid (median included) and charge the rest the median.

    With ``c`` candidates sorted ascending by ``(bid, index)`` the median is
    the bid at 1-indexed position ``ceil(c / 2)``; fewer than two candidates
    means no winners.
    """
    bids = np.asarray(bids, dtype=float)
    n = len(bids)
    picked = rng.random(n) < 0.5
    candidates = tuple(np.flatnonzero(picked).tolist())
    payments = np.zeros(n)
    c = len(candidates)
    if c <= 1:
        return ClubGoodResult((), payments, 0.0 - cost_fn(()), candidates, None)
    ranked = sorted(candidates, key=lambda i: (bids[i], i))
    cut = math.ceil(c / 2)
    median = float(bids[ranked[cut - 1]])
    winners = tuple(sorted(ranked[cut:]))
    payments[list(winners)] = median
    return ClubGoodResult(winners, payments, _surplus(payments, winners, cost_fn), candidates, median)


def club_good_bruteforce(bids: Sequence[float], cost_fn: Callable):
    """Maximum of ``sum(bids[A]) - cost(A)`` over every subset ``A``.

    Charging each winner its full bid is the most an individually rational
    mechanism can extract, so this bounds every such mechanism's surplus.
    Returns ``(surplus, witness)``; the first maximiser in size-then-lex
    order wins ties.
    """
    n = len(bids)
    if n > MAX_BRUTEFORCE:
        raise SizeError(f"brute force limited to {MAX_BRUTEFORCE} agents, got {n}")
    best, witness = -math.inf, ()
    for size in range(n + 1):
        for subset in itertools.combinations(range(n), size):
            value = _surplus(bids, subset, cost_fn)
            if value > best:
                best, witness = value, subset
    return best, witness
