"""Double-auction market primitives: gain functions, instances,
allocations and leakage-graph feasibility."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from ..errors import InvalidInstanceError, InvalidInputError, UnsupportedScopeError

SELLER = "seller"
BUYER = "buyer"


@dataclass(frozen=True)
class ConcaveOfCardinality:
    """``g(A) = sum of the first |A| marginals`` (extra sellers add nothing)."""

    marginals: tuple

    def __post_init__(self):
        m = tuple(float(x) for x in self.marginals)
        if any(x < 0 for x in m):
            raise InvalidInputError("marginals must be non-negative")
        if any(b > a for a, b in zip(m, m[1:])):
            raise InvalidInputError("marginals must be non-increasing")
        object.__setattr__(self, "marginals", m)

    def __call__(self, sellers: Iterable[int]) -> float:
        return float(sum(self.marginals[: len(set(sellers))]))


@dataclass(frozen=True)
class WeightedCoverage:
    """``g(A)`` is the total weight of universe elements covered by ``A``."""

    weights: tuple
    covers: tuple  # covers[s] = element indices seller s covers

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        if any(x < 0 for x in w):
            raise InvalidInputError("coverage weights must be non-negative")
        covers = tuple(frozenset(int(e) for e in c) for c in self.covers)
        for c in covers:
            if any(not 0 <= e < len(w) for e in c):
                raise InvalidInputError("coverage set references unknown element")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "covers", covers)

    def __call__(self, sellers: Iterable[int]) -> float:
        covered = set()
        for s in sellers:
            covered |= self.covers[s]
        return float(sum(self.weights[e] for e in sorted(covered)))


@dataclass(frozen=True)
class MarketInstance:
    """Sellers with costs, buyers with per-unit-quality values, a gain
    function over seller sets, and leakage edges ``((kind, idx), (BUYER, idx))``."""

    seller_costs: tuple
    buyer_values: tuple
    gain_fn: Callable
    edges: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "seller_costs", tuple(float(x) for x in self.seller_costs))
        object.__setattr__(self, "buyer_values", tuple(float(x) for x in self.buyer_values))
        if any(v < 0 for v in self.buyer_values):
            raise InvalidInstanceError("buyer values must be non-negative")
        edges = tuple((tuple(src), tuple(dst)) for src, dst in self.edges)
        for src, dst in edges:
            self._check_agent(src)
            self._check_agent(dst)
            if dst[0] != BUYER:
                raise InvalidInstanceError(f"edge {src}->{dst} must point at a buyer")
        object.__setattr__(self, "edges", edges)

    @property
    def m(self):
        return len(self.seller_costs)

    @property
    def n(self):
        return len(self.buyer_values)

    def _check_agent(self, agent):
        kind, idx = agent
        size = {SELLER: self.m, BUYER: self.n}.get(kind)
        if size is None or not 0 <= idx < size:
            raise InvalidInstanceError(f"edge references unknown agent {agent}")

    def require_empty_graph(self, op):
        if self.edges:
            raise UnsupportedScopeError(f"{op} is only defined for an empty leakage graph")


@dataclass(frozen=True, eq=False)
class Allocation:
    """Seller participation, buyer qualities and transfers.

    Buyer transfers are payments to the mechanism; seller transfers are
    payments received from it. Revenue is their difference.
    """

    participation: np.ndarray
    qualities: np.ndarray
    buyer_transfers: np.ndarray
    seller_transfers: np.ndarray

    def __post_init__(self):
        for name, dtype in [
            ("participation", bool),
            ("qualities", float),
            ("buyer_transfers", float),
            ("seller_transfers", float),
        ]:
            arr = np.array(getattr(self, name), dtype=dtype)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def participating(self):
        return tuple(np.flatnonzero(self.participation).tolist())

    @property
    def revenue(self):
        return float(self.buyer_transfers.sum() - self.seller_transfers.sum())

    def __eq__(self, other):
        return isinstance(other, Allocation) and all(
            np.array_equal(getattr(self, f), getattr(other, f))
            for f in ("participation", "qualities", "buyer_transfers", "seller_transfers")
        )


@dataclass(frozen=True)
class Violation:
    constraint: str  # "cap", "buyer_edge" or "seller_edge"
    agents: tuple
    detail: str = ""


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    violations: tuple = field(default_factory=tuple)

    def __bool__(self):
        return self.feasible


def check_feasibility(instance: MarketInstance, allocation: Allocation) -> FeasibilityReport:
    if len(allocation.participation) != instance.m or len(allocation.qualities) != instance.n:
        raise InvalidInputError("allocation dimensions do not match the instance")
    active = allocation.participating
    cap = instance.gain_fn(active)
    q = allocation.qualities
    violations = []
    for i in range(instance.n):
        if not q[i] <= cap:
            violations.append(Violation("cap", ((BUYER, i),), f"q={q[i]} > g(A)={cap}"))
    for src, dst in instance.edges:
        j = dst[1]
        if src[0] == BUYER:
            if not q[src[1]] <= q[j]:
                violations.append(Violation("buyer_edge", (src, dst), f"{q[src[1]]} > {q[j]}"))
        elif allocation.participation[src[1]]:
            single = instance.gain_fn((src[1],))
            if not single <= q[j]:
                violations.append(Violation("seller_edge", (src, dst), f"g({{{src[1]}}})={single} > {q[j]}"))
    return FeasibilityReport(not violations, tuple(violations))


def extremalize(instance: MarketInstance, allocation: Allocation) -> Allocation:
    """Round every positive buyer quality up to the full gain ``g(A)``."""
    instance.require_empty_graph("extremalize")
    cap = instance.gain_fn(allocation.participating)
    q = np.where(allocation.qualities > 0, cap, 0.0)
    return Allocation(allocation.participation, q, allocation.buyer_transfers, allocation.seller_transfers)


def build_gain(spec, num_sellers=None):
    """Gain function from ``{"kind": "concave", "marginals": [...]}`` or
    ``{"kind": "coverage", "weights": [...], "covers": [[...], ...]}``."""
    spec = dict(spec)
    kind = spec.pop("kind", None)
    required = {"concave": {"marginals"}, "coverage": {"weights", "covers"}}
    if kind not in required:
        raise InvalidInputError(f"unknown gain kind {kind!r}")
    if set(spec) != required[kind]:
        raise InvalidInputError(f"{kind} gain takes exactly {sorted(required[kind])}, got {sorted(spec)}")
    if kind == "concave":
        return ConcaveOfCardinality(tuple(spec["marginals"]))
    gain = WeightedCoverage(tuple(spec["weights"]), tuple(spec["covers"]))
    if num_sellers is not None and len(gain.covers) != num_sellers:
        raise InvalidInputError(f"coverage lists {len(gain.covers)} sellers, instance has {num_sellers}")
    return gain


def random_instance(rng: np.random.Generator, max_buyers=6, max_sellers=6, min_buyers=2) -> MarketInstance:
    """Random empty-graph instance with a concave-of-cardinality gain."""
    n = int(rng.integers(min_buyers, max_buyers + 1))
    m = int(rng.integers(1, max_sellers + 1))
    marginals = np.sort(rng.uniform(0.0, 1.0, m))[::-1]
    return MarketInstance(
        seller_costs=tuple(rng.uniform(0.0, 1.0, m)),
        buyer_values=tuple(rng.uniform(0.0, 1.0, n)),
        gain_fn=ConcaveOfCardinality(tuple(marginals)),
    )
