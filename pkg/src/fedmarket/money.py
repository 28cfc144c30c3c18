"""Fixed-point money.

Amounts are stored as integer nano-units (1e-9) so ledger sums are exact
and reproducible; arithmetic that produces money (bid times score gap)
is done in binary64 and rounded once, half-to-even, on entry.
"""

from __future__ import annotations

from typing import Iterable

NANOS_PER_UNIT = 1_000_000_000


def to_nanos(amount: float) -> int:
    return int(round(float(amount) * NANOS_PER_UNIT))


def from_nanos(nanos: int) -> float:
    return nanos / NANOS_PER_UNIT


def format_nanos(nanos: int) -> str:
    """Render nano-units as a decimal string with exactly 9 fractional digits."""
    sign = "-" if nanos < 0 else ""
    whole, frac = divmod(abs(int(nanos)), NANOS_PER_UNIT)
    return f"{sign}{whole}.{frac:09d}"


def total(nanos: Iterable[int]) -> int:
    return sum(int(n) for n in nanos)
