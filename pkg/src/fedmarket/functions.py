"""Pluggable transmission, punishment and aggregation functions.

Each factory returns a plain callable; configuration files name them by
``kind`` and pass keyword parameters (see :func:`build`).
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidConfigError


def constant_thresh(value=0.0):
    value = float(value)

    def thresh(bid):
        return value

    return thresh


def linear_thresh(scale=1.0):
    """Transmission probability ``min(1, scale * bid)``."""
    scale = float(scale)

    def thresh(bid):
        return min(1.0, max(0.0, scale * bid))

    return thresh


def step_thresh(cutoff, low=0.0, high=1.0):
    cutoff, low, high = float(cutoff), float(low), float(high)

    def thresh(bid):
        return high if bid >= cutoff else low

    return thresh


def zero_punish():
    def punish(deviation):
        return 0.0

    return punish


def abs_punish(scale=1.0):
    scale = float(scale)

    def punish(deviation):
        return scale * abs(deviation)

    return punish


def square_punish(scale=1.0):
    scale = float(scale)

    def punish(deviation):
        return scale * deviation * deviation

    return punish


def aggr_max(qualities, shares):
    """Best member quality: models picking the best received model."""
    return float(np.max(qualities))


def aggr_weighted_mean(qualities, shares):
    """Data-share weighted mean: models federated averaging."""
    qualities = np.asarray(qualities, dtype=float)
    shares = np.asarray(shares, dtype=float)
    return float(np.dot(qualities, shares) / shares.sum())


THRESH_KINDS = {"constant": constant_thresh, "linear": linear_thresh, "step": step_thresh}
PUNISH_KINDS = {"zero": zero_punish, "abs": abs_punish, "square": square_punish}
AGGR_KINDS = {"max": aggr_max, "weighted_mean": aggr_weighted_mean}


def build(table, spec, path):
    """Instantiate ``{"kind": name, **params}`` from a factory table."""
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind not in table:
        raise InvalidConfigError(f"unknown kind {kind!r}; expected one of {sorted(table)}", path)
    try:
        return table[kind](**spec)
    except TypeError as exc:
        raise InvalidConfigError(str(exc), path) from None
