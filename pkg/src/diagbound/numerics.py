"""Small log-space helpers shared across modules.

All hypothesis masses are carried as natural logs: products of odds and
likelihood ratios overflow double precision long before networks reach
realistic size, so sums of masses go through log-sum-exp and differences
through log-diff-exp.
"""

from __future__ import annotations

import math

import numpy as np

NEG_INF = float("-inf")


def logsumexp(values) -> float:
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return NEG_INF
    m = float(np.max(arr))
    if m == NEG_INF:
        return NEG_INF
    return m + math.log(float(np.sum(np.exp(arr - m))))


def logaddexp(a: float, b: float) -> float:
    return float(np.logaddexp(a, b))


def log1pexp(x: float) -> float:
    """log(1 + e^x), stable for any x."""
    return float(np.logaddexp(0.0, x))


def logdiffexp(a: float, b: float) -> float:
    """log(e^a - e^b) for a >= b; returns -inf when they coincide."""
    if b == NEG_INF:
        return a
    if a == NEG_INF or b >= a:
        return NEG_INF
    return a + math.log1p(-math.exp(b - a))


def safe_exp(x: float) -> float:
    """exp that saturates to inf instead of raising on overflow."""
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf
