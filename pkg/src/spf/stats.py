"""Quadratic-time preprocessing for order statistics, mean and variance.

For statistics that are monotone in each entry (mean, trimmed mean,
median, min, max) the binding neighbors of a sorted window are always the
window without its largest entry (upper limit) and without its smallest
entry (lower limit), so the recursion only visits contiguous windows of
the sorted data. Variance with ``g(empty) = 0`` never reaches its lower
limit and its upper limit is set by removing the min or the max, which
gives the same window structure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import Database

KINDS = {
    "mean": kernels.MEAN,
    "trimmed_mean": kernels.TRIMMED_MEAN,
    "median": kernels.MEDIAN,
    "minimum": kernels.MINIMUM,
    "maximum": kernels.MAXIMUM,
}


@dataclass(frozen=True)
class OrderedStatSpec:
    """Which statistic to preprocess and the value it takes on the empty set.

    ``alpha`` is only read for ``trimmed_mean``: ``floor(alpha * n)`` entries
    are dropped from each end, and a window too small to trim falls back to
    its median.
    """

    kind: str
    empty_value: float
    alpha: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown statistic {self.kind!r}; expected one of {sorted(KINDS)}")
        if not 0.0 <= self.alpha < 0.5:
            raise ValueError(f"alpha must lie in [0, 0.5), got {self.alpha}")
        if not math.isfinite(self.empty_value):
            raise ValueError("empty_value must be finite")

    def evaluate(self, values) -> float:
        """The raw statistic on an unsorted, nonempty sample."""
        x = np.sort(np.asarray(values, dtype=float))
        n = x.shape[0]
        if n == 0:
            return self.empty_value
        if self.kind == "mean":
            return float(np.mean(x))
        if self.kind == "minimum":
            return float(x[0])
        if self.kind == "maximum":
            return float(x[-1])
        if self.kind == "trimmed_mean":
            t = math.floor(self.alpha * n)
            if n > 2 * t:
                return float(np.mean(x[t:n - t]))
        h = n // 2
        return float(x[h]) if n % 2 else 0.5 * float(x[h - 1] + x[h])


@dataclass(frozen=True)
class MeanEnvelope:
    h_lower: float
    h_upper: float


def _sorted_values(D) -> np.ndarray:
    if isinstance(D, Database):
        return D.canonical().values()
    return np.sort(np.asarray(D, dtype=float))


def _check_delta(delta):
    if not delta >= 0:
        raise ValueError(f"delta must be >= 0, got {delta}")


def preprocess_ordered(spec: OrderedStatSpec, delta: float, D) -> float:
    """``g(D)`` for a monotone statistic with uniform bound ``delta``."""
    _check_delta(delta)
    x = _sorted_values(D)
    return float(kernels.ordered_windows(x, KINDS[spec.kind], float(spec.alpha),
                                         float(spec.empty_value), float(delta)))


def preprocess_variance(delta: float, D) -> float:
    """``g(D)`` for population variance with ``g(empty) = 0``."""
    return variance_witness(delta, D)[0]


def variance_witness(delta: float, D) -> tuple[float, int, int]:
    """``(g, start, length)`` with ``g = Var(x[start:start+length]) + (n - length) * delta``.

    ``x`` is the sorted data. The window is the one whose variance the
    recursion ultimately kept; ``length == 0`` means every level clamped.
    """
    _check_delta(delta)
    x = _sorted_values(D)
    g, start, length = kernels.variance_windows(x, float(delta))
    return float(g), int(start), int(length)


def var_from_parts(var_a: float, var_b: float, var_ab: float, x_a: float, x_b: float, n: int) -> float:
    """Variance of ``D`` from ``D - x_a``, ``D - x_b`` and ``D - x_a - x_b``.

    ``n = |D|``. Exact up to rounding; this is the O(1) update used by
    :func:`preprocess_variance`.
    """
    if n < 2:
        raise ValueError(f"need n >= 2 to remove two entries, got n={n}")
    return float(kernels.var_from_parts_loop(float(var_a), float(var_b), float(var_ab),
                                             float(x_a), float(x_b), float(n)))


def mean_error_bound(mu_hat: float, delta: float, D) -> float:
    x = _sorted_values(D)
    n = x.shape[0]
    if n == 0:
        raise ValueError("mean_error_bound needs a nonempty database")
    mu = x.mean()
    shift = max(abs(mu - mu_hat) - n / 3 * delta, 0.0)
    spread = np.maximum(27 * np.abs(x - mu) / n - delta, 0.0).sum()
    return float(shift + spread)


def variance_error_bound(delta: float, D) -> float:
    x = _sorted_values(D)
    n = x.shape[0]
    if n == 0:
        raise ValueError("variance_error_bound needs a nonempty database")
    var = x.var()
    # sum_j (x_i - x_j)^2 = n * ((x_i - mean)^2 + var)
    pair = 4.0 / n * ((x - x.mean()) ** 2 + var)
    return float(max(var - n / 2 * delta, 0.0) + np.maximum(pair - delta, 0.0).sum())


def _clamp(prev: float, delta: float, f: float) -> float:
    if prev + delta <= f:
        return prev + delta
    if prev - delta >= f:
        return prev - delta
    return f


def mean_bounding(mu_hat: float, delta: float, D) -> MeanEnvelope:
    """Sandwich for the preprocessed mean.

    ``h_lower`` follows the prefixes of the sorted data (always dropping the
    largest entry), ``h_upper`` the suffixes (always dropping the smallest).
    """
    _check_delta(delta)
    x = _sorted_values(D)
    n = x.shape[0]
    lower = upper = float(mu_hat)
    total = 0.0
    for k in range(1, n + 1):
        total += x[k - 1]
        lower = _clamp(lower, delta, total / k)
    total = 0.0
    for k in range(1, n + 1):
        total += x[n - k]
        upper = _clamp(upper, delta, total / k)
    return MeanEnvelope(float(lower), float(upper))


def preprocess_mean(mu_hat: float, delta: float, D) -> float:
    return preprocess_ordered(OrderedStatSpec("mean", mu_hat), delta, D)
