"""Personalized differential privacy via Laplace noise and the exponential mechanism.

Both mechanisms use the scale ``b = max_j delta_j / eps_j``. A function
whose individual sensitivities are ``delta_i`` then satisfies, for every
``i``, the ``eps_i`` ratio bound between outputs on ``i``-neighbors.

Randomness comes from ``numpy.random.Generator``. An integer seed (any
64-bit unsigned value) is turned into ``numpy.random.default_rng(seed)``
(PCG64), and each Laplace draw consumes exactly one ``Generator.random()``
double in ``[0, 1)``; each exponential-mechanism draw consumes one as well.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Mapping, Sequence

import numpy as np

from .core import SensitivityBounds


@dataclass(frozen=True)
class PersonalEpsilons:
    per_individual: Mapping[Hashable, float]

    def __post_init__(self):
        for key, eps in self.per_individual.items():
            if not eps > 0:
                raise ValueError(f"epsilon for {key!r} must be > 0, got {eps}")

    def __getitem__(self, individual_id):
        return float(self.per_individual[individual_id])


@dataclass(frozen=True)
class NoiseScale:
    b: float


@dataclass(frozen=True)
class QualityScoreTable:
    """Scores ``q(D, r)`` for one fixed database over a finite range."""

    range: Sequence[Hashable]
    scores: Mapping[Hashable, float]
    delta_q: SensitivityBounds

    def __post_init__(self):
        if len(self.range) == 0:
            raise ValueError("the outcome range must be nonempty")
        for r in self.range:
            if r not in self.scores or not np.isfinite(self.scores[r]):
                raise ValueError(f"missing or non-finite score for outcome {r!r}")

    def score_array(self) -> np.ndarray:
        return np.array([self.scores[r] for r in self.range], dtype=float)


def as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, (int, np.integer)):
        if not 0 <= int(rng) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        return np.random.default_rng(int(rng))
    raise TypeError(f"expected a seed or numpy Generator, got {type(rng).__name__}")


def laplace_pdf(x, b: float):
    if not b > 0:
        raise ValueError(f"Laplace scale must be > 0, got {b}")
    return np.exp(-np.abs(x) / b) / (2 * b)


def laplace_logpdf(x, b: float):
    if not b > 0:
        raise ValueError(f"Laplace scale must be > 0, got {b}")
    return -np.abs(x) / b - np.log(2 * b)


def laplace_inverse_cdf(u, b: float):
    """Maps ``u`` in ``[0, 1)`` to a ``Lap(b)`` variate."""
    u = np.asarray(u, dtype=float)
    # u == 0 would give -inf; Generator.random() works on a 2**-53 grid, so
    # move it to the next grid point (a subnormal would round back to -0.5)
    u = np.where(u <= 0.0, 2.0 ** -53, u)
    c = u - 0.5
    return -b * np.sign(c) * np.log1p(-2.0 * np.abs(c))


def laplace_sample(b: float, rng, size=None):
    """One draw (``size=None``) or an array of draws from ``Lap(b)``."""
    gen = as_rng(rng)
    if b == 0:
        return 0.0 if size is None else np.zeros(size)
    if not b > 0:
        raise ValueError(f"Laplace scale must be >= 0, got {b}")
    y = laplace_inverse_cdf(gen.random(size), b)
    return float(y) if size is None else y


def noise_scale(bounds: SensitivityBounds, eps: PersonalEpsilons) -> NoiseScale:
    """``b = max_j delta_j / eps_j`` over the individuals in ``eps``."""
    if not eps.per_individual:
        raise ValueError("need at least one (delta, epsilon) pair")
    missing = set(bounds.per_individual) - set(eps.per_individual)
    if missing:
        raise ValueError(f"no epsilon for individuals with a sensitivity bound: {sorted(map(repr, missing))}")
    return NoiseScale(max(bounds[j] / eps[j] for j in eps.per_individual))


def laplace_mechanism(g_value: float, bounds: SensitivityBounds, eps: PersonalEpsilons, rng) -> float:
    """``g_value + Y`` with ``Y ~ Lap(max_j delta_j / eps_j)``.

    All-zero bounds give ``b = 0`` and the value is returned unchanged
    without consuming a draw.
    """
    b = noise_scale(bounds, eps).b
    if b == 0:
        return float(g_value)
    return float(g_value) + laplace_sample(b, rng)


def exponential_probabilities(scores, b: float) -> np.ndarray:
    """``P(r)`` proportional to ``exp(q(r) / (2 b))``, computed after a max shift.

    ``b = 0`` is the zero-temperature limit: uniform over the top scores.
    """
    q = np.asarray(scores, dtype=float)
    if b == 0:
        top = q == q.max()
        return top / top.sum()
    if not b > 0:
        raise ValueError(f"scale must be >= 0, got {b}")
    w = np.exp((q - q.max()) / (2 * b))
    return w / w.sum()


def exponential_sample(probs: np.ndarray, rng, size=None):
    """Inverse-CDF categorical draw(s): indices into ``probs``."""
    gen = as_rng(rng)
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    u = gen.random(size)
    idx = np.searchsorted(cdf, u, side="right")
    return int(idx) if size is None else idx


def exponential_mechanism(q: QualityScoreTable, eps: PersonalEpsilons, rng):
    """Sample an outcome label with the personalized exponential mechanism."""
    b = noise_scale(q.delta_q, eps).b
    probs = exponential_probabilities(q.score_array(), b)
    return q.range[exponential_sample(probs, rng)]
