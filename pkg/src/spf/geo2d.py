"""Two-dimensional preprocessing under l1 individual sensitivity.

An l1 ball in the plane is an axis-aligned square in the rotated
coordinates ``u = x1 + x2``, ``v = x1 - x2``. Intersections of such balls
are boxes in ``(u, v)``, and because the rotation is a uniform scaling of
an isometry, the l2-nearest point of a box is found by clamping ``u`` and
``v`` independently.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import kernels
from .core import (DEFAULT_EXACT_LIMIT, DEFAULT_MAX_N, FEASIBILITY_TOL, AuditReport, Database,
                   FunctionOracle, MemoTable, PermutationBound, SensitivityBounds, _check_size,
                   as_database, permutation_bound_from_values, preprocess, sensitivity_audit,
                   subset_values)
from .errors import InvariantViolationError, SizeLimitError


class Point2(NamedTuple):
    x1: float
    x2: float


@dataclass(frozen=True)
class L1Ball:
    center: Point2
    radius: float

    def __post_init__(self):
        if not self.radius >= 0:
            raise ValueError(f"radius must be >= 0, got {self.radius}")

    def contains(self, p, tol: float = 0.0) -> bool:
        return abs(p[0] - self.center[0]) + abs(p[1] - self.center[1]) <= self.radius + tol


@dataclass(frozen=True)
class RotatedBox:
    u_min: float
    u_max: float
    v_min: float
    v_max: float

    def __post_init__(self):
        if self.u_min > self.u_max or self.v_min > self.v_max:
            raise ValueError("RotatedBox bounds are inverted")

    def contains(self, p, tol: float = 0.0) -> bool:
        u, v = p[0] + p[1], p[0] - p[1]
        return (self.u_min - tol <= u <= self.u_max + tol
                and self.v_min - tol <= v <= self.v_max + tol)


def to_rotated(p) -> tuple[float, float]:
    return p[0] + p[1], p[0] - p[1]


def from_rotated(u: float, v: float) -> Point2:
    return Point2((u + v) / 2, (u - v) / 2)


def intersect_balls(balls: Sequence[L1Ball], tol: float = 0.0) -> RotatedBox | None:
    """Intersection of l1 balls, or ``None`` when it is empty.

    With ``tol > 0`` a side inverted by at most ``tol`` (relative to its
    magnitude) is treated as rounding and collapsed onto its upper end, the
    same point the preprocessing kernel picks.
    """
    if not balls:
        raise ValueError("need at least one ball")
    u = np.array([b.center[0] + b.center[1] for b in balls])
    v = np.array([b.center[0] - b.center[1] for b in balls])
    r = np.array([b.radius for b in balls])
    sides = []
    for lo, hi in ((float((u - r).max()), float((u + r).min())),
                   (float((v - r).max()), float((v + r).min()))):
        if lo > hi:
            if lo - hi > tol * max(1.0, abs(lo), abs(hi)):
                return None
            lo = hi
        sides += [lo, hi]
    return RotatedBox(*sides)


def project_to_box(box: RotatedBox, target) -> Point2:
    u, v = to_rotated(target)
    u = min(max(u, box.u_min), box.u_max)
    v = min(max(v, box.v_min), box.v_max)
    return from_rotated(u, v)


class Memo2D(MemoTable):
    """Memo of a 2D run; ``g`` and ``f`` have shape ``(2**n, 2)``."""

    def point(self, key) -> Point2:
        return Point2(*self[key])


def _values_2d(f: FunctionOracle, root: Database) -> np.ndarray:
    vals = subset_values(f, root)
    if vals.ndim != 2 or vals.shape[1] != 2:
        raise ValueError("2D oracle must return pairs of reals")
    return vals


def preprocess_2d(f: FunctionOracle, bounds: SensitivityBounds, D, *,
                  max_n: int = DEFAULT_MAX_N) -> tuple[Point2, Memo2D]:
    """Two-dimensional analogue of :func:`spf.core.preprocess`.

    ``g(S)`` is the l2-closest point to ``f(S)`` inside the intersection of
    the radius-``delta_i`` l1 balls around ``g(S - x_i)``.
    """
    D = as_database(D)
    _check_size(len(D), max_n, "preprocess_2d")
    root = D.canonical()
    fvals = _values_2d(f, root)
    deltas = bounds.for_database(root)
    fu = fvals[:, 0] + fvals[:, 1]
    fv = fvals[:, 0] - fvals[:, 1]
    gu, gv, bad = kernels.subset_clamp_2d(fu, fv, deltas, FEASIBILITY_TOL)
    if bad >= 0:
        raise InvariantViolationError(f"empty l1-ball intersection at subset {bad:#x}")
    g = np.column_stack(((gu + gv) / 2, (gu - gv) / 2))
    memo = Memo2D(root, g, fvals)
    return Point2(float(g[-1, 0]), float(g[-1, 1])), memo


def sensitivity_audit_2d(memo: Memo2D, bounds: SensitivityBounds, D=None,
                         tol: float = 1e-9) -> AuditReport:
    """l1 version of :func:`spf.core.sensitivity_audit`."""
    return sensitivity_audit(memo, bounds, D, tol)


def error_bound_2d(f: FunctionOracle, bounds: SensitivityBounds, D, *,
                   exact_limit: int = DEFAULT_EXACT_LIMIT) -> PermutationBound:
    """Permutation bound on ``||f(D) - g(D)||_1`` with l1 marginal changes."""
    D = as_database(D)
    root = D.canonical()
    if len(root) > exact_limit:
        raise SizeLimitError(f"exact 2D error bound limited to n <= {exact_limit}")
    return permutation_bound_from_values(_values_2d(f, root), bounds.for_database(root), root.ids)


def preprocess_per_coordinate(f: FunctionOracle, bounds: Sequence[SensitivityBounds], D, *,
                              max_n: int = DEFAULT_MAX_N) -> tuple[tuple[float, ...], list[MemoTable]]:
    """Coordinate-wise preprocessing of a vector-valued ``f``.

    Each coordinate ``k`` gets its own bounds ``bounds[k]``; the guarantee is
    per coordinate, not joint.
    """
    empty = np.atleast_1d(np.asarray(f.empty_value, dtype=float))
    if len(bounds) != empty.shape[0]:
        raise ValueError("need one SensitivityBounds per output coordinate")
    out, memos = [], []
    for k, b in enumerate(bounds):
        fk = FunctionOracle(lambda db, k=k: float(np.atleast_1d(f(db))[k]), float(empty[k]))
        gk, memo = preprocess(fk, b, D, max_n=max_n)
        out.append(gk)
        memos.append(memo)
    return tuple(out), memos
