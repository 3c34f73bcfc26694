"""Reference oracles and checkers that stay independent of the fast paths.

Nothing here shares code with ``preprocess`` beyond the data types: the
brute-force recursion is a literal memoized transcription over frozensets,
the optimal-approximation oracle solves a difference-constraint system, and
the intersection checks minimize a violation function on a grid.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import kernels
from .core import Database, FunctionOracle, MemoTable, Record, SensitivityBounds, as_database
from .errors import SizeLimitError
from .geo2d import L1Ball, intersect_balls

BRUTE_FORCE_LIMIT = 12
OPT_NODE_LIMIT = 1 << 12


def brute_force_spf(f: FunctionOracle, bounds: SensitivityBounds, D) -> MemoTable:
    D = as_database(D)
    if len(D) > BRUTE_FORCE_LIMIT:
        raise SizeLimitError(f"brute force limited to n <= {BRUTE_FORCE_LIMIT}")

    @lru_cache(maxsize=None)
    def g(ids: frozenset) -> float:
        if not ids:
            return float(f(Database()))
        sub = Database(r for r in D if r.individual_id in ids)
        children = [(g(ids - {i}), bounds[i]) for i in ids]
        upper = min(c + d for c, d in children)
        lower = max(c - d for c, d in children)
        fx = float(f(sub))
        if upper <= fx:
            return upper
        if lower >= fx:
            return lower
        return fx

    root = D.canonical()
    ids = root.ids
    entries = {}
    for mask in range(1 << len(root)):
        entries[mask] = g(frozenset(i for k, i in enumerate(ids) if mask >> k & 1))
    return MemoTable.from_entries(root, entries)


def brute_permutation_bound(f: FunctionOracle, bounds: SensitivityBounds, D) -> float:
    """Maximum over all ``n!`` orderings, enumerated one by one."""
    D = as_database(D)
    best = 0.0
    for perm in itertools.permutations(D):
        prefix: list[Record] = []
        total = 0.0
        for rec in perm:
            before = np.asarray(f(Database(prefix)), dtype=float)
            prefix.append(rec)
            after = np.asarray(f(Database(prefix)), dtype=float)
            total += max(float(np.abs(after - before).sum()) - bounds[rec.individual_id], 0.0)
        best = max(best, total)
    return best


# --------------------------------------------------------------------------
# optimal l_inf approximation within the sensitivity class
# --------------------------------------------------------------------------

def lattice_values(f: FunctionOracle, bounds: SensitivityBounds, D) -> tuple[np.ndarray, np.ndarray]:
    """``f`` on every subset of canonical ``D`` and the per-bit bounds."""
    root = as_database(D).canonical()
    fvals = np.array([float(f(root.subset(m))) for m in range(1 << len(root))])
    return fvals, bounds.for_database(root)


def restrict_lattice(fvals: np.ndarray, deltas: np.ndarray, mask: int) -> tuple[np.ndarray, np.ndarray]:
    """The sub-lattice below ``mask``, re-indexed densely over its own bits."""
    bits = [i for i in range(len(deltas)) if mask >> i & 1]
    out = np.empty(1 << len(bits))
    for local in range(out.shape[0]):
        full = 0
        for j, b in enumerate(bits):
            if local >> j & 1:
                full |= 1 << b
        out[local] = fvals[full]
    return out, np.asarray(deltas, dtype=float)[bits]


def _constraint_graph(fvals, deltas):
    size = fvals.shape[0]
    n = len(deltas)
    src, dst, w = [], [], []
    for mask in range(size):
        for i in range(n):
            if mask >> i & 1:
                child = mask ^ (1 << i)
                src += [child, mask]
                dst += [mask, child]
                w += [deltas[i], deltas[i]]
    z = size
    nodes = np.arange(size)
    src = np.concatenate((src, np.full(size, z), nodes)).astype(np.int64)
    dst = np.concatenate((dst, nodes, np.full(size, z))).astype(np.int64)
    base = np.asarray(w, dtype=float)
    return src, dst, base, z


def linf_feasible(fvals: np.ndarray, deltas: np.ndarray, t: float, tol: float = 1e-12) -> bool:
    """Is there ``h`` with the given individual sensitivities and ``max |f - h| <= t``?

    Difference constraints ``h(S) - h(S - i) <= delta_i`` both ways, and
    ``f(S) - t <= h(S) <= f(S) + t`` through an auxiliary zero node; the
    system is feasible iff its graph has no negative cycle.
    """
    fvals = np.asarray(fvals, dtype=float)
    src, dst, base, z = _constraint_graph(fvals, deltas)
    w = np.concatenate((base, fvals + t, t - fvals))
    scale = max(1.0, float(np.abs(fvals).max()))
    return bool(kernels.bellman_ford(z + 1, src, dst, w, tol * scale))


def opt_linf(fvals: np.ndarray, deltas: np.ndarray, iterations: int = 64) -> float:
    """Smallest ``t`` for which :func:`linf_feasible` holds, by bisection."""
    fvals = np.asarray(fvals, dtype=float)
    deltas = np.asarray(deltas, dtype=float)
    if fvals.shape[0] > OPT_NODE_LIMIT:
        raise SizeLimitError(f"opt_linf limited to {OPT_NODE_LIMIT} lattice nodes")
    if fvals.shape[0] != 1 << len(deltas):
        raise ValueError("fvals must have one entry per subset of the deltas")
    # precompute the static part once; only the box weights move with t
    src, dst, base, z = _constraint_graph(fvals, deltas)
    scale = max(1.0, float(np.abs(fvals).max()))

    def feasible(t):
        w = np.concatenate((base, fvals + t, t - fvals))
        return kernels.bellman_ford(z + 1, src, dst, w, 1e-12 * scale)

    if feasible(0.0):
        return 0.0
    lo, hi = 0.0, float(fvals.max() - fvals.min())
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi


# --------------------------------------------------------------------------
# SAT gadget
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BoolFormula:
    """``evaluator`` maps a tuple of ``n_vars`` booleans to 0/1 (or bool)."""

    n_vars: int
    evaluator: Callable[[tuple], int]

    def __call__(self, assignment: tuple) -> int:
        return int(bool(self.evaluator(tuple(assignment))))

    def brute_force_sat(self) -> bool:
        return any(self(a) for a in itertools.product((True, False), repeat=self.n_vars))


def all_false_database(n: int) -> Database:
    """Every individual reporting ``False``; the root of the gadget lattice."""
    return Database(Record(i, False) for i in range(n))


def sat_gadget(phi: BoolFormula, *, pin_empty: bool = False) -> FunctionOracle:
    """``f(D) = |D| - phi(D + T)``; use with ``delta = 1`` on :func:`all_false_database`.

    ``D + T`` sets the variables of the individuals in ``D`` to their
    reported value and every other variable to ``True``. Then
    ``g(F^n) < n`` iff ``phi`` is satisfiable.

    The formula is applied at the empty database too, giving
    ``f(empty) = -phi(T^n)``. With ``pin_empty=True`` the empty value is
    fixed at 0 instead; that variant misses formulas whose only satisfying
    assignment is all-True, because the witness subset is then empty.
    """
    if phi.n_vars > BRUTE_FORCE_LIMIT:
        raise SizeLimitError(f"gadget limited to n <= {BRUTE_FORCE_LIMIT}")

    def evaluate(db: Database) -> float:
        assignment = [True] * phi.n_vars
        for rec in db:
            assignment[rec.individual_id] = bool(rec.value)
        return float(len(db) - phi(tuple(assignment)))

    empty = 0.0 if pin_empty else evaluate(Database())
    return FunctionOracle(evaluate, empty)


# --------------------------------------------------------------------------
# ball intersections
# --------------------------------------------------------------------------

class IntersectionCheck(NamedTuple):
    pairwise_nonempty: bool
    total_nonempty: bool
    min_violation: float


def _pairwise(centers: np.ndarray, radii: np.ndarray, p: int) -> bool:
    for i, j in itertools.combinations(range(len(radii)), 2):
        if np.linalg.norm(centers[i] - centers[j], ord=p) > radii[i] + radii[j] + 1e-12:
            return False
    return True


def grid_min_violation(centers, radii, p: int = 1, resolution: float = 0.01,
                       margin: float = 0.02) -> tuple[float, np.ndarray]:
    """Minimum of ``max_i (||x - c_i||_p - r_i)`` over a grid, and its argmin.

    The grid covers the intersection of the balls' bounding boxes widened
    by ``margin``; every point outside it violates some ball by more than
    ``margin``.
    """
    centers = np.asarray(centers, dtype=float)
    radii = np.asarray(radii, dtype=float)
    lo = (centers - radii[:, None]).max(axis=0)
    hi = (centers + radii[:, None]).min(axis=0)
    start = np.minimum(lo, hi) - margin
    stop = np.maximum(lo, hi) + margin
    counts = (np.ceil((stop - start) / resolution).astype(np.int64) + 1)
    best, flat = kernels.grid_min_violation(centers, radii, start, float(resolution), counts, int(p))
    idx = np.unravel_index(flat, tuple(int(c) for c in counts))
    return float(best), start + resolution * np.array(idx, dtype=float)


def lipschitz_slack(d: int, p: int, resolution: float) -> float:
    """Largest drop of the violation between a point and its nearest grid node."""
    half = resolution / 2
    return d * half if p == 1 else np.sqrt(d) * half


def pairwise_vs_total_intersection(d: int, balls: Sequence[tuple[Sequence[float], float]], *,
                                   resolution: float = 0.01, margin: float = 0.02) -> IntersectionCheck:
    """Do the l1 balls intersect pairwise, and all together?

    Exact in 2D. In 3D the total intersection is reported empty iff the
    grid minimum of the violation exceeds ``margin``, which must itself
    exceed the grid's Lipschitz slack.
    """
    if d not in (2, 3):
        raise ValueError(f"unsupported dimension {d}; expected 2 or 3")
    centers = np.array([np.asarray(c, dtype=float) for c, _ in balls])
    radii = np.array([float(r) for _, r in balls])
    if centers.ndim != 2 or centers.shape[1] != d:
        raise ValueError(f"centers must be points in R^{d}")
    pairwise = _pairwise(centers, radii, 1)
    if d == 2:
        box = intersect_balls([L1Ball(tuple(c), r) for c, r in zip(centers, radii)])
        viol = np.inf
        if box is not None:
            u = 0.5 * (box.u_min + box.u_max)
            v = 0.5 * (box.v_min + box.v_max)
            pt = np.array([(u + v) / 2, (u - v) / 2])
            viol = float((np.abs(centers - pt).sum(axis=1) - radii).max())
        return IntersectionCheck(pairwise, box is not None, viol)
    if margin <= lipschitz_slack(d, 1, resolution):
        raise ValueError("margin too small to certify emptiness at this resolution")
    best, _ = grid_min_violation(centers, radii, 1, resolution, margin)
    return IntersectionCheck(pairwise, not best > margin, best)


LP_COUNTEREXAMPLE = ((-1.0, 0.0), (1.0, 0.0), (0.0, float(np.sqrt(3.0))))


def lp_ball_counterexample_check(centers: Sequence[Sequence[float]] = LP_COUNTEREXAMPLE,
                                 radius: float = 1.0, *, resolution: float = 0.01,
                                 margin: float = 0.02) -> bool:
    """True iff the l2 balls meet pairwise but the grid certifies no common point."""
    c = np.asarray(centers, dtype=float)
    radii = np.full(c.shape[0], float(radius))
    if not _pairwise(c, radii, 2):
        return False
    if margin <= lipschitz_slack(c.shape[1], 2, resolution):
        raise ValueError("margin too small to certify emptiness at this resolution")
    best, _ = grid_min_violation(c, radii, 2, resolution, margin)
    return best > margin


# --------------------------------------------------------------------------
# privacy ratios
# --------------------------------------------------------------------------

def privacy_ratio_audit(p, q, *, log: bool = False) -> float:
    """``max |log p - log q|`` over matched supports.

    ``p`` and ``q`` are densities or probabilities evaluated at the same
    outputs (or their logs with ``log=True``). Outputs where both vanish are
    ignored; one-sided zeros give ``inf``.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"supports do not match: {p.shape} vs {q.shape}")
    if p.size == 0:
        return 0.0
    if log:
        lp, lq = p, q
        both = np.isneginf(lp) & np.isneginf(lq)
    else:
        both = (p == 0) & (q == 0)
        with np.errstate(divide="ignore"):
            lp, lq = np.log(p), np.log(q)
    with np.errstate(invalid="ignore"):
        diff = np.where(both, 0.0, np.abs(lp - lq))
    return float(diff.max())


def laplace_neighbor_audit(g: float, g_prime: float, b: float, num: int = 4001) -> float:
    """Max log density ratio of ``g + Lap(b)`` vs ``g' + Lap(b)`` on ``[g - 10b, g + 10b]``."""
    from .mechanisms import laplace_logpdf

    xs = np.linspace(g - 10 * b, g + 10 * b, num)
    return privacy_ratio_audit(laplace_logpdf(xs - g, b), laplace_logpdf(xs - g_prime, b), log=True)


def exponential_neighbor_audit(scores, scores_prime, b: float) -> float:
    from .mechanisms import exponential_probabilities

    return privacy_ratio_audit(exponential_probabilities(scores, b),
                               exponential_probabilities(scores_prime, b))
