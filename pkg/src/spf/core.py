"""General sensitivity preprocessing over the subset lattice.

Given query access to an arbitrary ``f`` and per-individual bounds
``delta_i``, ``preprocess`` builds ``g`` bottom-up over every subset of a
database: ``g(empty) = f(empty)`` and each larger subset takes the point of
``[max_i g(S - x_i) - delta_i, min_i g(S - x_i) + delta_i]`` closest to
``f(S)``. The resulting ``g`` has individual sensitivity at most
``delta_i`` for every ``i``.

Subsets are keyed by bitmasks over the root database after sorting its
records by ``(value, individual_id)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Iterable, Iterator, Mapping, Sequence

import numpy as np

from . import kernels
from .errors import InvariantViolationError, MemoConsistencyError, SizeLimitError

DEFAULT_MAX_N = 24
DEFAULT_EXACT_LIMIT = 8
FEASIBILITY_TOL = 1e-12


@dataclass(frozen=True)
class Record:
    individual_id: Hashable
    value: Any


class Database(Sequence[Record]):
    """Ordered collection of records with unique individual ids."""

    __slots__ = ("_records", "_index")

    def __init__(self, records: Iterable[Record] = ()):
        recs = tuple(r if isinstance(r, Record) else Record(*r) for r in records)
        index = {}
        for pos, r in enumerate(recs):
            if r.individual_id in index:
                raise ValueError(f"duplicate individual_id {r.individual_id!r}")
            index[r.individual_id] = pos
        self._records = recs
        self._index = index

    @classmethod
    def from_values(cls, values: Iterable[Any]) -> "Database":
        """Records with ids ``0..n-1`` in the given order."""
        return cls(Record(i, v) for i, v in enumerate(values))

    def __len__(self) -> int:
        return len(self._records)

    def __getitem__(self, item):
        if isinstance(item, slice):
            return Database(self._records[item])
        return self._records[item]

    def __iter__(self) -> Iterator[Record]:
        return iter(self._records)

    def __contains__(self, item) -> bool:
        if isinstance(item, Record):
            pos = self._index.get(item.individual_id)
            return pos is not None and self._records[pos] == item
        return item in self._index

    def __eq__(self, other) -> bool:
        return isinstance(other, Database) and self._records == other._records

    def __hash__(self) -> int:
        return hash(self._records)

    def __repr__(self) -> str:
        return f"Database({list(self._records)!r})"

    @property
    def ids(self) -> tuple:
        return tuple(r.individual_id for r in self._records)

    def values(self) -> np.ndarray:
        return np.asarray([r.value for r in self._records], dtype=float)

    def without(self, individual_id: Hashable) -> "Database":
        return Database(r for r in self._records if r.individual_id != individual_id)

    def canonical(self) -> "Database":
        """Records sorted by ``(value, individual_id)``."""
        try:
            recs = sorted(self._records, key=lambda r: (r.value, r.individual_id))
        except TypeError:
            recs = sorted(self._records, key=lambda r: (r.value, repr(r.individual_id)))
        return Database(recs)

    def subset(self, mask: int) -> "Database":
        return Database(r for i, r in enumerate(self._records) if mask >> i & 1)


def as_database(data) -> Database:
    if isinstance(data, Database):
        return data
    return Database.from_values(data)


@dataclass(frozen=True)
class SensitivityBounds:
    """Per-individual bounds ``delta_i`` with a fallback ``default``."""

    per_individual: Mapping[Hashable, float] = field(default_factory=dict)
    default: float | None = None

    def __post_init__(self):
        for key, d in self.per_individual.items():
            if not d >= 0:
                raise ValueError(f"sensitivity bound for {key!r} must be >= 0, got {d}")
        if self.default is not None and not self.default >= 0:
            raise ValueError(f"default sensitivity bound must be >= 0, got {self.default}")

    @classmethod
    def uniform(cls, delta: float) -> "SensitivityBounds":
        return cls({}, float(delta))

    def __getitem__(self, individual_id: Hashable) -> float:
        if individual_id in self.per_individual:
            return float(self.per_individual[individual_id])
        if self.default is None:
            raise KeyError(f"no sensitivity bound for {individual_id!r} and no default")
        return float(self.default)

    def for_database(self, db: Database) -> np.ndarray:
        return np.array([self[i] for i in db.ids], dtype=float)


@dataclass(frozen=True)
class FunctionOracle:
    """Deterministic query access to ``f``, with ``f(empty)`` supplied explicitly."""

    evaluate: Callable[[Database], Any]
    empty_value: Any

    def __call__(self, db: Database):
        if len(db) == 0:
            return self.empty_value
        return self.evaluate(db)

    @classmethod
    def of_values(cls, fn: Callable[[np.ndarray], Any], empty_value) -> "FunctionOracle":
        """Wrap a function of the value array, e.g. ``np.mean``."""
        return cls(lambda db: fn(db.values()), empty_value)


@dataclass(frozen=True)
class FeasibleInterval:
    lower: float
    upper: float

    def __post_init__(self):
        scale = max(1.0, abs(self.lower), abs(self.upper))
        if self.lower - self.upper > FEASIBILITY_TOL * scale:
            raise InvariantViolationError(
                f"empty feasible interval [{self.lower!r}, {self.upper!r}]")

    def clamp(self, value: float) -> float:
        # ties at an endpoint keep f, matching the three-case rule
        if self.upper <= value:
            return self.upper
        if self.lower >= value:
            return self.lower
        return value


class MemoTable:
    """``g`` on the subsets of a root database, indexed by bitmask.

    ``root`` is stored in canonical order; bit ``i`` of a key selects
    ``root[i]``. Entries that were never computed hold NaN. ``f`` values are
    kept alongside ``g`` when the table came out of a preprocessing run.
    """

    def __init__(self, root: Database, g: np.ndarray, f: np.ndarray | None = None):
        self.root = root
        self.g = g
        self.f = f
        self._pos = {rid: i for i, rid in enumerate(root.ids)}

    @classmethod
    def from_entries(cls, root: Database, entries: Mapping[int, float]) -> "MemoTable":
        root = root.canonical()
        g = np.full((1 << len(root),) + np.shape(next(iter(entries.values()), 0.0)), np.nan)
        for mask, value in entries.items():
            g[mask] = value
        return cls(root, g)

    @property
    def n(self) -> int:
        return len(self.root)

    def key(self, db: Database | Iterable[Hashable]) -> int:
        ids = db.ids if isinstance(db, Database) else db
        mask = 0
        for rid in ids:
            try:
                mask |= 1 << self._pos[rid]
            except KeyError:
                raise MemoConsistencyError(f"{rid!r} is not in the memo's root database") from None
        return mask

    def contains(self, mask: int) -> bool:
        return 0 <= mask < self.g.shape[0] and not np.isnan(self.g[mask]).any()

    def __getitem__(self, key):
        mask = key if isinstance(key, (int, np.integer)) else self.key(key)
        if not self.contains(mask):
            raise MemoConsistencyError(f"no memo entry for subset {mask:#x}")
        value = self.g[mask]
        return float(value) if np.ndim(value) == 0 else tuple(float(v) for v in value)

    def __len__(self) -> int:
        return int((~np.isnan(self.g.reshape(self.g.shape[0], -1)).any(axis=1)).sum())

    def items(self) -> Iterator[tuple[int, Any]]:
        for mask in range(self.g.shape[0]):
            if self.contains(mask):
                yield mask, self[mask]

    def subset(self, mask: int) -> Database:
        return self.root.subset(mask)

    def to_text(self) -> str:
        """One line per entry: hex bitmask, then g with 17 significant digits."""
        lines = []
        for mask, value in self.items():
            vals = value if isinstance(value, tuple) else (value,)
            lines.append(f"{mask:x} " + " ".join(f"{v:.17g}" for v in vals))
        return "\n".join(lines) + "\n"

    @staticmethod
    def parse_text(text: str) -> dict[int, Any]:
        out = {}
        for line in text.splitlines():
            if not line.strip():
                continue
            head, *vals = line.split()
            nums = tuple(float(v) for v in vals)
            out[int(head, 16)] = nums[0] if len(nums) == 1 else nums
        return out


@dataclass(frozen=True)
class PermutationBound:
    value: float
    witness: tuple
    exact: bool = True


@dataclass(frozen=True)
class Violation:
    subset: int
    individual_id: Hashable
    excess: float


class AuditReport(list):
    """List of :class:`Violation`; empty means the audit passed."""

    @property
    def ok(self) -> bool:
        return not self

    @property
    def worst(self) -> float:
        return max((v.excess for v in self), default=0.0)


def _check_size(n: int, limit: int, what: str):
    if n > limit:
        raise SizeLimitError(f"{what} needs 2^n work; n={n} exceeds the limit {limit}")


def subset_values(f: FunctionOracle, root: Database) -> np.ndarray:
    """``f`` on every subset of ``root``, indexed by bitmask."""
    vals = [f(root.subset(mask)) for mask in range(1 << len(root))]
    return np.asarray(vals, dtype=float)


def feasible_interval(D: Database, memo: MemoTable, bounds: SensitivityBounds) -> FeasibleInterval:
    """``[max_i g(D - x_i) - delta_i, min_i g(D - x_i) + delta_i]``."""
    if len(D) == 0:
        raise ValueError("the feasible interval is only defined for nonempty databases")
    mask = memo.key(D)
    lo, up = -math.inf, math.inf
    for rid in D.ids:
        child = mask & ~(1 << memo._pos[rid])
        c = memo[child]
        d = bounds[rid]
        lo = max(lo, c - d)
        up = min(up, c + d)
    return FeasibleInterval(lo, up)


def preprocess(f: FunctionOracle, bounds: SensitivityBounds, D, *,
               max_n: int = DEFAULT_MAX_N) -> tuple[float, MemoTable]:
    """Evaluate the sensitivity-preprocessed ``g`` at ``D``.

    Runs in ``O((T(n) + n) 2^n)``; ``max_n`` guards against accidental
    blowup. Returns ``g(D)`` and the memo of ``g`` on every subset.
    """
    D = as_database(D)
    _check_size(len(D), max_n, "preprocess")
    root = D.canonical()
    fvals = subset_values(f, root)
    deltas = bounds.for_database(root)
    g, bad = kernels.subset_clamp(fvals, deltas, FEASIBILITY_TOL)
    if bad >= 0:
        raise InvariantViolationError(f"empty feasible interval at subset {bad:#x}")
    memo = MemoTable(root, g, fvals)
    return float(g[-1]), memo


def sensitivity_audit(memo: MemoTable, bounds: SensitivityBounds, D=None,
                      tol: float = 1e-9) -> AuditReport:
    """Every ``(subset, i)`` with ``|g(S) - g(S - x_i)| > delta_i + tol``."""
    top = (1 << memo.n) - 1 if D is None else memo.key(as_database(D))
    masks = np.arange(top + 1, dtype=np.int64)
    masks = masks[(masks & ~top) == 0]
    g = memo.g.reshape(memo.g.shape[0], -1)
    if np.isnan(g[masks]).any():
        raise MemoConsistencyError("memo is not downward-closed over the audited database")
    report = AuditReport()
    ids = memo.root.ids
    for i in range(memo.n):
        if not top >> i & 1:
            continue
        sel = masks[(masks >> i & 1) == 1]
        gap = np.abs(g[sel] - g[sel ^ (1 << i)]).sum(axis=1)
        excess = gap - bounds[ids[i]]
        for j in np.nonzero(excess > tol)[0]:
            report.append(Violation(int(sel[j]), ids[i], float(excess[j])))
    report.sort(key=lambda v: (v.subset, repr(v.individual_id)))
    return report


def _chain_witness(arg: np.ndarray, top: int, ids: tuple) -> tuple:
    order = []
    mask = top
    while mask:
        i = int(arg[mask])
        order.append(ids[i])
        mask ^= 1 << i
    return tuple(reversed(order))


def permutation_bound_from_values(fvals: np.ndarray, deltas: np.ndarray, ids: tuple) -> PermutationBound:
    """Exact maximum over orderings, as a longest chain through the lattice."""
    fv = np.asarray(fvals, dtype=float).reshape(fvals.shape[0], -1)
    best, arg = kernels.lattice_chain(fv, np.asarray(deltas, dtype=float))
    top = fv.shape[0] - 1
    return PermutationBound(float(best[top]), _chain_witness(arg, top, ids), True)


def _sampled_bound(f, root, deltas, samples, rng, norm):
    rng = np.random.default_rng(rng)
    cache = {}

    def value(mask):
        if mask not in cache:
            cache[mask] = np.atleast_1d(np.asarray(f(root.subset(mask)), dtype=float))
        return cache[mask]

    best, witness = -1.0, ()
    n = len(root)
    for _ in range(samples):
        perm = rng.permutation(n)
        total, mask = 0.0, 0
        for i in perm:
            nxt = mask | (1 << int(i))
            total += max(norm(value(nxt) - value(mask)) - deltas[i], 0.0)
            mask = nxt
        if total > best:
            best, witness = total, tuple(root.ids[int(i)] for i in perm)
    return PermutationBound(best, witness, exact=False)


def error_bound(f: FunctionOracle, bounds: SensitivityBounds, D, *,
                exact_limit: int = DEFAULT_EXACT_LIMIT, samples: int | None = None,
                rng=None) -> PermutationBound:
    """Upper bound on ``|f(D) - g(D)|`` from marginal changes of ``f``.

    The bound is the largest, over orderings of ``D``, of the summed
    excesses ``max(|f(prefix + x) - f(prefix)| - delta_x, 0)``. It is
    computed exactly up to ``exact_limit`` records. Beyond that, pass
    ``samples`` to get a Monte-Carlo *lower estimate* (``exact=False``);
    it never certifies the bound.
    """
    D = as_database(D)
    root = D.canonical()
    deltas = bounds.for_database(root)
    n = len(root)
    if n <= exact_limit:
        return permutation_bound_from_values(subset_values(f, root), deltas, root.ids)
    if samples is None:
        raise SizeLimitError(
            f"exact error bound limited to n <= {exact_limit} (n={n}); pass samples= for an estimate")
    return _sampled_bound(f, root, deltas, samples, rng, lambda v: float(np.abs(v).sum()))
