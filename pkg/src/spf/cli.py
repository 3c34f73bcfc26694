"""``spf`` command line.

    spf mean --delta 1 --mu-hat 2 data.csv
    spf variance --delta 1 --epsilon-file eps.csv --seed 7 --json data.csv
    spf mypkg.oracles:spread --general --empty-value 0 --delta 2 small.csv

Exit codes: 0 ok, 2 malformed input, 3 invalid parameters, 4 size cap
exceeded in ``--general`` mode.
"""

from __future__ import annotations

import argparse
import csv
import importlib
import math
import secrets
import sys
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import core, geo2d, mechanisms, stats
from .errors import SizeLimitError

EXIT_OK, EXIT_INPUT, EXIT_PARAMS, EXIT_SIZE = 0, 2, 3, 4

FAST_STATS = {
    "mean": "mean",
    "trimmed_mean": "trimmed_mean",
    "trimmed-mean": "trimmed_mean",
    "median": "median",
    "min": "minimum",
    "minimum": "minimum",
    "max": "maximum",
    "maximum": "maximum",
}

# name -> function of the value array (1D) or of an (n, 2) array (2D)
_ORACLES: dict[str, Callable] = {}


def register_oracle(name: str, fn: Callable) -> None:
    """Make ``fn`` available to ``spf NAME --general``."""
    _ORACLES[name] = fn


class InputError(Exception):
    pass


class ParamError(Exception):
    pass


@dataclass
class Report:
    statistic: str
    n: int
    raw_value: object
    g_value: object
    error_bound: float | None
    noise_scale: float | None
    noised_value: object
    seed: int | None


# --------------------------------------------------------------------------
# input files
# --------------------------------------------------------------------------

def _number(text: str, path: str, line: int, column: str) -> float:
    try:
        value = float(text)
    except (TypeError, ValueError):
        raise InputError(f"{path}: line {line}, column '{column}': not a decimal number: {text!r}") from None
    if not math.isfinite(value):
        raise InputError(f"{path}: line {line}, column '{column}': value must be finite")
    return value


def _rows(path: str):
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    with fh:
        reader = csv.DictReader(fh)
        header = [h.strip() for h in (reader.fieldnames or [])]
        reader.fieldnames = header
        try:
            rows = [(reader.line_num, row) for row in reader]
        except (csv.Error, UnicodeDecodeError) as exc:
            raise InputError(f"{path}: {exc}") from None
    return header, rows


def read_database(path: str) -> core.Database:
    """``id,value`` rows, or ``id,x1,x2`` rows for 2D data."""
    header, rows = _rows(path)
    if "id" not in header:
        raise InputError(f"{path}: line 1: missing column 'id'")
    two_d = "x1" in header or "x2" in header
    columns = ("x1", "x2") if two_d else ("value",)
    for col in columns:
        if col not in header:
            raise InputError(f"{path}: line 1: missing column '{col}'")
    records, seen = [], set()
    for line, row in rows:
        rid = (row.get("id") or "").strip()
        if not rid:
            raise InputError(f"{path}: line {line}, column 'id': empty id")
        if rid in seen:
            raise InputError(f"{path}: line {line}, column 'id': duplicate id {rid!r}")
        seen.add(rid)
        vals = [_number(row.get(c), path, line, c) for c in columns]
        records.append(core.Record(rid, tuple(vals) if two_d else vals[0]))
    return core.Database(records)


def _read_keyed(path: str, column: str) -> tuple[dict[str, float], float | None]:
    header, rows = _rows(path)
    for col in ("id", column):
        if col not in header:
            raise InputError(f"{path}: line 1: missing column '{col}'")
    table, default = {}, None
    for line, row in rows:
        rid = (row.get("id") or "").strip()
        value = _number(row.get(column), path, line, column)
        if rid == "*":
            default = value
        elif rid:
            table[rid] = value
        else:
            raise InputError(f"{path}: line {line}, column 'id': empty id")
    return table, default


def load_bounds(delta: float | None, delta_file: str | None) -> core.SensitivityBounds:
    table, default = ({}, None) if delta_file is None else _read_keyed(delta_file, "delta")
    if default is None:
        default = delta
    if default is None and not table:
        raise ParamError("give --delta or --delta-file")
    if any(not d >= 0 for d in table.values()) or (default is not None and not default >= 0):
        raise ParamError("sensitivity bounds must be >= 0")
    return core.SensitivityBounds(table, default)


def load_epsilons(path: str) -> tuple[dict[str, float], float | None]:
    table, default = _read_keyed(path, "epsilon")
    if any(not e > 0 for e in table.values()) or (default is not None and not default > 0):
        raise ParamError("epsilon values must be > 0")
    return table, default


# --------------------------------------------------------------------------
# computation
# --------------------------------------------------------------------------

def _uniform_delta(bounds: core.SensitivityBounds, db: core.Database) -> float:
    ds = {bounds[i] for i in db.ids} if len(db) else {bounds.default or 0.0}
    if len(ds) > 1:
        raise ParamError("the fast statistics need one uniform delta; use --general for per-individual bounds")
    return ds.pop()


def _resolve_oracle(name: str) -> Callable:
    if name in _ORACLES:
        return _ORACLES[name]
    if ":" in name:
        module, _, attr = name.partition(":")
        try:
            return getattr(importlib.import_module(module), attr)
        except (ImportError, AttributeError) as exc:
            raise ParamError(f"cannot load oracle {name!r}: {exc}") from None
    raise ParamError(f"unknown statistic {name!r}")


def _general(args, db, bounds) -> tuple[object, object, float | None]:
    two_d = len(db) > 0 and isinstance(db[0].value, tuple)
    if args.statistic in FAST_STATS or args.statistic == "variance":
        kind = FAST_STATS.get(args.statistic, "variance")
        if kind == "variance":
            fn, empty = (lambda x: float(np.var(x))), 0.0
        else:
            spec = stats.OrderedStatSpec(kind, _empty_for(args, kind), args.alpha)
            fn, empty = spec.evaluate, spec.empty_value
    else:
        fn = _resolve_oracle(args.statistic)
        if args.empty_value is None:
            raise ParamError("--general with a custom oracle needs --empty-value")
        empty = (args.empty_value, args.empty_value) if two_d else args.empty_value
    if two_d:
        oracle = core.FunctionOracle(lambda d: tuple(float(v) for v in fn(np.array([r.value for r in d]))), empty)
        g, _ = geo2d.preprocess_2d(oracle, bounds, db, max_n=args.max_n)
        raw = oracle(db)
        bound = geo2d.error_bound_2d(oracle, bounds, db).value if len(db) <= core.DEFAULT_EXACT_LIMIT else None
        return tuple(raw), tuple(g), bound
    oracle = core.FunctionOracle(lambda d: float(fn(d.values())), empty)
    g, _ = core.preprocess(oracle, bounds, db, max_n=args.max_n)
    bound = None
    deltas = {bounds[i] for i in db.ids}
    if args.statistic in ("mean", "variance") and len(deltas) == 1:
        # same closed-form bounds as the fast path; they need a uniform delta
        delta, x = deltas.pop(), db.values()
        bound = (stats.mean_error_bound(empty, delta, x) if args.statistic == "mean"
                 else stats.variance_error_bound(delta, x))
    elif len(db) <= core.DEFAULT_EXACT_LIMIT:
        bound = core.error_bound(oracle, bounds, db).value
    return float(oracle(db)), g, bound


def _empty_for(args, kind: str) -> float:
    if kind in ("mean", "trimmed_mean"):
        value = args.mu_hat if args.mu_hat is not None else args.empty_value
        flag = "--mu-hat"
    else:
        value, flag = args.empty_value, "--empty-value"
    if value is None:
        raise ParamError(f"{kind} needs {flag} (the value assigned to the empty database)")
    return value


def _fast(args, db, bounds) -> tuple[float, float, float | None]:
    if len(db) and isinstance(db[0].value, tuple):
        raise ParamError("2D input needs --general with a 2D oracle")
    delta = _uniform_delta(bounds, db)
    x = db.values()
    if args.statistic == "variance":
        if args.empty_value not in (None, 0.0):
            raise ParamError("variance always uses 0 on the empty database")
        g = stats.preprocess_variance(delta, x)
        raw = float(x.var()) if len(x) else 0.0
        bound = stats.variance_error_bound(delta, x) if len(x) else None
        return raw, g, bound
    kind = FAST_STATS[args.statistic]
    spec = stats.OrderedStatSpec(kind, _empty_for(args, kind), args.alpha)
    g = stats.preprocess_ordered(spec, delta, x)
    raw = spec.evaluate(x)
    bound = None
    if kind == "mean" and len(x):
        bound = stats.mean_error_bound(spec.empty_value, delta, x)
    return raw, g, bound


def run(args) -> Report:
    db = read_database(args.input)
    bounds = load_bounds(args.delta, args.delta_file)
    if args.alpha is not None and not 0 <= args.alpha < 0.5:
        raise ParamError("--alpha must lie in [0, 0.5)")
    if args.general:
        raw, g, bound = _general(args, db, bounds)
    else:
        if args.statistic not in FAST_STATS and args.statistic != "variance":
            raise ParamError(f"unknown statistic {args.statistic!r}; custom oracles need --general")
        raw, g, bound = _fast(args, db, bounds)

    scale = noised = seed = None
    if args.epsilon_file:
        table, default = load_epsilons(args.epsilon_file)
        eps_map = {rid: table.get(rid, default) for rid in db.ids}
        missing = [rid for rid, e in eps_map.items() if e is None]
        if missing:
            raise ParamError(f"no epsilon for ids {missing[:5]} and no '*' default")
        eps = mechanisms.PersonalEpsilons(eps_map)
        per_id = core.SensitivityBounds({rid: bounds[rid] for rid in db.ids})
        scale = mechanisms.noise_scale(per_id, eps).b if len(db) else 0.0
        seed = args.seed if args.seed is not None else secrets.randbits(64)
        rng = mechanisms.as_rng(seed)
        if isinstance(g, tuple):
            noised = tuple(v + mechanisms.laplace_sample(scale, rng) for v in g)
        else:
            noised = g + mechanisms.laplace_sample(scale, rng)
    return Report(args.statistic, len(db), raw, g, bound, scale, noised, seed)


# --------------------------------------------------------------------------
# output
# --------------------------------------------------------------------------

def _num(x) -> str:
    if x is None:
        return "null"
    if isinstance(x, tuple):
        return "[" + ", ".join(_num(v) for v in x) + "]"
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if not math.isfinite(x):
        return "null"
    return f"{x:.17g}"


def report_json(rep: Report) -> str:
    import json

    fields = [("statistic", json.dumps(rep.statistic)), ("n", _num(rep.n)),
              ("raw_value", _num(rep.raw_value)), ("g_value", _num(rep.g_value)),
              ("error_bound", _num(rep.error_bound)), ("noise_scale", _num(rep.noise_scale)),
              ("noised_value", _num(rep.noised_value)), ("seed", _num(rep.seed))]
    return "{" + ", ".join(f'"{k}": {v}' for k, v in fields) + "}"


def report_table(rep: Report) -> str:
    rows = [("statistic", rep.statistic), ("n", rep.n), ("raw value", rep.raw_value),
            ("g value", rep.g_value), ("error bound", rep.error_bound),
            ("noise scale", rep.noise_scale), ("noised value", rep.noised_value), ("seed", rep.seed)]
    width = max(len(k) for k, _ in rows)
    lines = []
    for key, val in rows:
        text = "-" if val is None else (val if isinstance(val, str) else _num(val))
        lines.append(f"{key:<{width}}  {text}")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spf", description="Sensitivity-preprocessed statistics with optional personalized-DP noise.")
    p.add_argument("statistic", help="mean, trimmed_mean, median, min, max, variance; with --general also a registered or module:function oracle")
    p.add_argument("input", help="CSV with header id,value (or id,x1,x2)")
    p.add_argument("--delta", type=float, help="uniform sensitivity bound")
    p.add_argument("--delta-file", help="CSV id,delta; a '*' row sets the default")
    p.add_argument("--mu-hat", type=float, help="value of the mean on the empty database")
    p.add_argument("--empty-value", type=float, help="value of the statistic on the empty database")
    p.add_argument("--alpha", type=float, default=0.1, help="trim fraction per side for trimmed_mean (default 0.1)")
    p.add_argument("--epsilon-file", help="CSV id,epsilon; enables Laplace noise")
    p.add_argument("--seed", type=int, help="64-bit unsigned seed for the noise")
    p.add_argument("--json", action="store_true", help="emit one JSON object")
    p.add_argument("--general", action="store_true", help="use the exponential-time general recursion")
    p.add_argument("--max-n", type=int, default=core.DEFAULT_MAX_N, help="size cap for --general (default 24)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ParamError("--seed must be a 64-bit unsigned integer")
        rep = run(args)
    except InputError as exc:
        print(f"spf: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SizeLimitError as exc:
        print(f"spf: {exc}", file=sys.stderr)
        return EXIT_SIZE
    except (ParamError, ValueError) as exc:
        print(f"spf: {exc}", file=sys.stderr)
        return EXIT_PARAMS
    print(report_json(rep) if args.json else report_table(rep))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
