import numpy as np
import pytest

from spf import Database, FunctionOracle, Record, SensitivityBounds


def table_oracle(rng, n, lo=-20.0, hi=20.0, dim=None):
    """An arbitrary f over ids 0..n-1, tabulated on every subset."""
    shape = () if dim is None else (dim,)
    table = {}

    def evaluate(db):
        key = frozenset(db.ids)
        if key not in table:
            table[key] = rng.uniform(lo, hi, size=shape)
        v = table[key]
        return float(v) if dim is None else tuple(float(t) for t in v)

    empty = evaluate(Database())
    db = Database(Record(i, float(rng.uniform(-5, 5))) for i in range(n))
    return FunctionOracle(evaluate, empty), db


def random_bounds(rng, db, hi=5.0):
    return SensitivityBounds({rid: float(rng.uniform(0, hi)) for rid in db.ids})


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def two_entry():
    """f(empty)=0, f({a})=3, f({b})=-3, f({a,b})=0 with unit bounds."""
    vals = {frozenset(): 0.0, frozenset("a"): 3.0, frozenset("b"): -3.0, frozenset("ab"): 0.0}
    f = FunctionOracle(lambda db: vals[frozenset(db.ids)], 0.0)
    db = Database([Record("a", 1.0), Record("b", 2.0)])
    return f, SensitivityBounds.uniform(1.0), db
