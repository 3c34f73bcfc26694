import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spf import (Database, FunctionOracle, L1Ball, Point2, Record, RotatedBox, SensitivityBounds,
                 error_bound_2d, intersect_balls, preprocess, preprocess_2d,
                 preprocess_per_coordinate, project_to_box, sensitivity_audit_2d)
from spf.errors import SizeLimitError
from spf.verify import brute_permutation_bound

from conftest import random_bounds, table_oracle


def test_single_ball_box():
    assert intersect_balls([L1Ball(Point2(0, 0), 1)]) == RotatedBox(-1, 1, -1, 1)


def test_touching_balls_degenerate_box():
    box = intersect_balls([L1Ball((0, 0), 1), L1Ball((2, 0), 1)])
    assert box == RotatedBox(1, 1, 1, 1)
    assert project_to_box(box, (5, -3)) == Point2(1, 0)


def test_disjoint_balls_empty():
    assert intersect_balls([L1Ball((0, 0), 1), L1Ball((4, 0), 1)]) is None
    assert intersect_balls([L1Ball((0, 0), 1), L1Ball((4, 0), 1)], tol=1e-12) is None


def test_rounding_level_inversion_tolerated():
    balls = [L1Ball((0, 0), 1), L1Ball((2 + 1e-15, 0), 1)]
    assert intersect_balls(balls) is None
    assert intersect_balls(balls, tol=1e-12) is not None


def test_negative_radius_rejected():
    with pytest.raises(ValueError):
        L1Ball((0, 0), -1)


@pytest.mark.parametrize("target,expected", [((0.2, -0.3), (0.2, -0.3)), ((2, 0), (1, 0)),
                                              ((2, 2), (0.5, 0.5)), ((-3, 0.5), (-1, 0))])
def test_projection_examples(target, expected):
    box = intersect_balls([L1Ball((0, 0), 1)])
    assert project_to_box(box, target) == pytest.approx(expected)


def test_preprocess_constant():
    f = FunctionOracle(lambda db: (1.5, -2.0), (1.5, -2.0))
    g, memo = preprocess_2d(f, SensitivityBounds.uniform(0.1), Database.from_values([1, 2, 3]))
    assert g == (1.5, -2.0)
    assert all(v == (1.5, -2.0) for _, v in memo.items())


def test_preprocess_singleton():
    f = FunctionOracle(lambda db: (2.0, 0.0), (0.0, 0.0))
    g, _ = preprocess_2d(f, SensitivityBounds.uniform(1.0), Database([Record("a", 0.0)]))
    assert g == (1.0, 0.0)


def test_preprocess_two_entry():
    vals = {frozenset(): (0.0, 0.0), frozenset("a"): (2.0, 0.0), frozenset("b"): (0.0, 2.0),
            frozenset("ab"): (0.0, 0.0)}
    f = FunctionOracle(lambda db: vals[frozenset(db.ids)], (0.0, 0.0))
    db = Database([Record("a", 0.0), Record("b", 1.0)])
    g, memo = preprocess_2d(f, SensitivityBounds.uniform(1.0), db)
    assert memo.point(["a"]) == (1.0, 0.0)
    assert memo.point(["b"]) == (0.0, 1.0)
    # balls around (1,0) and (0,1): u in [0, 2], v pinned to 0, so the box is
    # the segment from (0,0) to (1,1); f = (0,0) is already on it
    box = intersect_balls([L1Ball((1, 0), 1), L1Ball((0, 1), 1)])
    assert box == RotatedBox(0, 2, 0, 0)
    assert g == (0.0, 0.0)
    assert isinstance(g.x1, float)


def test_preprocess_rejects_scalar_oracle():
    with pytest.raises(ValueError):
        preprocess_2d(FunctionOracle(lambda db: 1.0, 0.0), SensitivityBounds.uniform(1), Database.from_values([1]))


def test_size_cap():
    f = FunctionOracle(lambda db: (0.0, 0.0), (0.0, 0.0))
    with pytest.raises(SizeLimitError):
        preprocess_2d(f, SensitivityBounds.uniform(1), Database.from_values(range(5)), max_n=4)


def test_pairwise_implies_total(rng):
    for _ in range(500):
        k = int(rng.integers(1, 8))
        centers = rng.uniform(-5, 5, (k, 2))
        radii = rng.uniform(0, 6, k)
        pairwise = all(np.abs(centers[i] - centers[j]).sum() <= radii[i] + radii[j]
                       for i, j in itertools.combinations(range(k), 2))
        if not pairwise:
            continue
        box = intersect_balls([L1Ball(tuple(c), r) for c, r in zip(centers, radii)])
        assert box is not None


def test_triangle_feasibility_and_audit(rng):
    for _ in range(30):
        n = int(rng.integers(1, 8))
        f, db = table_oracle(rng, n, dim=2)
        bounds = random_bounds(rng, db)
        _, memo = preprocess_2d(f, bounds, db)
        assert sensitivity_audit_2d(memo, bounds, tol=1e-9).ok
        ids = memo.root.ids
        g = memo.g
        for mask in range(1 << n):
            bits = [i for i in range(n) if mask >> i & 1]
            for i, j in itertools.combinations(bits, 2):
                gap = np.abs(g[mask ^ (1 << i)] - g[mask ^ (1 << j)]).sum()
                assert gap <= bounds[ids[i]] + bounds[ids[j]] + 1e-9


def test_g_is_nearest_feasible_point(rng):
    f, db = table_oracle(rng, 5, dim=2)
    bounds = random_bounds(rng, db)
    _, memo = preprocess_2d(f, bounds, db)
    ids = memo.root.ids
    for mask in range(1, 1 << 5):
        bits = [i for i in range(5) if mask >> i & 1]
        box = intersect_balls([L1Ball(memo.point(mask ^ (1 << i)), bounds[ids[i]]) for i in bits],
                              tol=1e-12)
        assert project_to_box(box, memo.f[mask]) == pytest.approx(memo.point(mask), abs=1e-12)


def test_projection_optimality(rng):
    for _ in range(50):
        u0, v0 = rng.uniform(-5, 5, 2)
        box = RotatedBox(u0, u0 + rng.uniform(0, 4), v0, v0 + rng.uniform(0, 4))
        target = rng.uniform(-10, 10, 2)
        p = np.array(project_to_box(box, target))
        assert box.contains(p, 1e-12)
        u = rng.uniform(box.u_min, box.u_max, 1000)
        v = rng.uniform(box.v_min, box.v_max, 1000)
        pts = np.column_stack(((u + v) / 2, (u - v) / 2))
        d_best = np.linalg.norm(p - target)
        assert (np.linalg.norm(pts - target, axis=1) >= d_best - 1e-12).all()


def test_error_bound_2d(rng):
    for _ in range(40):
        f, db = table_oracle(rng, int(rng.integers(1, 9)), dim=2)
        bounds = random_bounds(rng, db)
        g, _ = preprocess_2d(f, bounds, db)
        bound = error_bound_2d(f, bounds, db)
        assert np.abs(np.subtract(f(db), g)).sum() <= bound.value + 1e-9
    f, db = table_oracle(rng, 4, dim=2)
    bounds = random_bounds(rng, db)
    assert error_bound_2d(f, bounds, db).value == pytest.approx(brute_permutation_bound(f, bounds, db))


def test_error_bound_2d_two_entry():
    vals = {frozenset(): (0.0, 0.0), frozenset("a"): (2.0, 0.0), frozenset("b"): (0.0, 2.0),
            frozenset("ab"): (0.0, 0.0)}
    f = FunctionOracle(lambda db: vals[frozenset(db.ids)], (0.0, 0.0))
    db = Database([Record("a", 0.0), Record("b", 1.0)])
    assert error_bound_2d(f, SensitivityBounds.uniform(1.0), db).value == 2.0


def test_per_coordinate(rng):
    f = FunctionOracle.of_values(lambda x: (float(x.sum()), float(x.max())), (0.0, 0.0))
    db = Database.from_values(rng.uniform(-3, 3, 5))
    b1, b2 = SensitivityBounds.uniform(0.5), SensitivityBounds.uniform(2.0)
    out, memos = preprocess_per_coordinate(f, [b1, b2], db)
    ref0, _ = preprocess(FunctionOracle.of_values(np.sum, 0.0), b1, db)
    ref1, _ = preprocess(FunctionOracle.of_values(np.max, 0.0), b2, db)
    assert out == (ref0, ref1) and len(memos) == 2
    with pytest.raises(ValueError):
        preprocess_per_coordinate(f, [b1], db)


coord = st.floats(-100, 100, allow_nan=False)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(coord, coord, st.floats(0, 50)), min_size=1, max_size=6), coord, coord)
def test_projection_lands_in_every_ball(balls, t1, t2):
    objs = [L1Ball((a, b), r) for a, b, r in balls]
    box = intersect_balls(objs)
    if box is None:
        return
    p = project_to_box(box, (t1, t2))
    assert all(ball.contains(p, 1e-9) for ball in objs)
