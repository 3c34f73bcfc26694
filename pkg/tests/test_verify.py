import itertools

import numpy as np
import pytest

from spf import Database, FunctionOracle, Record, SensitivityBounds, preprocess
from spf.errors import SizeLimitError
from spf.verify import (LP_COUNTEREXAMPLE, BoolFormula, all_false_database, brute_force_spf,
                        grid_min_violation, lattice_values, linf_feasible, lipschitz_slack,
                        lp_ball_counterexample_check, opt_linf, pairwise_vs_total_intersection,
                        restrict_lattice, sat_gadget)

from conftest import random_bounds, table_oracle

COUNTEREXAMPLE_3D = [(1, 1, -1), (1, -1, 1), (-1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1),
                     (1.5, 1.5, 1.5)]


def closed_form_opt(fvals, deltas):
    """McShane: feasible iff f(S) - f(T) <= d(S, T) + 2t for all pairs."""
    size = len(fvals)
    best = 0.0
    for s in range(size):
        for t in range(size):
            diff = s ^ t
            dist = sum(deltas[i] for i in range(len(deltas)) if diff >> i & 1)
            best = max(best, (fvals[s] - fvals[t] - dist) / 2)
    return best


# --- brute force reference ---------------------------------------------------

def test_brute_force_singletons():
    for fa, want in [(0.5, 0.5), (5.0, 1.0), (-3.0, -1.0)]:
        memo = brute_force_spf(FunctionOracle(lambda db, fa=fa: fa, 0.0), SensitivityBounds.uniform(1.0),
                               Database([Record("a", 0)]))
        assert memo[1] == want


def test_brute_force_two_entry(two_entry):
    assert brute_force_spf(*two_entry)[["a", "b"]] == 0.0


def test_brute_force_size_limit():
    with pytest.raises(SizeLimitError):
        brute_force_spf(FunctionOracle(lambda db: 0.0, 0.0), SensitivityBounds.uniform(1),
                        Database.from_values(range(13)))


# --- optimal approximation oracle --------------------------------------------

def test_opt_zero_when_f_already_feasible():
    f = FunctionOracle.of_values(lambda x: 0.5 * len(x), 0.0)
    fv, d = lattice_values(f, SensitivityBounds.uniform(1.0), Database.from_values([1, 2, 3]))
    assert opt_linf(fv, d) == 0.0


def test_opt_singleton_construction():
    t = opt_linf(np.array([0.0, 5.0]), np.array([1.0]))
    assert abs(t - 2.0) <= 1e-9
    g, _ = preprocess(FunctionOracle(lambda db: 5.0, 0.0), SensitivityBounds.uniform(1.0),
                      Database([Record("x", 0)]))
    assert abs(5.0 - g) == 4.0
    assert linf_feasible(np.array([0.0, 5.0]), np.array([1.0]), 2.0)
    assert not linf_feasible(np.array([0.0, 5.0]), np.array([1.0]), 1.99)


def test_opt_two_entry(two_entry):
    f, bounds, db = two_entry
    fv, d = lattice_values(f, bounds, db)
    t = opt_linf(fv, d)
    assert t == pytest.approx(closed_form_opt(fv, d), abs=1e-9)
    _, memo = preprocess(f, bounds, db)
    assert np.abs(memo.f - memo.g).max() <= 2 * t + 1e-6


def test_opt_matches_closed_form(rng):
    for _ in range(60):
        f, db = table_oracle(rng, int(rng.integers(0, 5)))
        fv, d = lattice_values(f, random_bounds(rng, db), db)
        assert opt_linf(fv, d) == pytest.approx(closed_form_opt(fv, d), abs=1e-9)


def test_opt_input_checks():
    with pytest.raises(ValueError):
        opt_linf(np.zeros(3), np.ones(1))
    with pytest.raises(SizeLimitError):
        opt_linf(np.zeros(1 << 13), np.ones(13))


def test_two_approximation(rng):
    for _ in range(100):
        n = int(rng.integers(1, 7))
        f, db = table_oracle(rng, n)
        bounds = SensitivityBounds.uniform(float(rng.uniform(0, 5)))
        _, memo = preprocess(f, bounds, db)
        fv, d = lattice_values(f, bounds, db)
        assert np.array_equal(fv, memo.f)
        assert np.abs(memo.f - memo.g).max() <= 2 * opt_linf(fv, d) + 1e-6


def test_restricted_two_approximation(rng):
    for _ in range(15):
        n = int(rng.integers(1, 6))
        f, db = table_oracle(rng, n)
        bounds = random_bounds(rng, db)
        _, memo = preprocess(f, bounds, db)
        fv, d = lattice_values(f, bounds, db)
        for mask in range(1 << n):
            sub_f, sub_d = restrict_lattice(fv, d, mask)
            sub_g, _ = restrict_lattice(memo.g, d, mask)
            assert np.abs(sub_f - sub_g).max() <= 2 * opt_linf(sub_f, sub_d) + 1e-6


# --- SAT gadget --------------------------------------------------------------

def cnf(n, clauses):
    """Clauses are tuples of nonzero ints: +k means x_k, -k means not x_k."""
    def evaluate(a):
        return all(any(a[abs(l) - 1] == (l > 0) for l in c) for c in clauses)
    return BoolFormula(n, evaluate)


def gadget_says_sat(phi):
    g, _ = preprocess(sat_gadget(phi), SensitivityBounds.uniform(1.0), all_false_database(phi.n_vars))
    return g < phi.n_vars


def test_gadget_examples():
    unsat = BoolFormula(1, lambda a: a[0] and not a[0])
    assert preprocess(sat_gadget(unsat), SensitivityBounds.uniform(1.0), all_false_database(1))[0] == 1.0
    neg = BoolFormula(1, lambda a: not a[0])
    assert sat_gadget(neg)(all_false_database(1)) == 0.0
    assert preprocess(sat_gadget(neg), SensitivityBounds.uniform(1.0), all_false_database(1))[0] == 0.0
    either = BoolFormula(2, lambda a: a[0] or a[1])
    g, memo = preprocess(sat_gadget(either), SensitivityBounds.uniform(1.0), all_false_database(2))
    assert memo[[0]] == memo[[1]] == 0.0 and g == 1.0


def test_pinned_empty_value_misses_all_true_witness():
    phi = cnf(1, [(1,)])  # only x1 = True satisfies
    assert phi.brute_force_sat()
    assert sat_gadget(phi, pin_empty=True).empty_value == 0.0
    pinned, _ = preprocess(sat_gadget(phi, pin_empty=True), SensitivityBounds.uniform(1.0), all_false_database(1))
    assert pinned == 1.0
    assert sat_gadget(phi).empty_value == -1.0
    assert gadget_says_sat(phi)


def test_pinned_variant_agrees_when_all_true_fails(rng):
    clauses = [c for w in (1, 2, 3) for c in literal_clauses(3, w)]
    for _ in range(200):
        combo = [clauses[i] for i in rng.choice(len(clauses), int(rng.integers(1, 6)), replace=False)]
        phi = cnf(3, combo)
        if phi((True,) * 3):
            continue
        g, _ = preprocess(sat_gadget(phi, pin_empty=True), SensitivityBounds.uniform(1.0), all_false_database(3))
        assert (g < 3) == phi.brute_force_sat()


def test_gadget_size_limit():
    with pytest.raises(SizeLimitError):
        sat_gadget(BoolFormula(13, lambda a: True))


def literal_clauses(n, width):
    for vars_ in itertools.combinations(range(1, n + 1), width):
        for signs in itertools.product((1, -1), repeat=width):
            yield tuple(s * v for s, v in zip(signs, vars_))


def test_gadget_agrees_with_brute_force_small():
    checked = 0
    for n in (1, 2, 3):
        clauses = [c for w in range(1, n + 1) for c in literal_clauses(n, w)]
        for k in (1, 2, 3):
            for combo in itertools.combinations(clauses, k):
                phi = cnf(n, combo)
                assert gadget_says_sat(phi) == phi.brute_force_sat()
                checked += 1
    assert checked > 3000


def test_gadget_agrees_with_brute_force_four_vars(rng):
    clauses = [c for w in (1, 2, 3) for c in literal_clauses(4, w)]
    seen = {True: 0, False: 0}
    for _ in range(300):
        k = int(rng.integers(2, 10))
        combo = [clauses[i] for i in rng.choice(len(clauses), k, replace=False)]
        phi = cnf(4, combo)
        sat = phi.brute_force_sat()
        assert gadget_says_sat(phi) == sat
        seen[sat] += 1
    # every full 2-variable clause set is unsatisfiable
    full = [tuple(s * v for s, v in zip(signs, (1, 2))) for signs in itertools.product((1, -1), repeat=2)]
    assert not gadget_says_sat(cnf(4, full))
    assert seen[True] and seen[False]


# --- ball intersections ------------------------------------------------------

def test_3d_counterexample():
    res = pairwise_vs_total_intersection(3, [(c, 3.0) for c in COUNTEREXAMPLE_3D])
    assert res.pairwise_nonempty and not res.total_nonempty
    assert res.min_violation >= 0.02
    pts = np.array(COUNTEREXAMPLE_3D)
    dists = [np.abs(a - b).sum() for a, b in itertools.combinations(pts, 2)]
    assert max(dists) <= 2 * 3.0  # touching at worst, so every pair meets


def test_single_ball():
    assert tuple(pairwise_vs_total_intersection(3, [((0, 0, 0), 1.0)]))[:2] == (True, True)
    assert tuple(pairwise_vs_total_intersection(2, [((0, 0), 1.0)]))[:2] == (True, True)


def test_random_2d_pairwise_sets(rng):
    hits = 0
    for _ in range(300):
        k = int(rng.integers(2, 6))
        balls = [(tuple(rng.uniform(-3, 3, 2)), float(rng.uniform(1, 4))) for _ in range(k)]
        res = pairwise_vs_total_intersection(2, balls)
        if res.pairwise_nonempty:
            hits += 1
            assert res.total_nonempty
    assert hits > 50


def test_unsupported_dimension():
    with pytest.raises(ValueError):
        pairwise_vs_total_intersection(4, [((0, 0, 0, 0), 1.0)])


def test_grid_margin_must_exceed_slack():
    assert lipschitz_slack(3, 1, 0.01) == pytest.approx(0.015)
    with pytest.raises(ValueError):
        pairwise_vs_total_intersection(3, [((0, 0, 0), 1.0)], margin=0.01)


def test_grid_min_violation_locates_common_point():
    best, x = grid_min_violation([(0, 0, 0), (1, 0, 0)], [0.5, 0.5], p=1)
    assert best <= lipschitz_slack(3, 1, 0.01)
    assert np.abs(x - [0.5, 0, 0]).sum() <= 0.02


def test_lp_counterexample():
    assert lp_ball_counterexample_check()
    c = np.array(LP_COUNTEREXAMPLE)
    for a, b in itertools.combinations(c, 2):
        assert np.linalg.norm(a - b) == pytest.approx(2.0, abs=1e-12)
    assert not lp_ball_counterexample_check([(0, 0)] * 3)
    assert not lp_ball_counterexample_check([(-0.5, 0), (0.5, 0), (0, 0.5)])
