import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from drsubmax.functions import (CoverageFunction, CutFunction, HadamardRestriction, NegativeValue,
                                NotDRSubmodular, PsumRestriction, TableFunction, all_corners,
                                make_quadratic, multilinear_exact, multilinear_sampled, random_coverage,
                                random_cut, random_quadratic)
from drsubmax.oracles import smoothness_oracle
from drsubmax.vectors import DimensionError, hprod, psum


def builtins(rng, n=4):
    return [random_quadratic(n, rng), multilinear_exact(random_cut(n, rng)),
            multilinear_exact(random_cut(n, rng, directed=False)),
            multilinear_exact(random_coverage(n, rng))]


# -- quadratics ------------------------------------------------------------


def test_linear_quadratic():
    F = make_quadratic(np.zeros((3, 3)), np.ones(3))
    assert F.value(np.full(3, 0.5)) == pytest.approx(1.5)
    assert np.array_equal(F.gradient(np.zeros(3)), np.ones(3))
    assert np.array_equal(F.gradient(np.ones(3)), np.ones(3))


def test_one_dimensional_quadratic():
    F = make_quadratic([[-1.0]], [1.0])
    assert F.value(np.ones(1)) == pytest.approx(0.5)
    assert F.smoothness == pytest.approx(1.0)


def test_quadratic_rejects_positive_entry():
    with pytest.raises(NotDRSubmodular):
        make_quadratic([[0.0, 0.5], [0.5, 0.0]], [1.0, 1.0])


def test_quadratic_rejects_negative_corner():
    with pytest.raises(NegativeValue):
        make_quadratic([[-4.0]], [1.0])


def test_random_quadratic_antitone(rng):
    F = random_quadratic(5, rng)
    assert F.is_dr() and F.nonneg_verified
    for _ in range(1000):
        x = rng.random(5)
        y = x + rng.random(5) * (1.0 - x)
        assert np.all(F.gradient(x) >= F.gradient(y) - 1e-12)


def test_dimension_checked(rng):
    F = random_quadratic(3, rng)
    with pytest.raises(DimensionError):
        F.value(np.zeros(4))
    with pytest.raises(DimensionError):
        F.values(np.zeros((2, 4)))


# -- set functions and multilinear extensions ---------------------------------


def test_single_edge_cut():
    f = CutFunction(2, [(0, 1, 1.0)])
    F = multilinear_exact(f)
    assert F.value(np.array([0.5, 0.5])) == pytest.approx(0.25)
    assert f({0}) == 1.0 and f({1}) == 0.0 and f({0, 1}) == 0.0
    assert f.M == 2.0
    # L = 2 n M
    assert F.smoothness == 8.0


def test_constant_set_function():
    F = multilinear_exact(TableFunction(3, np.full(8, 2.5)))
    x = np.array([0.1, 0.7, 0.4])
    assert F.value(x) == pytest.approx(2.5)
    assert np.allclose(F.gradient(x), 0.0)


def test_corners_reproduce_table(rng):
    values = rng.random(16)
    F = multilinear_exact(TableFunction(4, values))
    corners = all_corners(4)
    assert np.allclose(F.values(corners), values, atol=1e-14)
    assert np.allclose([F.value(c) for c in corners], values, atol=1e-14)


def test_cut_quadratic_form_matches_table(rng):
    for directed in (True, False):
        f = random_cut(5, rng, directed=directed)
        Q = multilinear_exact(f)
        T = multilinear_exact(TableFunction(5, f.table()))
        for _ in range(20):
            x = rng.random(5)
            assert Q.value(x) == pytest.approx(T.value(x), abs=1e-12)
            assert np.allclose(Q.gradient(x), T.gradient(x), atol=1e-12)


def test_cut_self_loop_never_cut():
    f = CutFunction(2, [(0, 0, 3.0), (0, 1, 1.0)])
    assert f({0}) == 1.0
    F = multilinear_exact(f)
    assert F.value(np.array([1.0, 0.0])) == pytest.approx(1.0)


def test_coverage_values():
    f = CoverageFunction(3, [[0, 1], [1], [2]], [1.0, 2.0, 4.0])
    assert f({0}) == 3.0 and f({0, 1}) == 3.0 and f({1, 2}) == 6.0 and f(()) == 0.0
    assert f.is_submodular()


def test_generators_are_submodular(rng):
    for _ in range(10):
        assert random_cut(5, rng).is_submodular()
        assert random_coverage(5, rng).is_submodular()


def test_table_rejects_negative():
    with pytest.raises(NegativeValue):
        TableFunction(1, [0.0, -1.0])


# -- sampled mode -----------------------------------------------------------------


def test_sampled_single_edge():
    F = multilinear_sampled(CutFunction(2, [(0, 1, 1.0)]), 10 ** 5, seed=3)
    assert abs(F.value(np.array([0.5, 0.5])) - 0.25) <= 0.01


def test_sampled_reproducible():
    F = multilinear_sampled(random_coverage(4, np.random.default_rng(1)), 1, seed=7)
    x = np.array([0.3, 0.5, 0.2, 0.9])
    assert F.value(x) == F.value(x)
    assert np.array_equal(F.gradient(x), F.gradient(x))


def test_sampled_mean_over_seeds(rng):
    f = random_coverage(4, rng)
    exact = multilinear_exact(f)
    x = rng.random(4)
    k = 200
    vals = np.array([multilinear_sampled(f, k, seed=s).value(x) for s in range(100)])
    sigma = np.sqrt(np.var(f.evaluate(rng.random((20000, 4)) < x)) / k) / np.sqrt(len(vals))
    assert abs(vals.mean() - exact.value(x)) <= 3 * sigma + 1e-3


# -- DR properties -------------------------------------------------------------------


@given(st.integers(0, 10 ** 6))
def test_lattice_inequality(seed):
    rng = np.random.default_rng(seed)
    for F in builtins(rng, 3):
        x, y = rng.random(3), rng.random(3)
        lhs = F.value(np.maximum(x, y)) + F.value(np.minimum(x, y))
        rhs = F.value(psum(x, y)) + F.value(hprod(x, y))
        assert lhs >= rhs - 1e-9


@given(st.integers(0, 10 ** 6))
def test_gradient_upper_bound(seed):
    rng = np.random.default_rng(seed)
    for F in builtins(rng, 3):
        x = rng.random(3)
        y = rng.random(3) * (1.0 - x)
        assert F.gradient(x) @ y >= F.value(x + y) - F.value(x) - 1e-9


@given(st.integers(0, 10 ** 6))
def test_closures_keep_antitone_gradient(seed):
    rng = np.random.default_rng(seed)
    h = 1e-5
    for F in builtins(rng, 3):
        fixed = rng.random(3)
        for G in (HadamardRestriction(F, fixed), PsumRestriction(F, fixed)):
            x = rng.random(3) * 0.9 + h
            y = np.minimum(1.0 - h, x + rng.random(3) * (1.0 - h - x))

            def fd(p):
                return np.array([(G.value(p + h * e) - G.value(p - h * e)) / (2 * h) for e in np.eye(3)])

            assert np.all(fd(x) >= fd(y) - 1e-6)


def test_gradient_matches_finite_differences(rng):
    h = 1e-5
    for F in builtins(rng, 4) + [HadamardRestriction(random_quadratic(4, rng), rng.random(4))]:
        for _ in range(10):
            x = np.clip(rng.random(4), h, 1 - h)
            fd = np.array([(F.value(x + h * e) - F.value(x - h * e)) / (2 * h) for e in np.eye(4)])
            g = F.gradient(x)
            assert np.allclose(g, fd, rtol=1e-4, atol=1e-8)


def test_declared_smoothness_dominates(rng):
    for F in builtins(rng, 4):
        assert smoothness_oracle(F, 200, seed=1) <= F.smoothness * (1 + 1e-9)
        y = rng.random(4)
        for G in (HadamardRestriction(F, y), PsumRestriction(F, y)):
            assert smoothness_oracle(G, 100, seed=2) <= G.smoothness * (1 + 1e-9)


def test_evaluation_counter(rng):
    F = random_quadratic(3, rng)
    F.counter.reset()
    F.value(np.zeros(3))
    F.values(np.zeros((4, 3)))
    F.gradient(np.zeros(3))
    assert (F.counter.values, F.counter.gradients) == (5, 1)
