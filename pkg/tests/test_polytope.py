import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from drsubmax.polytope import (Halfspace, PackingPolytope, cardinality, diameter_bound,
                               export_vertices_csv, hypercube, knapsack, lp_maximize, membership,
                               partition_matroid, vertices)
from drsubmax.vectors import DimensionError


def random_packing(rng, n, m):
    A = rng.uniform(0.0, 1.0, size=(m, n)) * (rng.random((m, n)) < 0.7)
    b = rng.uniform(0.5, 2.0, size=m)
    return PackingPolytope(A, b)


def test_builders():
    assert hypercube(3).m == 0
    P = cardinality(4, 2)
    assert P.contains(np.array([1, 1, 0, 0.0])) and not P.contains(np.array([1, 1, 0.5, 0]))
    K = knapsack([1.0, 2.0], 2.0)
    assert K.contains([0.0, 1.0]) and not K.contains([1.0, 1.0])
    M = partition_matroid([[0, 1], [2, 3]], [1, 1])
    assert M.n == 4 and M.m == 2
    assert M.contains([1, 0, 0, 1.0]) and not M.contains([1, 1, 0, 0.0])


def test_builder_errors():
    with pytest.raises(ValueError):
        PackingPolytope([[-1.0]], [1.0])
    with pytest.raises(ValueError):
        partition_matroid([[0, 1], [1]], [1, 1])
    with pytest.raises(ValueError):
        cardinality(3, -1)
    with pytest.raises(DimensionError):
        PackingPolytope(np.ones((2, 3)), [1.0])


def test_lp_cardinality_example():
    r = lp_maximize(cardinality(4, 2), [], [3.0, 1.0, 2.0, -1.0])
    assert r.status == "optimal"
    assert np.allclose(r.x, [1, 0, 1, 0])
    assert r.value == pytest.approx(5.0)


def test_lp_fractional_knapsack():
    r = lp_maximize(knapsack([2.0, 1.0], 1.5), [], [1.0, 1.0])
    # greedy by ratio takes x1 = 1, then x0 = 0.25
    assert r.value == pytest.approx(1.25)
    assert np.allclose(r.x, [0.25, 1.0])


def test_lp_with_cut_and_infeasible():
    P = cardinality(3, 1)
    r = lp_maximize(P, [Halfspace(np.array([1.0, 0, 0]), 0.5)], [0.0, 1.0, 0.0])
    assert r.value == pytest.approx(0.5)
    assert r.x[0] >= 0.5 - 1e-9
    bad = lp_maximize(P, [Halfspace(np.ones(3), 1.5)], np.ones(3))
    assert bad.status == "infeasible"


@settings(max_examples=40)
@given(st.integers(0, 10 ** 6), st.integers(1, 4), st.integers(1, 3), st.booleans())
def test_lp_matches_vertex_enumeration(seed, n, m, with_cut):
    rng = np.random.default_rng(seed)
    P = random_packing(rng, n, m)
    cuts = [Halfspace(rng.random(n), 0.2)] if with_cut else []
    c = rng.standard_normal(n)
    V = vertices(P, cuts)
    r = lp_maximize(P, cuts, c)
    if V.shape[0] == 0:
        assert r.status == "infeasible"
    else:
        assert r.status == "optimal"
        assert membership(P, cuts, r.x)
        assert r.value == pytest.approx(float(np.max(V @ c)), abs=1e-8)


@given(st.integers(0, 10 ** 6))
def test_down_closed(seed):
    rng = np.random.default_rng(seed)
    P = random_packing(rng, 4, 2)
    for v in vertices(P):
        assert P.contains(v * rng.random(4))


def test_hypercube_vertices_and_diameter(tmp_path):
    V = vertices(hypercube(3))
    assert V.shape == (8, 3)
    assert diameter_bound(hypercube(4)) == 2.0
    assert export_vertices_csv(cardinality(3, 1), tmp_path / "v.csv") == 4
    assert (tmp_path / "v.csv").read_text().splitlines()[0] == "x0,x1,x2"


def test_membership_tolerance():
    P = cardinality(2, 1)
    assert membership(P, [], [0.5, 0.5 + 1e-10])
    assert not membership(P, [], [0.5, 0.5 + 1e-6])
    assert not membership(P, [], [-1e-6, 0.0])
    with pytest.raises(DimensionError):
        membership(P, [], [0.0])


def test_halfspace_rejects_nan():
    with pytest.raises(ValueError):
        Halfspace(np.array([np.nan]), 0.0)
