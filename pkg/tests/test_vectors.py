import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from drsubmax.vectors import DimensionError, as_vec01, hprod, indicator, psum, psum_many, vee, wedge

unit = st.floats(0.0, 1.0, allow_nan=False)


def vec(n):
    return arrays(np.float64, n, elements=unit)


def test_psum_examples():
    assert psum([0.5], [0.5]) == pytest.approx([0.75])
    a = np.array([0.2, 0.7])
    assert np.allclose(psum(a, np.zeros(2)), a, atol=1e-15)
    assert np.array_equal(psum(a, np.ones(2)), np.ones(2))


def test_lattice_examples():
    assert np.array_equal(vee([0.2, 0.9], [0.5, 0.1]), [0.5, 0.9])
    assert np.array_equal(wedge([0.2, 0.9], [0.5, 0.1]), [0.2, 0.1])
    a = np.array([0.3, 0.6])
    assert np.array_equal(hprod(a, np.ones(2)), a)
    assert psum_many([[0.5], [0.5], [0.5]]) == pytest.approx([0.875])


def test_empty_family_is_zero():
    assert np.array_equal(psum_many([], 3), np.zeros(3))
    with pytest.raises(ValueError):
        psum_many([])


def test_dimension_errors():
    with pytest.raises(DimensionError):
        psum([0.1, 0.2], [0.1])
    with pytest.raises(DimensionError):
        psum_many([[0.1], [0.1, 0.2]])
    with pytest.raises(DimensionError):
        as_vec01([0.1, 0.2], 3)


def test_as_vec01_box():
    assert np.array_equal(as_vec01([1.0 + 1e-13, -1e-13]), [1.0, 0.0])
    with pytest.raises(ValueError):
        as_vec01([1.1])
    with pytest.raises(ValueError):
        as_vec01([np.nan])


def test_indicator():
    assert np.array_equal(indicator(4, [0, 2]), [1, 0, 1, 0])


@given(vec(4), vec(4), vec(4))
def test_psum_commutative_associative(a, b, c):
    assert np.allclose(psum(a, b), psum(b, a), atol=1e-15)
    assert np.allclose(psum(psum(a, b), c), psum(a, psum(b, c)), atol=1e-12)
    assert np.allclose(psum_many([a, b, c]), psum(psum(a, b), c), atol=1e-12)


@given(vec(5), vec(5))
def test_psum_stays_in_box_and_dominates(a, b):
    s = psum(a, b)
    assert np.all(s >= -1e-15) and np.all(s <= 1.0 + 1e-15)
    assert np.all(s >= vee(a, b) - 1e-12)
    # x psum y + x hprod y = x + y coordinate-wise
    assert np.allclose(s + hprod(a, b), a + b, atol=1e-12)
