import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from intervalgae.numerics import (
    DimensionError, finite_diff_grad, hadamard, make_rng, matvec, relative_error,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False, allow_subnormal=False)


def test_matvec_examples():
    assert np.array_equal(matvec(np.eye(3), [1, 2, 3]), [1, 2, 3])
    assert np.array_equal(matvec(np.zeros((2, 3)), [1, 1, 1]), [0, 0])
    assert np.array_equal(matvec([[1, 2], [3, 4]], [1, 1]), [3, 7])


def test_matvec_dimension_mismatch():
    with pytest.raises(DimensionError, match="mismatch"):
        matvec(np.eye(3), [1, 2])


def test_hadamard_examples():
    assert np.array_equal(hadamard([1, 2, 3], [1, 1, 1]), [1, 2, 3])
    assert np.array_equal(hadamard([1, 2], [0, 0]), [0, 0])
    assert np.array_equal(hadamard([2, 3], [4, 5]), [8, 15])
    with pytest.raises(DimensionError):
        hadamard([1, 2], [1, 2, 3])


@given(arrays(np.float64, st.integers(1, 20), elements=finite))
def test_identity_matvec_is_identity(v):
    assert np.array_equal(matvec(np.eye(v.size), v), v)


@given(st.integers(1, 10).flatmap(
    lambda n: st.tuples(*(arrays(np.float64, n, elements=finite) for _ in range(3)))))
def test_hadamard_commutative_associative(abc):
    a, b, c = abc
    assert np.array_equal(hadamard(a, b), hadamard(b, a))
    np.testing.assert_allclose(hadamard(hadamard(a, b), c), hadamard(a, hadamard(b, c)), rtol=1e-12,
                               atol=1e-300)  # products can underflow to subnormals


def test_finite_diff_examples():
    g = finite_diff_grad(lambda x: float(x[0] ** 2), np.array([3.0]), 1e-5)
    assert abs(g[0] - 6.0) < 1e-6
    assert np.array_equal(finite_diff_grad(lambda x: 4.2, np.ones(5)), np.zeros(5))


def test_finite_diff_rejects_nonfinite():
    with pytest.raises(ValueError, match="non-finite"):
        finite_diff_grad(lambda x: float("nan"), np.ones(2))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 8))
def test_finite_diff_quadratic_form(seed, n):
    rng = make_rng(seed)
    A = rng.normal(size=(n, n))
    x = rng.normal(size=n)
    g = finite_diff_grad(lambda v: float(v @ A @ v), x.copy(), 1e-5)
    assert relative_error(g, (A + A.T) @ x) < 1e-6


def test_rng_reproducible():
    assert np.array_equal(make_rng(7).random(10), make_rng(7).random(10))
    assert not np.array_equal(make_rng(7).random(10), make_rng(8).random(10))
