import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sosnorm.errors import DimensionOverflowError
from sosnorm.symtensor import (
    SymVector,
    exponent_matrix,
    index_of,
    lift,
    multi_indices,
    multinomial,
    pairing,
    sym_dim,
    veronese,
)


@pytest.mark.parametrize("d,n,expected", [(1, 5, 1), (2, 3, 4), (4, 3, 20)])
def test_sym_dim_examples(d, n, expected):
    assert sym_dim(d, n) == expected
    assert sym_dim(d, n) == math.comb(n + d - 1, n)


def test_sym_dim_overflow():
    with pytest.raises(DimensionOverflowError):
        sym_dim(50, 50)


@pytest.mark.parametrize("d,n", [(0, 1), (1, 0), (-2, 3)])
def test_sym_dim_rejects_nonpositive(d, n):
    with pytest.raises(ValueError):
        sym_dim(d, n)


@pytest.mark.parametrize(
    "d,n,expected",
    [
        (2, 1, [(1, 0), (0, 1)]),
        (2, 3, [(3, 0), (2, 1), (1, 2), (0, 3)]),
        (3, 2, [(2, 0, 0), (1, 1, 0), (1, 0, 1), (0, 2, 0), (0, 1, 1), (0, 0, 2)]),
    ],
)
def test_multi_indices_examples(d, n, expected):
    assert multi_indices(d, n) == expected


@pytest.mark.parametrize("d,n", [(1, 3), (2, 5), (3, 4), (4, 3), (5, 2)])
def test_multi_indices_bijection(d, n):
    # brute force: every tuple in the box, keep degree n, sort descending
    brute = sorted((a for a in itertools.product(range(n + 1), repeat=d) if sum(a) == n), reverse=True)
    got = multi_indices(d, n)
    assert got == brute
    assert len(set(got)) == len(got) == sym_dim(d, n)
    assert [index_of(a) for a in got] == list(range(len(got)))
    np.testing.assert_array_equal(exponent_matrix(d, n), np.array(got))


def test_multinomial_matches_factorials():
    for alpha in [(3, 0), (2, 1), (1, 1, 1), (4, 2, 0, 1)]:
        expect = math.factorial(sum(alpha)) // math.prod(math.factorial(a) for a in alpha)
        assert multinomial(alpha) == expect


def test_veronese_example_norm_identity():
    v = veronese([1.0, 2.0], 3)
    s3 = math.sqrt(3.0)
    np.testing.assert_allclose(v.coords, [1.0, 2 * s3, 4 * s3, 8.0], rtol=1e-15)
    assert math.isclose(float(v.coords @ v.coords), 125.0, rel_tol=1e-14)


def test_veronese_basis_vector():
    v = veronese([1.0, 0.0, 0.0], 3)
    expected = np.zeros(sym_dim(3, 3))
    expected[index_of((3, 0, 0))] = 1.0
    np.testing.assert_array_equal(v.coords, expected)


def test_pairing_examples():
    assert pairing(veronese([1, 1], 3), veronese([2, 0], 3)) == pytest.approx(8.0, rel=1e-15)
    assert pairing(veronese([1, 0, -1], 3), veronese([2, 1, 1], 3)) == pytest.approx(1.0, rel=1e-14)
    assert pairing(veronese([0.3, -1.2, 4.0], 3), SymVector.zeros(3, 3)) == 0.0


def test_pairing_random_d3_n5():
    rng = np.random.default_rng(5)
    for _ in range(50):
        f, x = rng.standard_normal((2, 3))
        direct = float(f @ x) ** 5
        assert pairing(veronese(f, 5), veronese(x, 5)) == pytest.approx(direct, rel=1e-12, abs=1e-14)


def test_pairing_shape_mismatch():
    with pytest.raises(ValueError):
        pairing(veronese([1, 2], 3), veronese([1, 2, 3], 3))
    with pytest.raises(ValueError):
        pairing(veronese([1, 2], 3), veronese([1, 2], 1))


def test_symvector_length_checked():
    with pytest.raises(ValueError):
        SymVector(2, 3, np.zeros(3))


def test_lift_rows_match_single():
    X = np.random.default_rng(0).standard_normal((7, 3))
    L = lift(X, 3)
    for i in range(7):
        np.testing.assert_array_equal(L[i], veronese(X[i], 3).coords)


finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


@settings(max_examples=200, deadline=None)
@given(
    x=arrays(np.float64, st.integers(1, 5), elements=finite),
    n=st.sampled_from([1, 3, 5, 7]),
)
def test_norm_identity(x, n):
    v = veronese(x, n)
    expect = float(x @ x) ** n
    assert float(v.coords @ v.coords) == pytest.approx(expect, rel=1e-12, abs=1e-300)


@settings(max_examples=200, deadline=None)
@given(
    x=arrays(np.float64, 3, elements=finite),
    t=st.floats(-5, 5, allow_nan=False),
    n=st.sampled_from([1, 3, 5]),
)
def test_homogeneity(x, t, n):
    lhs = veronese(t * x, n).coords
    rhs = t**n * veronese(x, n).coords
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-12 * max(1.0, np.abs(rhs).max()))


@settings(max_examples=200, deadline=None)
@given(
    d=st.integers(1, 5),
    n=st.integers(1, 7),
    seed=st.integers(0, 2**32 - 1),
)
def test_pairing_identity(d, n, seed):
    f, x = np.random.default_rng(seed).standard_normal((2, d))
    direct = float(f @ x) ** n
    got = pairing(veronese(f, n), veronese(x, n))
    scale = (np.linalg.norm(f) * np.linalg.norm(x)) ** n
    assert abs(got - direct) <= 1e-12 * scale
