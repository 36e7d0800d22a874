import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qpjacobi.scalednum import (
    ScaledComplex,
    ScaledMatrix2,
    SingularMatrix,
    ZeroMatrix,
    log_abs_det,
    log_two_norm,
    smat_mul,
)

finite = st.floats(-1e6, 1e6, allow_nan=False)
cplx = st.builds(complex, finite, finite)


def _check_normalized(m):
    mags = np.abs(m.entries).max(axis=(-1, -2))
    assert np.all((mags == 0) | ((mags >= 0.5) & (mags < 1)))


def test_identity_product_keeps_log_magnitudes():
    A = ScaledMatrix2.from_array(np.array([[3, -1j], [0.25, 7]]))
    B = smat_mul(A, ScaledMatrix2.identity())
    assert np.allclose(B.to_array(), A.to_array())
    assert log_two_norm(B) == pytest.approx(log_two_norm(A))


def test_huge_exponents():
    D = ScaledMatrix2.normalized(np.eye(2), 1000)
    P = smat_mul(D, D)
    _check_normalized(P)
    assert int(P.exponent) == 2001
    assert np.allclose(P.entries, 0.5 * np.eye(2))
    assert log_two_norm(P) == pytest.approx(2000 * math.log(2))


def test_associativity_against_double_precision():
    rng = np.random.default_rng(7)
    mats = [rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(3)]
    A, B, C = (ScaledMatrix2.from_array(m) for m in mats)
    left = smat_mul(smat_mul(A, B), C)
    right = smat_mul(A, smat_mul(B, C))
    plain = mats[0] @ mats[1] @ mats[2]
    assert log_two_norm(left) == pytest.approx(log_two_norm(right), abs=1e-12)
    assert log_two_norm(left) == pytest.approx(math.log(np.linalg.norm(plain, 2)), abs=1e-12)


def test_norm_and_det_examples():
    I = ScaledMatrix2.identity()
    assert log_two_norm(I) == pytest.approx(0, abs=1e-15)
    assert log_two_norm(ScaledMatrix2.from_array(np.ones((2, 2)))) == pytest.approx(math.log(2))
    assert log_two_norm(ScaledMatrix2.from_array(np.diag([3, 1 / 3]))) == pytest.approx(math.log(3))
    assert log_abs_det(I) == pytest.approx(0, abs=1e-15)
    assert log_abs_det(ScaledMatrix2.from_array(2 * np.eye(2))) == pytest.approx(math.log(4))
    t = 0.7
    rot = np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])
    assert log_abs_det(ScaledMatrix2.from_array(rot)) == pytest.approx(0, abs=1e-15)


def test_degenerate_errors():
    with pytest.raises(ZeroMatrix):
        log_two_norm(ScaledMatrix2.from_array(np.zeros((2, 2))))
    with pytest.raises(SingularMatrix):
        log_abs_det(ScaledMatrix2.from_array(np.ones((2, 2))))


@settings(max_examples=100, deadline=None)
@given(st.lists(cplx, min_size=4, max_size=4), st.integers(-5000, 5000))
def test_normalization_invariant(vals, e):
    M = ScaledMatrix2.normalized(np.array(vals).reshape(2, 2), e)
    _check_normalized(M)
    if any(vals):
        ref = np.linalg.norm(np.array(vals).reshape(2, 2), 2)
        assert log_two_norm(M) == pytest.approx(math.log(ref) + e * math.log(2), abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(cplx, cplx)
def test_scaled_complex_arithmetic(a, b):
    A, B = ScaledComplex.from_complex(a), ScaledComplex.from_complex(b)
    for v in (A, B):
        m = abs(complex(v.mantissa))
        assert m == 0 or 0.5 <= m < 1
    assert complex((A * B).to_complex()) == pytest.approx(a * b, rel=1e-12, abs=1e-300)
    assert complex((A + B).to_complex()) == pytest.approx(a + b, rel=1e-9, abs=1e-6)
    if a:
        assert float(A.log_abs()) == pytest.approx(math.log(abs(a)), abs=1e-12)


def test_long_product_does_not_overflow():
    T = ScaledMatrix2.from_array(np.array([[10.0, -1], [1, 0]]))
    P = ScaledMatrix2.identity()
    for _ in range(2000):
        P = smat_mul(T, P)
    rate = log_two_norm(P) / 2000
    assert rate == pytest.approx(math.log((10 + math.sqrt(96)) / 2), abs=1e-3)
