"""Extended-exponent complex scalars and 2x2 matrices.

Values are stored as ``mantissa * 2**exponent`` with an int64 exponent, so
products of thousands of transfer matrices (log-magnitudes of order 10^4)
never overflow.  Both types are batched: the mantissa may carry arbitrary
leading array dimensions, and a 0-d batch behaves like a plain scalar.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

LN2 = math.log(2.0)
# Entries smaller than 2**-FLUSH_BITS relative to the shared matrix scale are set to 0,
# and scalar sums drop the smaller summand past this exponent gap.
FLUSH_BITS = 200


class ZeroMatrix(ArithmeticError):
    pass


class SingularMatrix(ArithmeticError):
    pass


def _ldexp_complex(z, e):
    return np.ldexp(z.real, e) + 1j * np.ldexp(z.imag, e)


def _scalar_or_array(x):
    x = np.asarray(x)
    return x.item() if x.ndim == 0 else x


@dataclass(frozen=True, eq=False)
class ScaledComplex:
    """Complex number ``mantissa * 2**exponent`` with ``1/2 <= |mantissa| < 1`` (or canonical 0)."""

    mantissa: np.ndarray
    exponent: np.ndarray

    @classmethod
    def normalized(cls, mantissa, exponent=0) -> "ScaledComplex":
        m = np.asarray(mantissa, dtype=complex)
        e = np.asarray(exponent, dtype=np.int64)
        _, shift = np.frexp(np.abs(m))
        shift = shift.astype(np.int64)
        m = _ldexp_complex(m, -shift)
        e = np.where(m == 0, 0, e + shift)
        return cls(m, np.broadcast_to(e, m.shape).copy())

    @classmethod
    def from_complex(cls, value) -> "ScaledComplex":
        return cls.normalized(value, 0)

    @classmethod
    def one(cls, shape=()) -> "ScaledComplex":
        return cls(np.full(shape, 0.5 + 0j), np.ones(shape, dtype=np.int64))

    @property
    def shape(self):
        return self.mantissa.shape

    def is_zero(self):
        return _scalar_or_array(self.mantissa == 0)

    def log_abs(self):
        """``log|value|``; ``-inf`` for the canonical zero."""
        with np.errstate(divide="ignore"):
            out = np.log(np.abs(self.mantissa)) + self.exponent * LN2
        return _scalar_or_array(out)

    def angle(self):
        return _scalar_or_array(np.angle(self.mantissa))

    def to_complex(self):
        """Convert back to plain complex (may overflow to inf / underflow to 0)."""
        e = np.clip(self.exponent, -2000, 2000)
        return _scalar_or_array(_ldexp_complex(self.mantissa, e))

    def __getitem__(self, idx) -> "ScaledComplex":
        return ScaledComplex(self.mantissa[idx], self.exponent[idx])

    def __mul__(self, other) -> "ScaledComplex":
        if not isinstance(other, ScaledComplex):
            other = ScaledComplex.from_complex(other)
        return ScaledComplex.normalized(self.mantissa * other.mantissa, self.exponent + other.exponent)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "ScaledComplex":
        if not isinstance(other, ScaledComplex):
            other = ScaledComplex.from_complex(other)
        if np.any(other.mantissa == 0):
            raise ZeroDivisionError("division by a scaled zero")
        return ScaledComplex.normalized(self.mantissa / other.mantissa, self.exponent - other.exponent)

    def __neg__(self) -> "ScaledComplex":
        return ScaledComplex(-self.mantissa, self.exponent.copy())

    def __add__(self, other) -> "ScaledComplex":
        if not isinstance(other, ScaledComplex):
            other = ScaledComplex.from_complex(other)
        m1, e1 = np.broadcast_arrays(self.mantissa, self.exponent)
        m2, e2 = np.broadcast_arrays(other.mantissa, other.exponent)
        # zeros must not pin the common exponent
        e1 = np.where(m1 == 0, np.iinfo(np.int64).min // 4, e1)
        e2 = np.where(m2 == 0, np.iinfo(np.int64).min // 4, e2)
        e = np.maximum(e1, e2)
        d1 = np.minimum(e - e1, FLUSH_BITS + 64)
        d2 = np.minimum(e - e2, FLUSH_BITS + 64)
        s1 = np.where(d1 > FLUSH_BITS, 0, _ldexp_complex(m1, -d1))
        s2 = np.where(d2 > FLUSH_BITS, 0, _ldexp_complex(m2, -d2))
        return ScaledComplex.normalized(s1 + s2, np.where(e < -(2**60), 0, e))

    def __sub__(self, other) -> "ScaledComplex":
        if not isinstance(other, ScaledComplex):
            other = ScaledComplex.from_complex(other)
        return self + (-other)

    def __repr__(self):
        return f"ScaledComplex(mantissa={self.mantissa!r}, exponent={self.exponent!r})"


@dataclass(frozen=True, eq=False)
class ScaledMatrix2:
    """Batch of 2x2 complex matrices ``entries * 2**exponent`` with one exponent per matrix."""

    entries: np.ndarray  # shape (..., 2, 2)
    exponent: np.ndarray  # shape (...)

    @classmethod
    def normalized(cls, entries, exponent=0) -> "ScaledMatrix2":
        a = np.asarray(entries, dtype=complex)
        e = np.asarray(exponent, dtype=np.int64)
        mag = np.abs(a).max(axis=(-1, -2))
        _, shift = np.frexp(mag)
        shift = shift.astype(np.int64)
        a = _ldexp_complex(a, -shift[..., None, None])
        small = np.abs(a) < 2.0**-FLUSH_BITS
        if small.any():
            a = np.where(small, 0, a)
        e = np.where(mag == 0, 0, e + shift)
        return cls(a, np.broadcast_to(e, mag.shape).copy())

    @classmethod
    def from_array(cls, matrix) -> "ScaledMatrix2":
        return cls.normalized(matrix, 0)

    @classmethod
    def identity(cls, shape=()) -> "ScaledMatrix2":
        eye = np.zeros(tuple(shape) + (2, 2), dtype=complex)
        eye[..., 0, 0] = 0.5
        eye[..., 1, 1] = 0.5
        return cls(eye, np.ones(shape, dtype=np.int64))

    @property
    def shape(self):
        return self.exponent.shape

    def __getitem__(self, idx) -> "ScaledMatrix2":
        return ScaledMatrix2(self.entries[idx], self.exponent[idx])

    def to_array(self):
        e = np.clip(self.exponent, -2000, 2000)
        return _ldexp_complex(self.entries, e[..., None, None])

    def entry(self, i: int, j: int) -> ScaledComplex:
        return ScaledComplex.normalized(self.entries[..., i, j], self.exponent)

    def __matmul__(self, other: "ScaledMatrix2") -> "ScaledMatrix2":
        return smat_mul(self, other)


def smat_mul(A: ScaledMatrix2, B: ScaledMatrix2) -> ScaledMatrix2:
    """Renormalized product ``A @ B``; exponent arithmetic is exact."""
    return ScaledMatrix2.normalized(np.matmul(A.entries, B.entries), A.exponent + B.exponent)


def _sigma_max_sq(a):
    # largest eigenvalue of A*A written without cancellation inside the sqrt
    p = np.abs(a[..., 0, 0]) ** 2 + np.abs(a[..., 1, 0]) ** 2
    s = np.abs(a[..., 0, 1]) ** 2 + np.abs(a[..., 1, 1]) ** 2
    q = np.conj(a[..., 0, 0]) * a[..., 0, 1] + np.conj(a[..., 1, 0]) * a[..., 1, 1]
    half = 0.5 * (p - s)
    return 0.5 * (p + s) + np.sqrt(half * half + np.abs(q) ** 2)


def log_two_norm(A: ScaledMatrix2):
    """Log of the spectral norm (largest singular value)."""
    sq = _sigma_max_sq(A.entries)
    if np.any(sq == 0):
        raise ZeroMatrix("spectral norm of the zero matrix has no logarithm")
    return _scalar_or_array(0.5 * np.log(sq) + A.exponent * LN2)


def log_abs_det(A: ScaledMatrix2):
    a = A.entries
    det = a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]
    if np.any(det == 0):
        raise SingularMatrix("determinant mantissa is zero")
    return _scalar_or_array(np.log(np.abs(det)) + 2 * A.exponent * LN2)


def two_norm_array(matrix):
    """Spectral norm of plain (batched) 2x2 complex arrays."""
    return np.sqrt(_sigma_max_sq(np.asarray(matrix, dtype=complex)))
