"""Regularized transfer matrices, Dirichlet determinants and the identities linking them.

For an interval ``[lo, hi]`` the regularized monodromy is the ordered product
``prod_{j=hi..lo} [[a(z+j w) - E, -bt(z+j w)], [b(z+(j+1) w), 0]]`` and its top-left
entry equals the Dirichlet determinant ``det(H_[lo,hi](z) - E)``.  Everything is
batched over ``z`` (and a broadcastable ``E``) and carried in extended-exponent form.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coeffs import ModelSpec
from .orbit import IndexInterval, as_interval, omega_of, site_values
from .scalednum import LN2, ScaledComplex, ScaledMatrix2, log_two_norm

RENORM_EVERY = 4


class MinusInfinity(ArithmeticError):
    """An orbit point hits an exact zero of ``b`` (or ``b_tilde``)."""

    def __init__(self, k: int):
        super().__init__(f"orbit index {k} is an exact zero")
        self.k = k


@dataclass(frozen=True, eq=False)
class DetPair:
    """``(f_n, f_{n-1})`` sharing one exponent; starts from ``f_0 = 1``, ``f_{-1} = 0``."""

    f_curr: ScaledComplex
    f_prev: ScaledComplex


def _blocks(lo: int, hi: int, size: int, batch: int = 1):
    step = max(8, min(size, (1 << 21) // max(1, batch)))
    for s in range(lo, hi + 1, step):
        yield s, min(hi, s + step - 1)


def _renorm(arrays, ex):
    mag = np.abs(arrays[0])
    for a in arrays[1:]:
        mag = np.maximum(mag, np.abs(a))
    _, shift = np.frexp(mag)
    scale = np.ldexp(1.0, -shift)
    return [a * scale for a in arrays], ex + shift


def _prep(z, E):
    z = np.asarray(z, dtype=complex)
    E = np.asarray(E, dtype=complex)
    shape = np.broadcast_shapes(z.shape, E.shape)
    return z, E, shape


def det_recurrence(model: ModelSpec, z, omega, E, lam, keep_all: bool = False):
    """Forward three-term recurrence for ``f_[lo, lo+n-1]``.

    Returns the final :class:`DetPair`, or with ``keep_all`` a ScaledComplex of shape
    ``(|lam|+1,) + batch`` holding every prefix determinant (``n = 0..|lam|``).
    """
    lam = as_interval(lam)
    omega = omega_of(omega)
    z, E, shape = _prep(z, E)
    fc = np.ones(shape, dtype=complex)
    fp = np.zeros(shape, dtype=complex)
    ex = np.zeros(shape, dtype=np.int64)
    if keep_all:
        out_m = np.empty((len(lam) + 1,) + shape, dtype=complex)
        out_e = np.empty((len(lam) + 1,) + shape, dtype=np.int64)
        out_m[0], out_e[0] = fc, ex
    n = 0
    for s, e in _blocks(lam.lo, lam.hi, 512, batch=int(np.prod(shape))):
        a, b, bt = site_values(model, z, omega, s, e)
        for i in range(e - s + 1):
            j = s + i
            if j == lam.lo:
                new = (a[i] - E) * fc
            else:
                new = (a[i] - E) * fc - (b[i] * bt[i]) * fp
            fp, fc = fc, new
            n += 1
            if n % RENORM_EVERY == 0 or keep_all:
                (fc, fp), ex = _renorm((fc, fp), ex)
            if keep_all:
                out_m[n], out_e[n] = fc, ex
    if keep_all:
        return ScaledComplex.normalized(out_m, out_e)
    return DetPair(ScaledComplex.normalized(fc, ex), ScaledComplex.normalized(fp, ex))


def det_suffixes(model: ModelSpec, z, omega, E, lam) -> ScaledComplex:
    """``f_[k, hi]`` for ``k = lo..hi+1`` (last entry is the empty determinant 1)."""
    lam = as_interval(lam)
    omega = omega_of(omega)
    z, E, shape = _prep(z, E)
    a, b, bt = site_values(model, z, omega, lam.lo, lam.hi)
    n = len(lam)
    out_m = np.empty((n + 1,) + shape, dtype=complex)
    out_e = np.empty((n + 1,) + shape, dtype=np.int64)
    gc = np.ones(shape, dtype=complex)  # f_[k+1, hi]
    gp = np.zeros(shape, dtype=complex)  # f_[k+2, hi]
    ex = np.zeros(shape, dtype=np.int64)
    out_m[n], out_e[n] = gc, ex
    for i in range(n - 1, -1, -1):
        if i == n - 1:
            new = (a[i] - E) * gc
        else:
            new = (a[i] - E) * gc - (b[i + 1] * bt[i + 1]) * gp
        gp, gc = gc, new
        (gc, gp), ex = _renorm((gc, gp), ex)
        out_m[i], out_e[i] = gc, ex
    return ScaledComplex.normalized(out_m, out_e)


def det_f_a(model: ModelSpec, z, omega, E, lam) -> ScaledComplex:
    """Dirichlet determinant ``det(H_lam(z) - E)``; entire in ``z`` and ``E``."""
    return det_recurrence(model, z, omega, E, lam).f_curr


def _product(model, z, omega, E, lam, regularized: bool, frame=None):
    lam = as_interval(lam)
    omega = omega_of(omega)
    z, E, shape = _prep(z, E)
    if frame is None:
        m00 = np.ones(shape, dtype=complex)
        m01 = np.zeros(shape, dtype=complex)
        m10 = np.zeros(shape, dtype=complex)
        m11 = np.ones(shape, dtype=complex)
    else:
        m00, m01, m10, m11 = (np.broadcast_to(frame[..., i, j], shape).astype(complex) for i, j in ((0, 0), (0, 1), (1, 0), (1, 1)))
    ex = np.zeros(shape, dtype=np.int64)
    n = 0
    for s, e in _blocks(lam.lo, lam.hi, 512, batch=int(np.prod(shape))):
        a, b, bt = site_values(model, z, omega, s, e + 1)
        for i in range(e - s + 1):
            am = a[i] - E
            b1 = b[i + 1]
            t0 = am * m00 - bt[i] * m10
            t1 = am * m01 - bt[i] * m11
            if regularized:
                m10 = b1 * m00
                m11 = b1 * m01
                m00, m01 = t0, t1
            else:
                m10, m11 = m00, m01
                m00, m01 = t0 / b1, t1 / b1
            n += 1
            if n % RENORM_EVERY == 0:
                (m00, m01, m10, m11), ex = _renorm((m00, m01, m10, m11), ex)
    entries = np.stack([np.stack([m00, m01], -1), np.stack([m10, m11], -1)], -2)
    return ScaledMatrix2.normalized(entries, ex)


def monodromy_a(model: ModelSpec, z, omega, E, lam) -> ScaledMatrix2:
    """Regularized monodromy ``M^a_lam(z)`` (equals ``M^a_{|lam|}(z + lo*omega)``)."""
    return _product(model, z, omega, E, lam, regularized=True)


def monodromy(model: ModelSpec, z, omega, E, lam) -> ScaledMatrix2:
    """Plain transfer matrix with the ``1/b`` factors; singular at zeros of ``b``."""
    return _product(model, z, omega, E, lam, regularized=False)


def birkhoff_S(model: ModelSpec, z, omega, N: int, use_tilde: bool = False):
    """``sum_{k<N} log|b(z + k omega)|`` (``b_tilde`` with ``use_tilde``)."""
    omega = omega_of(omega)
    z = np.asarray(z, dtype=complex)
    total = np.zeros(z.shape)
    for s, e in _blocks(0, N - 1, 4096, batch=max(1, z.size)):
        a, b, bt = site_values(model, z, omega, s, e)
        vals = np.abs(bt if use_tilde else b)
        if np.any(vals == 0):
            k = int(np.argwhere(vals.reshape(len(vals), -1) == 0)[0][0])
            raise MinusInfinity(s + k)
        total = total + np.log(vals).sum(axis=0)
    return total.item() if total.ndim == 0 else total


def log_abs_det_product(model: ModelSpec, z, omega, E, lam):
    """``log|det M^a_lam(z)|`` accumulated through an orthonormal frame (Gram-Schmidt per step).

    Reading the determinant off the product entries cancels catastrophically for long
    hyperbolic products, so each factor is applied to a unitary frame and the two
    triangular pivots are accumulated instead.
    """
    lam = as_interval(lam)
    omega = omega_of(omega)
    z, E, shape = _prep(z, E)
    q00 = np.ones(shape, dtype=complex)
    q01 = np.zeros(shape, dtype=complex)
    q10 = np.zeros(shape, dtype=complex)
    q11 = np.ones(shape, dtype=complex)
    acc = np.zeros(shape)
    for s, e in _blocks(lam.lo, lam.hi, 512, batch=int(np.prod(shape))):
        a, b, bt = site_values(model, z, omega, s, e + 1)
        for i in range(e - s + 1):
            am = a[i] - E
            b1 = b[i + 1]
            c0 = am * q00 - bt[i] * q10, b1 * q00
            c1 = am * q01 - bt[i] * q11, b1 * q01
            r11 = np.sqrt(np.abs(c0[0]) ** 2 + np.abs(c0[1]) ** 2)
            u0, u1 = c0[0] / r11, c0[1] / r11
            r12 = np.conj(u0) * c1[0] + np.conj(u1) * c1[1]
            v0, v1 = c1[0] - r12 * u0, c1[1] - r12 * u1
            r22 = np.sqrt(np.abs(v0) ** 2 + np.abs(v1) ** 2)
            acc = acc + np.log(r11) + np.log(r22)
            q00, q10, q01, q11 = u0, u1, v0 / r22, v1 / r22
    return acc.item() if acc.ndim == 0 else acc


def _log_abs_sum(model, which: str, z, omega: float, j0: int, j1: int):
    """``sum_{j0<=j<=j1} log|c(z + j omega)|`` for ``c`` = ``b`` or ``b_tilde``, sampled exactly as the
    transfer products sample them, so the identities compare identical coefficient values."""
    total = np.zeros(np.shape(z))
    for s, e in _blocks(j0, j1, 4096, batch=max(1, np.size(z))):
        _, b, bt = site_values(model, z, omega, s, e)
        total = total + np.log(np.abs(b if which == "b" else bt)).sum(axis=0)
    return total


def _entry_mismatch(x: ScaledComplex, y: ScaledComplex):
    xz = x.mantissa == 0
    yz = y.mantissa == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        dmag = np.abs(np.log(np.abs(x.mantissa)) - np.log(np.abs(y.mantissa)) + (x.exponent - y.exponent) * LN2)
        dph = np.abs(np.angle(x.mantissa * np.conj(y.mantissa)))
        out = np.maximum(dmag, dph)
    out = np.where(xz & yz, 0.0, np.where(xz | yz, np.inf, out))
    return out


def identity_residuals(model: ModelSpec, z, omega, E, lam) -> dict:
    """Rounding-level residuals of the three exact identities on ``lam``.

    ``mu_ma``: ``log||M|| - (-S(z+(lo+1)w) + log||M^a||)`` (``nan`` where an orbit point
    hits a zero of ``b``);
    ``ma_fa``: worst entry mismatch between ``M^a`` and the determinant expressions;
    ``det``: ``log|det M^a| - (S_tilde(z+lo w) + S(z+(lo+1) w))``.
    """
    lam = as_interval(lam)
    omega = omega_of(omega)
    z, E, shape = _prep(z, E)
    n = len(lam)
    Ma = monodromy_a(model, z, omega, E, lam)
    log_ma = log_two_norm(Ma)

    with np.errstate(divide="ignore"):
        S_shift = _log_abs_sum(model, "b", z, omega, lam.lo + 1, lam.hi + 1)
        S_tilde = _log_abs_sum(model, "bt", z, omega, lam.lo, lam.hi)
    if np.all(np.isfinite(S_shift)):
        mu_ma = np.abs(log_two_norm(monodromy(model, z, omega, E, lam)) - (-S_shift + log_ma))
    else:
        mu_ma = np.full(shape, np.nan)

    # Ma-fa: entries against determinants of the sub-intervals
    full = det_recurrence(model, z, omega, E, lam)
    f_all = full.f_curr
    f_left = full.f_prev  # [lo, hi-1]
    if n >= 2:
        inner = det_recurrence(model, z, omega, E, IndexInterval(lam.lo + 1, lam.hi))
        f_right, f_mid = inner.f_curr, inner.f_prev  # [lo+1, hi], [lo+1, hi-1]
    else:
        f_right = ScaledComplex.one(shape)
        f_mid = ScaledComplex.normalized(np.zeros(shape, dtype=complex))
    _, b_ends, bt_ends = site_values(model, z, omega, lam.lo, lam.hi + 1)
    bt0, bN = bt_ends[0], b_ends[-1]
    expected = [
        f_all,
        f_right * (-bt0),
        f_left * bN,
        f_mid * (-bt0 * bN),
    ]
    actual = [Ma.entry(0, 0), Ma.entry(0, 1), Ma.entry(1, 0), Ma.entry(1, 1)]
    ma_fa = np.max(np.stack([_entry_mismatch(x, y) for x, y in zip(actual, expected)]), axis=0)

    with np.errstate(divide="ignore", invalid="ignore"):
        lhs = log_abs_det_product(model, z, omega, E, lam)
        rhs = S_tilde + S_shift
        det_res = np.where(np.isneginf(lhs) & np.isneginf(rhs), 0.0, np.abs(lhs - rhs))

    def fin(v):
        v = np.asarray(v, dtype=float)
        return v.item() if v.ndim == 0 else v

    return {"mu_ma": fin(mu_ma), "ma_fa": fin(ma_fa), "det": fin(det_res)}
