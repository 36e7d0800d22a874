"""Finite-volume Jacobi matrices, Sturm counts and Green-function diagonals."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coeffs import ModelSpec
from .orbit import as_interval, omega_of, site_values
from .transfer import det_recurrence, det_suffixes

PIVOT_GUARD = 1e-30


class SingularDenominator(ArithmeticError):
    pass


@dataclass(frozen=True)
class SpectralQuery:
    E: float
    eta: float
    x: float


@dataclass(frozen=True, eq=False)
class Tridiagonal:
    """``H`` with ``diag[j]``, ``upper[j] = H[j, j+1]``, ``lower[j] = H[j+1, j]``."""

    diag: np.ndarray
    upper: np.ndarray
    lower: np.ndarray

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.upper, 1) + np.diag(self.lower, -1)


def build_H(model: ModelSpec, z, omega, lam) -> Tridiagonal:
    lam = as_interval(lam)
    a, b, bt = site_values(model, complex(z), omega_of(omega), lam.lo, lam.hi)
    return Tridiagonal(a, -b[1:], -bt[1:])


def _reduced(model: ModelSpec, x, omega, lam):
    """Diagonal and squared off-diagonal moduli, shape ``(|lam|, P)``, for real phases."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    a, b, _ = site_values(model, x, omega_of(omega), lam.lo, lam.hi)
    offsq = np.abs(b) ** 2
    offsq[0] = 0.0
    return a.real, offsq


def sturm_counts(diag: np.ndarray, offsq: np.ndarray, E, hnorm) -> np.ndarray:
    """Number of negative pivots of ``T - E`` (eigenvalues strictly below ``E``).

    ``diag``/``offsq`` have shape ``(n, P)``; ``E`` has shape ``(K,)`` or ``(P, K)``.
    Returns int counts of shape ``(P, K)``.
    """
    n, P = diag.shape
    E = np.asarray(E, dtype=float)
    if E.ndim == 1:
        E = E[None, :]
    guard = -PIVOT_GUARD * np.asarray(hnorm, dtype=float).reshape(-1, 1)
    d = np.broadcast_to(diag[0][:, None] - E, np.broadcast_shapes((P, 1), E.shape)).copy()
    d = np.where(d == 0, guard, d)
    count = (d < 0).astype(np.int64)
    for j in range(1, n):
        d = (diag[j][:, None] - E) - offsq[j][:, None] / d
        d = np.where(d == 0, guard, d)
        count += d < 0
    return count


def _hnorm(diag, offsq):
    off = np.sqrt(offsq)
    nxt = np.vstack([off[1:], np.zeros((1, off.shape[1]))])
    return np.max(np.abs(diag) + off + nxt, axis=0)


def count_below_grid(model: ModelSpec, xs, omega, lam, Es) -> np.ndarray:
    """Counts for every phase in ``xs`` (shape P) and energy in ``Es`` (shape K): ``(P, K)``."""
    lam = as_interval(lam)
    diag, offsq = _reduced(model, xs, omega, lam)
    return sturm_counts(diag, offsq, np.atleast_1d(np.asarray(Es, dtype=float)), _hnorm(diag, offsq))


def count_below(model: ModelSpec, x, omega, lam, E):
    """``#{eigenvalues of H_lam(x) < E}`` via the Sturm pivot recurrence."""
    x_arr = np.asarray(x, dtype=float)
    E_arr = np.asarray(E, dtype=float)
    out = count_below_grid(model, x_arr.ravel(), omega, lam, E_arr.ravel())
    out = out.reshape(x_arr.shape + E_arr.shape)
    return int(out) if out.ndim == 0 else out


def spectral_interval_count(model: ModelSpec, x, omega, lam, E, eta):
    """Eigenvalues in the half-open window ``[E - eta, E + eta)``."""
    if np.any(np.asarray(eta) <= 0):
        raise ValueError("eta must be positive")
    E = np.asarray(E, dtype=float)
    eta = np.broadcast_to(np.asarray(eta, dtype=float), E.shape)
    both = np.stack([E - eta, E + eta], -1)
    c = count_below(model, x, omega, lam, both)
    out = c[..., 1] - c[..., 0]
    return int(out) if np.ndim(out) == 0 else out


def eigenvalues_full(model: ModelSpec, x: float, omega, lam, rel_tol: float = 1e-12) -> np.ndarray:
    """All eigenvalues of the Hermitian ``H_lam(x)``, ascending, by simultaneous bisection."""
    lam = as_interval(lam)
    if len(lam) > 4096:
        raise ValueError("oracle limited to |lam| <= 4096")
    diag, offsq = _reduced(model, [x], omega, lam)
    hn = float(_hnorm(diag, offsq)[0])
    n = len(lam)
    lo = np.full(n, -hn - 1.0)
    hi = np.full(n, hn + 1.0)
    k = np.arange(n)
    tol = rel_tol * max(hn, 1e-300)
    iters = int(math.ceil(math.log2((2 * hn + 2) / tol))) + 1
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        c = sturm_counts(diag, offsq, mid, [hn])[0]
        up = c >= k + 1
        hi = np.where(up, mid, hi)
        lo = np.where(up, lo, mid)
    return 0.5 * (lo + hi)


def green_diag_all(model: ModelSpec, x, omega, lam, E, eta) -> np.ndarray:
    """Every diagonal entry ``<delta_k, (H_lam(x) - E - i eta)^-1 delta_k>``, k = lo..hi (Cramer)."""
    lam = as_interval(lam)
    Ez = complex(E) + 1j * float(eta)
    pre = det_recurrence(model, x, omega, Ez, lam, keep_all=True)
    suf = det_suffixes(model, x, omega, Ez, lam)
    total = pre[len(lam)]
    if np.any(total.mantissa == 0):
        raise SingularDenominator("Dirichlet determinant vanishes")
    n = len(lam)
    ratio = (pre[:n] * suf[1:]) / total
    return np.asarray(ratio.to_complex())


def green_diag(model: ModelSpec, x, omega, lam, E, eta, k: int) -> complex:
    lam = as_interval(lam)
    if k not in lam:
        raise ValueError(f"site {k} outside {lam}")
    if eta <= 0:
        raise ValueError("eta must be positive")
    return complex(green_diag_all(model, x, omega, lam, E, eta)[k - lam.lo])
