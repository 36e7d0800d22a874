"""Avalanche-Principle residuals, the W ratios and the pointwise pre-Wegner bound."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from .coeffs import ModelSpec, complex_zero_points
from .complexan import ContourThroughZero, Disk, _log_and_phase, _wrap, winding_count
from .operator import spectral_interval_count
from .orbit import IndexInterval, as_interval, omega_of, site_values
from .scalednum import ScaledMatrix2, log_two_norm, smat_mul
from .transfer import det_f_a, monodromy_a

ZERO_PROBE_NODES = 32


@dataclass(frozen=True)
class PartitionScheme:
    whole: IndexInterval
    parts: tuple
    unit_scale: int
    exponent_cap: float = 2.0

    def __post_init__(self):
        parts = tuple(as_interval(p) for p in self.parts)
        object.__setattr__(self, "parts", parts)
        if not parts:
            raise ValueError("empty partition")
        if parts[0].lo != self.whole.lo or parts[-1].hi != self.whole.hi:
            raise ValueError("parts must cover the whole interval")
        for left, right in zip(parts, parts[1:]):
            if right.lo != left.hi + 1:
                raise ValueError("parts must be consecutive and disjoint")
        cap = self.unit_scale**self.exponent_cap
        for p in parts:
            if not self.unit_scale <= len(p) <= cap:
                raise ValueError(f"part {p} violates l <= |part| <= l^A")

    @classmethod
    def regular(cls, m: int, l: int, start: int = 0, exponent_cap: float = 2.0) -> "PartitionScheme":
        parts = tuple(IndexInterval.of_length(l, start + j * l) for j in range(m))
        return cls(IndexInterval.of_length(m * l, start), parts, l, exponent_cap)

    @property
    def m(self) -> int:
        return len(self.parts)


@dataclass(frozen=True)
class WegnerReport:
    E: float
    eta: float
    x: float
    lhs_count: int
    rhs_bound: float
    excluded_K: tuple
    K_size: int
    terms: tuple
    window: int
    margin: int
    note: str = "margins use 2*window instead of l^8"
    exclusion_counts: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.K_size != len(self.excluded_K):
            raise ValueError("K_size must equal |excluded_K|")
        if not self.rhs_bound >= 2 * self.K_size + 10:
            raise ValueError("rhs_bound below 2|K| + 10")

    @property
    def holds(self) -> bool:
        return self.lhs_count <= self.rhs_bound


_FIRST = np.array([[1, 0], [0, 0]], dtype=complex)


def _project(M: ScaledMatrix2, left: bool) -> ScaledMatrix2:
    ent = _FIRST @ M.entries if left else M.entries @ _FIRST
    return ScaledMatrix2.normalized(ent, M.exponent)


def _mp_poly(poly, z):
    d = poly.degree
    return mpmath.fsum(mpmath.mpc(c) * mpmath.expjpi(2 * (k - d) * z) for k, c in enumerate(poly.coeffs) if c != 0)


def _mp_norm(A):
    p = abs(A[0, 0]) ** 2 + abs(A[1, 0]) ** 2
    s = abs(A[0, 1]) ** 2 + abs(A[1, 1]) ** 2
    q = mpmath.conj(A[0, 0]) * A[0, 1] + mpmath.conj(A[1, 0]) * A[1, 1]
    return mpmath.sqrt((p + s) / 2 + mpmath.sqrt(((p - s) / 2) ** 2 + abs(q) ** 2))


def _ap_residual_mp(model, z, omega, E, scheme, variant, dps):
    with mpmath.workdps(dps):
        om = mpmath.mpf(omega_of(omega))
        z = mpmath.mpc(complex(z))
        E = mpmath.mpc(complex(E))

        def block(lam):
            M = mpmath.eye(2)
            for j in range(lam.lo, lam.hi + 1):
                zj = z + j * om
                T = mpmath.matrix([[_mp_poly(model.a, zj) - E, -_mp_poly(model.b_tilde, zj)],
                                   [_mp_poly(model.b, zj + om), 0]])
                M = T * M
            return M

        mats = [block(p) for p in scheme.parts]
        whole = mats[0]
        for M in mats[1:]:
            whole = M * whole
        if variant == "determinant":
            P = mpmath.matrix([[1, 0], [0, 0]])
            mats[0] = mats[0] * P
            mats[-1] = P * mats[-1]
            total = mpmath.log(abs(whole[0, 0]))
        else:
            total = mpmath.log(_mp_norm(whole))
        for M in mats[1:-1]:
            total += mpmath.log(_mp_norm(M))
        for A, B in zip(mats, mats[1:]):
            total -= mpmath.log(_mp_norm(B * A))
        return float(abs(total))


def ap_residual(model: ModelSpec, z, omega, E, scheme: PartitionScheme, variant: str = "determinant",
                dps: int | None = None):
    """Defect of the Avalanche-Principle expansion over ``scheme`` (batched over ``z``).

    ``monodromy``: ``|log||M_lam|| + sum_{1<j<m} log||M_j|| - sum_j log||M_{j+1} M_j|||``;
    ``determinant``: same with ``log|f_lam|`` on the left and ``M_1 P``, ``P M_m`` as edge factors,
    ``P = diag(1, 0)``.

    In double precision the result bottoms out near 1e-14 (rounding in log-norms of size ~ m l L),
    while the defect itself decays like exp(-2 l L).  Passing ``dps`` evaluates the whole expansion
    with that many decimal digits so the decay stays visible.
    """
    if scheme.m < 2:
        raise ValueError("need at least two parts")
    if variant not in ("determinant", "monodromy"):
        raise ValueError(f"unknown variant {variant!r}")
    if dps is not None:
        zs = np.asarray(z, dtype=complex)
        out = np.array([_ap_residual_mp(model, zi, omega, E, scheme, variant, dps) for zi in zs.ravel()])
        out = out.reshape(zs.shape)
        return out.item() if out.ndim == 0 else out
    mats = [monodromy_a(model, z, omega, E, p) for p in scheme.parts]
    if variant == "determinant":
        mats[0] = _project(mats[0], left=False)
        mats[-1] = _project(mats[-1], left=True)
        head = det_f_a(model, z, omega, E, scheme.whole).log_abs()
    else:
        head = log_two_norm(monodromy_a(model, z, omega, E, scheme.whole))
    total = np.asarray(head, dtype=float)
    for M in mats[1:-1]:
        total = total + log_two_norm(M)
    for A, B in zip(mats, mats[1:]):
        total = total - log_two_norm(smat_mul(B, A))
    out = np.abs(total)
    return out.item() if out.ndim == 0 else out


def log_W(model: ModelSpec, x, omega, E_c, lam, k: int):
    """``log||M^a_[lo,k-1]|| + log||M^a_[k,hi]|| - log||M^a_lam||`` (>= 0 up to rounding)."""
    lam = as_interval(lam)
    if not lam.lo < k <= lam.hi:
        raise ValueError(f"k = {k} must split {lam} into two nonempty pieces")
    left, right = lam.split(k)
    A = monodromy_a(model, x, omega, E_c, left)
    B = monodromy_a(model, x, omega, E_c, right)
    return log_two_norm(A) + log_two_norm(B) - log_two_norm(smat_mul(B, A))


def _factors(model, x, omega, E, N):
    a, b, bt = site_values(model, x, omega, 0, N)
    T = np.empty(a[:N].shape + (2, 2), dtype=complex)
    T[..., 0, 0] = a[:N] - E
    T[..., 0, 1] = -bt[:N]
    T[..., 1, 0] = b[1:]
    T[..., 1, 1] = 0
    return T


def log_W_all(model: ModelSpec, x, omega, E_c, N: int) -> np.ndarray:
    """``log W_{N,k}`` for ``k = 0..N-1`` (``k = 0`` is the trivial split, value 0)."""
    x = np.asarray(x, dtype=complex)
    T = _factors(model, x, omega_of(omega), complex(E_c), N)
    shape = x.shape
    log_pre = np.zeros((N + 1,) + shape)
    log_suf = np.zeros((N + 1,) + shape)
    P = ScaledMatrix2.identity(shape)
    for j in range(N):
        P = smat_mul(ScaledMatrix2.normalized(T[j]), P)
        log_pre[j + 1] = log_two_norm(P)
    Q = ScaledMatrix2.identity(shape)
    for j in range(N - 1, -1, -1):
        Q = smat_mul(Q, ScaledMatrix2.normalized(T[j]))
        log_suf[j] = log_two_norm(Q)
    return log_pre[:N] + log_suf[:N] - log_pre[N]


def w_concat_residual(model: ModelSpec, x, omega, E, eta, N: int, k: int, lam_window) -> float:
    """``log W_{N,k}`` minus ``log W_window`` at ``x + (k-1) omega``, both at energy ``E + i eta``."""
    win = as_interval(lam_window)
    if not (win.lo <= 0 < win.hi):
        raise ValueError("window must contain 0 and 1")
    Ec = complex(E) + 1j * float(eta)
    shifted = win.shift(k - 1)
    if shifted.lo < 0 or shifted.hi > N - 1:
        raise ValueError("translated window leaves [0, N-1]")
    big = log_W(model, x, omega, Ec, IndexInterval(0, N - 1), k)
    small = log_W(model, x, omega, Ec, shifted, k)
    return float(big - small)


def default_window(N: int) -> int:
    return max(4, int(math.ceil(math.log(N) ** 1.5)))


def _centered(w: int) -> IndexInterval:
    return IndexInterval(-(w // 2), w - w // 2 - 1)


def _local_zero_flags(model, omega, E, lam, centers, radius):
    """True where ``det(H_lam(z) - E)`` has a zero in ``D(center, radius)``."""
    t = np.arange(ZERO_PROBE_NODES) / ZERO_PROBE_NODES
    Z = centers[:, None] + radius * np.exp(2j * np.pi * t)[None, :]
    logs, ph = _log_and_phase(det_f_a(model, Z, omega, E, lam))
    steps = _wrap(np.diff(np.concatenate([ph, ph[:, :1]], axis=1), axis=1))
    coarse_ok = (np.abs(steps) < np.pi / 2).all(axis=1) & np.isfinite(logs).all(axis=1)
    coarse_ok &= (logs.min(axis=1) > logs.max(axis=1) + math.log(1e-13))
    flags = np.rint(steps.sum(axis=1) / (2 * np.pi)) != 0
    for i in np.flatnonzero(~coarse_ok):
        try:
            res = winding_count(lambda z: det_f_a(model, z, omega, E, lam), Disk(complex(centers[i]), radius))
            flags[i] = res.count != 0
        except ContourThroughZero:
            flags[i] = True
    return flags


def pregner_bound(model: ModelSpec, x: float, omega, E: float, eta: float, N: int, rho0: float,
                  window: int | None = None) -> WegnerReport:
    """Both sides of the pointwise pre-Wegner inequality for ``H_N(x)`` and ``[E - eta, E + eta]``.

    The exceptional set ``K`` collects the margin indices ``k < 2w`` and ``k > N-1-2w`` (``w`` the
    window length), indices whose orbit point is within ``rho0`` of a zero of ``b_tilde``, and
    indices where the window determinant centred at ``x + (k-1) omega`` has a zero within
    ``min(rho0, exp(-(log w)^2))``.
    """
    if eta <= 0 or not 0 < rho0 < 0.5:
        raise ValueError("need eta > 0 and rho0 in (0, 1/2)")
    omega = omega_of(omega)
    w = default_window(N) if window is None else int(window)
    margin = 2 * w
    ks = np.arange(N)
    pts = x + ks * omega

    in_margin = (ks < margin) | (ks > N - 1 - margin)
    near_b = np.zeros(N, dtype=bool)
    for zeta in complex_zero_points(model.b_tilde):
        dx = (pts - zeta.real + 0.5) % 1.0 - 0.5
        near_b |= np.hypot(dx, zeta.imag) < rho0
    probe = ~(in_margin | near_b)
    near_det = np.zeros(N, dtype=bool)
    if probe.any():
        radius = min(rho0, math.exp(-(math.log(w) ** 2)))
        centers = (x + (ks[probe] - 1) * omega).astype(complex)
        near_det[probe] = _local_zero_flags(model, omega, E, _centered(w), centers, radius)
    in_K = in_margin | near_b | near_det

    logW = log_W_all(model, float(x), omega, complex(E) + 1j * eta, N)
    bt = np.abs(site_values(model, float(x), omega, 0, N - 1)[2])
    with np.errstate(over="ignore", divide="ignore"):
        terms = np.where(in_K, 0.0, 4 * eta * np.exp(logW) / bt)
    K = tuple(int(k) for k in np.flatnonzero(in_K))
    rhs = float(np.sum(terms)) + 2 * len(K) + 10
    lhs = spectral_interval_count(model, x, omega, N, E, eta)
    counts = {"margin": int(in_margin.sum()), "b_tilde": int(near_b.sum()), "determinant": int(near_det.sum())}
    return WegnerReport(float(E), float(eta), float(x), int(lhs), rhs, K, len(K),
                        tuple(float(t) for t in terms), w, margin, exclusion_counts=counts)
