"""Trigonometric-polynomial coefficients and frequency arithmetic.

A coefficient function ``f(z) = sum_k c_k exp(2 pi i k z)`` is a :class:`TrigPoly`;
writing ``w = exp(2 pi i z)`` gives ``f(z) = w**(-d) P(w)`` with ``P`` an ordinary
polynomial, which is how roots and the Mahler-type line integral are computed.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np

TWO_PI = 2.0 * math.pi
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class IdenticallyZero(ValueError):
    pass


class NoConvergence(RuntimeError):
    pass


class DiophantineViolation(ValueError):
    def __init__(self, n: int, dist: float, bound: float):
        super().__init__(f"||{n} omega|| = {dist:.3e} < {bound:.3e}")
        self.n = n
        self.dist = dist
        self.bound = bound


# ---------------------------------------------------------------------------
# trigonometric polynomials


@dataclass(frozen=True)
class TrigPoly:
    """Finite Fourier series; ``coeffs[j]`` is the amplitude of ``exp(2 pi i (j - d) z)``."""

    coeffs: tuple

    def __post_init__(self):
        c = [complex(v) for v in self.coeffs]
        if len(c) % 2 == 0:
            raise ValueError("coefficient tuple must have odd length 2d+1")
        if not all(cmath.isfinite(v) for v in c):
            raise ValueError("coefficients must be finite")
        while len(c) > 1 and c[0] == 0 and c[-1] == 0:
            c = c[1:-1]
        object.__setattr__(self, "coeffs", tuple(c))

    @classmethod
    def from_dict(cls, amplitudes: Mapping[int, complex]) -> "TrigPoly":
        d = max((abs(int(k)) for k in amplitudes), default=0)
        c = [0j] * (2 * d + 1)
        for k, v in amplitudes.items():
            c[int(k) + d] += complex(v)
        return cls(tuple(c))

    @classmethod
    def constant(cls, value: complex) -> "TrigPoly":
        return cls((complex(value),))

    @classmethod
    def cosine(cls, amplitude: float = 1.0) -> "TrigPoly":
        """``amplitude * cos(2 pi x)``."""
        return cls((amplitude / 2, 0j, amplitude / 2))

    @property
    def degree(self) -> int:
        return (len(self.coeffs) - 1) // 2

    def as_dict(self) -> dict:
        d = self.degree
        return {k - d: v for k, v in enumerate(self.coeffs) if v != 0}

    @property
    def real_on_torus(self) -> bool:
        c = self.coeffs
        return all(abs(c[j] - c[-1 - j].conjugate()) <= 1e-14 * max(1.0, abs(c[j])) for j in range(len(c)))

    @property
    def analyticity_width(self) -> float:
        return math.inf

    @property
    def is_zero(self) -> bool:
        return all(v == 0 for v in self.coeffs)

    @property
    def max_coeff(self) -> float:
        return max(abs(v) for v in self.coeffs)

    def sup_on_torus(self) -> float:
        return float(sum(abs(v) for v in self.coeffs))

    def eval_w(self, w):
        """Evaluate at ``w = exp(2 pi i z)`` (array or scalar)."""
        w = np.asarray(w, dtype=complex)
        d = self.degree
        # np.polyval wants the highest power first
        val = np.polyval(np.array(self.coeffs[::-1]), w)
        if d:
            val = val * w ** (-d)
        return val

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = self.eval_w(np.exp(1j * TWO_PI * z))
        return out.item() if out.ndim == 0 else out


def eval_poly(poly: TrigPoly, z):
    return poly(z)


def tilde(poly: TrigPoly) -> TrigPoly:
    """Conjugate reflection ``z -> conj(poly(conj(z)))``."""
    return TrigPoly(tuple(v.conjugate() for v in reversed(poly.coeffs)))


# ---------------------------------------------------------------------------
# roots


@dataclass(frozen=True)
class RootSet:
    roots: tuple
    on_torus_count: int
    leading_modulus: float
    leading_coefficient: complex = 0j
    algebraic_degree: int = 0


def _aberth(coeffs_desc: np.ndarray, rng: np.random.Generator, max_iter: int = 200, attempts: int = 5):
    """Simultaneous Aberth-Ehrlich iteration; ``coeffs_desc`` has the leading coefficient first."""
    n = len(coeffs_desc) - 1
    p = np.poly1d(coeffs_desc)
    dp = p.deriv()
    mag = np.abs(coeffs_desc)
    # Fujiwara-type bound for the initial circle
    radius = 2 * max((mag[k] / mag[0]) ** (1.0 / k) for k in range(1, n + 1))
    radius = max(radius, 1e-3)
    for attempt in range(attempts):
        phase = 0.4 + 2 * np.pi * np.arange(n) / n + (rng.uniform(0, 2 * np.pi) if attempt else 0.0)
        r = radius * (0.5 + 0.5 * (rng.uniform(0.5, 1.0, n) if attempt else 1.0))
        z = r * np.exp(1j * phase)
        for _ in range(max_iter):
            pv = p(z)
            dv = dp(z)
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = pv / dv
                diff = z[:, None] - z[None, :]
                np.fill_diagonal(diff, 1.0)
                s = (1.0 / diff).sum(axis=1) - 1.0
                corr = ratio / (1.0 - ratio * s)
            corr = np.where(np.isfinite(corr), corr, 0.0)
            z = z - corr
            if np.all(np.abs(corr) <= 1e-15 * np.maximum(1.0, np.abs(z))):
                break
        scale = mag.max() * np.maximum(1.0, np.abs(z)) ** n
        if np.all(np.isfinite(z)) and np.all(np.abs(p(z)) <= 1e-12 * scale):
            return z
    raise NoConvergence(f"Aberth iteration failed after {attempts} attempts of {max_iter} steps")


def _merge_clusters(z: np.ndarray, p: np.poly1d, tol: float = 1e-4) -> np.ndarray:
    # A k-fold root comes back as a tight cluster; its centroid, Newton-polished on the
    # (k-1)-th derivative (where the root is simple), is far more accurate than any member.
    z = z.copy()
    used = np.zeros(len(z), dtype=bool)
    for i in range(len(z)):
        if used[i]:
            continue
        members = np.where(~used & (np.abs(z - z[i]) <= tol * max(1.0, abs(z[i]))))[0]
        if len(members) > 1:
            c = z[members].mean()
            q = p.deriv(len(members) - 1)
            dq = q.deriv()
            for _ in range(8):
                step = q(c) / dq(c) if dq(c) != 0 else 0.0
                c = c - step
                if abs(step) <= 1e-16 * max(1.0, abs(c)):
                    break
            z[members] = c
        used[members] = True
    return z


def torus_roots(poly: TrigPoly, torus_tol: float = 1e-8) -> RootSet:
    """Roots in ``w = exp(2 pi i z)`` of ``P`` where ``poly(z) = w**(-d) P(w)``."""
    if poly.is_zero:
        raise IdenticallyZero("all coefficients vanish")
    c = np.array(poly.coeffs[::-1], dtype=complex)  # highest power first
    top = np.flatnonzero(c)[0]
    c = c[top:]
    lead = complex(c[0])
    bottom = len(c) - 1 - np.flatnonzero(c)[-1]
    zeros_at_origin = [0j] * int(bottom)
    core = c[: len(c) - bottom] if bottom else c
    if len(core) > 1:
        found = _aberth(core, np.random.default_rng(12345))
        found = _merge_clusters(found, np.poly1d(core))
        roots = list(found) + zeros_at_origin
    else:
        roots = zeros_at_origin
    roots = tuple(complex(r) for r in roots)
    on = sum(1 for r in roots if abs(abs(r) - 1.0) < torus_tol)
    return RootSet(roots, on, abs(lead), lead, len(c) - 1)


def torus_zero_points(poly: TrigPoly, torus_tol: float = 1e-8) -> np.ndarray:
    """Zeros ``x in [0, 1)`` of ``poly`` on the real torus (with multiplicity)."""
    rs = torus_roots(poly, torus_tol)
    pts = [(np.angle(r) / TWO_PI) % 1.0 for r in rs.roots if abs(abs(r) - 1.0) < torus_tol]
    return np.array(sorted(pts))


def complex_zero_points(poly: TrigPoly) -> np.ndarray:
    """All zeros ``z`` with ``Re z in [0,1)`` (roots at ``w = 0`` are at ``Im z = +inf``, omitted)."""
    rs = torus_roots(poly)
    out = []
    for r in rs.roots:
        if r == 0:
            continue
        z = np.log(r) / (1j * TWO_PI)
        out.append(complex(z.real % 1.0, z.imag))
    return np.array(out, dtype=complex)


def mahler_D(poly: TrigPoly, y: float) -> float:
    """``int_T log|poly(x + i y)| dx`` in closed (Jensen) form."""
    rs = torus_roots(poly)
    r = math.exp(-TWO_PI * y)
    total = TWO_PI * poly.degree * y + math.log(rs.leading_modulus)
    for w in rs.roots:
        total += math.log(max(r, abs(w)))
    return total


# ---------------------------------------------------------------------------
# models


@dataclass(frozen=True)
class ModelSpec:
    """Jacobi operator with diagonal ``a`` and off-diagonals ``-b``, ``-conj(b)``."""

    a: TrigPoly
    b: TrigPoly
    name: str = "custom"
    torus_tol: float = 1e-8
    _nb: int = field(init=False, repr=False, compare=False, default=0)

    def __post_init__(self):
        if not self.a.real_on_torus:
            raise ValueError("diagonal coefficient a must be real on the torus")
        if self.b.is_zero:
            raise IdenticallyZero("off-diagonal coefficient b vanishes identically")
        object.__setattr__(self, "_nb", torus_roots(self.b, self.torus_tol).on_torus_count)

    @property
    def b_tilde(self) -> TrigPoly:
        return tilde(self.b)

    @property
    def d0(self) -> int:
        return max(self.a.degree, self.b.degree)

    @property
    def n_b(self) -> int:
        return self._nb

    @property
    def p(self) -> Fraction:
        denom = self.n_b + 2 * self.d0
        if denom == 0:
            raise ValueError("p undefined for constant coefficients")
        return Fraction(1, denom)

    def sup_norm_bound(self) -> float:
        """Crude upper bound on ``||H||`` over real phases."""
        return self.a.sup_on_torus() + 2 * self.b.sup_on_torus()

    def to_dict(self) -> dict:
        def enc(poly):
            return {str(k): [v.real, v.imag] for k, v in poly.as_dict().items()}

        return {"name": self.name, "a": enc(self.a), "b": enc(self.b)}

    @classmethod
    def from_dict(cls, data: Mapping) -> "ModelSpec":
        def dec(table):
            return TrigPoly.from_dict({int(k): complex(v[0], v[1]) if isinstance(v, (list, tuple)) else complex(v)
                                       for k, v in table.items()})

        return cls(dec(data["a"]), dec(data["b"]), name=data.get("name", "custom"))


def almost_mathieu(lam: float) -> ModelSpec:
    """``b = 1``, ``a(x) = 2 lam cos(2 pi x)``."""
    return ModelSpec(TrigPoly.cosine(2.0 * lam), TrigPoly.constant(1.0), name=f"amo(lam={lam})")


def extended_harper(lam: float, lam1: float, lam2: float, lam3: float, omega: float) -> ModelSpec:
    """``b(x) = lam3 e^{-2 pi i (x + omega/2)} + lam2 + lam1 e^{2 pi i (x + omega/2)}``."""
    half = math.pi * omega
    b = TrigPoly((lam3 * complex(math.cos(half), -math.sin(half)), complex(lam2), lam1 * complex(math.cos(half), math.sin(half))))
    return ModelSpec(TrigPoly.cosine(2.0 * lam), b, name=f"harper(lam={lam},{lam1},{lam2},{lam3})")


def free_laplacian() -> ModelSpec:
    return ModelSpec(TrigPoly.constant(0.0), TrigPoly.constant(1.0), name="free")


# ---------------------------------------------------------------------------
# frequency arithmetic


@dataclass(frozen=True)
class Frequency:
    omega: float
    c: float = 0.2
    alpha: float = 2.0
    verified_up_to: int = 0

    @classmethod
    def golden(cls, verify: int = 10**6) -> "Frequency":
        return check_diophantine(GOLDEN, 0.2, 2.0, verify)


def _split(x: float):
    # Veltkamp split: hi has 26 significant bits so n * hi is exact for n < 2**27
    t = 134217729.0 * x
    hi = t - (t - x)
    return hi, x - hi


def frac_multiples(omega: float, n) -> np.ndarray:
    """``n * omega mod 1`` computed with the product split into exact pieces."""
    n = np.asarray(n, dtype=np.float64)
    hi, lo = _split(omega)
    p1 = n * hi
    p1 = p1 - np.floor(p1)
    v = p1 + n * lo
    return v - np.floor(v)


def dist_to_int(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return np.abs(v - np.round(v))


def check_diophantine(omega: float, c: float, alpha: float, N: int) -> Frequency:
    if N < 1 or c <= 0 or alpha <= 1:
        raise ValueError("need N >= 1, c > 0, alpha > 1")
    worst_ratio, worst = math.inf, None
    chunk = 1 << 20
    for start in range(1, N + 1, chunk):
        n = np.arange(start, min(N, start + chunk - 1) + 1, dtype=np.float64)
        dist = dist_to_int(frac_multiples(omega, n))
        bound = c / (n * np.maximum(1.0, np.log(n)) ** alpha)
        ratio = dist / bound
        i = int(np.argmin(ratio))
        if ratio[i] < worst_ratio:
            worst_ratio, worst = float(ratio[i]), (int(n[i]), float(dist[i]), float(bound[i]))
    if worst_ratio < 1.0:
        raise DiophantineViolation(*worst)
    return Frequency(float(omega), float(c), float(alpha), int(N))


def orbit_interval_count(freq: Frequency | float, N: int, interval) -> int:
    """``#{m in [0, N-1] : m omega mod 1 in [u, v)}`` on the circle."""
    omega = getattr(freq, "omega", freq)
    u, v = interval
    length = v - u
    if length <= 0:
        return 0
    if length >= 1:
        return int(N)
    pts = frac_multiples(omega, np.arange(N))
    return int(np.count_nonzero((pts - u) % 1.0 < length))


def orbit_gaps(freq: Frequency | float, N: int):
    if N < 2:
        raise ValueError("need at least two orbit points")
    omega = getattr(freq, "omega", freq)
    pts = np.sort(frac_multiples(omega, np.arange(N)))
    gaps = np.diff(pts)
    gaps = np.append(gaps, 1.0 - pts[-1] + pts[0])
    return float(gaps.min()), float(gaps.max())


def shift_power_sum(freq: Frequency | float, N: int, p: float, rho: float, alpha: float | None = None):
    """Sum of ``||k omega||^-p`` over ``k < N`` with ``||k omega|| >= rho``, and the comparison bound."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    omega = getattr(freq, "omega", freq)
    if alpha is None:
        alpha = getattr(freq, "alpha", 2.0)
    dist = dist_to_int(frac_multiples(omega, np.arange(N)))
    keep = dist >= rho
    total = float(np.sum(dist[keep] ** (-p))) if keep.any() else 0.0
    bound = N * max(1.0, math.log(N)) ** alpha * rho ** (1.0 - p) if N > 0 else 0.0
    return total, bound
