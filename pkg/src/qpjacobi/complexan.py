"""Zero counting in disks, Jensen averages and adjusted integers."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .coeffs import ModelSpec
from .orbit import IndexInterval, as_interval, omega_of
from .scalednum import LN2, ScaledComplex, ScaledMatrix2
from .transfer import det_f_a, monodromy_a

INITIAL_NODES = 64
MAX_NODES = 1 << 20
MAX_NUDGES = 8
MAX_DEPTH = 48  # bisection rounds; 2^-48 of the circle is below useful resolution
SMALL_ON_CONTOUR = 1e-13
ZERO_DISK_EXPONENT = 2
KERNEL_SUPERSAMPLE = 8


class ContourThroughZero(ArithmeticError):
    pass


class NonConvergence(RuntimeError):
    pass


class SingularSample(ArithmeticError):
    pass


class NoAdjustedInteger(LookupError):
    pass


@dataclass(frozen=True)
class Disk:
    center: complex
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("disk radius must be positive")


@dataclass(frozen=True)
class WindingResult:
    count: int
    min_modulus_on_contour: float  # natural log of the smallest sampled |f|
    nodes_used: int
    radius_used: float


@dataclass(frozen=True)
class JensenResult:
    value: float
    epsilon: float
    grid_spacing: float
    samples_outer: int


def _log_and_phase(vals):
    """(log|v|, arg v) with shape ``(channels, nodes)``; accepts complex arrays, ScaledComplex or ScaledMatrix2."""
    if isinstance(vals, ScaledMatrix2):
        ent = np.moveaxis(vals.entries.reshape(vals.entries.shape[:-2] + (4,)), -1, 0)
        with np.errstate(divide="ignore"):
            return np.log(np.abs(ent)) + vals.exponent * LN2, np.angle(ent)
    if isinstance(vals, ScaledComplex):
        m, e = np.atleast_2d(vals.mantissa), np.atleast_2d(vals.exponent)
        with np.errstate(divide="ignore"):
            return np.log(np.abs(m)) + e * LN2, np.angle(m)
    v = np.atleast_2d(np.asarray(vals, dtype=complex))
    with np.errstate(divide="ignore"):
        return np.log(np.abs(v)), np.angle(v)


def _wrap(d):
    return (d + np.pi) % (2 * np.pi) - np.pi


def _near_zero(logs, live):
    return bool(np.any(live & (logs.min(axis=1) < logs.max(axis=1) + math.log(SMALL_ON_CONTOUR))))


def _track(f, center, radius, max_nodes):
    """Adaptive phase tracking; ``None`` when ``|f|`` is numerically zero on the contour."""
    t = np.linspace(0.0, 1.0, INITIAL_NODES, endpoint=False)
    logs, ph = _log_and_phase(f(center + radius * np.exp(2j * np.pi * t)))
    for _ in range(MAX_DEPTH):
        live = np.isfinite(logs).any(axis=1)
        if _near_zero(logs, live):
            return None
        steps = _wrap(np.diff(np.concatenate([ph, ph[:, :1]], axis=1), axis=1))
        bad = (np.abs(steps) >= np.pi / 2) & live[:, None]
        bad_cols = np.flatnonzero(bad.any(axis=0))
        if bad_cols.size == 0:
            return logs, steps, live, t.size
        if t.size + bad_cols.size > max_nodes:
            raise NonConvergence(f"more than {max_nodes} contour nodes needed")
        t_next = np.append(t[1:], 1.0)
        new_t = 0.5 * (t[bad_cols] + t_next[bad_cols])
        nl, nph = _log_and_phase(f(center + radius * np.exp(2j * np.pi * new_t)))
        order = np.argsort(np.concatenate([t, new_t]), kind="stable")
        t = np.concatenate([t, new_t])[order]
        logs = np.concatenate([logs, nl], axis=1)[:, order]
        ph = np.concatenate([ph, nph], axis=1)[:, order]
    # node spacing is below double resolution: a zero sits on the contour
    return None


def winding_counts(f, disk: Disk, max_nodes: int = MAX_NODES):
    """Zero counts inside ``disk`` for every channel of ``f`` (see :func:`winding_count`).

    ``f`` maps a 1-d array of points to values of shape ``(nodes,)`` or ``(channels, nodes)``
    (plain complex, ScaledComplex, or a ScaledMatrix2 whose four entries become channels).
    Channels that vanish at every node are treated as identically zero and get count 0.
    """
    nudges = [1.0] + [1.0 + s * 0.01 * k for k in range(1, MAX_NUDGES // 2 + 1) for s in (1, -1)]
    for factor in nudges[: MAX_NUDGES + 1]:
        radius = disk.radius * factor
        tracked = _track(f, complex(disk.center), radius, max_nodes)
        if tracked is None:
            continue
        logs, steps, live, nodes = tracked
        lo = logs.min(axis=1)
        counts = np.where(live, np.rint(steps.sum(axis=1) / (2 * np.pi)), 0).astype(int)
        min_mod = float(lo[live].min()) if live.any() else -math.inf
        return [WindingResult(int(c), min_mod, nodes, radius) for c in counts]
    raise ContourThroughZero(f"|f| vanishes on the contour after {MAX_NUDGES} radius nudges")


def winding_count(f, disk: Disk, max_nodes: int = MAX_NODES) -> WindingResult:
    """Zeros of ``f`` inside ``disk`` with multiplicity, from the argument increment on the circle.

    Nodes are bisected until each consecutive phase step is below pi/2.  If ``|f|`` gets within
    a factor 1e-13 of zero relative to its max on the contour the radius is nudged by 1%.
    """
    return winding_counts(f, disk, max_nodes)[0]


def jensen_average(u, z0: complex, r: float, epsilon: float, spacing_divisor: int = 16) -> JensenResult:
    """``(4/eps^2)`` times (outer mean of inner disk means minus outer mean of ``u``).

    ``u`` is sampled once on a square grid of spacing ``h = eps r / spacing_divisor`` that is
    shifted by ``(h/sqrt2, h/sqrt3)``; inner means over ``D(z, eps r)`` come from a convolution
    with an area-weighted disk kernel, outer means are over grid nodes in ``D(z0, r)``.
    """
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    h = epsilon * r / spacing_divisor
    n = int(math.ceil((1 + epsilon) * r / h)) + 2
    idx = np.arange(-n, n + 1) * h
    X, Y = np.meshgrid(idx + h / math.sqrt(2), idx + h / math.sqrt(3), indexing="xy")
    Z = complex(z0) + X + 1j * Y
    vals = np.asarray(u(Z), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise SingularSample("non-finite sample of u; perturb the center")
    k = int(math.ceil(spacing_divisor)) + 1
    kk = np.arange(-k, k + 1) * h
    KX, KY = np.meshgrid(kk, kk, indexing="xy")
    # fractional cell coverage; a hard lattice disk biases J low by ~1.5% per zero
    sub = (np.arange(KERNEL_SUPERSAMPLE) + 0.5) / KERNEL_SUPERSAMPLE - 0.5
    kernel = np.zeros_like(KX)
    for a in sub:
        for b in sub:
            kernel += (KX + a * h) ** 2 + (KY + b * h) ** 2 < (epsilon * r) ** 2
    # centering keeps the FFT round-off relative to the spread of u, not its size
    shift = float(np.median(vals))
    inner = fftconvolve(vals - shift, kernel, mode="same") / kernel.sum()
    outer = np.abs(Z - z0) < r
    value = 4.0 / epsilon**2 * (np.mean(inner[outer]) - np.mean(vals[outer] - shift))
    return JensenResult(float(value), float(epsilon), float(h), int(outer.sum()))


def _det_handle(model, omega, E, lam):
    return lambda z: det_f_a(model, z, omega, E, lam)


def zero_count_disk(model: ModelSpec, omega, E, lam, x0: float, r: float) -> WindingResult:
    """Winding count of ``z -> det(H_lam(z) - E)`` on ``D(x0, r)``."""
    if r > 1:
        raise ValueError("zero counts are local: need r <= 1")
    return winding_count(_det_handle(model, omega, E, as_interval(lam)), Disk(complex(x0), float(r)))


def zero_count_benchmarks(N: int, d0: int) -> dict:
    """Reference bounds reported next to zero counts: ``(log N)^3`` for ``r = 1/N`` and ``2 d0``."""
    return {"log_bound": math.log(N) ** 3 if N > 1 else 0.0, "adjusted_bound": 2 * d0}


def is_adjusted(model: ModelSpec, omega, E, x0: float, r0: float, s: int, k_set, m_max: int) -> bool:
    disk = Disk(complex(x0), float(r0))
    for k in k_set:
        for m in range(-m_max, m_max + 1):
            lam = IndexInterval.of_length(k, s + m)
            try:
                res = winding_counts(lambda z: monodromy_a(model, z, omega, E, lam), disk)
            except ContourThroughZero:
                return False
            if any(w.count != 0 for w in res):
                return False
    return True


def find_adjusted(model: ModelSpec, omega, E, x0: float, r0: float, l: int, s0: int,
                  search_radius: int | None = None, k_set=None, m_max: int = 2) -> int:
    """Nearest ``s`` to ``s0`` such that every entry of ``M^a_k`` on ``[s+m, s+m+k-1]`` is zero-free
    in ``D(x0, r0)`` for all ``k in k_set`` and ``|m| <= m_max``.

    Defaults: ``k_set = {l, 2l}`` and a search radius of ``l^3``.
    """
    if not r0 < 1.0 / (8 * l):
        raise ValueError("need r0 < 1/(8 l)")
    k_set = (l, 2 * l) if k_set is None else tuple(k_set)
    if any(not l <= k <= 100 * l for k in k_set) or m_max > 100:
        raise ValueError("k_set must lie in [l, 100 l] and m_max <= 100")
    if search_radius is None:
        search_radius = l**3
    for d in range(search_radius + 1):
        for s in ((s0,) if d == 0 else (s0 + d, s0 - d)):
            if is_adjusted(model, omega, E, x0, r0, s, k_set, m_max):
                return s
    raise NoAdjustedInteger(f"no adjusted integer within {search_radius} of {s0}")


def adjusted_radius(l: int, power: float = ZERO_DISK_EXPONENT) -> float:
    """``exp(-(log l)^power)``, the radius attached to scale ``l``."""
    return math.exp(-(math.log(l) ** power))


def adjusted_partition(model: ModelSpec, omega, E, x0: float, r0: float, l: int, count: int,
                       start: int = 0) -> list:
    """``count`` consecutive intervals with adjusted endpoints, each of length at least ``l``.

    A cut ``t`` must be adjusted for windows starting at ``t``, for a length-``l`` window centered
    on ``t`` and for windows of length ``l`` and ``2 l`` ending at ``t``.  Endpoints are found greedily: the first adjusted integer at or after ``start``, then the first
    one at or after the previous cut plus ``l``.  Windows straddling a localized resonance are not
    adjusted, so a cut can land up to about ``2 l`` past its nominal position.
    """
    if count < 1:
        raise ValueError("need at least one interval")
    k_set = (l, 2 * l)

    def ok(t):
        # windows starting at, centered on, and ending at the cut
        return (is_adjusted(model, omega, E, x0, r0, t, k_set, 2)
                and is_adjusted(model, omega, E, x0, r0, t - l // 2, (l,), 2)
                and is_adjusted(model, omega, E, x0, r0, t - l, (l,), 2)
                and is_adjusted(model, omega, E, x0, r0, t - 2 * l, (2 * l,), 2))

    def next_cut(s):
        for t in range(s, s + l**3 + 1):
            if ok(t):
                return t
        raise NoAdjustedInteger(f"no adjusted integer in [{s}, {s + l**3}]")

    cuts = [next_cut(start)]
    for _ in range(count):
        cuts.append(next_cut(cuts[-1] + l))
    return [IndexInterval(a, b - 1) for a, b in zip(cuts, cuts[1:])]


def multiscale_jensen_residual(model: ModelSpec, omega, E, partition, x0: float, r: float,
                               epsilon: float, spacing_divisor: int = 16) -> float:
    """``J(log|f_lam|) - sum_j J(log|f_lam_j|)`` on ``D(x0, r)``, where ``lam`` is the union of the parts."""
    parts = [as_interval(p) for p in partition]
    for left, right in zip(parts, parts[1:]):
        if right.lo != left.hi + 1:
            raise ValueError("partition intervals must be consecutive")
    whole = IndexInterval(parts[0].lo, parts[-1].hi)
    omega = omega_of(omega)

    def J(lam):
        u = lambda Z: np.asarray(det_f_a(model, Z, omega, E, lam).log_abs())
        return jensen_average(u, x0, r, epsilon, spacing_divisor).value

    if len(parts) == 1:
        return 0.0
    return J(whole) - sum(J(p) for p in parts)
