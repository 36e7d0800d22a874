"""Finite-scale Lyapunov exponents, large-deviation profiles and the sup probe."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .coeffs import ModelSpec, mahler_D
from .orbit import IndexInterval, phase_grid
from .scalednum import LN2, log_two_norm
from .transfer import monodromy_a

DEFAULT_THRESHOLDS = (0.5, 1.0, 2.0, 4.0, 8.0)
DEVIATION_POWER = 3
ENTRY_NAMES = ("f", "f_right", "f_left", "f_mid")


@dataclass(frozen=True)
class LyapunovEstimate:
    L_a: float
    L: float
    D: float
    y: float
    N: int
    samples: int
    std_error: float


@dataclass(frozen=True)
class DeviationProfile:
    N: int
    y: float
    thresholds: tuple
    exceedance_measure: tuple
    # the same profile for the other three monodromy entries, keyed by ENTRY_NAMES[1:]
    other_entries: dict = field(default_factory=dict)


def _chunked_log_norms(model, xs, omega, E, N, chunk=4096):
    out = np.empty(xs.shape)
    for s in range(0, xs.size, chunk):
        M = monodromy_a(model, xs[s : s + chunk], omega, E, IndexInterval.of_length(N))
        out[s : s + chunk] = log_two_norm(M)
    return out


def estimate_L(model: ModelSpec, y: float, omega, E, N: int, M: int, seed: int = 0) -> LyapunovEstimate:
    if N < 1 or M < 2:
        raise ValueError("need N >= 1 and M >= 2")
    xs = phase_grid(M, seed) + 1j * y
    vals = _chunked_log_norms(model, xs, omega, E, N) / N
    L_a = float(np.mean(vals))
    D = mahler_D(model.b, y)
    return LyapunovEstimate(
        L_a=L_a,
        L=L_a - D,
        D=D,
        y=float(y),
        N=int(N),
        samples=int(M),
        std_error=float(np.std(vals, ddof=1) / math.sqrt(M)),
    )


def _entry_logs(model, xs, omega, E, N):
    M = monodromy_a(model, xs, omega, E, IndexInterval.of_length(N))
    with np.errstate(divide="ignore"):
        logs = np.log(np.abs(M.entries)) + (M.exponent * LN2)[..., None, None]
    return M, [logs[..., 0, 0], logs[..., 0, 1], logs[..., 1, 0], logs[..., 1, 1]]


def deviation_profile(model: ModelSpec, y: float, omega, E, N: int, grid_size: int, seed: int = 0,
                      thresholds=DEFAULT_THRESHOLDS) -> DeviationProfile:
    """Empirical ``mes{x : |log|entry(x+iy)| - N L_a| > H (log N)^3}`` for each entry of ``M^a_N``.

    ``L_a`` is the grid mean of ``log||M^a_N|| / N``; vanishing entries count as exceeding.
    """
    if grid_size < 1000:
        raise ValueError("grid_size must be at least 1000")
    thresholds = tuple(sorted(float(h) for h in thresholds))
    xs = phase_grid(grid_size, seed) + 1j * y
    M, logs = _entry_logs(model, xs, omega, E, N)
    center = float(np.mean(log_two_norm(M)))
    scale = math.log(N) ** DEVIATION_POWER if N > 1 else 1.0

    def profile(u):
        dev = np.abs(u - center)
        return tuple(float(np.mean(~(dev <= h * scale))) for h in thresholds)

    others = {name: profile(u) for name, u in zip(ENTRY_NAMES[1:], logs[1:])}
    return DeviationProfile(int(N), float(y), thresholds, profile(logs[0]), others)


def sup_probe(model: ModelSpec, omega, E, N: int, grid_size: int, seed: int = 0) -> float:
    """``max log||M^a_N(x+iy)|| - N L_a`` over the phase grid and ``y in {0, +-1/N}``."""
    if grid_size < 1000:
        raise ValueError("grid_size must be at least 1000")
    xs = phase_grid(grid_size, seed)
    base = _chunked_log_norms(model, xs.astype(complex), omega, E, N)
    NL_a = float(np.mean(base))
    best = float(base.max())
    for y in (1.0 / N, -1.0 / N):
        best = max(best, float(_chunked_log_norms(model, xs + 1j * y, omega, E, N).max()))
    return best - NL_a
