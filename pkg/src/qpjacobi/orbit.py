"""Index intervals and coefficient sampling along the orbit ``z + j*omega``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coeffs import TWO_PI, Frequency, ModelSpec, frac_multiples


@dataclass(frozen=True)
class IndexInterval:
    lo: int
    hi: int

    def __post_init__(self):
        if self.hi < self.lo:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @classmethod
    def of_length(cls, n: int, start: int = 0) -> "IndexInterval":
        return cls(start, start + n - 1)

    def __len__(self) -> int:
        return self.hi - self.lo + 1

    def __contains__(self, k) -> bool:
        return self.lo <= k <= self.hi

    def shift(self, s: int) -> "IndexInterval":
        return IndexInterval(self.lo + s, self.hi + s)

    def split(self, k: int):
        """``[lo, k-1]`` and ``[k, hi]``."""
        return IndexInterval(self.lo, k - 1), IndexInterval(k, self.hi)


def as_interval(lam) -> IndexInterval:
    if isinstance(lam, IndexInterval):
        return lam
    if isinstance(lam, int):
        return IndexInterval.of_length(lam)
    lo, hi = lam
    return IndexInterval(int(lo), int(hi))


def omega_of(freq) -> float:
    return freq.omega if isinstance(freq, Frequency) else float(freq)


def shifted_w(z, omega: float, sites):
    """``exp(2 pi i (z + j omega))`` for each site j, shape ``(len(sites),) + z.shape``."""
    z = np.asarray(z, dtype=complex)
    w = np.exp(1j * TWO_PI * z)
    ph = np.exp(1j * TWO_PI * frac_multiples(omega, np.asarray(sites)))
    return ph.reshape((-1,) + (1,) * z.ndim) * w


def site_values(model: ModelSpec, z, omega: float, j0: int, j1: int):
    """``a``, ``b``, ``b_tilde`` at ``z + j omega`` for ``j = j0..j1`` (inclusive)."""
    wj = shifted_w(z, omega, np.arange(j0, j1 + 1))
    return model.a.eval_w(wj), model.b.eval_w(wj), model.b_tilde.eval_w(wj)


def site_blocks(model: ModelSpec, z, omega: float, j0: int, j1: int, block: int = 256):
    """Yield ``(j_start, a, b, bt)`` blocks covering ``j0..j1`` so huge batches stay in memory."""
    z = np.asarray(z, dtype=complex)
    step = max(1, min(block, (1 << 22) // max(1, z.size)))
    for s in range(j0, j1 + 1, step):
        e = min(j1, s + step - 1)
        a, b, bt = site_values(model, z, omega, s, e)
        yield s, a, b, bt


def phase_grid(M: int, seed: int = 0) -> np.ndarray:
    """Equispaced phases ``(i + u) / M`` with one seeded offset ``u in [0, 1)``."""
    if M < 1:
        raise ValueError("need at least one phase")
    u = np.random.default_rng(seed).random()
    return (np.arange(M) + u) / M
