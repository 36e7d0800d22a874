import math

import numpy as np
import pytest

from qpjacobi import IndexInterval
from qpjacobi.operator import (
    build_H,
    count_below,
    count_below_grid,
    eigenvalues_full,
    green_diag,
    green_diag_all,
    spectral_interval_count,
)


def test_build_H_small(amo, harper, free, omega):
    x = 0.3
    H = build_H(amo, x, omega, IndexInterval(5, 5)).to_dense()
    assert H.shape == (1, 1) and H[0, 0] == pytest.approx(6 * math.cos(2 * math.pi * (x + 5 * omega)))
    H = build_H(harper, x, omega, IndexInterval(2, 3)).to_dense()
    b = harper.b(x + 3 * omega)
    assert H[0, 1] == pytest.approx(-b) and H[1, 0] == pytest.approx(-np.conj(b))
    assert H[1, 1] == pytest.approx(harper.a(x + 3 * omega))
    H = build_H(free, 0.0, omega, 3).to_dense()
    assert np.allclose(H, [[0, -1, 0], [-1, 0, -1], [0, -1, 0]])


def test_counts_free(free, omega):
    assert count_below(free, 0.0, omega, 2, 0.0) == 1
    assert count_below(free, 0.0, omega, 2, 2.0) == 2
    assert spectral_interval_count(free, 0.0, omega, 2, 1.0, 0.5) == 1
    assert spectral_interval_count(free, 0.0, omega, 50, 0.0, 10.0) == 50
    assert spectral_interval_count(free, 0.0, omega, 50, -10.0, 1.0) == 0


def test_free_spectrum(free, omega):
    assert eigenvalues_full(free, 0.0, omega, 2) == pytest.approx([-1, 1])
    N = 37
    exact = sorted(-2 * math.cos(math.pi * k / (N + 1)) for k in range(1, N + 1))
    assert eigenvalues_full(free, 0.0, omega, N) == pytest.approx(exact, abs=1e-12)


def test_eigenvalues_frozen(amo, omega, frozen):
    ev = eigenvalues_full(amo, 0.2, omega, 30)
    assert ev == pytest.approx(frozen["amo_eigs_N30_x0.2"], abs=1e-11)


def test_count_vs_dense(amo, harper, omega):
    rng = np.random.default_rng(3)
    for model in (amo, harper):
        for _ in range(10):
            x = rng.random()
            H = build_H(model, x, omega, 64).to_dense()
            ev = np.linalg.eigvalsh(H)
            Es = rng.uniform(-7, 7, 20)
            got = count_below(model, x, omega, 64, Es)
            assert list(got) == [int((ev < E).sum()) for E in Es]


def test_count_grid_matches_eigenvalues(amo, omega):
    xs = np.array([0.1, 0.55])
    Es = np.linspace(-6, 6, 100)
    grid = count_below_grid(amo, xs, omega, 200, Es)
    for i, x in enumerate(xs):
        ev = eigenvalues_full(amo, x, omega, 200)
        assert list(grid[i]) == [int(np.searchsorted(ev, E)) for E in Es]


def test_green_examples(amo, omega, frozen):
    x, E, eta = 0.4, 0.3, 0.01
    g = green_diag(amo, x, omega, IndexInterval(7, 7), E, eta, 7)
    assert g == pytest.approx(1 / (amo.a(x + 7 * omega) - E - 1j * eta))
    g = green_diag(amo, 0.15, omega, 40, 0.3, 1e-3, 17)
    re, im = frozen["amo_green_N40_x0.15_E0.3_eta1e-3_k17"]
    assert g == pytest.approx(complex(re, im), rel=1e-8)


def test_green_trace_identity(amo, omega):
    x, N, E, eta = 0.77, 60, -0.5, 0.01
    G = green_diag_all(amo, x, omega, N, E, eta)
    ev = eigenvalues_full(amo, x, omega, N)
    rhs = np.sum(eta / ((ev - E) ** 2 + eta**2))
    assert np.sum(G.imag) == pytest.approx(rhs, rel=1e-8)
