import math

import numpy as np
import pytest

from qpjacobi.lyapunov import deviation_profile, estimate_L, sup_probe
from qpjacobi.operator import eigenvalues_full


def test_rotation_cocycle(free, omega):
    est = estimate_L(free, 0.0, omega, 0.0, 300, 8)
    assert est.L == pytest.approx(0, abs=1e-12)
    assert est.std_error >= 0


def test_free_hyperbolic(free, omega, frozen):
    est = estimate_L(free, 0.0, omega, 10.0, 400, 4)
    assert est.L == pytest.approx(frozen["free_lyapunov_E10"], abs=1e-3)


def test_L_equals_La_minus_D(harper, omega):
    for y in (0.0, 0.03, -0.05):
        est = estimate_L(harper, y, omega, 0.2, 200, 16, seed=4)
        assert est.L == est.L_a - est.D


def test_amo_near_log3(amo, omega):
    E = float(eigenvalues_full(amo, 0.3, omega, 200)[100])
    est = estimate_L(amo, 0.0, omega, E, 2000, 64, seed=1)
    assert est.L == pytest.approx(math.log(3), abs=0.05)


def test_deviation_profile_examples(free, amo, omega):
    prof = deviation_profile(free, 0.0, omega, 10.0, 200, 1000, thresholds=(1e-12, 8.0))
    assert prof.exceedance_measure[1] == 0
    assert 0 <= prof.exceedance_measure[0] <= 1
    prof = deviation_profile(amo, 0.0, omega, 0.3, 512, 2000)
    h = dict(zip(prof.thresholds, prof.exceedance_measure))
    # decay in H; at this N every sample is already inside the H = 1 band
    assert h[4.0] <= h[1.0] / 5
    assert list(prof.exceedance_measure) == sorted(prof.exceedance_measure, reverse=True)
    assert set(prof.other_entries) == {"f_right", "f_left", "f_mid"}


def test_deviation_profile_grid_guard(amo, omega):
    with pytest.raises(ValueError):
        deviation_profile(amo, 0.0, omega, 0.3, 64, 100)


def test_sup_probe(free, amo, omega):
    assert abs(sup_probe(free, omega, 10.0, 256, 1000)) < 1.0
    ratios = [sup_probe(amo, omega, 0.3, N, 1000) / math.log(N) ** 3 for N in (256, 512, 1024, 2048)]
    assert max(ratios) < 1.0
    assert np.all(np.isfinite(ratios))
