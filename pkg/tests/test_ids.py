import math

import numpy as np
import pytest

from qpjacobi.config import ExperimentConfig
from qpjacobi.ids import (
    EtaOutOfRange,
    InsufficientSignal,
    eta_range,
    fit_power_law,
    holder_energies,
    holder_fit,
    ids_avg,
    ids_curve,
    ids_finite,
    multiscale_ids_check,
    theorem_gate,
    wegner_integral,
)


def test_ids_finite_examples(amo, free, omega):
    assert ids_finite(amo, 0.3, omega, 50, -100.0) == 0
    assert ids_finite(amo, 0.3, omega, 50, 100.0) == 1
    assert ids_finite(free, 0.0, omega, 2, 0.0) == 0.5
    out = ids_finite(amo, np.array([0.1, 0.2, 0.3]), omega, 40, np.array([-1.0, 0.0]))
    assert out.shape == (3, 2)


def test_ids_avg(amo, free, omega, frozen):
    v, se = ids_avg(amo, omega, 64, 50.0, 8)
    assert (v, se) == (1.0, 0.0)
    v, se = ids_avg(amo, omega, 64, -50.0, 8)
    assert (v, se) == (0.0, 0.0)
    for E, ref in frozen["free_ids_N100"].items():
        assert ids_avg(free, omega, 100, float(E), 4)[0] == pytest.approx(ref, abs=1e-3)
    c = ids_curve(amo, omega, 128, np.linspace(-7, 7, 80), 16)
    assert np.all(np.diff(c.values) >= 0)


def test_eta_range():
    lo, hi = eta_range(512, 0.5)
    assert hi == pytest.approx(1 / 512) and lo == pytest.approx(10 / 512**2)


def test_wegner_examples(amo, free, omega):
    w = wegner_integral(amo, omega, 256, 50.0, 1 / 256, 8)
    assert w.integral == 0 and w.passed
    w = wegner_integral(amo, omega, 512, 0.3, 1 / 512, 32)
    assert w.bound == pytest.approx(512**0.6, rel=1e-12)
    assert w.passed and w.integral < 5
    with pytest.raises(EtaOutOfRange):
        wegner_integral(amo, omega, 512, 0.3, 0.1, 8)
    w = wegner_integral(amo, omega, 512, 0.3, 0.1, 8, strict=False)
    assert not w.eta_in_range
    w = wegner_integral(free, omega, 256, 0.3, 1 / 256, 8, p=0.5, gamma=0.5)
    assert w.hypothesis_violated is True


def test_multiscale_examples(amo, omega):
    r = multiscale_ids_check(amo, omega, 128, 2, (50, 60), 8)
    assert r.lhs == r.rhs == 0 and r.passed
    r = multiscale_ids_check(amo, omega, 128, 2, (-50, 50), 8)
    assert r.lhs == r.rhs == 1 and r.passed
    r = multiscale_ids_check(amo, omega, 256, 4, (-1, 1), 32, seed=3)
    assert r.passed


def test_power_law_fits():
    eta = np.geomspace(1e-3, 1e-2, 8)
    f = fit_power_law(eta, eta**0.5, predicted_p=0.5)
    assert f.exponent == pytest.approx(0.5) and f.r_squared == pytest.approx(1)
    assert f.exponent_vs_p == pytest.approx(0.1)
    assert fit_power_law(eta, 3 * eta).exponent == pytest.approx(1)
    with pytest.raises(InsufficientSignal):
        fit_power_law(eta, np.zeros(8))
    with pytest.raises(ValueError):
        fit_power_law(eta[::-1], eta)


def test_holder_fit_runs(amo, omega):
    Es = holder_energies(amo, omega, 1024, 2, 32)
    vals = ids_avg(amo, omega, 1024, Es, 32)[0]
    assert np.all((vals >= 0.2 - 1e-3) & (vals <= 0.8 + 1e-3))
    fit = holder_fit(amo, omega, 1024, float(Es[0]), np.geomspace(2e-3, 2e-2, 6), 64)
    assert fit.predicted_p == 0.5 and math.isfinite(fit.exponent)


def _small(**over):
    base = {"scales": {"N": [128], "holder_N": 512, "lyapunov_N": 200},
            "grids": {"M": 16, "energy_count": 2, "holder_energy_count": 2}}
    base.update(over)
    return ExperimentConfig.from_dict(base)


def test_gate_amo():
    rep = theorem_gate(_small())
    d = rep.to_dict()
    assert d["p"] == 0.5 and d["n_b"] == 0 and d["d0"] == 1
    assert not rep.hypothesis_violated and rep.passed
    assert all(r["above_gamma"] for r in d["lyapunov"])


def test_gate_harper_p():
    rep = theorem_gate(_small(model={"preset": "harper"}))
    assert rep.p == pytest.approx(1 / (rep.n_b + 2)) and rep.d0 == 1


def test_gate_violations():
    rep = theorem_gate(_small(model={"preset": "amo", "lam": 0.2}, tolerances={"gamma": 0.5}))
    assert rep.hypothesis_violated and not rep.wegner and not rep.holder
    rep = theorem_gate(_small(frequency={"omega": 0.5}))
    assert rep.hypothesis_violated and not rep.frequency["certified"]
