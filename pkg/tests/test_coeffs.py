import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qpjacobi.coeffs import (
    GOLDEN,
    DiophantineViolation,
    ModelSpec,
    TrigPoly,
    check_diophantine,
    eval_poly,
    mahler_D,
    orbit_gaps,
    orbit_interval_count,
    shift_power_sum,
    tilde,
    torus_roots,
)

E1 = TrigPoly.from_dict({1: 1})


def test_eval_examples():
    assert eval_poly(TrigPoly.constant(1), 0.3 + 0.1j) == pytest.approx(1)
    assert eval_poly(TrigPoly.cosine(2.0), 0.0) == pytest.approx(2)
    assert eval_poly(E1, 1j) == pytest.approx(math.exp(-2 * math.pi), rel=1e-12)


def test_tilde_examples():
    sym = TrigPoly.from_dict({-1: 2.0, 0: 1.0, 1: 2.0})
    assert tilde(sym).as_dict() == sym.as_dict()
    assert tilde(E1).as_dict() == TrigPoly.from_dict({-1: 1}).as_dict()


@settings(max_examples=50, deadline=None)
@given(st.lists(st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False), min_size=1, max_size=5),
       st.floats(0, 1))
def test_tilde_is_conjugate_on_real_line(cs, x):
    d = len(cs) // 2
    p = TrigPoly.from_dict({k - d: c for k, c in enumerate(cs)})
    assert eval_poly(tilde(p), x) == pytest.approx(np.conj(eval_poly(p, x)), abs=1e-9)


def test_torus_roots_examples():
    assert torus_roots(TrigPoly.constant(1)).on_torus_count == 0
    rs = torus_roots(TrigPoly.from_dict({1: 1, 0: -1}))
    assert rs.on_torus_count == 1 and abs(rs.roots[0] - 1) < 1e-12
    rs = torus_roots(TrigPoly.cosine(2.0))
    assert rs.on_torus_count == 2
    assert sorted(r.imag for r in rs.roots) == pytest.approx([-1, 1])


def test_mahler_examples(frozen):
    assert mahler_D(TrigPoly.constant(1), 0.3) == pytest.approx(0, abs=1e-14)
    for y in (-0.2, 0.0, 0.4):
        assert mahler_D(E1, y) == pytest.approx(-2 * math.pi * y, abs=1e-12)
    assert mahler_D(TrigPoly.from_dict({1: 1, 0: -2}), 0.0) == pytest.approx(math.log(2), rel=1e-12)
    p = TrigPoly.from_dict({2: 3, 1: 1, 0: -2, -1: 0.5})
    assert mahler_D(p, 0.05) == pytest.approx(frozen["mahler_D_y0.05"], rel=1e-10)


def test_diophantine():
    f = check_diophantine(GOLDEN, 0.2, 2.0, 10**6)
    assert f.verified_up_to == 10**6
    with pytest.raises(DiophantineViolation, match=r"2"):
        check_diophantine(0.5, 0.2, 2.0, 100)
    with pytest.raises(DiophantineViolation, match=r"4"):
        check_diophantine(0.25, 0.2, 2.0, 100)


def test_orbit_examples():
    assert orbit_interval_count(GOLDEN, 5, (0.0, 0.5)) == 3
    assert orbit_interval_count(GOLDEN, 7, (0.0, 1.0)) == 7
    assert orbit_interval_count(GOLDEN, 7, (0.3, 0.3)) == 0
    assert orbit_gaps(GOLDEN, 2) == pytest.approx((0.381966, 0.618034), abs=1e-6)
    assert orbit_gaps(GOLDEN, 3)[0] == pytest.approx(0.236068, abs=1e-6)
    assert orbit_gaps(0.1234, 2)[0] == pytest.approx(0.1234)


def test_shift_power_sum():
    assert shift_power_sum(GOLDEN, 50, 2, 0.6)[0] == 0
    assert shift_power_sum(GOLDEN, 1, 2, 0.1)[0] == 0
    assert shift_power_sum(GOLDEN, 3, 2, 0.3)[0] == pytest.approx(0.381966**-2, rel=1e-5)


def test_model_invariants(amo, harper, free):
    assert (amo.d0, amo.n_b, amo.p) == (1, 0, 0.5)
    assert (harper.d0, harper.n_b) == (1, 2)
    assert harper.p == pytest.approx(0.25)
    assert free.d0 == 0
    for m in (amo, harper):
        again = ModelSpec.from_dict(m.to_dict())
        assert again.to_dict() == m.to_dict()


def test_degree_is_exact():
    with pytest.raises(ValueError):
        TrigPoly.from_dict({0: float("nan")})
    assert TrigPoly((0, 0, 5, 0, 0)).degree == 0
    assert TrigPoly((0, 1, 2, 3, 0)).degree == 1
    assert TrigPoly((1, 0, 0)).degree == 1
    assert TrigPoly.cosine(2.0).real_on_torus and not E1.real_on_torus
