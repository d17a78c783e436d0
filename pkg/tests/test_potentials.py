import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlspeaks.errors import FloorViolation, SignChange
from nlspeaks.ground_state import coupled_amplitudes
from nlspeaks.potentials import (builtin_potential, constant_potential, hessian_at_origin,
                                 max_well_depth, potentials_from_dict, potentials_to_toml,
                                 tail_fit)


def test_default_instance_examples():
    p = builtin_potential(1, 4, 0.1)
    assert p.evaluate(0.0) == 1.0
    assert p.derivative(0.0) == 0.0
    assert p.second_derivative_at_origin() == pytest.approx(-0.2, abs=1e-14)
    fit = tail_fit(p, (50, 200))
    assert 3.96 <= fit["m_hat"] <= 4.04
    assert fit["a_hat"] == pytest.approx(1.0, rel=0.05)
    assert fit["trusted"]
    assert p.b == -4.0


def test_floor_violation():
    with pytest.raises(FloorViolation):
        builtin_potential(1, 4, 10)
    with pytest.raises(ValueError):
        builtin_potential(-1, 4, 0.1)


def test_tail_fit_sign_change():
    with pytest.raises(SignChange):
        tail_fit(constant_potential(), (50, 200))
    with pytest.raises(SignChange):
        tail_fit(lambda r: 1 - 1 / r**4, (50, 200))


def _finite_difference(f, r, h=1e-5):
    return (f(r + h) - f(r - h)) / (2 * h)


@settings(max_examples=40, deadline=None)
@given(a=st.floats(0.2, 3), m=st.floats(3, 8), frac=st.floats(0.05, 0.9))
def test_builtin_family_invariants(a, m, frac):
    c = frac * max_well_depth(a, m)
    p = builtin_potential(a, m, c)
    r = np.linspace(0, 60, 6001)
    vals = p.evaluate(r)
    assert p.alpha > 0
    assert np.all(vals >= p.alpha - 1e-12)
    assert p.evaluate(0.0) == 1.0 and p.derivative(0.0) == 0.0
    assert p.second_derivative_at_origin() < 0
    rr = np.linspace(0.5, 30, 50)
    assert np.allclose(p.derivative(rr), _finite_difference(p.evaluate, rr), rtol=1e-5, atol=1e-9)
    assert np.allclose(p.evaluate(r), 1 + p.excess(r), rtol=0, atol=1e-15)
    fit = tail_fit(p, (50, 200))
    assert abs(fit["m_hat"] / m - 1) <= 0.01
    assert abs(fit["a_hat"] / a - 1) <= 0.05
    far = np.linspace(50, 200, 40)
    assert np.allclose(p.derivative(far), -a * m / far**(m + 1), rtol=0.02)


def test_next_order_tail_coefficient():
    p = builtin_potential(1.5, 5, 0.1)
    r = np.array([40.0, 80.0])
    remainder = (p.excess(r) - p.a / r**p.m) * r**(p.m + 2)
    # the next correction is relatively O(r^-2)
    assert remainder == pytest.approx([p.b, p.b], rel=1e-2)
    assert abs(remainder[1] - p.b) < abs(remainder[0] - p.b) / 3


def test_gradient_is_radial():
    p = builtin_potential()
    g = np.array(p.gradient(3.0, 4.0, 0.0))
    assert g == pytest.approx(p.derivative(5.0) * np.array([0.6, 0.8, 0.0]))


def test_hessian_nondegenerate():
    h = hessian_at_origin(builtin_potential(), builtin_potential(), coupled_amplitudes(1, 1, 0.5))
    assert not h["degenerate"] and h["margin"] > 0
    assert np.allclose(h["matrix"], -0.2 * (4 / 3) * np.eye(3))


def test_toml_roundtrip():
    import tomli
    p, q = builtin_potential(1, 4, 0.1), builtin_potential(2, 6, 0.2)
    block = tomli.loads(potentials_to_toml(p, q))["potential"]
    p2, q2 = potentials_from_dict(block)
    assert (p2.a, p2.m, p2.c) == (p.a, p.m, p.c)
    assert (q2.a, q2.m, q2.c) == (q.a, q.m, q.c)
