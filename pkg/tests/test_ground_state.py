import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlspeaks.errors import InadmissibleBeta, TailUnderflow
from nlspeaks.ground_state import (coupled_amplitudes, coupled_residual, decay_constant,
                                   fit_decay, pair_interaction, radial_integrals,
                                   read_profile_csv, solve_ground_state, write_profile_csv)

# w(0) for mu = 1 from an independent classical RK4 shooting run (step 1e-4,
# series start, bisection on the overshoot/undershoot dichotomy to 5e-13).
W0_ORACLE = 4.337387681271048


def test_center_value_matches_oracle(gs):
    assert gs.center_value == pytest.approx(W0_ORACLE, rel=1e-8)


def test_profile_invariants(gs):
    assert np.all(gs.values > 0)
    assert np.all(np.diff(gs.values) < 0)
    assert np.all(gs.derivs[1:] < 0)
    assert abs(gs.derivs[0]) < 1e-10
    assert gs.values[-1] < 1e-8 * gs.center_value
    assert gs.residual_norm <= 1e-8


def test_scaling_mu4(gs):
    g4 = solve_ground_state(4.0)
    assert g4.center_value == pytest.approx(gs.center_value / 2, rel=1e-10)
    assert np.max(np.abs(g4.values - gs.values / 2)) <= 1e-8 * gs.center_value


@pytest.mark.parametrize("mu", [0.5, 1.0, 2.0, 4.0])
def test_nehari_and_pohozaev(mu):
    I = radial_integrals(solve_ground_state(mu))
    assert abs(I["IG"] + I["I2"] - mu * I["I4"]) <= 1e-6 * mu * I["I4"]
    assert abs(0.5 * I["IG"] + 1.5 * I["I2"] - 0.75 * mu * I["I4"]) <= 1e-6 * mu * I["I4"]


def test_integral_scaling(gs):
    # W_mu = W / sqrt(mu), so I4 scales like mu^-2 and I2, IG like mu^-1
    I1, I4 = radial_integrals(gs), radial_integrals(solve_ground_state(4.0))
    assert I4["I4"] == pytest.approx(I1["I4"] / 16, rel=1e-8)
    assert I4["I2"] == pytest.approx(I1["I2"] / 4, rel=1e-8)


def test_amplitudes_examples():
    a = coupled_amplitudes(1, 1, 0)
    assert a.gamma1 == a.gamma2 == 1.0
    a = coupled_amplitudes(1, 1, 0.5)
    assert a.gamma1 == pytest.approx(math.sqrt(2 / 3), abs=1e-12)
    assert a.gamma2 == pytest.approx(math.sqrt(2 / 3), abs=1e-12)
    with pytest.raises(InadmissibleBeta):
        coupled_amplitudes(1, 1, 1)
    with pytest.raises(InadmissibleBeta):
        coupled_amplitudes(1, 4, 2)
    with pytest.raises(InadmissibleBeta):
        coupled_amplitudes(1, 4, -2)


@settings(max_examples=60, deadline=None)
@given(mu1=st.floats(0.2, 5), mu2=st.floats(0.2, 5), t=st.floats(0.01, 0.99))
def test_amplitude_formulas(mu1, mu2, t):
    lo, hi = -math.sqrt(mu1 * mu2), min(mu1, mu2)
    beta = lo + t * (hi - lo)
    a = coupled_amplitudes(mu1, mu2, beta)
    det = mu1 * mu2 - beta**2
    assert a.gamma1**2 == pytest.approx((mu2 - beta) / det, rel=1e-12)
    assert a.gamma2**2 == pytest.approx((mu1 - beta) / det, rel=1e-12)
    # (gamma1 W, gamma2 W) solves the coupled algebraic balance
    assert mu1 * a.gamma1**2 + beta * a.gamma2**2 == pytest.approx(1.0, rel=1e-12)
    assert beta * a.gamma1**2 + mu2 * a.gamma2**2 == pytest.approx(1.0, rel=1e-12)


def test_coupled_residual(gs, amp_half):
    assert coupled_residual(gs, amp_half) <= 10 * gs.residual_norm


def test_decay_rate(gs):
    assert 0.99 <= decay_constant(gs)["rate"] <= 1.01
    assert 0.99 <= decay_constant(solve_ground_state(4.0))["rate"] <= 1.01


def test_fit_decay_synthetic():
    r = np.linspace(5, 20, 200)
    fit = fit_decay(r, np.exp(-r) / r)
    assert fit["rate"] == pytest.approx(1.0, abs=1e-12)
    assert fit["prefactor"] == pytest.approx(1.0, abs=1e-10)


def _midpoint_pair(gs, p, q, d, h=0.1, half=9.0):
    """3D tensor midpoint oracle on a box around the segment joining the peaks."""
    x = np.arange(-half, d + half, h) + h / 2
    y = np.arange(-half, half, h) + h / 2
    X, Y, Z = np.meshgrid(x, y, y, indexing="ij", sparse=True)
    r1 = np.sqrt(X**2 + Y**2 + Z**2)
    r2 = np.sqrt((X - d)**2 + Y**2 + Z**2)
    return float(np.sum(gs(r1)**p * gs(r2)**q)) * h**3


def test_pair_interaction_oracle(gs):
    for p, q, d in [(3, 1, 4.0), (2, 2, 3.0)]:
        assert pair_interaction(gs, p, q, d) == pytest.approx(_midpoint_pair(gs, p, q, d),
                                                              rel=2e-3)


def test_pair_interaction_properties(gs):
    norm = [d * math.exp(d) * pair_interaction(gs, 3, 1, d) for d in (8.0, 10.0, 12.0)]
    assert abs(norm[1] / norm[0] - 1) < 0.05 and abs(norm[2] / norm[1] - 1) < 0.05
    assert pair_interaction(gs, 2, 2, 10.0) < pair_interaction(gs, 3, 1, 10.0)
    assert pair_interaction(gs, 3, 1, 0.0) == pytest.approx(radial_integrals(gs)["I4"], rel=1e-6)
    with pytest.raises(TailUnderflow):
        pair_interaction(gs, 3, 1, 25.0)


def test_profile_csv_roundtrip(gs, tmp_path):
    path = write_profile_csv(gs, tmp_path / "w.csv")
    mu, res, r, w = read_profile_csv(path)
    assert mu == gs.mu and res == gs.residual_norm
    assert np.array_equal(r, gs.radii) and np.array_equal(w, gs.values)
