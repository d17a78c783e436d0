import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlspeaks.ansatz import AnsatzField, single_peak_configuration
from nlspeaks.diagnostics import (decay_check, default_delta, pohozaev_residual,
                                  report_to_json, weight_field, weighted_norm, write_bands_csv)
from nlspeaks.errors import DomainClipped
from nlspeaks.field_solver import DiscreteFieldPair, newton_solve
from nlspeaks.ground_state import coupled_amplitudes
from nlspeaks.grid import make_grid
from nlspeaks.potentials import builtin_potential, max_well_depth


@pytest.fixture(scope="module")
def peak(gs, flat):
    g = make_grid(10.0, cells=64, symmetric=(False, True, True))
    an = AnsatzField(single_peak_configuration(1.0), coupled_amplitudes(1, 1, 0.5), gs)
    return newton_solve(an, flat, g, tol=1e-10)


def _translation(sol, i=0):
    g = sol.grid
    return DiscreteFieldPair(g, g.gradient(sol.u)[i], g.gradient(sol.v)[i], sol.epsilon,
                             sol.amplitudes)


def test_pohozaev_zero_fields(flat, amp_half):
    g = make_grid(6.0, cells=24)
    z = DiscreteFieldPair(g, np.zeros(g.shape), np.zeros(g.shape), 1.0, amp_half)
    rep = pohozaev_residual(z, z, flat, (0.0, 0.0, 0.0), 2.0, 0, n_theta=16, n_r=8)
    assert rep.residual == 0.0 and rep.lhs == 0.0 and rep.rhs == 0.0
    assert all(v == 0.0 for v in rep.boundary_terms.values())


def test_pohozaev_translation_mode(peak, flat):
    rep = pohozaev_residual(peak, _translation(peak), flat, (0.7, 0.4, 0.2), 3.0, 0)
    assert rep.rhs == 0.0  # no volume term for a constant potential
    scale = max(abs(v) for v in rep.boundary_terms.values())
    assert abs(rep.residual) < 0.05 * scale
    assert len(rep.boundary_terms) == 7


def test_pohozaev_volume_term_nonconstant(peak, default_pots):
    rep = pohozaev_residual(peak, _translation(peak), default_pots, (0.7, 0.4, 0.2), 3.0, 0)
    assert rep.rhs != 0.0


def test_pohozaev_domain_clipped(peak, flat):
    with pytest.raises(DomainClipped):
        pohozaev_residual(peak, _translation(peak), flat, (8.0, 0.0, 0.0), 3.0, 0)


def test_default_delta():
    assert default_delta((0, 0, 0), [(4, 0, 0), (0, 10, 0)]) == 2.0
    with pytest.raises(ValueError):
        default_delta((0, 0, 0), [])


def _points(seed, n=400):
    return np.random.default_rng(seed).uniform(-6, 6, (n, 3))


@settings(max_examples=40, deadline=None)
@given(s=st.floats(1e-3, 1e3), tau=st.floats(0.05, 0.95), theta=st.floats(0.1, 1.0),
       seed=st.integers(0, 2**31 - 1))
def test_weighted_norm_homogeneity(s, tau, theta, seed):
    x = _points(seed)
    f = np.random.default_rng(seed + 1).standard_normal(len(x))
    inner, ring = [(0, 0, 0)], [(3, 0, 0), (-3, 0, 0)]
    a = weighted_norm(f, x, inner, ring, tau, theta, 0.5)
    b = weighted_norm(s * f, x, inner, ring, tau, theta, 0.5)
    assert b.norm == pytest.approx(s * a.norm, rel=1e-14)
    assert a.norm >= 0
    i = int(np.argmax(np.abs(f) / weight_field(x, inner, ring, tau, theta, 0.5)))
    assert a.location == tuple(x[i])


def test_weighted_norm_examples():
    x = _points(0)
    ring = [(3, 0, 0), (-3, 0, 0)]
    assert weighted_norm(np.zeros(len(x)), x, [], ring).norm == 0.0
    u = sum(np.exp(-0.2 * np.linalg.norm(x - np.array(c), axis=-1)) for c in ring)
    n = weighted_norm(u, x, [], ring).norm
    assert 0.5 <= n <= 1.0 + 1e-12
    with pytest.raises(ValueError):
        weighted_norm(u, x, [], ring, tau=1.0)
    with pytest.raises(ValueError):
        weighted_norm(u, x, [], ring, theta=0.0)


def test_decay_flat_peak(peak, tmp_path):
    rep = decay_check(peak, [(0, 0, 0)], 1.0)
    assert rep.theta == pytest.approx(1.0, rel=0.05)
    assert rep.monotone and not rep.skipped
    rows = write_bands_csv(rep, tmp_path / "b.csv").read_text().splitlines()
    assert rows[0] == "band_lo,band_hi,max_u,max_v" and len(rows) == len(rep.bands) + 1
    assert json.loads(report_to_json(rep, tmp_path / "d.json").read_text())["theta"] == rep.theta


def test_decay_deep_well(gs):
    a, m = 1.0, 4.0
    p = builtin_potential(a, m, 0.95 * max_well_depth(a, m))
    assert p.alpha < 0.3
    g = make_grid(10.0, cells=64, symmetric=(True, True, True))
    an = AnsatzField(single_peak_configuration(1.0), coupled_amplitudes(1, 1, 0.5), gs)
    sol = newton_solve(an, (p, p), g, tol=1e-9)
    rep = decay_check(sol, [(0, 0, 0)], 1.0)
    assert rep.theta >= 0.45


def test_decay_zero_field(amp_half):
    g = make_grid(6.0, cells=24)
    z = DiscreteFieldPair(g, np.zeros(g.shape), np.zeros(g.shape), 1.0, amp_half)
    rep = decay_check(z, [(0, 0, 0)], 1.0)
    assert rep.skipped and rep.theta is None
