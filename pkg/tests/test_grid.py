import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlspeaks.grid import STENCILS, make_grid

SYMS = st.tuples(st.booleans(), st.booleans(), st.booleans())


def _mode(g, k=(1, 1, 1)):
    """Product of odd cosine modes vanishing on the walls (even in every axis)."""
    X, Y, Z = g.mesh()
    out = np.ones(g.shape)
    for c, L, n in zip((X, Y, Z), g.half_widths, k):
        out = out * np.cos((2 * n - 1) * math.pi * c / (2 * L))
    return out


def test_shapes_and_volume():
    g = make_grid((3.0, 4.0, 5.0), cells=(6, 8, 10), symmetric=(True, False, True))
    assert g.shape == (3, 8, 5)
    assert g.multiplicity == 4
    assert g.integrate(np.ones(g.shape)) == pytest.approx(8 * 3 * 4 * 5)
    assert np.allclose(g.spacing, 1.0)
    with pytest.raises(ValueError):
        make_grid(1.0, cells=5)


@pytest.mark.parametrize("stencil", STENCILS)
@pytest.mark.parametrize("sym", [(False, False, False), (True, True, True), (False, True, True)])
def test_laplacian_on_basis_mode(stencil, sym):
    g = make_grid((2.0, 3.0, 2.5), cells=(16, 24, 20), symmetric=sym, stencil=stencil)
    k = (2, 1, 3)
    u = _mode(g, k)
    lam = 0.0
    for n, L, h in zip(k, g.half_widths, g.spacing):
        theta = (2 * n - 1) * math.pi * h / (2 * L)
        if stencil == "fd2":
            lam += (2 - 2 * math.cos(theta)) / h**2
        elif stencil == "fd4":
            lam += (30 - 32 * math.cos(theta) + 2 * math.cos(2 * theta)) / (12 * h**2)
        else:
            lam += (theta / h) ** 2
    assert np.allclose(-g.laplacian(u), lam * u, atol=1e-10 * lam)


@settings(max_examples=25, deadline=None)
@given(sym=SYMS, stencil=st.sampled_from(STENCILS), seed=st.integers(0, 2**31 - 1))
def test_laplacian_self_adjoint_and_shift_inverse(sym, stencil, seed):
    g = make_grid((2.0, 1.5, 1.0), cells=(8, 6, 4), symmetric=sym, stencil=stencil)
    rng = np.random.default_rng(seed)
    a, b = rng.standard_normal((2,) + g.shape)
    lhs, rhs = g.dot(g.laplacian(a), b), g.dot(a, g.laplacian(b))
    assert abs(lhs - rhs) <= 1e-12 * np.abs(g.laplacian(a)).max() * np.abs(b).sum() * g.cell_volume * 8
    assert g.dot(a, g.laplacian(a)) < 0
    x = g.solve_shifted(b, 0.7)
    assert np.allclose(-g.laplacian(x) + 0.7 * x, b, atol=1e-10)


@settings(max_examples=20, deadline=None)
@given(sym=SYMS, stencil=st.sampled_from(STENCILS), seed=st.integers(0, 2**31 - 1))
def test_reduction_matches_full_grid(sym, stencil, seed):
    """The reduced operator equals the full one restricted to symmetric fields."""
    full = make_grid(2.0, cells=8, stencil=stencil)
    red = full.with_symmetry(sym)
    u_red = np.random.default_rng(seed).standard_normal(red.shape)
    u_full = red.expand(u_red)
    assert u_full.shape == full.shape
    assert np.array_equal(red.restrict(u_full), u_red)
    assert np.allclose(red.restrict(full.laplacian(u_full)), red.laplacian(u_red), atol=1e-10)
    assert red.integrate(u_red) == pytest.approx(full.integrate(u_full), rel=1e-12, abs=1e-12)
    for a in range(3):
        if sym[a]:
            assert np.allclose(full.mirror(u_full, a), u_full)


@pytest.mark.parametrize("sym", [(False, False, False), (True, True, True)])
def test_spectral_gradient(sym):
    g = make_grid(8.0, cells=96, symmetric=sym)
    X, Y, Z = g.mesh()
    u = np.exp(-(X**2 + 2 * Y**2 + 0.5 * Z**2))
    exact = (-2 * X * u, -4 * Y * u, -Z * u)
    for got, ref in zip(g.gradient(u), exact):
        assert np.abs(got - ref).max() < 1e-9


def test_fd_gradient_second_order():
    errs = []
    for n in (32, 64):
        g = make_grid(6.0, cells=n, stencil="fd2")
        X, Y, Z = g.mesh()
        u = np.exp(-(X**2 + Y**2 + Z**2))
        errs.append(np.abs(g.gradient(u)[0] + 2 * X * u).max())
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.2)
