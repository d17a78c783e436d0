"""Checks on computed solutions: local Pohozaev identities, weighted sup
norms and exponential decay away from the peaks."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import DomainClipped
from .reduced_energy import _sphere_rule

__all__ = ["PohozaevReport", "WeightedNormReport", "DecayReport", "pohozaev_residual",
           "weighted_norm", "decay_check", "default_delta", "write_bands_csv", "DEFAULT_TAU"]

DEFAULT_TAU = 0.2


# ---------------------------------------------------------------- interpolation
class _Sampler:
    """Trilinear interpolation of stored fields at arbitrary full-box points.

    Symmetric axes are handled by folding the query onto ``y_a > 0``; a
    field that is odd in ``y_a`` (a derivative along a mirror axis) picks up
    the sign of the query coordinate.  One reflected ghost layer makes the
    interpolant valid between the mirror plane and the first node.
    """

    def __init__(self, grid):
        self.grid = grid
        self.axes = []
        for a, sym in enumerate(grid.symmetric):
            ax = grid.axis(a)
            if sym:
                ax = np.concatenate(([-ax[0]], ax))
            else:
                L = grid.half_widths[a]
                ax = np.concatenate(([-L], ax, [L]))  # Dirichlet walls
            self.axes.append(ax)

    def _pad(self, f, odd_axis):
        for a, sym in enumerate(self.grid.symmetric):
            first = np.take(f, [0], axis=a)
            if sym:
                sign = -1.0 if a == odd_axis else 1.0
                f = np.concatenate((sign * first, f), axis=a)
            else:
                zero = np.zeros_like(first)
                f = np.concatenate((zero, f, zero), axis=a)
        return f

    def __call__(self, f, pts, odd_axis=None):
        q = np.array(pts, dtype=float, copy=True)
        sign = np.ones(len(q))
        for a, sym in enumerate(self.grid.symmetric):
            if sym:
                if a == odd_axis:
                    sign *= np.where(q[:, a] < 0, -1.0, 1.0)
                q[:, a] = np.abs(q[:, a])
        interp = RegularGridInterpolator(self.axes, self._pad(f, odd_axis), method="linear")
        return sign * interp(q)


# ---------------------------------------------------------------- Pohozaev
@dataclass
class PohozaevReport:
    center: tuple
    delta: float
    direction: int
    lhs: float
    rhs: float
    residual: float
    h: float
    boundary_terms: dict = None
    refinement_factor: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def default_delta(center, others) -> float:
    """Half the distance from ``center`` to the nearest other peak."""
    others = np.asarray(others, dtype=float).reshape(-1, 3)
    if not len(others):
        raise ValueError("no other peaks: give delta explicitly")
    return 0.5 * float(np.min(np.linalg.norm(others - np.asarray(center, float), axis=1)))


def _ball_rule(delta, n_r, n_theta, n_phi):
    x, w = np.polynomial.legendre.leggauss(n_r)
    r = 0.5 * delta * (x + 1)
    wr = 0.5 * delta * w * r**2
    dirs, wd = _sphere_rule(n_theta, n_phi)
    pts = (r[:, None, None] * dirs[None]).reshape(-1, 3)
    return pts, np.outer(wr, wd).ravel()


def pohozaev_residual(solution, test, potentials, center, delta: float, i: int,
                      eigenvalue: float = 0.0, n_theta: int | None = None,
                      n_phi: int | None = None, n_r: int | None = None,
                      coarse: "PohozaevReport | None" = None) -> PohozaevReport:
    """Local Pohozaev identity on ``B_δ(center)`` for a test pair ``L ξ = λ ξ``.

    Differentiating the system in ``y_i`` and testing against ``ξ`` gives,
    with ``ν`` the outer normal,

        −∮ (∂_ν u ∂_i ξ₁ + ∂_ν ξ₁ ∂_i u + ∂_ν v ∂_i ξ₂ + ∂_ν ξ₂ ∂_i v)
        + ∮ (∇u·∇ξ₁ + ∇v·∇ξ₂) ν_i + ∮ (P u ξ₁ + Q v ξ₂) ν_i
        − ∮ (μ₁u³ξ₁ + μ₂v³ξ₂ + βuv²ξ₁ + βu²vξ₂) ν_i
        = ∫ (∂_i P u ξ₁ + ∂_i Q v ξ₂) + λ ∫ (ξ₁ ∂_i u + ξ₂ ∂_i v).

    Everything is in rescaled coordinates (``center`` and ``δ`` in ``y``
    units, ``P = P(ε|y|)``).  Surface and volume integrals use Gauss product
    rules on the sphere and ball, fed by trilinear interpolation of the grid
    fields and their spectral gradients.  The interpolant is only continuous
    across cell faces, so by default the rules take about two nodes per cell
    crossed (``n_θ = max(64, 4πδ/h)``, ``n_φ = 2n_θ``, ``n_r = max(32, 4δ/h)``).
    """
    if i not in (0, 1, 2):
        raise ValueError("direction i must be 0, 1 or 2")
    g = solution.grid
    center = np.asarray(center, dtype=float)
    h = g.h
    n_theta = n_theta or max(64, int(math.ceil(4 * math.pi * delta / h)))
    n_phi = n_phi or 2 * n_theta
    n_r = n_r or max(32, int(math.ceil(4 * delta / h)))
    for a in range(3):
        lo = -g.half_widths[a] + h
        if center[a] - delta < lo or center[a] + delta > g.half_widths[a] - h:
            raise DomainClipped(f"B_δ({center.tolist()}) leaves the box along axis {a}")
    a = solution.amplitudes
    eps = solution.epsilon
    p_model, q_model = potentials
    sample = _Sampler(g)

    u, v = solution.u, solution.v
    x1, x2 = test.u, test.v
    gu, gv, gx1, gx2 = (g.gradient(f) for f in (u, v, x1, x2))

    dirs, wd = _sphere_rule(n_theta, n_phi)
    pts = center + delta * dirs
    ws = wd * delta**2
    nu = dirs

    U, V, X1, X2 = (sample(f, pts) for f in (u, v, x1, x2))
    GU, GV, GX1, GX2 = (np.stack([sample(d[b], pts, odd_axis=b) for b in range(3)], axis=1)
                        for d in (gu, gv, gx1, gx2))
    rr = eps * np.linalg.norm(pts, axis=1)
    P, Q = p_model(rr), q_model(rr)

    def dn(G):
        return np.einsum("pa,pa->p", G, nu)

    ni = nu[:, i]
    t1 = -np.dot(ws, dn(GU) * GX1[:, i] + dn(GX1) * GU[:, i])
    t2 = -np.dot(ws, dn(GV) * GX2[:, i] + dn(GX2) * GV[:, i])
    t3 = np.dot(ws, np.einsum("pa,pa->p", GU, GX1) * ni)
    t4 = np.dot(ws, np.einsum("pa,pa->p", GV, GX2) * ni)
    t5 = np.dot(ws, (P * U * X1 + Q * V * X2) * ni)
    t6 = -np.dot(ws, (a.mu1 * U**3 * X1 + a.mu2 * V**3 * X2) * ni)
    t7 = -np.dot(ws, (a.beta * U * V**2 * X1 + a.beta * U**2 * V * X2) * ni)
    terms = {"normal_derivative_u": t1, "normal_derivative_v": t2, "gradient_u": t3,
             "gradient_v": t4, "potential": t5, "self_interaction": t6, "coupling": t7}
    lhs = math.fsum(terms.values())

    rhs = 0.0
    if not (p_model.is_constant and q_model.is_constant) or eigenvalue:
        nb = max(24, n_theta // 4)
        bpts, bw = _ball_rule(delta, n_r, nb, 2 * nb)
        bpts = bpts + center
        bU, bV, bX1, bX2 = (sample(f, bpts) for f in (u, v, x1, x2))
        if not (p_model.is_constant and q_model.is_constant):
            y = eps * bpts
            dP = eps * p_model.gradient(*y.T)[i]
            dQ = eps * q_model.gradient(*y.T)[i]
            rhs += float(np.dot(bw, dP * bU * bX1 + dQ * bV * bX2))
        if eigenvalue:
            dU = sample(gu[i], bpts, odd_axis=i)
            dV = sample(gv[i], bpts, odd_axis=i)
            rhs += eigenvalue * float(np.dot(bw, bX1 * dU + bX2 * dV))
    residual = lhs - rhs
    factor = None
    if coarse is not None and residual != 0:
        factor = abs(coarse.residual) / abs(residual)
    return PohozaevReport(center=tuple(float(c) for c in center), delta=float(delta), direction=i,
                          lhs=float(lhs), rhs=float(rhs), residual=float(residual), h=float(h),
                          boundary_terms={k: float(t) for k, t in terms.items()},
                          refinement_factor=factor)


# ---------------------------------------------------------------- weighted norm
@dataclass
class WeightedNormReport:
    tau: float
    theta: float
    norm: float
    location: tuple

    def to_dict(self) -> dict:
        return asdict(self)


def weight_field(points, centers, ring_centers, tau: float, theta: float, epsilon: float):
    """``Σ_j e^{−τθ|x − η^j|/ε} + Σ_j e^{−τ|x − x^j|/ε}`` at physical points."""
    x = np.asarray(points, dtype=float)
    w = np.zeros(x.shape[:-1])
    for c in np.asarray(centers, float).reshape(-1, 3):
        w += np.exp(-tau * theta * np.linalg.norm(x - c, axis=-1) / epsilon)
    for c in np.asarray(ring_centers, float).reshape(-1, 3):
        w += np.exp(-tau * np.linalg.norm(x - c, axis=-1) / epsilon)
    return w


def weighted_norm(field, points, centers, ring_centers, tau: float = DEFAULT_TAU,
                  theta: float = 1.0, epsilon: float = 1.0) -> WeightedNormReport:
    """Discrete ``‖·‖_*``: the maximum of ``|field|/weight`` over the given nodes."""
    if not 0 < tau < 1:
        raise ValueError("tau must lie in (0, 1)")
    if not 0 < theta <= 1:
        raise ValueError("theta must lie in (0, 1]")
    if not len(np.asarray(centers).reshape(-1, 3)) + len(np.asarray(ring_centers).reshape(-1, 3)):
        raise ValueError("at least one centre is required")
    x = np.asarray(points, dtype=float)
    f = np.abs(np.asarray(field, dtype=float))
    ratio = f / weight_field(x, centers, ring_centers, tau, theta, epsilon)
    idx = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
    return WeightedNormReport(tau=float(tau), theta=float(theta), norm=float(ratio[idx]),
                              location=tuple(float(c) for c in x[idx]))


# ---------------------------------------------------------------- decay
@dataclass
class DecayReport:
    theta: float | None
    bands: list
    max_u: list
    max_v: list
    monotone: bool
    skipped: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def decay_check(solution, centers, epsilon: float | None = None, band_width: float = 1.0,
                fit_range=(3.0, 9.0)) -> DecayReport:
    """Band maxima of ``u, v`` by distance to the nearest peak and a log-linear
    fit ``max ~ C e^{−θ d}/d`` over ``fit_range`` (distances in peak widths).

    ``centers`` are physical; distances are measured in ``y = x/ε``.
    """
    eps = solution.epsilon if epsilon is None else epsilon
    g = solution.grid
    X, Y, Z = g.mesh()
    y = np.stack((X, Y, Z), axis=-1)
    c = np.asarray(centers, float).reshape(-1, 3) / eps
    # nearest distance over centres and their mirror images in reduced axes
    images = [c]
    for a, sym in enumerate(g.symmetric):
        if sym:
            images = images + [im * np.where(np.arange(3) == a, -1, 1) for im in images]
    c = np.unique(np.vstack(images), axis=0)
    d = np.min(np.stack([np.linalg.norm(y - cc, axis=-1) for cc in c]), axis=0)
    u, v = np.abs(solution.u), np.abs(solution.v)
    reach = min(g.half_widths) - float(np.max(np.abs(c))) if len(c) else min(g.half_widths)
    edges = np.arange(0.0, max(reach, band_width) + 1e-12, band_width)
    bands, mu, mv = [], [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (d >= lo) & (d < hi)
        if np.any(sel):
            bands.append((float(lo), float(hi)))
            mu.append(float(np.max(u[sel])))
            mv.append(float(np.max(v[sel])))
    peak = max(mu + mv) if mu else 0.0
    if peak == 0.0:
        return DecayReport(theta=None, bands=bands, max_u=mu, max_v=mv, monotone=True, skipped=True)
    tot = np.maximum(mu, mv)
    monotone = bool(np.all(np.diff(tot) <= 1e-12 * peak))
    mid = np.array([0.5 * (lo + hi) for lo, hi in bands])
    sel = (mid >= fit_range[0]) & (mid <= fit_range[1]) & (tot > 1e-14 * peak)
    theta = None
    if np.count_nonzero(sel) >= 2:
        slope = np.polyfit(mid[sel], np.log(tot[sel] * mid[sel]), 1)[0]
        theta = float(-slope)
    return DecayReport(theta=theta, bands=bands, max_u=mu, max_v=mv, monotone=monotone,
                       skipped=theta is None)


def write_bands_csv(report: DecayReport, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["band_lo", "band_hi", "max_u", "max_v"])
        for (lo, hi), a, b in zip(report.bands, report.max_u, report.max_v):
            out.writerow([repr(lo), repr(hi), repr(a), repr(b)])
    return path


def report_to_json(report, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    return path
