"""Reduced energies of ring configurations and their interior maximizers.

Synchronized ring of ``k`` peaks at radius ``r``::

    F(r) = ε³ (k A₀ + k a_eff B / r^m) − ε⁴ C_β (k²/r) e^{−D(r)/ε}

with ``D(r)`` the neighbour distance ``2r sin(π/k)`` (or one of the two
small-angle forms ``πr/k`` and ``2πr/k``).  The constants are the ``ε = 1``
values; ``ε³`` is the volume factor of a peak and the extra ``ε`` in the
interaction comes from the ``ε/D`` prefactor of the pair integral.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import golden

from .ansatz import default_window, DEFAULT_DELTA, AnsatzField, SYNC
from .errors import BoundaryMaximizer
from .ground_state import CoupledAmplitudes, GroundState, radial_integrals

__all__ = ["interaction_constant", "sync_constants", "seg_constants", "reduced_energy_sync",
           "reduced_energy_seg", "maximize_reduced", "maximize_reduced_2d", "scan_sync",
           "ReducedEnergyCurve", "expansion_vs_quadrature", "EXPONENT_MODES",
           "curves_to_csv", "curves_to_svg", "maximizers_to_json"]

EXPONENT_MODES = ("exact", "pi_r_over_k", "two_pi_r_over_k")
SCAN_POINTS = 400
BETA_SMALL = 0.05


def interaction_constant(gs: GroundState) -> float:
    """``K = lim_D D e^D ∫W³(y) W(y − D e₁) dy = A ∫W³(y) e^{y₁} dy``.

    ``A`` is the tail prefactor of ``W ~ A e^{-r}/r``; the angular average of
    ``e^{y₁}`` is ``sinh(r)/r``.
    """
    r, w = gs.radii, gs.values
    shell = np.where(r > 0, np.sinh(r) / np.where(r > 0, r, 1.0), 1.0)
    return float(gs.tail_prefactor * simpson(4 * math.pi * r**2 * w**3 * shell, x=r))


def sync_constants(amplitudes: CoupledAmplitudes, gs: GroundState, potentials=None) -> dict:
    """``A₀``, ``B`` and ``C_β`` at ``ε = 1`` (plus the tail weight ``a_eff`` when
    potentials are given)."""
    ints = radial_integrals(gs)
    a = amplitudes
    weight = (a.mu1 + a.mu2 - 2 * a.beta) / (a.mu1 * a.mu2 - a.beta**2)
    K = interaction_constant(gs)
    out = {"A0": weight * ints["I4"] / 4.0, "B": ints["I2"] / 2.0,
           "C_beta": weight * K / (2 * math.pi), "K": K, "weight": weight}
    if out["C_beta"] <= 0:
        raise ValueError(f"C_beta = {out['C_beta']:.4g} is not positive")
    if potentials is not None:
        p, q = potentials
        out["a_eff"] = p.a * a.gamma1**2 + q.a * a.gamma2**2
        out["m"] = min(p.m, q.m)
    return out


def seg_constants(amplitudes: CoupledAmplitudes, gs: GroundState, k: int) -> dict:
    """Constants of the two-ring expansion at ``ε = 1``.

    Ring one carries ``W/√μ₁`` in the first component only, ring two ``W/√μ₂``
    in the second.  ``D2``/``E2`` multiply ``(k/r) e^{-r/ε}`` and come from the
    interaction of each ring with a synchronized inner peak at the origin.
    """
    ints = radial_integrals(gs)
    a = amplitudes
    K = interaction_constant(gs)
    return {
        "A": k * ints["I4"] / 4.0 * (1.0 / a.mu1 + 1.0 / a.mu2),
        "B1": ints["I2"] / (2.0 * a.mu1),
        "B2": ints["I2"] / (2.0 * a.mu2),
        "D1": K / (2 * math.pi * a.mu1),
        "E1": K / (2 * math.pi * a.mu2),
        "D2": a.gamma1 * K / math.sqrt(a.mu1),
        "E2": a.gamma2 * K / math.sqrt(a.mu2),
        "cross_beta": a.beta,
        "K": K,
    }


def _exponent(r, k, epsilon, mode):
    if mode == "exact":
        return 2.0 * r * math.sin(math.pi / k) / epsilon
    if mode == "pi_r_over_k":
        return math.pi * r / (epsilon * k)
    if mode == "two_pi_r_over_k":
        return 2.0 * math.pi * r / (epsilon * k)
    raise ValueError(f"exponent mode must be one of {EXPONENT_MODES}")


def reduced_energy_sync(k, r, epsilon, constants, m, a_eff, mode="exact",
                        pairs="nearest"):
    """``F(r)``; ``r`` may be an array.

    ``pairs="all"`` replaces the nearest-neighbour term by the sum over all
    pairs ``−weight ε³ Σ_{i<j} K e^{−D_ij}/D_ij`` (validation mode).
    """
    r = np.asarray(r, dtype=float)
    e3 = epsilon**3
    base = e3 * (k * constants["A0"] + k * a_eff * constants["B"] / r**m)
    if pairs == "nearest":
        inter = epsilon**4 * constants["C_beta"] * k**2 / r * np.exp(-_exponent(r, k, epsilon, mode))
    elif pairs == "all":
        inter = np.zeros_like(r)
        for s in range(1, k // 2 + 1):
            D = 2.0 * r * math.sin(math.pi * s / k) / epsilon
            count = k if 2 * s != k else k // 2
            inter = inter + count * constants["weight"] * constants["K"] * np.exp(-D) / D
        inter = e3 * inter
    else:
        raise ValueError("pairs must be 'nearest' or 'all'")
    return base - inter


def _ring_cross(k, r, rho, epsilon):
    """``Σ_{i,j} e^{−|x^i − y^j|/ε}`` for rings offset by ``π/k``."""
    j = np.arange(k)
    angle = (2 * j + 1) * math.pi / k  # angles of y^j relative to x^1
    r = np.asarray(r, float)[..., None]
    rho = np.asarray(rho, float)[..., None]
    d = np.sqrt(r * r + rho * rho - 2.0 * r * rho * np.cos(angle))
    # every x^i sees the same set of distances
    return k * np.sum(np.exp(-d / epsilon), axis=-1)


def reduced_energy_seg(k, r, rho, epsilon, constants, a1, a2, m, mode="exact",
                       inner=True):
    """``F̄(r, ρ)`` of the two-ring expansion (arrays broadcast)."""
    c = constants
    r = np.asarray(r, float)
    rho = np.asarray(rho, float)
    e3, e4 = epsilon**3, epsilon**4
    val = e3 * (c["A"] + a1 * k * c["B1"] / r**m + a2 * k * c["B2"] / rho**m)
    val = val - e4 * (c["D1"] * k**2 / r * np.exp(-_exponent(r, k, epsilon, mode))
                      + c["E1"] * k**2 / rho * np.exp(-_exponent(rho, k, epsilon, mode)))
    if inner:
        val = val - e4 * (c["D2"] * k / r * np.exp(-r / epsilon)
                          + c["E2"] * k / rho * np.exp(-rho / epsilon))
    if c["cross_beta"]:
        val = val - e4 * c["cross_beta"] * (k / r) * _ring_cross(k, r, rho, epsilon)
    return val


@dataclass
class ReducedEnergyCurve:
    k: int
    window: tuple
    samples: np.ndarray  # columns (r, F) or (r, rho, F)
    r_star: object
    value: float
    interior: bool
    constants: dict = field(default_factory=dict)
    epsilon: float = 1.0

    @property
    def ratio_to_klnk(self):
        scale = self.epsilon * self.k * math.log(self.k)
        return np.asarray(self.r_star) / scale if np.ndim(self.r_star) else self.r_star / scale

    def summary(self) -> dict:
        ratio = self.ratio_to_klnk
        return {"k": int(self.k), "r_star": _jsonable(self.r_star), "interior": bool(self.interior),
                "ratio_to_klnk": _jsonable(ratio), "value": float(self.value)}


def _jsonable(x):
    return [float(v) for v in x] if np.ndim(x) else float(x)


def maximize_reduced(func, window, points: int = SCAN_POINTS, margin: float = 0.01):
    """Dense scan plus golden-section refinement of a 1D function on ``window``.

    Returns ``(r_star, value, interior)``; raises BoundaryMaximizer when the
    scan maximum sits at an endpoint.  Ties go to the smaller ``r``.
    """
    lo, hi = window
    if points < 200:
        raise ValueError("at least 200 scan points are required")
    r = np.linspace(lo, hi, points)
    vals = np.asarray(func(r), dtype=float)
    i = int(np.argmax(vals))
    if i == 0 or i == points - 1:
        raise BoundaryMaximizer(f"maximum at window endpoint r={r[i]:.6g}", float(r[i]),
                                float(vals[i]))
    neg = lambda x: -float(func(np.asarray(x)))
    try:
        x = golden(neg, brack=(r[i - 1], r[i], r[i + 1]), tol=1e-10)
    except ValueError:  # flat top: neighbours tie with the scan maximum
        x = r[i]
    value = float(func(np.asarray(x)))
    if value < vals[i]:
        x, value = r[i], float(vals[i])
    width = hi - lo
    interior = (x - lo) >= margin * width and (hi - x) >= margin * width
    return float(x), value, bool(interior)


def maximize_reduced_2d(func, window_r, window_rho, points: int = SCAN_POINTS,
                        margin: float = 0.01, sweeps: int = 20):
    """2D version: tensor scan, then alternating golden-section refinement."""
    if points < 200:
        raise ValueError("at least 200 scan points per dimension are required")
    r = np.linspace(*window_r, points)
    rho = np.linspace(*window_rho, points)
    R, P = np.meshgrid(r, rho, indexing="ij")
    vals = np.asarray(func(R, P), dtype=float)
    i, j = np.unravel_index(int(np.argmax(vals)), vals.shape)
    if i in (0, points - 1) or j in (0, points - 1):
        raise BoundaryMaximizer(f"maximum on the window boundary at ({r[i]:.6g}, {rho[j]:.6g})",
                                (float(r[i]), float(rho[j])), float(vals[i, j]))
    x, y = r[i], rho[j]
    hr, hp = r[1] - r[0], rho[1] - rho[0]
    for _ in range(sweeps):
        x_old, y_old = x, y
        try:
            x = golden(lambda t: -float(func(np.asarray(t), np.asarray(y))),
                       brack=(x - hr, x, x + hr), tol=1e-10)
            y = golden(lambda t: -float(func(np.asarray(x), np.asarray(t))),
                       brack=(y - hp, y, y + hp), tol=1e-10)
        except ValueError:  # flat top, keep the current point
            break
        if abs(x - x_old) < 1e-9 * hr and abs(y - y_old) < 1e-9 * hp:
            break
    value = float(func(np.asarray(x), np.asarray(y)))
    if value < vals[i, j]:
        x, y, value = r[i], rho[j], float(vals[i, j])
    inside = lambda v, w: (v - w[0]) >= margin * (w[1] - w[0]) and (w[1] - v) >= margin * (w[1] - w[0])
    return (float(x), float(y)), value, bool(inside(x, window_r) and inside(y, window_rho))


def scan_sync(k, epsilon, constants, m, a_eff, delta=DEFAULT_DELTA, mode="exact",
              points=SCAN_POINTS) -> ReducedEnergyCurve:
    """Sample ``F`` over ``D_k`` and locate the interior maximizer."""
    window = default_window(k, m, delta, epsilon)
    func = lambda r: reduced_energy_sync(k, r, epsilon, constants, m, a_eff, mode=mode)
    # the constant k A₀ swamps the r-dependence in double precision for large k
    base = epsilon**3 * k * constants["A0"]
    r_star, value, interior = maximize_reduced(lambda r: func(r) - base,
                                               (window.lo, window.hi), points)
    value += base
    r = np.linspace(window.lo, window.hi, points)
    return ReducedEnergyCurve(k=k, window=(window.lo, window.hi),
                              samples=np.column_stack((r, func(r))), r_star=r_star,
                              value=value, interior=interior, constants=dict(constants),
                              epsilon=epsilon)


def _sphere_rule(n_theta: int, n_phi: int):
    """Gauss-Legendre in ``cos θ`` times the trapezoid rule in ``φ``."""
    ct, wt = np.polynomial.legendre.leggauss(n_theta)
    phi = 2 * math.pi * np.arange(n_phi) / n_phi
    st = np.sqrt(1 - ct**2)
    dirs = np.stack((np.outer(st, np.cos(phi)), np.outer(st, np.sin(phi)),
                     np.outer(ct, np.ones(n_phi))), axis=-1).reshape(-1, 3)
    weights = np.repeat(wt, n_phi) * (2 * math.pi / n_phi)
    return dirs, weights


def energy_density(ansatz: AnsatzField, potentials, x):
    """Integrand of the energy functional at points ``x`` (physical variable)."""
    a = ansatz.amplitudes
    eps = ansatz.configuration.epsilon
    p_model, q_model = potentials
    S, T = ansatz.evaluate(x)
    gS, gT = ansatz.gradient(x)
    rr = np.linalg.norm(x, axis=-1)
    return (0.5 * (eps**2 * np.sum(gS**2, axis=-1) + p_model(rr) * S**2
                   + eps**2 * np.sum(gT**2, axis=-1) + q_model(rr) * T**2)
            - 0.25 * (a.mu1 * S**4 + a.mu2 * T**4) - 0.5 * a.beta * S**2 * T**2)


def expansion_vs_quadrature(ansatz: AnsatzField, potentials, constants, cutoff: float = 20.0,
                            panel: float = 0.25, n_theta: int = 32, n_phi: int = 64) -> dict:
    """Full 3D quadrature of the ring-ansatz energy versus the expansion ``F(r)``.

    The energy density is split by the smooth partition of unity
    ``χ_j = W_j² / Σ_i W_i²`` and each piece is integrated in spherical
    coordinates about its own peak (composite Gauss-Legendre in the radius
    out to ``cutoff`` widths, product Gauss rule on the sphere).
    """
    from .ground_state import _gauss_panels

    cfg = ansatz.configuration
    if cfg.mode != SYNC or len(cfg.inner_centers):
        raise ValueError("expansion_vs_quadrature needs a synchronized ring with no inner cluster")
    a = ansatz.amplitudes
    p_model, q_model = potentials
    eps = cfg.epsilon
    centres = cfg.ring_centers
    rad, wrad = _gauss_panels(0.0, cutoff * eps, panel * eps)
    dirs, wdir = _sphere_rule(n_theta, n_phi)
    gs = ansatz.gs
    parts = []
    for c in centres:
        for r_chunk, w_chunk in zip(np.array_split(rad, 8), np.array_split(wrad, 8)):
            x = c + r_chunk[:, None, None] * dirs[None, :, :]
            dens = energy_density(ansatz, potentials, x)
            own = gs(np.linalg.norm(x - c, axis=-1) / eps) ** 2
            total = np.zeros_like(own)
            for c2 in centres:
                total += gs(np.linalg.norm(x - c2, axis=-1) / eps) ** 2
            chi = np.where(total > 0, own / np.where(total > 0, total, 1.0), 0.0)
            weight = (w_chunk * r_chunk**2)[:, None] * wdir[None, :]
            parts.append(math.fsum((chi * dens * weight).ravel()))
    I_full = math.fsum(parts)
    k, r = cfg.ring_count, cfg.ring_radius
    m = min(p_model.m, q_model.m)
    a_eff = p_model.a * a.gamma1**2 + q_model.a * a.gamma2**2
    base = eps**3 * k * constants["A0"]
    if k == 1 and r == 0:
        F = base
        tail = inter = 0.0
    else:
        F = float(reduced_energy_sync(k, r, eps, constants, m, a_eff))
        tail = eps**3 * k * a_eff * constants["B"] / r**m
        inter = base + tail - F
    scale = abs(tail) + abs(inter)
    return {"I_full": I_full, "F_value": F, "discrepancy": I_full - F,
            "tail_term": tail, "interaction_term": -inter,
            "relative": abs(I_full - F) / scale if scale > 0 else float("inf")}


def curves_to_csv(curves, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        out = csv.writer(fh)
        two_d = any(c.samples.shape[1] == 3 for c in curves)
        out.writerow(["k", "r", "rho", "F"] if two_d else ["k", "r", "F"])
        for c in curves:
            for row in c.samples:
                out.writerow([c.k] + [repr(float(v)) for v in row])
    return path


def maximizers_to_json(curves, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps([c.summary() for c in curves], indent=2) + "\n")
    return path


def curves_to_svg(curves, path, width: int = 640, height: int = 400) -> Path:
    """Overlay of normalised curves ``(F − min)/(max − min)`` against ``r/(ε k ln k)``."""
    path = Path(path)
    pad = 50
    colors = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02"]
    xs = [c.samples[:, 0] / (c.epsilon * c.k * math.log(c.k)) for c in curves]
    x_lo = min(float(x.min()) for x in xs)
    x_hi = max(float(x.max()) for x in xs)
    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<rect x="{pad}" y="{pad // 2}" width="{width - 2 * pad}" '
             f'height="{height - 2 * pad}" fill="none" stroke="black"/>']
    for n, (c, x) in enumerate(zip(curves, xs)):
        F = c.samples[:, -1]
        span = float(F.max() - F.min()) or 1.0
        y = (F - F.min()) / span
        px = pad + (x - x_lo) / (x_hi - x_lo) * (width - 2 * pad)
        py = height - pad - y * (height - 2 * pad) + pad // 2 - pad // 2
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
        col = colors[n % len(colors)]
        lines.append(f'<polyline fill="none" stroke="{col}" points="{pts}"/>')
        lines.append(f'<text x="{width - pad + 4}" y="{pad + 14 * n}" font-size="11" '
                     f'fill="{col}">k={c.k}</text>')
    lines.append(f'<text x="{width // 2}" y="{height - 10}" font-size="12" '
                 f'text-anchor="middle">r / (eps k ln k)</text>')
    lines.append("</svg>")
    path.write_text("\n".join(lines) + "\n")
    return path
