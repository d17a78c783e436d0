"""Radial ground state of ``-Δw + w = μ w³`` in three dimensions.

The profile is obtained by shooting on ``w(0)``: too large a centre value makes
the trajectory cross zero, too small a value makes it turn back up.  Bisection
on that dichotomy pins ``w(0)`` to round-off; the forward trajectory is then
kept up to a matching radius and the exponentially small tail is re-integrated
backwards from ``R_max`` (where the decaying branch is the stable one).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import simpson, solve_ivp
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from .errors import (BracketFailure, FitDegenerate, InadmissibleBeta,
                     QuadratureDivergence, TailUnderflow, ToleranceNotReached)

__all__ = [
    "GroundState", "CoupledAmplitudes", "solve_ground_state", "radial_integrals",
    "coupled_amplitudes", "decay_constant", "pair_interaction", "coupled_residual",
    "write_profile_csv", "read_profile_csv",
]

R_MAX_DEFAULT = 30.0
TABLE_STEP = 1e-3
_RTOL = 1e-13
_ATOL = 1e-300


@dataclass(frozen=True, eq=False)
class GroundState:
    """Tabulated radial profile ``W_μ`` with its derivative.

    Calling the object evaluates the profile at arbitrary radii: cubic Hermite
    interpolation inside the table, the fitted ``A e^{-r}/r`` tail beyond it.
    """

    mu: float
    radii: np.ndarray
    values: np.ndarray
    derivs: np.ndarray
    center_value: float
    residual_norm: float
    tail_prefactor: float = field(default=0.0)

    def __post_init__(self):
        for name in ("radii", "values", "derivs"):
            getattr(self, name).setflags(write=False)
        spline = CubicHermiteSpline(self.radii, self.values, self.derivs)
        object.__setattr__(self, "_spline", spline)
        object.__setattr__(self, "_dspline", spline.derivative())

    @property
    def r_max(self) -> float:
        return float(self.radii[-1])

    def __call__(self, r):
        return self.evaluate(r)

    def evaluate(self, r):
        r = np.abs(np.asarray(r, dtype=float))
        inside = r <= self.r_max
        out = np.empty_like(r)
        out[inside] = self._spline(r[inside])
        far = r[~inside]
        out[~inside] = self.tail_prefactor * np.exp(-far) / far
        return out

    def derivative(self, r):
        """``w'(r)``; odd extension is not applied, ``r`` is taken as ``|r|``."""
        r = np.abs(np.asarray(r, dtype=float))
        inside = r <= self.r_max
        out = np.empty_like(r)
        out[inside] = self._dspline(r[inside])
        far = r[~inside]
        out[~inside] = -self.tail_prefactor * np.exp(-far) * (1.0 / far + 1.0 / far**2)
        return out


@dataclass(frozen=True)
class CoupledAmplitudes:
    mu1: float
    mu2: float
    beta: float
    gamma1: float
    gamma2: float

    @property
    def weight(self) -> float:
        """``γ₁² + γ₂² = (μ₁+μ₂-2β)/(μ₁μ₂-β²)``."""
        return self.gamma1**2 + self.gamma2**2


def _rhs(mu):
    def f(r, y):
        w, dw = y
        return (dw, w - mu * w**3 - 2.0 * dw / r)
    return f


def _series_start(w0, mu, r0):
    c = (w0 - mu * w0**3) / 6.0
    return np.array([w0 + c * r0**2, 2.0 * c * r0])


def _classify(w0, mu, r_end=40.0, r0=1e-4):
    """+1 if the trajectory crosses zero (w0 too large), -1 if it turns up."""

    def crosses(r, y):
        return y[0]
    crosses.terminal = True
    crosses.direction = -1

    def turns(r, y):
        return y[1]
    turns.terminal = True
    turns.direction = 1

    sol = solve_ivp(_rhs(mu), (r0, r_end), _series_start(w0, mu, r0),
                    method="DOP853", rtol=1e-12, atol=1e-14, events=(crosses, turns))
    if sol.t_events[0].size:
        return 1
    if sol.t_events[1].size:
        return -1
    return 0


def _bisect_center(mu, tol):
    # expand geometrically from an undershooting start until the trajectory overshoots
    lo = 1.2 / math.sqrt(mu)
    if _classify(lo, mu) != -1:
        raise BracketFailure(f"initial value {lo:g} does not undershoot for mu={mu}")
    hi = None
    for _ in range(12):
        trial = 1.5 * lo
        if _classify(trial, mu) == 1:
            hi = trial
            break
        lo = trial
    if hi is None:
        raise BracketFailure(f"no undershoot/overshoot sign change for mu={mu}")
    # bisect to round-off; the tail needs far more than `tol` digits
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        s = _classify(mid, mu)
        if s == 1:
            hi = mid
        elif s == -1:
            lo = mid
        else:
            lo = hi = mid
            break
    if hi - lo > tol:
        raise ToleranceNotReached(f"bisection stalled at width {hi - lo:g} > {tol:g}")
    return 0.5 * (lo + hi)


def _second_derivative(dw, h):
    """Fourth-order central differences, odd reflection at r=0."""
    n = dw.size
    ext = np.concatenate((-dw[2:0:-1], dw))
    out = np.empty(n)
    c = ext
    i = np.arange(2, n - 2 + 2)
    out[: n - 2] = (-c[i + 2] + 8 * c[i + 1] - 8 * c[i - 1] + c[i - 2])[: n - 2] / (12 * h)
    # one-sided fourth-order stencil at the outer end
    for j in (n - 2, n - 1):
        s = dw[j - 4: j + 1]
        out[j] = (25 * s[4] - 48 * s[3] + 36 * s[2] - 16 * s[1] + 3 * s[0]) / (12 * h)
    return out


def ode_residual(radii, values, derivs, mu):
    """Pointwise ``w'' + (2/r)w' - w + μw³`` on a uniform table."""
    h = radii[1] - radii[0]
    d2 = _second_derivative(derivs, h)
    with np.errstate(divide="ignore", invalid="ignore"):
        friction = np.where(radii > 0, 2.0 * derivs / np.where(radii > 0, radii, 1.0), 2.0 * d2)
    return d2 + friction - values + mu * values**3


def solve_ground_state(mu: float = 1.0, tol: float = 1e-10, r_max: float = R_MAX_DEFAULT,
                       step: float = TABLE_STEP) -> GroundState:
    """Shoot for the positive radial solution of ``-Δw + w = μw³``.

    Parameters
    ----------
    mu : float
        Nonlinearity coefficient, ``mu > 0``.
    tol : float
        Required bisection bracket width on ``w(0)`` (at most ``1e-3``).
    r_max : float
        Outer radius of the table; the tail there is ~``e^{-r_max}``.
    step : float
        Uniform tabulation step.
    """
    if not mu > 0:
        raise ValueError("mu must be positive")
    if not 0 < tol <= 1e-3:
        raise ValueError("tol must lie in (0, 1e-3]")
    w0 = _bisect_center(mu, tol)
    f = _rhs(mu)
    radii = np.linspace(0.0, r_max, int(round(r_max / step)) + 1)

    # forward leg up to where w has dropped by 1e-3
    r0 = min(1e-4, step / 10)

    def small(r, y):
        return y[0] - 1e-3 * w0
    small.terminal = True
    small.direction = -1
    fwd = solve_ivp(f, (r0, r_max), _series_start(w0, mu, r0), method="DOP853",
                    rtol=_RTOL, atol=1e-16, dense_output=True, events=small)
    if not fwd.t_events[0].size:
        raise ToleranceNotReached("forward trajectory never entered the tail")
    r_match = float(fwd.t_events[0][0])
    w_match = float(fwd.y_events[0][0][0])

    # backward leg: decaying branch from r_max, amplitude matched at r_match
    def backward(amp):
        R = r_max
        y0 = [amp * math.exp(-R) / R, -amp * math.exp(-R) * (1 / R + 1 / R**2)]
        return solve_ivp(f, (R, r_match), y0, method="DOP853", rtol=_RTOL, atol=_ATOL,
                         dense_output=True)

    def mismatch(amp):
        return backward(amp).y[0, -1] - w_match

    amp_guess = w_match * r_match * math.exp(r_match)
    amp = brentq(mismatch, 0.5 * amp_guess, 2.0 * amp_guess, xtol=1e-15 * amp_guess, rtol=1e-15)
    bwd = backward(amp)

    values = np.empty_like(radii)
    derivs = np.empty_like(radii)
    inner = radii <= r_match
    head = inner & (radii < r0)
    body = inner & ~head
    values[head] = w0 + (w0 - mu * w0**3) * radii[head] ** 2 / 6.0
    derivs[head] = (w0 - mu * w0**3) * radii[head] / 3.0
    values[body], derivs[body] = fwd.sol(radii[body])
    values[~inner], derivs[~inner] = bwd.sol(radii[~inner])

    if np.any(values <= 0) or np.any(np.diff(values) >= 0):
        raise ToleranceNotReached("profile is not positive and strictly decreasing")
    residual = float(np.max(np.abs(ode_residual(radii, values, derivs, mu))))
    return GroundState(mu=float(mu), radii=radii, values=values, derivs=derivs,
                       center_value=float(values[0]), residual_norm=residual,
                       tail_prefactor=float(amp))


def radial_integrals(gs: GroundState, rel_tol: float = 1e-6) -> dict:
    """``I2 = ∫W²``, ``I4 = ∫W⁴`` and ``IG = ∫|∇W|²`` over ℝ³."""
    r = gs.radii
    tail = gs.values[-1] / gs.center_value
    if tail**2 > rel_tol:
        raise QuadratureDivergence(f"table tail {tail:.2e} too large for rel_tol={rel_tol:g}")
    shell = 4.0 * math.pi * r**2
    return {
        "I2": float(simpson(shell * gs.values**2, x=r)),
        "I4": float(simpson(shell * gs.values**4, x=r)),
        "IG": float(simpson(shell * gs.derivs**2, x=r)),
    }


def coupled_amplitudes(mu1: float, mu2: float, beta: float) -> CoupledAmplitudes:
    """Amplitudes ``γ₁, γ₂`` with ``(γ₁W, γ₂W)`` solving the coupled system."""
    if not (mu1 > 0 and mu2 > 0):
        raise ValueError("mu1 and mu2 must be positive")
    lo, hi = min(mu1, mu2), max(mu1, mu2)
    admissible = (-math.sqrt(mu1 * mu2) < beta < lo) or beta > hi
    if not admissible:
        raise InadmissibleBeta(
            f"beta={beta} outside (-sqrt(mu1 mu2), min(mu)) U (max(mu), inf)")
    det = mu1 * mu2 - beta**2
    g1, g2 = (mu2 - beta) / det, (mu1 - beta) / det
    if g1 <= 0 or g2 <= 0:
        raise InadmissibleBeta(f"beta={beta} gives non-positive amplitudes")
    return CoupledAmplitudes(mu1=float(mu1), mu2=float(mu2), beta=float(beta),
                             gamma1=math.sqrt(g1), gamma2=math.sqrt(g2))


def coupled_residual(gs: GroundState, amplitudes: CoupledAmplitudes) -> float:
    """Max pointwise residual of the coupled radial system for ``(γ₁W, γ₂W)``.

    ``gs`` must be the ``μ = 1`` profile.
    """
    a = amplitudes
    r, w, dw = gs.radii, gs.values, gs.derivs
    h = r[1] - r[0]
    d2 = _second_derivative(dw, h)
    lap = d2 + np.where(r > 0, 2.0 * dw / np.where(r > 0, r, 1.0), 2.0 * d2)
    U, V = a.gamma1 * w, a.gamma2 * w
    res1 = a.gamma1 * lap - U + a.mu1 * U**3 + a.beta * U * V**2
    res2 = a.gamma2 * lap - V + a.mu2 * V**3 + a.beta * U**2 * V
    return float(max(np.max(np.abs(res1)), np.max(np.abs(res2))))


def decay_constant(gs: GroundState, window=None) -> dict:
    """Fit ``log(r w) = log(prefactor) - rate·r`` over the tail window."""
    lo, hi = window if window is not None else (gs.r_max / 2, gs.r_max)
    r, w = gs.radii, gs.values
    sel = (r >= lo) & (r <= hi) & (w > 1e-300) & (r > 0)
    if np.count_nonzero(sel) < 10:
        raise FitDegenerate("fewer than 10 resolvable tail samples")
    slope, intercept = np.polyfit(r[sel], np.log(w[sel] * r[sel]), 1)
    return {"rate": float(-slope), "prefactor": float(math.exp(intercept))}


def fit_decay(r, w) -> dict:
    """Same fit for arbitrary ``(r, w)`` samples."""
    r, w = np.asarray(r, float), np.asarray(w, float)
    sel = (w > 1e-300) & (r > 0)
    if np.count_nonzero(sel) < 10:
        raise FitDegenerate("fewer than 10 resolvable tail samples")
    slope, intercept = np.polyfit(r[sel], np.log(w[sel] * r[sel]), 1)
    return {"rate": float(-slope), "prefactor": float(math.exp(intercept))}


_PAIRS = {(3, 1), (2, 2), (1, 3), (2, 1), (1, 2)}


def _gauss_panels(a, b, width, order=8):
    n = max(1, int(math.ceil((b - a) / width)))
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, n + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def pair_interaction(gs: GroundState, p: int, q: int, d: float, margin: float = 12.0,
                     panel: float = 0.25) -> float:
    """``∫ W^p(x) W^q(x - d e₁) dx`` for two profiles a distance ``d`` apart.

    The integrand only depends on ``(z, ρ)``, ``ρ`` being the distance to the
    axis through both centres, so the 3D integral is ``2π∫∫ ρ f dρ dz``;
    both directions use composite Gauss-Legendre panels.
    """
    if (p, q) not in _PAIRS:
        raise ValueError(f"unsupported exponent pair {(p, q)}")
    if d < 0:
        raise ValueError("d must be non-negative")
    if d + 10.0 > gs.r_max:
        raise TailUnderflow(f"d={d} needs profile beyond r_max={gs.r_max}")
    z, wz = _gauss_panels(-margin, d + margin, panel)
    rho, wr = _gauss_panels(0.0, margin, panel)
    zz, pp = np.meshgrid(z, rho, indexing="ij")
    a = gs(np.hypot(zz, pp))
    b = gs(np.hypot(zz - d, pp))
    integrand = (a**p) * (b**q) * pp * np.outer(wz, wr)
    return 2.0 * math.pi * math.fsum(integrand.ravel())


def write_profile_csv(gs: GroundState, path) -> Path:
    path = Path(path)
    with path.open("w") as fh:
        fh.write(f"# mu={gs.mu!r} residual={gs.residual_norm!r}\n")
        np.savetxt(fh, np.column_stack((gs.radii, gs.values)), delimiter=",", fmt="%.17g")
    return path


def read_profile_csv(path):
    """Return ``(mu, residual, radii, values)`` from a profile CSV."""
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().lstrip("#").split()
        meta = dict(item.split("=", 1) for item in header)
        data = np.loadtxt(fh, delimiter=",")
    return float(meta["mu"]), float(meta["residual"]), data[:, 0], data[:, 1]
