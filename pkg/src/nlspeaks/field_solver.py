"""Grid discretisation of the coupled system, its energy and Newton solvers.

Everything runs in the rescaled variable ``y = x/ε``, where the system reads

    −Δu + P(ε|y|) u = μ₁u³ + βuv²,   −Δv + Q(ε|y|) v = μ₂v³ + βu²v

on a Dirichlet box.  Linear solves use MINRES (the Jacobian is symmetric
but indefinite) preconditioned by the exact fast solve of ``−Δ_h + 1``.
"""
from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse.linalg import LinearOperator, minres

from .ansatz import SYNC, AnsatzField, PeakConfiguration
from .errors import (BoxTooSmall, ConstraintRankDeficiency, LineSearchFailure, NewtonStall,
                     NonContraction)
from .grid import Grid3D, make_grid
from .ground_state import CoupledAmplitudes

__all__ = ["DiscreteFieldPair", "CoupledProblem", "ProjectedSolveReport", "energy_full",
           "newton_solve", "projected_solve", "lefthand_source", "ansatz_on_grid",
           "grid_for_configuration", "solve_glued", "write_binary", "read_binary",
           "write_midplane_csv", "BOX_MARGIN"]

BOX_MARGIN = 15.0  # box half-width beyond the outermost peak, in widths


@dataclass(eq=False)
class DiscreteFieldPair:
    """``(u, v)`` on the stored part of a grid, in rescaled coordinates."""

    grid: Grid3D
    u: np.ndarray
    v: np.ndarray
    epsilon: float
    amplitudes: CoupledAmplitudes
    residual_norm: float = float("nan")
    positive: bool = False
    history: list = field(default_factory=list)

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        if self.u.shape != self.grid.shape or self.v.shape != self.grid.shape:
            raise ValueError("field shape does not match the grid")
        if not (np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.v))):
            raise ValueError("fields must be finite")

    @property
    def stacked(self) -> np.ndarray:
        return np.stack((self.u, self.v))


def grid_for_configuration(cfg: PeakConfiguration, h: float, margin: float = BOX_MARGIN,
                           symmetric=(True, True, True), stencil: str = "spectral") -> Grid3D:
    """Box holding every peak plus ``margin`` widths, in ``y = x/ε`` units."""
    centres = cfg.all_centers() / cfg.epsilon
    reach = np.max(np.abs(centres), axis=0) + margin
    cells = [2 * int(math.ceil(L / h)) for L in reach]
    hw = [n * h / 2 for n in cells]
    return make_grid(hw, cells=cells, symmetric=symmetric, stencil=stencil)


class CoupledProblem:
    """Residual, Jacobian and preconditioner of the system on one grid."""

    def __init__(self, grid: Grid3D, potentials, amplitudes: CoupledAmplitudes, epsilon: float):
        self.grid = grid
        self.amplitudes = amplitudes
        self.epsilon = float(epsilon)
        X, Y, Z = grid.mesh()
        rr = self.epsilon * np.sqrt(X**2 + Y**2 + Z**2)
        p_model, q_model = potentials
        self.P = p_model(rr)
        self.Q = q_model(rr)
        self.n = grid.size

    def residual(self, w):
        """``F(u, v)`` for ``w = (u, v)`` stacked on a leading axis."""
        a = self.amplitudes
        u, v = w
        lap = self.grid.laplacian(w)
        return np.stack((-lap[0] + self.P * u - a.mu1 * u**3 - a.beta * u * v**2,
                         -lap[1] + self.Q * v - a.mu2 * v**3 - a.beta * u**2 * v))

    def coefficients(self, w):
        """Entries of the symmetric 2×2 multiplication part of the Jacobian."""
        a = self.amplitudes
        u, v = w
        return (self.P - 3 * a.mu1 * u**2 - a.beta * v**2,
                -2 * a.beta * u * v,
                self.Q - 3 * a.mu2 * v**2 - a.beta * u**2)

    def jacobian(self, w) -> LinearOperator:
        c11, c12, c22 = self.coefficients(w)
        shape = (2,) + self.grid.shape
        grid = self.grid

        def matvec(x):
            x = x.reshape(shape)
            lap = grid.laplacian(x)
            return np.stack((-lap[0] + c11 * x[0] + c12 * x[1],
                             -lap[1] + c12 * x[0] + c22 * x[1])).ravel()
        return LinearOperator((2 * self.n, 2 * self.n), matvec=matvec, rmatvec=matvec, dtype=float)

    def preconditioner(self, shift: float = 1.0) -> LinearOperator:
        shape = (2,) + self.grid.shape
        grid = self.grid

        def matvec(x):
            return grid.solve_shifted(x.reshape(shape), shift).ravel()
        return LinearOperator((2 * self.n, 2 * self.n), matvec=matvec, dtype=float)


def ansatz_on_grid(ansatz: AnsatzField, grid: Grid3D) -> np.ndarray:
    """Stacked ``(S, T)`` at the nodes of ``grid`` (grid in ``y`` units)."""
    eps = ansatz.configuration.epsilon
    X, Y, Z = grid.mesh()
    x = eps * np.stack((X, Y, Z), axis=-1)
    inner = ansatz.inner_solution
    if inner is not None and _same_grid(inner.grid, grid):
        bare = AnsatzField(ansatz.configuration, ansatz.amplitudes, ansatz.gs)
        S, T = bare.evaluate(x)
        return np.stack((S + inner.u, T + inner.v))
    S, T = ansatz.evaluate(x)
    return np.stack((S, T))


def _same_grid(a: Grid3D, b: Grid3D) -> bool:
    return (a.cells == b.cells and a.symmetric == b.symmetric
            and np.allclose(a.half_widths, b.half_widths, rtol=0, atol=1e-12))


def _boundary_max(grid: Grid3D, f) -> float:
    out = 0.0
    for a, sym in enumerate(grid.symmetric):
        ax = f.ndim - 3 + a
        out = max(out, float(np.max(np.abs(np.take(f, -1, axis=ax)))))
        if not sym:
            out = max(out, float(np.max(np.abs(np.take(f, 0, axis=ax)))))
    return out


def energy_full(fields: DiscreteFieldPair, potentials, check_box: bool = True) -> float:
    """Discrete energy functional in the physical variable (``ε³`` times the
    rescaled integral), with the kinetic part ``½⟨u, −Δ_h u⟩``."""
    g = fields.grid
    a = fields.amplitudes
    u, v = fields.u, fields.v
    if check_box:
        peak = max(float(np.max(np.abs(u))), float(np.max(np.abs(v))))
        if peak > 0 and _boundary_max(g, np.stack((u, v))) > 1e-8 * peak:
            raise BoxTooSmall("fields at the box boundary exceed 1e-8 of the peak value")
    prob = CoupledProblem(g, potentials, a, fields.epsilon)
    w = np.stack((u, v))
    kinetic = -g.dot(w, g.laplacian(w))
    dens = (prob.P * u**2 + prob.Q * v**2) / 2.0 \
        - (a.mu1 * u**4 + a.mu2 * v**4) / 4.0 - a.beta * u**2 * v**2 / 2.0
    return fields.epsilon**3 * (0.5 * kinetic + g.integrate(dens))


def _linear_tolerance(res_norm: float) -> float:
    return float(min(1e-3, max(1e-13, 1e-2 * res_norm)))


def newton_solve(initial, potentials, grid: Grid3D | None = None, tol: float = 1e-8,
                 max_iter: int = 50, amplitudes: CoupledAmplitudes | None = None,
                 epsilon: float | None = None) -> DiscreteFieldPair:
    """Damped Newton iteration from an ansatz (or a previous solution).

    Each step solves ``J δ = −F`` by preconditioned MINRES and halves the step
    until the max-norm of the residual decreases.
    """
    if not 1e-10 <= tol <= 1e-4:
        raise ValueError("tol must lie in [1e-10, 1e-4]")
    if isinstance(initial, AnsatzField):
        amplitudes = initial.amplitudes
        epsilon = initial.configuration.epsilon
        w = ansatz_on_grid(initial, grid)
    elif isinstance(initial, DiscreteFieldPair):
        amplitudes = amplitudes or initial.amplitudes
        epsilon = initial.epsilon if epsilon is None else epsilon
        grid = grid or initial.grid
        w = initial.stacked if _same_grid(initial.grid, grid) else _transfer(initial, grid)
    else:
        w = np.asarray(initial, dtype=float)
    if grid is None or amplitudes is None or epsilon is None:
        raise ValueError("grid, amplitudes and epsilon are required")
    prob = CoupledProblem(grid, potentials, amplitudes, epsilon)
    M = prob.preconditioner()
    F = prob.residual(w)
    norm = float(np.max(np.abs(F)))
    if not np.isfinite(norm):
        raise ValueError("initial residual is not finite")
    history = [norm]
    for _ in range(max_iter):
        if norm <= tol:
            break
        J = prob.jacobian(w)
        step, _info = minres(J, -F.ravel(), M=M, rtol=_linear_tolerance(norm), maxiter=2000)
        step = step.reshape(w.shape)
        lam = 1.0
        while True:
            trial = w + lam * step
            F_trial = prob.residual(trial)
            trial_norm = float(np.max(np.abs(F_trial)))
            if trial_norm < norm:
                break
            lam *= 0.5
            if lam < 2.0**-30:
                raise LineSearchFailure(f"no decrease along the Newton direction at |F|={norm:.3e}")
        w, F, norm = trial, F_trial, trial_norm
        history.append(norm)
    else:
        if norm > tol:
            raise NewtonStall(f"|F| = {norm:.3e} > tol after {max_iter} iterations")
    return DiscreteFieldPair(grid=grid, u=w[0], v=w[1], epsilon=float(epsilon),
                             amplitudes=amplitudes, residual_norm=norm,
                             positive=bool(np.all(w[0] > 0) and np.all(w[1] > 0)),
                             history=history)


def _transfer(sol: DiscreteFieldPair, grid: Grid3D) -> np.ndarray:
    """Linear interpolation of a solution onto another grid (zero outside)."""
    from scipy.interpolate import RegularGridInterpolator

    g = sol.grid
    axes = [g.axis(a) for a in range(3)]
    full = [np.concatenate((-a[::-1], a)) if s else a for a, s in zip(axes, g.symmetric)]
    X, Y, Z = grid.mesh()
    pts = np.stack((X, Y, Z), axis=-1).reshape(-1, 3)
    out = []
    for f in (sol.u, sol.v):
        interp = RegularGridInterpolator(full, g.expand(f), bounds_error=False, fill_value=0.0)
        out.append(interp(pts).reshape(grid.shape))
    return np.stack(out)


# ---------------------------------------------------------------- projected solve
@dataclass
class ProjectedSolveReport:
    correction_norm: float
    star_norm: float
    b_k: float
    constraint_residual: float
    trace: list
    bound_shape: float
    solution: DiscreteFieldPair = None
    correction: np.ndarray = None

    def to_dict(self) -> dict:
        return {"correction_norm": self.correction_norm, "star_norm": self.star_norm,
                "b_k": self.b_k, "constraint_residual": self.constraint_residual,
                "trace": [float(t) for t in self.trace], "bound_shape": self.bound_shape}


def constraint_field(ansatz: AnsatzField, grid: Grid3D) -> np.ndarray:
    """``(Σ_j W_j² Y_j, Σ_j W_j² Z_j)`` with ``Y_j = ∂U_{x^j}/∂r`` on the grid.

    For a ring of radius 0 the radial direction is taken along ``e₁``.
    """
    cfg = ansatz.configuration
    a = ansatz.amplitudes
    gs = ansatz.gs
    eps = cfg.epsilon
    X, Y, Z = grid.mesh()
    y = np.stack((X, Y, Z), axis=-1)
    out = np.zeros((2,) + grid.shape)
    for c in cfg.ring_centers / eps:
        rad = np.linalg.norm(c)
        n = c / rad if rad > 0 else np.array([1.0, 0.0, 0.0])
        diff = y - c
        dist = np.linalg.norm(diff, axis=-1)
        safe = np.where(dist > 0, dist, 1.0)
        # ∂/∂r of W(|y − r n|) = −W'(d) (y − c)·n / d, scaled by 1/ε for x = εy
        dWdr = -gs.derivative(dist) * np.einsum("...i,i->...", diff, n) / safe / eps
        w2 = gs(dist) ** 2
        out[0] += w2 * a.gamma1 * dWdr
        out[1] += w2 * a.gamma2 * dWdr
    return out


def translation_constraints(ansatz: AnsatzField, grid: Grid3D, rank_tol: float = 1e-8):
    """Orthonormal basis of ``span{W_j² ∂_a U_{x^j}}`` over ring peaks ``j`` and
    directions ``a`` (radial, tangential, vertical), as seen on ``grid``.

    On a mirror-reduced grid many of these fields vanish or coincide; the
    span is extracted by an SVD with relative cutoff ``rank_tol``.
    """
    cfg = ansatz.configuration
    a = ansatz.amplitudes
    gs = ansatz.gs
    eps = cfg.epsilon
    X, Y, Z = grid.mesh()
    y = np.stack((X, Y, Z), axis=-1)
    fields = []
    for c in cfg.ring_centers / eps:
        rad = np.linalg.norm(c)
        n = c / rad if rad > 0 else np.array([1.0, 0.0, 0.0])
        t = np.array([-n[1], n[0], 0.0])
        diff = y - c
        dist = np.linalg.norm(diff, axis=-1)
        safe = np.where(dist > 0, dist, 1.0)
        w2dw = gs(dist) ** 2 * gs.derivative(dist) / safe
        for e in (n, t, np.array([0.0, 0.0, 1.0])):
            f = w2dw * np.einsum("...i,i->...", diff, e)
            fields.append(np.stack((a.gamma1 * f, a.gamma2 * f)).ravel())
    A = np.array(fields) * math.sqrt(grid.cell_volume * grid.multiplicity)
    U, sv, Vt = np.linalg.svd(A, full_matrices=False)
    if not len(sv) or sv[0] == 0:
        return np.zeros((0,) + (2,) + grid.shape)
    keep = sv > rank_tol * sv[0]
    return (Vt[keep] / math.sqrt(grid.cell_volume * grid.multiplicity)).reshape((-1, 2) + grid.shape)


def _energy_norm(grid, prob, w, eps):
    lap = grid.laplacian(w)
    val = -grid.dot(w, lap) + grid.integrate(prob.P * w[0] ** 2 + prob.Q * w[1] ** 2)
    return math.sqrt(max(val, 0.0) * eps**3)


def projected_solve(ansatz: AnsatzField, potentials, grid: Grid3D, tol: float = 1e-8,
                    max_iter: int = 30, contraction: float = 0.9, tau: float = 0.2) -> ProjectedSolveReport:
    """Solve ``F(S + φ, T + ψ) = b_k c + (other multipliers)`` with ``(φ, ψ) ⊥ c``
    by projected Newton.

    ``c`` is the constraint field of :func:`constraint_field`.  A grid class
    only mirror-symmetric (not ``k``-fold rotation invariant) also keeps the
    non-radial ring translations as near-kernel directions, so the projector
    ``Π`` removes the whole span of :func:`translation_constraints`, which
    contains ``c``.  Orthogonality is in the discrete ``L²`` product and holds
    to round-off at every iterate; ``b_k`` is the component of the removed
    residual along ``c``.
    """
    from .diagnostics import weighted_norm

    cfg = ansatz.configuration
    if cfg.mode != SYNC:
        raise ValueError("projected_solve needs a synchronized ansatz")
    eps = cfg.epsilon
    prob = CoupledProblem(grid, potentials, ansatz.amplitudes, eps)
    base = ansatz_on_grid(ansatz, grid)
    c = constraint_field(ansatz, grid)
    cc = grid.dot(c, c)
    scale = grid.dot(base, base)
    if not cc > 1e-24 * max(scale, 1.0):
        raise ConstraintRankDeficiency("constraint functional vanishes on this grid")
    # Gram-Schmidt with c first, so that ⟨c, ·⟩ = 0 holds to round-off
    Q = [c / math.sqrt(cc)]
    for q in translation_constraints(ansatz, grid):
        for _ in range(2):  # re-orthogonalise once for a numerically exact projector
            for p in Q:
                q = q - grid.dot(p, q) * p
        nq = math.sqrt(grid.dot(q, q))
        if nq > 1e-4:
            Q.append(q / nq)
    if len(Q) > 1 + len(cfg.ring_centers) * 3:
        raise ConstraintRankDeficiency("constraint field is not resolved by the translation span")

    def project(x):
        for q in Q:
            x = x - grid.dot(q, x) * q
        return x

    shape = base.shape
    M = prob.preconditioner()

    def precond(x):
        return project(M.matvec(project(x.reshape(shape)).ravel()).reshape(shape)).ravel()
    Mp = LinearOperator((base.size, base.size), matvec=precond, dtype=float)

    w = np.zeros_like(base)
    G = prob.residual(base)
    b = grid.dot(c, G) / cc
    R = project(G)
    norm = float(np.max(np.abs(R)))
    trace = [norm]
    for _ in range(max_iter):
        if norm <= tol:
            break
        J = prob.jacobian(base + w)

        def pj(x, J=J):
            return project(J.matvec(project(x.reshape(shape)).ravel()).reshape(shape)).ravel()
        A = LinearOperator((base.size, base.size), matvec=pj, dtype=float)
        step, _info = minres(A, -R.ravel(), M=Mp, rtol=_linear_tolerance(norm), maxiter=2000)
        step = project(step.reshape(shape))
        lam = 1.0
        while True:
            trial = w + lam * step
            G_t = prob.residual(base + trial)
            b_t = grid.dot(c, G_t) / cc
            R_t = project(G_t)
            n_t = float(np.max(np.abs(R_t)))
            if n_t < norm:
                break
            lam *= 0.5
            if lam < 2.0**-30:
                raise LineSearchFailure(f"projected step gives no decrease at |ΠF|={norm:.3e}")
        if n_t > contraction * norm and n_t > tol:
            raise NonContraction(f"residual ratio {n_t / norm:.3f} exceeds {contraction}")
        w, b, R, norm = trial, b_t, R_t, n_t
        trace.append(norm)
    if norm > tol:
        raise NonContraction(f"|ΠF| = {norm:.3e} > tol after {max_iter} iterations")
    X, Y, Z = grid.mesh()
    pts = eps * np.stack((X, Y, Z), axis=-1)
    star = max(weighted_norm(w[i], pts, cfg.inner_centers, cfg.ring_centers, tau, 1.0, eps).norm
               for i in range(2))
    k, r = cfg.ring_count, cfg.ring_radius
    p_model, q_model = potentials
    if r > 0:
        d = 2 * r * math.sin(math.pi / k) / eps
        bound = k / r**p_model.m + k / r**q_model.m + (k / r) * math.exp(-d) * 2 * k
    else:
        bound = 0.0
    sol = DiscreteFieldPair(grid=grid, u=base[0] + w[0], v=base[1] + w[1], epsilon=eps,
                            amplitudes=ansatz.amplitudes, residual_norm=norm,
                            positive=bool(np.all(base + w > 0)), history=trace)
    return ProjectedSolveReport(correction_norm=_energy_norm(grid, prob, w, eps), star_norm=star,
                                b_k=float(b), constraint_residual=float(grid.dot(c, w)),
                                trace=trace, bound_shape=bound, solution=sol, correction=w)


def lefthand_source(ansatz: AnsatzField, potentials, points) -> dict:
    """Error fields ``(ℓ₁, ℓ₂)`` of a synchronized ansatz at physical points.

    ``ℓ₁ = (P − 1) U_r − μ₁(S³ − u³ − ΣU_j³) − β(ST² − uv² − ΣU_jV_j²)`` with
    ``u`` the inner solution (zero when absent) and ``U_r = ΣU_j`` the sum of
    analytic peaks; ``ℓ₂`` is the symmetric counterpart.  Returns the fields
    and their weighted sup norms.
    """
    from .diagnostics import weighted_norm

    cfg = ansatz.configuration
    if cfg.mode != SYNC:
        raise ValueError("lefthand_source needs a synchronized ansatz")
    a = ansatz.amplitudes
    x = np.asarray(points, dtype=float)
    bare = AnsatzField(cfg, a, ansatz.gs)
    Ur, Vr = bare.evaluate(x)
    S, T = ansatz.evaluate(x)
    u_in, v_in = S - Ur, T - Vr
    w3 = bare.peak_sum(x, power=3)
    rr = np.linalg.norm(x, axis=-1)
    p_model, q_model = potentials
    l1 = ((p_model(rr) - 1.0) * Ur - a.mu1 * (S**3 - u_in**3 - a.gamma1**3 * w3)
          - a.beta * (S * T**2 - u_in * v_in**2 - a.gamma1 * a.gamma2**2 * w3))
    l2 = ((q_model(rr) - 1.0) * Vr - a.mu2 * (T**3 - v_in**3 - a.gamma2**3 * w3)
          - a.beta * (S**2 * T - u_in**2 * v_in - a.gamma1**2 * a.gamma2 * w3))
    eps = cfg.epsilon
    n1 = weighted_norm(l1, x, cfg.inner_centers, cfg.ring_centers, 0.2, 1.0, eps)
    n2 = weighted_norm(l2, x, cfg.inner_centers, cfg.ring_centers, 0.2, 1.0, eps)
    return {"l1": l1, "l2": l2, "norm1": n1.norm, "norm2": n2.norm}


def solve_glued(k: int, r: float, epsilon: float, potentials, amplitudes, gs, h: float,
                tol: float = 1e-8, margin: float = 12.0):
    """Inner spike at the origin glued to a ring of ``k`` peaks, Newton-converged.

    The inner solution is computed first on the same grid (so no interpolation
    is needed), then the composed ansatz is the Newton initial guess.
    """
    from .ansatz import make_ring_configuration, single_peak_configuration

    cfg = make_ring_configuration(k, r, epsilon)
    grid = grid_for_configuration(cfg, h, margin=margin)
    inner0 = AnsatzField(single_peak_configuration(epsilon), amplitudes, gs)
    inner = newton_solve(inner0, potentials, grid, tol=tol)
    glued = AnsatzField(cfg, amplitudes, gs, inner_solution=inner)
    return newton_solve(glued, potentials, grid, tol=tol), inner, glued


# ---------------------------------------------------------------- export
_HEADER = "<3q3dd"


def write_binary(fields: DiscreteFieldPair, path) -> Path:
    """Header ``(nx, ny, nz, hx, hy, hz, ε)`` then full-box ``u`` and ``v``,
    little-endian float64, C order."""
    path = Path(path)
    g = fields.grid
    u, v = g.expand(fields.u), g.expand(fields.v)
    with path.open("wb") as fh:
        fh.write(struct.pack(_HEADER, *u.shape, *g.spacing, fields.epsilon))
        fh.write(np.ascontiguousarray(u, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(v, dtype="<f8").tobytes())
    return path


def read_binary(path):
    """Return ``(u, v, spacing, epsilon)`` from :func:`write_binary` output."""
    data = Path(path).read_bytes()
    size = struct.calcsize(_HEADER)
    nx, ny, nz, hx, hy, hz, eps = struct.unpack(_HEADER, data[:size])
    n = nx * ny * nz
    arr = np.frombuffer(data[size:], dtype="<f8")
    return arr[:n].reshape(nx, ny, nz), arr[n:2 * n].reshape(nx, ny, nz), (hx, hy, hz), eps


def write_midplane_csv(fields: DiscreteFieldPair, path) -> Path:
    """Slice through the node plane closest to ``y₃ = 0``: columns y1, y2, u, v."""
    path = Path(path)
    g = fields.grid
    u, v = g.expand(fields.u), g.expand(fields.v)
    full = g.full()
    ax = [full.axis(a) for a in range(3)]
    l = int(np.argmin(np.abs(ax[2])))
    with path.open("w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["y1", "y2", "u", "v"])
        for i, y1 in enumerate(ax[0]):
            for j, y2 in enumerate(ax[1]):
                out.writerow([repr(float(y1)), repr(float(y2)), repr(float(u[i, j, l])),
                              repr(float(v[i, j, l]))])
    return path
