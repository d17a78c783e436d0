"""Linearised operators around computed solutions and their lowest eigenvalues.

The linearisation of the system at ``(u, v)`` acts on pairs ``(ξ₁, ξ₂)`` as

    ξ₁ ↦ −Δξ₁ + Pξ₁ − 3μ₁u²ξ₁ − βv²ξ₁ − 2βuvξ₂,

with the symmetric counterpart in the second slot (rescaled coordinates).
Symmetry classes are realised by the grid reduction itself; the extra
``k``-fold rotation invariance of ring solutions is imposed by filtering
eigenvectors on their correlation with a rotated copy.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.sparse.linalg import LinearOperator, eigsh, minres

from .errors import SingularShift, UnconvergedBase
from .field_solver import CoupledProblem, DiscreteFieldPair

__all__ = ["LinearizedOperator", "SpectrumReport", "assemble_linearized", "lowest_eigs",
           "nondegeneracy_margin", "near_zero_threshold", "translation_modes",
           "mode_correlation", "rotation_correlation", "rotation_ritz", "project", "SUBSPACES",
           "FULL", "EVEN", "ROTATION"]

FULL = "Full"
EVEN = "EvenX2X3"
ROTATION = "EvenX2X3AndRotation_k"
SUBSPACES = (FULL, EVEN, ROTATION)
BASE_TOL = 1e-6
SHIFT_TOL = 1e-12
ROTATION_MATCH = 0.9


def _symmetry(subspace: str, k: int | None):
    if subspace == FULL:
        return (False, False, False)
    if subspace == EVEN:
        return (False, True, True)
    if subspace == ROTATION:
        if k is None or k < 1:
            raise ValueError("the rotation class needs the ring count k")
        # an even k-gon is also mirror symmetric in x₁
        return (k % 2 == 0, True, True)
    raise ValueError(f"subspace must be one of {SUBSPACES}")


def _regrid(sol: DiscreteFieldPair, symmetric) -> DiscreteFieldPair:
    """Same field on the same box with a different (weaker) symmetry reduction."""
    g = sol.grid
    symmetric = tuple(bool(s) for s in symmetric)
    if symmetric == tuple(g.symmetric):
        return sol
    if any(s and not t for s, t in zip(symmetric, g.symmetric)):
        raise ValueError("cannot impose a symmetry the base solution does not store")
    new = g.with_symmetry(symmetric)
    return DiscreteFieldPair(grid=new, u=new.restrict(g.expand(sol.u)),
                             v=new.restrict(g.expand(sol.v)), epsilon=sol.epsilon,
                             amplitudes=sol.amplitudes, residual_norm=sol.residual_norm,
                             positive=sol.positive, history=list(sol.history))


def project(w_full: np.ndarray, subspace: str, k: int | None = None) -> np.ndarray:
    """Orthogonal projection of a full-box pair onto the mirror-symmetric class.

    ``Full`` is the identity; the other classes average over the reflections
    ``x₂ → −x₂`` and ``x₃ → −x₃`` (and ``x₁ → −x₁`` for even ``k``).  Each
    average is an exact involution mean, so the projection is idempotent to
    the last bit.
    """
    out = np.asarray(w_full, dtype=float)
    for a, sym in enumerate(_symmetry(subspace, k)):
        if sym:
            ax = out.ndim - 3 + a
            out = 0.5 * (out + np.flip(out, axis=ax))
    return out


@dataclass(eq=False)
class LinearizedOperator:
    base: DiscreteFieldPair
    potentials: tuple
    c11: np.ndarray
    c12: np.ndarray
    c22: np.ndarray
    subspace: str = FULL
    k: int | None = None

    @property
    def grid(self):
        return self.base.grid

    @property
    def n(self) -> int:
        return 2 * self.grid.size

    @property
    def scale(self) -> float:
        """Upper bound on the operator norm, used for relative residuals."""
        top = sum(float(np.max(e)) for e in self.grid.laplacian_eigenvalues())
        return top + float(max(np.max(np.abs(c)) for c in (self.c11, self.c12, self.c22)))

    def apply(self, x):
        x = np.asarray(x, dtype=float).reshape((2,) + self.grid.shape)
        lap = self.grid.laplacian(x)
        return np.stack((-lap[0] + self.c11 * x[0] + self.c12 * x[1],
                         -lap[1] + self.c12 * x[0] + self.c22 * x[1]))

    __call__ = apply

    def dot(self, a, b) -> float:
        return self.grid.dot(a, b)

    def as_linear_operator(self) -> LinearOperator:
        def mv(x):
            return self.apply(x).ravel()
        return LinearOperator((self.n, self.n), matvec=mv, rmatvec=mv, dtype=float)

    def rayleigh(self, phi) -> float:
        phi = np.asarray(phi, dtype=float).reshape((2,) + self.grid.shape)
        return self.dot(phi, self.apply(phi)) / self.dot(phi, phi)

    def self_adjointness_defect(self, rng=None) -> float:
        """``|⟨La, b⟩ − ⟨a, Lb⟩| / (‖a‖‖b‖ · scale)`` for random pairs."""
        rng = np.random.default_rng(rng)
        a = rng.standard_normal((2,) + self.grid.shape)
        b = rng.standard_normal((2,) + self.grid.shape)
        diff = self.dot(self.apply(a), b) - self.dot(a, self.apply(b))
        return abs(diff) / (math.sqrt(self.dot(a, a) * self.dot(b, b)) * self.scale)


def assemble_linearized(solution: DiscreteFieldPair, potentials, subspace: str = FULL,
                        k: int | None = None, tol: float = BASE_TOL) -> LinearizedOperator:
    """Linearisation at ``solution`` on the grid realising ``subspace``."""
    sol = _regrid(solution, _symmetry(subspace, k))
    prob = CoupledProblem(sol.grid, potentials, sol.amplitudes, sol.epsilon)
    res = float(np.max(np.abs(prob.residual(sol.stacked))))
    if res > tol:
        raise UnconvergedBase(f"base residual {res:.3e} exceeds {tol:.1e}")
    c11, c12, c22 = prob.coefficients(sol.stacked)
    return LinearizedOperator(base=sol, potentials=tuple(potentials), c11=c11, c12=c12,
                              c22=c22, subspace=subspace, k=k)


def near_zero_threshold(op: LinearizedOperator) -> float:
    """``10 (h²/12) κ``, with ``κ = max|Δ_h u| / max|u|`` the curvature scale at the peak.

    A discrete kernel vector of a translation-invariant problem is shifted by
    ``O(h²κ)``; the factor 10 separates it from bound modes.  For the zero
    base, where there is no peak, ``κ`` is taken as 1.
    """
    g = op.grid
    w = op.base.stacked
    top = float(np.max(np.abs(w)))
    if top == 0:
        kappa = 1.0
    else:
        kappa = float(np.max(np.abs(g.laplacian(w)))) / top
    # h²/12 is the leading truncation coefficient of the second difference
    return 10.0 * g.h**2 * kappa / 12.0


@dataclass
class SpectrumReport:
    subspace: str
    count: int
    eigenvalues: list
    residuals: list
    near_zero_count: int
    threshold: float
    h: float
    vectors: np.ndarray = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {"subspace": self.subspace, "eigenvalues": [float(x) for x in self.eigenvalues],
                "residuals": [float(x) for x in self.residuals],
                "near_zero_count": int(self.near_zero_count), "threshold": float(self.threshold),
                "h": float(self.h), "count": int(self.count)}

    def to_json(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))
        return path


def _shift_solver(op: LinearizedOperator, sigma: float) -> LinearOperator:
    g = op.grid
    shape = (2,) + g.shape

    def prec(x):
        return g.solve_shifted(x.reshape(shape), 1.0).ravel()
    M = LinearOperator((op.n, op.n), matvec=prec, dtype=float)

    def mv(x):
        return (op.apply(x) - sigma * x.reshape(shape)).ravel()
    A = LinearOperator((op.n, op.n), matvec=mv, dtype=float)

    def inv(b):
        x, info = minres(A, b, M=M, rtol=SHIFT_TOL, maxiter=5000)
        if info != 0:
            raise SingularShift(f"shifted solve at sigma={sigma:.3e} did not converge")
        return x
    return LinearOperator((op.n, op.n), matvec=inv, dtype=float)


def lowest_eigs(op: LinearizedOperator, count: int = 4, sigma: float = 0.0,
                tol: float = 1e-12, seed: int = 0) -> SpectrumReport:
    """Eigenpairs of ``op`` nearest ``sigma`` (shift-invert Lanczos, ``L²`` product).

    The shifted solves are preconditioned MINRES at relative tolerance 1e-12.
    If one fails, the shift is moved by 1e-8 and the computation retried once.
    """
    if not 1 <= count <= 10:
        raise ValueError("count must lie in [1, 10]")
    v0 = np.random.default_rng(seed).standard_normal(op.n)
    A = op.as_linear_operator()
    try:
        vals, vecs = eigsh(A, k=count, sigma=sigma, which="LM", OPinv=_shift_solver(op, sigma),
                           v0=v0, tol=tol)
    except SingularShift:
        sigma = sigma + 1e-8
        vals, vecs = eigsh(A, k=count, sigma=sigma, which="LM", OPinv=_shift_solver(op, sigma),
                           v0=v0, tol=tol)
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    shape = (2,) + op.grid.shape
    lams, res, out = [], [], []
    for j in range(count):
        phi = vecs[:, j].reshape(shape)
        phi = phi / math.sqrt(op.dot(phi, phi))
        Lphi = op.apply(phi)
        lam = op.dot(phi, Lphi)  # Rayleigh quotient of the normalised vector
        r = Lphi - lam * phi
        lams.append(float(lam))
        res.append(math.sqrt(op.dot(r, r)))
        out.append(phi)
    thr = near_zero_threshold(op)
    return SpectrumReport(subspace=op.subspace, count=count, eigenvalues=lams, residuals=res,
                          near_zero_count=int(sum(abs(x) <= thr for x in lams)), threshold=thr,
                          h=op.grid.h, vectors=np.array(out))


def translation_modes(solution: DiscreteFieldPair):
    """``(∂u/∂y_l, ∂v/∂y_l)`` for ``l = 1, 2, 3`` on the solution grid."""
    g = solution.grid
    du, dv = g.gradient(solution.u), g.gradient(solution.v)
    return [np.stack((du[l], dv[l])) for l in range(3)]


def mode_correlation(grid, vectors, modes) -> np.ndarray:
    """Norm of the projection of each normalised mode onto ``span(vectors)``.

    ``vectors`` must be orthonormal in ``grid.dot``; a value of 1 means the mode
    lies in the computed eigenspace.
    """
    out = []
    for m in modes:
        m = m / math.sqrt(grid.dot(m, m))
        coeff = np.array([grid.dot(v, m) for v in vectors])
        out.append(float(np.sqrt(np.sum(coeff**2))))
    return np.array(out)


def _rotate(grid, phi, k: int) -> np.ndarray:
    """Full-box copy of ``phi`` rotated by ``2π/k`` about the ``y₃`` axis (trilinear)."""
    full = grid.full()
    axes = [full.axis(a) for a in range(3)]
    f = grid.expand(phi)
    X, Y, Z = full.mesh()
    c, s = math.cos(2 * math.pi / k), math.sin(2 * math.pi / k)
    pts = np.stack((c * X - s * Y, s * X + c * Y, Z), axis=-1).reshape(-1, 3)
    return np.stack([RegularGridInterpolator(axes, comp, method="linear", bounds_error=False,
                                             fill_value=0.0)(pts).reshape(X.shape)
                     for comp in f])


def rotation_correlation(grid, phi, k: int) -> float:
    """Correlation of a pair with its copy rotated by ``2π/k`` about the ``y₃`` axis."""
    f = grid.expand(phi)
    rot = _rotate(grid, phi, k)
    den = math.sqrt(float(np.vdot(f, f)) * float(np.vdot(rot, rot)))
    return float(np.vdot(f, rot)) / den if den > 0 else 0.0


def rotation_ritz(op: LinearizedOperator, report: SpectrumReport, k: int,
                  min_match: float = ROTATION_MATCH):
    """Ritz values of ``op`` on the rotation-invariant part of the computed eigenspace.

    The Cartesian grid breaks the ``k``-fold symmetry slightly, so nearly
    degenerate eigenvectors come out as arbitrary mixtures.  The symmetrised
    matrix ``⟨φ_i, Rφ_j⟩`` of the rotation ``R`` on their span is diagonalised
    and the combinations with eigenvalue above ``min_match`` are taken as the
    invariant subspace; ``op`` restricted to it gives the returned values.
    """
    V = report.vectors
    full = [op.grid.expand(phi) for phi in V]
    rot = [_rotate(op.grid, phi, k) for phi in V]
    n = len(V)
    M = np.array([[float(np.vdot(full[i], rot[j])) for j in range(n)] for i in range(n)])
    M = M / float(np.vdot(full[0], full[0]))
    w, C = np.linalg.eigh(0.5 * (M + M.T))
    keep = w > min_match
    if not np.any(keep):
        return np.array([]), w
    C = C[:, keep]
    T = C.T @ np.diag(report.eigenvalues) @ C
    return np.linalg.eigvalsh(0.5 * (T + T.T)), w[keep]


def nondegeneracy_margin(solution: DiscreteFieldPair, potentials, subspace: str = EVEN,
                         k: int | None = None, count: int = 6, min_match: float = ROTATION_MATCH,
                         return_report: bool = False):
    """Smallest ``|λ|`` of the linearisation within a symmetry class.

    In the rotation class the eigenpairs of the mirror-reduced problem are
    restricted to their ``2π/k``-invariant combinations (:func:`rotation_ritz`).
    """
    op = assemble_linearized(solution, potentials, subspace, k)
    rep = lowest_eigs(op, count=count)
    lams = np.array(rep.eigenvalues)
    if subspace == ROTATION:
        lams, _ = rotation_ritz(op, rep, k, min_match)
        if not len(lams):
            raise ValueError("no rotation-invariant combination among the computed eigenpairs")
    margin = float(np.min(np.abs(lams)))
    return (margin, rep) if return_report else margin
