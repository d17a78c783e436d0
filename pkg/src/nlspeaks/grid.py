"""Cell-centred Cartesian grids with optional mirror-symmetry reduction.

Nodes sit at ``-L + (i + 1/2) h`` so that every mirror plane through the origin
maps nodes onto nodes.  An axis flagged as symmetric keeps only the nodes with
positive coordinate and an even reflection at zero; every other end carries a
homogeneous Dirichlet wall half a cell beyond the last node.  With this layout
the 7-point Laplacian is symmetric with uniform weights and is diagonalised
exactly by DST-II (two walls) or DCT-IV (mirror + wall) along each axis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import fft

__all__ = ["Grid3D", "make_grid", "STENCILS", "set_workers"]

STENCILS = ("spectral", "fd2", "fd4")
_WORKERS = [1]


def set_workers(n: int) -> None:
    """Number of threads used by the fast transforms."""
    _WORKERS[0] = max(1, int(n))


def _symbol(stencil, theta, h):
    """Eigenvalues of ``-d²/dx²`` on the basis with phase ``theta = k h``-ish."""
    if stencil == "fd2":
        return (2.0 - 2.0 * np.cos(theta)) / h**2
    if stencil == "fd4":
        return (30.0 - 32.0 * np.cos(theta) + 2.0 * np.cos(2.0 * theta)) / (12.0 * h**2)
    return (theta / h) ** 2


@dataclass(frozen=True, eq=False)
class Grid3D:
    """Box ``∏[-L_a, L_a]`` with ``n_a`` cells per full axis.

    ``symmetric[a]`` stores only the half ``x_a > 0`` and imposes evenness in
    ``x_a``.  Coordinates are in the rescaled variable ``y = x / ε``.
    """

    half_widths: tuple
    cells: tuple
    symmetric: tuple = (False, False, False)
    stencil: str = "spectral"
    _eig: tuple = field(default=None, repr=False)

    def __post_init__(self):
        if any(n % 2 for n in self.cells):
            raise ValueError("cell counts must be even")
        if any(not L > 0 for L in self.half_widths):
            raise ValueError("half widths must be positive")
        if self.stencil not in STENCILS:
            raise ValueError(f"stencil must be one of {STENCILS}")
        eig = []
        for L, n, sym in zip(self.half_widths, self.cells, self.symmetric):
            h = 2.0 * L / n
            # basis frequencies: sin(πk(x+L)/2L), k=1..n, or cos(π(k+1/2)x/L), k<n/2
            theta = np.pi * ((np.arange(n // 2) + 0.5) / (n // 2) if sym else np.arange(1, n + 1) / n)
            eig.append(_symbol(self.stencil, theta, h))
        object.__setattr__(self, "_eig", tuple(eig))

    @property
    def spacing(self) -> tuple:
        return tuple(2.0 * L / n for L, n in zip(self.half_widths, self.cells))

    @property
    def h(self) -> float:
        return max(self.spacing)

    @property
    def shape(self) -> tuple:
        return tuple(n // 2 if s else n for n, s in zip(self.cells, self.symmetric))

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def cell_volume(self) -> float:
        hx, hy, hz = self.spacing
        return hx * hy * hz

    @property
    def multiplicity(self) -> int:
        """Number of full-space nodes represented by one stored node."""
        return 2 ** sum(bool(s) for s in self.symmetric)

    def axis(self, a: int) -> np.ndarray:
        L, n, sym = self.half_widths[a], self.cells[a], self.symmetric[a]
        h = 2.0 * L / n
        if sym:
            return (np.arange(n // 2) + 0.5) * h
        return -L + (np.arange(n) + 0.5) * h

    def mesh(self):
        return np.meshgrid(self.axis(0), self.axis(1), self.axis(2), indexing="ij")

    def integrate(self, f) -> float:
        """Full-space trapezoid/midpoint sum of a field stored on this grid."""
        return float(np.sum(f)) * self.cell_volume * self.multiplicity

    def dot(self, a, b) -> float:
        return float(np.vdot(a, b)) * self.cell_volume * self.multiplicity

    def refined(self, factor: int = 2) -> "Grid3D":
        return Grid3D(self.half_widths, tuple(n * factor for n in self.cells), self.symmetric,
                      self.stencil)

    def with_symmetry(self, symmetric) -> "Grid3D":
        return Grid3D(self.half_widths, self.cells, tuple(bool(s) for s in symmetric), self.stencil)

    def with_stencil(self, stencil) -> "Grid3D":
        return Grid3D(self.half_widths, self.cells, self.symmetric, stencil)

    # ------------------------------------------------------------------ stencils
    def laplacian(self, u):
        """Discrete Laplacian of one field (last three axes are spatial)."""
        u = np.asarray(u, dtype=float)
        if self.stencil != "fd2":
            return -self._apply_symbol(u, lambda d: d)
        out = np.zeros_like(u)
        for a, (h, sym) in enumerate(zip(self.spacing, self.symmetric)):
            ax = u.ndim - 3 + a
            out += _second_difference(u, ax, sym) / (h * h)
        return out

    def gradient(self, u):
        """Gradient of a field: spectral for the spectral stencil, otherwise
        central differences with the same ghost conventions."""
        u = np.asarray(u, dtype=float)
        if self.stencil == "spectral":
            return [_spectral_derivative(u, u.ndim - 3 + a, L, sym)
                    for a, (L, sym) in enumerate(zip(self.half_widths, self.symmetric))]
        grads = []
        for a, (h, sym) in enumerate(zip(self.spacing, self.symmetric)):
            ax = u.ndim - 3 + a
            grads.append(_central_difference(u, ax, sym) / (2.0 * h))
        return grads

    def solve_shifted(self, b, shift: float):
        """Exact solve of ``(-Δ_h + shift) x = b`` by fast sine/cosine transforms."""
        return self._apply_symbol(np.asarray(b, dtype=float), lambda d: 1.0 / (d + shift))

    def _apply_symbol(self, b, fn):
        x = b
        lead = b.ndim - 3
        for a, sym in enumerate(self.symmetric):
            x = _forward(x, lead + a, sym)
        ex, ey, ez = self._eig
        x = x * fn(ex[:, None, None] + ey[None, :, None] + ez[None, None, :])
        for a, sym in enumerate(self.symmetric):
            x = _backward(x, lead + a, sym)
        return x

    def laplacian_eigenvalues(self):
        return self._eig

    def mirror(self, u, axis: int):
        """Reflection ``x_axis -> -x_axis`` of a field on a non-reduced axis."""
        if self.symmetric[axis]:
            return u
        return np.flip(u, axis=u.ndim - 3 + axis)

    def expand(self, u) -> np.ndarray:
        """Unfold a reduced field to the full box (for export and checks)."""
        for a, sym in enumerate(self.symmetric):
            if sym:
                ax = u.ndim - 3 + a
                u = np.concatenate((np.flip(u, axis=ax), u), axis=ax)
        return u

    def restrict(self, u_full) -> np.ndarray:
        """Inverse of :meth:`expand` for fields that have the stored symmetry."""
        for a, sym in enumerate(self.symmetric):
            if sym:
                ax = u_full.ndim - 3 + a
                n = u_full.shape[ax]
                u_full = np.take(u_full, np.arange(n // 2, n), axis=ax)
        return u_full

    def full(self) -> "Grid3D":
        return Grid3D(self.half_widths, self.cells, (False, False, False), self.stencil)


def make_grid(half_width, h=None, cells=None, symmetric=(False, False, False),
              stencil="spectral") -> Grid3D:
    """Grid with (approximately) spacing ``h`` or with explicit ``cells`` per axis."""
    hw = tuple(float(v) for v in (half_width if np.ndim(half_width) else (half_width,) * 3))
    if cells is None:
        if h is None:
            raise ValueError("give either h or cells")
        cells = tuple(2 * max(1, int(math.ceil(L / h - 1e-9))) for L in hw)
    elif np.ndim(cells) == 0:
        cells = (int(cells),) * 3
    return Grid3D(hw, tuple(int(c) for c in cells), tuple(bool(s) for s in symmetric), stencil)


def _second_difference(u, ax, sym):
    n = u.shape[ax]
    out = -2.0 * u
    sl = [slice(None)] * u.ndim

    def s(i):
        sl2 = list(sl)
        sl2[ax] = i
        return tuple(sl2)

    out[s(slice(1, None))] += u[s(slice(0, n - 1))]
    out[s(slice(0, n - 1))] += u[s(slice(1, None))]
    # low end: mirror (ghost = u_0) or wall (ghost = -u_0)
    out[s(0)] += u[s(0)] if sym else -u[s(0)]
    out[s(n - 1)] -= u[s(n - 1)]
    return out


def _central_difference(u, ax, sym):
    n = u.shape[ax]
    sl = [slice(None)] * u.ndim

    def s(i):
        sl2 = list(sl)
        sl2[ax] = i
        return tuple(sl2)

    out = np.zeros_like(u)
    out[s(slice(1, n - 1))] = u[s(slice(2, None))] - u[s(slice(0, n - 2))]
    out[s(0)] = u[s(1)] - (u[s(0)] if sym else -u[s(0)])
    out[s(n - 1)] = -u[s(n - 1)] - u[s(n - 2)]
    return out


def _forward(x, ax, sym):
    if sym:
        return fft.dct(x, type=4, axis=ax, norm="ortho", workers=_WORKERS[0])
    return fft.dst(x, type=2, axis=ax, norm="ortho", workers=_WORKERS[0])


def _backward(x, ax, sym):
    if sym:
        return fft.idct(x, type=4, axis=ax, norm="ortho", workers=_WORKERS[0])
    return fft.idst(x, type=2, axis=ax, norm="ortho", workers=_WORKERS[0])


def _spectral_derivative(u, ax, L, sym):
    """Exact derivative of the sine (wall) or quarter-wave cosine (mirror) interpolant."""
    n = u.shape[ax]
    shape = [1] * u.ndim
    if sym:
        shape[ax] = n
        omega = (np.pi * (np.arange(n) + 0.5) / L).reshape(shape)
        c = fft.dct(u, type=4, axis=ax, norm="ortho", workers=_WORKERS[0])
        return fft.idst(-omega * c, type=4, axis=ax, norm="ortho", workers=_WORKERS[0])
    shape[ax] = n - 1
    omega = (np.pi * np.arange(1, n) / (2.0 * L)).reshape(shape)
    c = fft.dst(u, type=2, axis=ax, norm="ortho", workers=_WORKERS[0])
    out = np.zeros_like(c)
    lo = [slice(None)] * u.ndim
    hi = [slice(None)] * u.ndim
    lo[ax] = slice(1, None)
    hi[ax] = slice(0, n - 1)
    out[tuple(lo)] = omega * c[tuple(hi)]
    return fft.idct(out, type=2, axis=ax, norm="ortho", workers=_WORKERS[0])
