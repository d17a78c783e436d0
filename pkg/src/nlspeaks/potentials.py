"""Radial trap potentials with a well at the origin and a power-law tail.

The built-in family is

    P(r) = 1 - c r² e^{-r²} + a r⁴ / (1 + r²)^{(m+4)/2}

which has ``P(0) = 1``, ``P'(0) = 0``, ``P''(0) = -2c`` and
``P(r) = 1 + a r^{-m} - (m+4)a/2 · r^{-(m+2)} + O(r^{-(m+4)})`` at infinity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import FloorViolation, SignChange

__all__ = ["PotentialModel", "builtin_potential", "constant_potential", "tail_fit",
           "hessian_at_origin", "potentials_to_toml", "potentials_from_dict"]


@dataclass(frozen=True)
class PotentialModel:
    """Radial potential ``1 - c r² e^{-r²} + a r⁴/(1+r²)^{(m+4)/2}``.

    ``a = c = 0`` gives the constant potential ``P ≡ 1``.
    """

    a: float
    m: float
    c: float
    alpha: float

    @property
    def b(self) -> float:
        # coefficient of the first correction, which sits at r^{-(m+2)}
        return -(self.m + 4.0) * self.a / 2.0

    @property
    def is_constant(self) -> bool:
        return self.a == 0.0 and self.c == 0.0

    def excess(self, r):
        """``P(r) − 1`` without the cancellation of ``evaluate(r) − 1``."""
        r = np.asarray(r, dtype=float)
        r2 = r * r
        n = (self.m + 4.0) / 2.0
        return -self.c * r2 * np.exp(-r2) + self.a * r2 * r2 / (1.0 + r2) ** n

    def evaluate(self, r):
        return 1.0 + self.excess(r)

    __call__ = evaluate

    def derivative(self, r):
        """Radial derivative ``P'(r)``."""
        r = np.asarray(r, dtype=float)
        r2 = r * r
        n = (self.m + 4.0) / 2.0
        well = -self.c * (2.0 * r - 2.0 * r * r2) * np.exp(-r2)
        tail = self.a * (4.0 * r * r2 * (1.0 + r2) ** (-n)
                         - 2.0 * n * r * r2 * r2 * (1.0 + r2) ** (-n - 1.0))
        return well + tail

    def second_derivative_at_origin(self) -> float:
        return -2.0 * self.c

    def gradient(self, x, y, z):
        """Cartesian gradient ``∇P`` at points ``(x, y, z)``."""
        r = np.sqrt(x * x + y * y + z * z)
        with np.errstate(invalid="ignore", divide="ignore"):
            g = np.where(r > 0, self.derivative(r) / np.where(r > 0, r, 1.0), 0.0)
        return g * x, g * y, g * z

    def to_dict(self) -> dict:
        return {"a": self.a, "m": self.m, "c": self.c}


def _floor(a, m, c):
    model = PotentialModel(a=a, m=m, c=c, alpha=0.0)
    # the well lives on r ≲ 3; beyond that P > 1 - 9c e^{-9}
    scan = np.linspace(0.0, 6.0, 601)
    vals = model.evaluate(scan)
    i = int(np.argmin(vals))
    lo, hi = scan[max(i - 1, 0)], scan[min(i + 1, scan.size - 1)]
    if hi > lo:
        res = minimize_scalar(lambda r: float(model.evaluate(r)), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-12})
        return min(float(res.fun), float(vals[i]), 1.0)
    return min(float(vals[i]), 1.0)


def builtin_potential(a: float = 1.0, m: float = 4.0, c: float = 0.1) -> PotentialModel:
    """Build a member of the built-in family, checking the positive floor."""
    if not a > 0:
        raise ValueError("tail amplitude a must be positive")
    if not m > 2:
        raise ValueError("tail exponent m must exceed 2")
    if not c > 0:
        raise ValueError("well depth c must be positive")
    alpha = _floor(a, m, c)
    if alpha <= 0:
        raise FloorViolation(f"min_r P(r) = {alpha:.4g} <= 0 for c={c}")
    return PotentialModel(a=float(a), m=float(m), c=float(c), alpha=alpha)


def constant_potential() -> PotentialModel:
    return PotentialModel(a=0.0, m=4.0, c=0.0, alpha=1.0)


def max_well_depth(a: float, m: float) -> float:
    """Largest ``c`` keeping ``min P > 0`` (bisection on the floor)."""
    lo, hi = 0.0, 10.0
    while _floor(a, m, hi) > 0:
        hi *= 2.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if _floor(a, m, mid) > 0:
            lo = mid
        else:
            hi = mid
    return lo


def tail_fit(model, window=(50.0, 200.0), samples: int = 200) -> dict:
    """Log-log regression of ``evaluate(r) - 1`` against ``r``.

    ``model`` may be any object with an ``evaluate`` method or a plain callable;
    an ``excess`` method (``P − 1`` computed directly) is used when present.
    Returns ``a_hat``, ``m_hat`` and ``trusted`` (whether the window is far
    enough out, ``r_lo >= 20`` and ``r_hi >= 2 r_lo``, for the fit to mean
    anything).
    """
    lo, hi = map(float, window)
    if not 0 < lo < hi:
        raise ValueError("window must satisfy 0 < r_lo < r_hi")
    r = np.geomspace(lo, hi, samples)
    if hasattr(model, "excess"):
        excess = np.asarray(model.excess(r), dtype=float)
    else:
        excess = np.asarray(getattr(model, "evaluate", model)(r), dtype=float) - 1.0
    if np.any(excess <= 0):
        raise SignChange(f"P(r) - 1 is not positive on [{lo}, {hi}]")
    slope, intercept = np.polyfit(np.log(r), np.log(excess), 1)
    return {"a_hat": float(math.exp(intercept)), "m_hat": float(-slope),
            "trusted": bool(lo >= 20.0 and hi >= 2.0 * lo)}


def hessian_at_origin(p_model: PotentialModel, q_model: PotentialModel, amplitudes) -> dict:
    """Hessian of ``γ₁²P + γ₂²Q`` at the origin and its non-degeneracy margin."""
    g1, g2 = amplitudes.gamma1**2, amplitudes.gamma2**2
    curvature = g1 * p_model.second_derivative_at_origin() + g2 * q_model.second_derivative_at_origin()
    hess = curvature * np.eye(3)
    margin = float(np.min(np.abs(np.linalg.eigvalsh(hess))))
    return {"matrix": hess, "margin": margin, "degenerate": margin <= 0.0}


def potentials_to_toml(p_model: PotentialModel, q_model: PotentialModel) -> str:
    import tomli_w
    return tomli_w.dumps({"potential": {"P": p_model.to_dict(), "Q": q_model.to_dict()}})


def potentials_from_dict(block: dict):
    """``{"P": {...}, "Q": {...}}`` -> pair of models (missing blocks use defaults)."""
    models = []
    for key in ("P", "Q"):
        spec = dict(block.get(key, {}))
        if spec.get("constant", False) or (spec.get("a") == 0 and spec.get("c") == 0):
            models.append(constant_potential())
        else:
            models.append(builtin_potential(spec.get("a", 1.0), spec.get("m", 4.0), spec.get("c", 0.1)))
    return tuple(models)
