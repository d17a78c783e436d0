"""Peak configurations and the composed approximate solutions built on them.

A configuration is an optional inner cluster near the origin plus one ring of
``k`` peaks in the ``x₃ = 0`` plane (synchronized mode) or two interleaved
rings, the second rotated by ``π/k`` (segregated mode).  Positions are in the
physical variable ``x``; every peak has width ``ε``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import MissingRho
from .ground_state import CoupledAmplitudes, GroundState

__all__ = ["PeakConfiguration", "AnsatzField", "Window", "make_ring_configuration",
           "single_peak_configuration", "evaluate_ansatz", "default_window",
           "configuration_to_toml", "configuration_from_dict", "SYNC", "SEG"]

SYNC = "sync"
SEG = "seg"
TRUNCATION = 40.0  # peaks farther than this many widths are skipped
DEFAULT_DELTA = 0.2


class Window(NamedTuple):
    lo: float
    hi: float
    degenerate: bool

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, r: float) -> bool:
        return self.lo <= r <= self.hi


def default_window(k: int, m: float, delta: float = DEFAULT_DELTA, epsilon: float = 1.0) -> Window:
    """``ε·[(m/2π − δ) k ln k, (m/2π + δ) k ln k]``.

    ``δ = 0`` is accepted and flagged as degenerate.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    if not m > 2:
        raise ValueError("m must exceed 2")
    if not 0 <= delta < m / (4 * math.pi):
        raise ValueError(f"delta must lie in [0, m/4π) = [0, {m / (4 * math.pi):.4f})")
    scale = epsilon * k * math.log(k)
    centre = m / (2 * math.pi)
    return Window((centre - delta) * scale, (centre + delta) * scale, delta == 0)


def _ring(radius, k, offset):
    j = np.arange(k)
    angle = (2 * j + offset) * math.pi / k
    return np.column_stack((radius * np.cos(angle), radius * np.sin(angle), np.zeros(k)))


@dataclass(frozen=True, eq=False)
class PeakConfiguration:
    """Inner cluster ``η^j`` plus one or two rings in the ``x₃ = 0`` plane."""

    epsilon: float
    ring_radius: float
    ring_count: int
    inner_centers: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    second_ring_radius: float | None = None
    mode: str = SYNC
    window: Window | None = None

    def __post_init__(self):
        inner = np.asarray(self.inner_centers, dtype=float).reshape(-1, 3)
        inner.setflags(write=False)
        object.__setattr__(self, "inner_centers", inner)
        if self.mode not in (SYNC, SEG):
            raise ValueError(f"mode must be {SYNC!r} or {SEG!r}")
        if self.mode == SEG and self.second_ring_radius is None:
            raise MissingRho("segregated mode needs the second ring radius rho")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")

    @property
    def ring_centers(self) -> np.ndarray:
        """``x^j = (r cos 2(j−1)π/k, r sin 2(j−1)π/k, 0)``."""
        return _ring(self.ring_radius, self.ring_count, 0)

    @property
    def second_ring_centers(self) -> np.ndarray:
        """``y^j = (ρ cos (2j−1)π/k, ρ sin (2j−1)π/k, 0)``; empty in synchronized mode."""
        if self.mode != SEG:
            return np.zeros((0, 3))
        return _ring(self.second_ring_radius, self.ring_count, 1)

    @property
    def neighbor_distance(self) -> float:
        return 2.0 * self.ring_radius * math.sin(math.pi / self.ring_count)

    @property
    def cross_distance(self) -> float:
        """Smallest ``|x^i − y^j|`` between the two rings."""
        r, rho = self.ring_radius, self.second_ring_radius
        return math.sqrt(r * r + rho * rho - 2 * r * rho * math.cos(math.pi / self.ring_count))

    @property
    def in_window(self) -> bool | None:
        if self.window is None:
            return None
        ok = self.window.contains(self.ring_radius)
        if self.mode == SEG:
            ok = ok and self.window.contains(self.second_ring_radius)
        return ok

    def all_centers(self) -> np.ndarray:
        return np.vstack((self.inner_centers, self.ring_centers, self.second_ring_centers))

    def to_dict(self) -> dict:
        out = {"k": int(self.ring_count), "r": float(self.ring_radius),
               "epsilon": float(self.epsilon), "mode": self.mode}
        if self.mode == SEG:
            out["rho"] = float(self.second_ring_radius)
        if len(self.inner_centers):
            out["inner"] = self.inner_centers.tolist()
        return out


def make_ring_configuration(k: int, r: float, epsilon: float, mode: str = SYNC,
                            rho: float | None = None, inner_centers=(), m: float = 4.0,
                            delta: float = DEFAULT_DELTA) -> PeakConfiguration:
    """Ring configuration with the default ``D_k`` attached for membership checks."""
    if k < 2:
        raise ValueError("k must be at least 2")
    if not r > 0:
        raise ValueError("r must be positive")
    if mode == SEG and rho is None:
        raise MissingRho("segregated mode needs rho")
    window = default_window(k, m, delta, epsilon)
    return PeakConfiguration(epsilon=float(epsilon), ring_radius=float(r), ring_count=int(k),
                             inner_centers=np.asarray(inner_centers, float).reshape(-1, 3),
                             second_ring_radius=None if rho is None else float(rho),
                             mode=mode, window=window)


def single_peak_configuration(epsilon: float = 1.0) -> PeakConfiguration:
    """One peak at the origin, expressed as a ring of radius 0 with ``k = 1``."""
    return PeakConfiguration(epsilon=float(epsilon), ring_radius=0.0, ring_count=1)


@dataclass(frozen=True, eq=False)
class AnsatzField:
    """Sum of scaled ground states on a configuration, plus an optional inner field.

    ``gs`` must be the ``μ = 1`` profile; the ``μ``-scaled profiles are
    ``W/√μ``.  ``inner_solution`` is any object with ``grid``, ``u`` and ``v``
    (a converged inner spike solution in rescaled coordinates ``y = x/ε``); when
    absent, inner centres carry plain synchronized peaks.
    """

    configuration: PeakConfiguration
    amplitudes: CoupledAmplitudes
    gs: GroundState
    inner_solution: object = None

    def __post_init__(self):
        if self.inner_solution is not None:
            sol = self.inner_solution
            g = sol.grid
            axes = [g.axis(a) for a in range(3)]
            full = [np.concatenate((-a[::-1], a)) if s else a for a, s in zip(axes, g.symmetric)]
            interp = [RegularGridInterpolator(full, g.expand(f), bounds_error=False,
                                              fill_value=0.0, method="linear")
                      for f in (sol.u, sol.v)]
            object.__setattr__(self, "_inner", interp)

    # peak groups as (centres, amplitude on S, amplitude on T)
    def _groups(self):
        cfg, a = self.configuration, self.amplitudes
        groups = []
        if self.inner_solution is None and len(cfg.inner_centers):
            groups.append((cfg.inner_centers, a.gamma1, a.gamma2))
        if cfg.mode == SYNC:
            groups.append((cfg.ring_centers, a.gamma1, a.gamma2))
        else:
            groups.append((cfg.ring_centers, 1.0 / math.sqrt(a.mu1), 0.0))
            groups.append((cfg.second_ring_centers, 0.0, 1.0 / math.sqrt(a.mu2)))
        return groups

    def peak_sum(self, x, power: int = 1):
        """``Σ_j W(|x − c_j|/ε)^power`` over ring peaks (used for weights and checks)."""
        x = np.asarray(x, float)
        eps = self.configuration.epsilon
        out = np.zeros(x.shape[:-1])
        for centres, _, _ in self._groups():
            for c in centres:
                d = np.linalg.norm(x - c, axis=-1) / eps
                near = d <= TRUNCATION
                out[near] += self.gs(d[near]) ** power
        return out

    def evaluate(self, x):
        """``(S, T)`` at points ``x`` of shape ``(..., 3)``."""
        x = np.asarray(x, dtype=float)
        eps = self.configuration.epsilon
        S = np.zeros(x.shape[:-1])
        T = np.zeros(x.shape[:-1])
        for centres, gu, gv in self._groups():
            for c in centres:
                d = np.linalg.norm(x - c, axis=-1) / eps
                near = d <= TRUNCATION
                w = self.gs(d[near])
                if gu:
                    S[near] += gu * w
                if gv:
                    T[near] += gv * w
        if self.inner_solution is not None:
            y = (x / eps).reshape(-1, 3)
            S += self._inner[0](y).reshape(S.shape)
            T += self._inner[1](y).reshape(T.shape)
        return S, T

    __call__ = evaluate

    def gradient(self, x):
        """Analytic ``(∇S, ∇T)`` for peak sums, each of shape ``(..., 3)``."""
        if self.inner_solution is not None:
            raise NotImplementedError("analytic gradient needs an empty inner field")
        x = np.asarray(x, dtype=float)
        eps = self.configuration.epsilon
        gS = np.zeros(x.shape)
        gT = np.zeros(x.shape)
        for centres, gu, gv in self._groups():
            for c in centres:
                diff = x - c
                dist = np.linalg.norm(diff, axis=-1)
                d = dist / eps
                near = (d <= TRUNCATION) & (dist > 0)
                unit = diff[near] / dist[near][:, None]
                dw = (self.gs.derivative(d[near]) / eps)[:, None] * unit
                gS[near] += gu * dw
                gT[near] += gv * dw
        return gS, gT


def evaluate_ansatz(field: AnsatzField, x):
    """``(S, T)`` at one point or an array of points."""
    return field.evaluate(x)


def configuration_to_toml(cfg: PeakConfiguration) -> str:
    import tomli_w
    return tomli_w.dumps({"ansatz": cfg.to_dict()})


def configuration_from_dict(block: dict, m: float = 4.0,
                            delta: float = DEFAULT_DELTA) -> PeakConfiguration:
    mode = block.get("mode", SYNC)
    return make_ring_configuration(int(block["k"]), float(block["r"]),
                                   float(block.get("epsilon", 1.0)), mode=mode,
                                   rho=block.get("rho"), inner_centers=block.get("inner", ()),
                                   m=m, delta=block.get("delta", delta))
