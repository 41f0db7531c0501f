"""Phase-space grids, the fast-phase grid and the rotation map.

The rotation ``gamma(r, v, tau) = (cos(tau) r - sin(tau) v, sin(tau) r + cos(tau) v)``
links the (r, v_r) frame of the physical distribution with the (q, u_r) frame
of the homogenized profile.  Rotated meshes are rigid rotations of a uniform
grid, so every routine here is a thin, vectorized wrapper around it.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class PhasePoint(NamedTuple):
    r: float
    v: float


@dataclass(frozen=True)
class PhaseGrid:
    """Uniform symmetric grid ``(i*dr, j*dvr)`` with ``|i| <= P_r``, ``|j| <= P_vr``.

    The spacings are ``R/(P_r+1)`` and ``vR/(P_vr+1)``, so the box edges
    ``+-R`` and ``+-vR`` are not nodes.
    """

    R: float
    vR: float
    P_r: int
    P_vr: int

    def __post_init__(self):
        if self.R <= 0 or self.vR <= 0:
            raise ValueError("grid half-widths must be positive")
        if self.P_r < 2 or self.P_vr < 2:
            raise ValueError("need P_r, P_vr >= 2 (at least 5 nodes per axis)")

    @property
    def dr(self) -> float:
        return self.R / (self.P_r + 1)

    @property
    def dvr(self) -> float:
        return self.vR / (self.P_vr + 1)

    @property
    def shape(self) -> tuple[int, int]:
        return (2 * self.P_r + 1, 2 * self.P_vr + 1)

    @property
    def r(self) -> np.ndarray:
        return np.arange(-self.P_r, self.P_r + 1) * self.dr

    @property
    def v(self) -> np.ndarray:
        return np.arange(-self.P_vr, self.P_vr + 1) * self.dvr

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.r, self.v, indexing="ij")

    def node(self, i: int, j: int) -> PhasePoint:
        if abs(i) > self.P_r or abs(j) > self.P_vr:
            raise IndexError(f"node ({i}, {j}) outside grid with P_r={self.P_r}, P_vr={self.P_vr}")
        return PhasePoint(i * self.dr, j * self.dvr)

    def outside(self, r, v) -> np.ndarray:
        """Mask of points beyond the node hull, where splines read 0."""
        rm = self.P_r * self.dr * (1.0 + 1e-10)
        vm = self.P_vr * self.dvr * (1.0 + 1e-10)
        return (np.abs(r) > rm) | (np.abs(v) > vm)

    def same_as(self, other: "PhaseGrid") -> bool:
        return (self.P_r, self.P_vr) == (other.P_r, other.P_vr) and np.isclose(
            self.dr, other.dr, rtol=1e-12
        ) and np.isclose(self.dvr, other.dvr, rtol=1e-12)


@dataclass(frozen=True)
class TauGrid:
    """Periodic grid ``tau_m = m * 2pi/(P_tau+1)``, ``m = 0..P_tau`` (2pi excluded)."""

    P_tau: int

    def __post_init__(self):
        if self.P_tau < 1:
            raise ValueError("P_tau must be >= 1")

    @property
    def size(self) -> int:
        return self.P_tau + 1

    @property
    def dtau(self) -> float:
        return 2.0 * np.pi / (self.P_tau + 1)

    @property
    def tau(self) -> np.ndarray:
        return np.arange(self.P_tau + 1) * self.dtau

    def periodic_sum(self, values) -> float:
        """Periodic trapezoid rule over one period; ``values`` sampled at ``tau``."""
        return float(np.sum(values) * self.dtau)


def rotate(r, v, tau):
    """Apply ``gamma(., tau)``; works on scalars and broadcasting arrays."""
    c, s = np.cos(tau), np.sin(tau)
    return c * r - s * v, s * r + c * v


def unrotate(r, v, tau):
    return rotate(r, v, -np.asarray(tau))


def rotated_node(grid: PhaseGrid, i: int, j: int, tau_m: float) -> PhasePoint:
    r, v = grid.node(i, j)
    q, u = rotate(r, v, tau_m)
    return PhasePoint(float(q), float(u))


def rotated_mesh(grid: PhaseGrid, tau_grid: TauGrid) -> tuple[np.ndarray, np.ndarray]:
    """Coordinates of every node of every rotated mesh, shape ``(M, Nr, Nv)``."""
    r, v = grid.mesh()
    tau = tau_grid.tau[:, None, None]
    return rotate(r[None], v[None], tau)
