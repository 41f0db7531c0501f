"""External focusing field, radial Poisson solves and the tau-averaged fields."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import sparse

from .geometry import PhaseGrid, TauGrid, rotate
from .spline import (Axis, Spline2D, grid_axes, natural_coeffs, sparse_stencil_1d,
                     sparse_stencil_2d)


@dataclass(frozen=True)
class FocusingConfig:
    """Parameters of the focusing channel.

    ``H1`` is ``"cos"``, ``"cos2"`` or a tuple of samples of one 2pi period
    (read with periodic linear interpolation).  Whether ``omega1`` is rational
    cannot be decided from a float, so ``omega1_rational`` has no default.
    """

    eps: float
    omega1: float
    omega1_rational: bool
    H1: str | tuple = "cos"
    H0: float = 1.0
    self_field: bool = True

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if self.H0 < 0:
            raise ValueError(f"H0 must be nonnegative, got {self.H0}")
        if not isinstance(self.omega1_rational, bool):
            raise TypeError("omega1_rational must be an explicit bool")
        if isinstance(self.H1, str):
            if self.H1 not in ("cos", "cos2"):
                raise ValueError(f"unknown tension {self.H1!r}")
        else:
            table = tuple(float(x) for x in self.H1)
            if len(table) < 2:
                raise ValueError("tension table needs at least 2 samples")
            object.__setattr__(self, "H1", table)

    def tension(self, s):
        """H1 evaluated at phase ``s``."""
        s = np.asarray(s, dtype=float)
        if self.H1 == "cos":
            return np.cos(s)
        if self.H1 == "cos2":
            return np.cos(s) ** 2
        table = np.asarray(self.H1)
        period = 2.0 * np.pi
        xp = np.arange(table.size + 1) * (period / table.size)
        fp = np.append(table, table[0])
        return np.interp(np.mod(s, period), xp, fp)


def external_field(cfg: FocusingConfig, r, t):
    """Xi(r, t) = -(H0/eps) r + H1(omega1 t/eps) r."""
    r = np.asarray(r, dtype=float)
    return (-cfg.H0 / cfg.eps + cfg.tension(cfg.omega1 * t / cfg.eps)) * r


@dataclass(frozen=True)
class RadialFieldTable:
    """E(r_i, tau_m); ``values`` has shape ``(len(r_axis), M)``."""

    r_axis: Axis
    tau_grid: TauGrid | None
    values: np.ndarray

    def coeffs(self) -> np.ndarray:
        return natural_coeffs(self.values, 0)


@dataclass(frozen=True)
class AveragedFieldTable:
    values1: np.ndarray
    values2: np.ndarray


def radial_field(samples, dr: float, dv: float) -> np.ndarray:
    """Field column from integrand samples on the nonnegative half axis.

    ``samples[k, j, ...]`` is the distribution at ``(k*dr, v_j)`` for
    ``k = 0..P``.  Returns ``E`` at ``r_i, i = -P..P`` (first axis), using
    the trapezoid rule in r with the half weight at ``k = i`` and oddness
    for negative radii.
    """
    g = np.asarray(samples, dtype=float)
    if not np.all(np.isfinite(g)):
        raise FloatingPointError("non-finite sample in radial Poisson solve")
    rho = g.sum(axis=1) * dv
    P = rho.shape[0] - 1
    k = np.arange(P + 1).reshape((-1,) + (1,) * (rho.ndim - 1))
    # inner[i] = sum_{k=1}^{i-1} k rho_k
    inner = np.zeros_like(rho)
    inner[1:] = np.cumsum(k[:-1] * rho[:-1], axis=0)
    E = np.zeros_like(rho)
    E[1:] = 0.5 * dr * (rho[1:] + 2.0 * inner[1:] / k[1:])
    return np.concatenate([-E[:0:-1], E], axis=0)


def solve_radial_poisson(sampler: Callable, r_axis, v_axis) -> np.ndarray:
    """E(r_i) = (1/r_i) int_0^{r_i} int s g(s, v) dv ds on a symmetric axis."""
    r = np.asarray(r_axis, dtype=float)
    v = np.asarray(v_axis, dtype=float)
    P = (r.size - 1) // 2
    if r.size != 2 * P + 1 or abs(r[P]) > 1e-14:
        raise ValueError("r_axis must be symmetric with a node at 0")
    s, vv = np.meshgrid(r[P:], v, indexing="ij")
    samples = np.asarray(sampler(s, vv), dtype=float) * np.ones_like(s)
    return radial_field(samples, r[1] - r[0], v[1] - v[0])


class UniformPoisson:
    """Self-field of the uniform-mesh scheme: interpolate G at rotated points."""

    def __init__(self, grid: PhaseGrid, tau_grid: TauGrid):
        self.grid = grid
        self.tau_grid = tau_grid
        P = grid.P_r
        s, v = np.meshgrid(grid.r[P:], grid.v, indexing="ij")
        tau = tau_grid.tau[:, None, None]
        q, u = rotate(s[None], v[None], tau)
        ax0, ax1 = grid_axes(grid)
        self._shape = q.shape
        self._matrix = sparse_stencil_2d(ax0, ax1, q, u)
        self.r_axis = ax0

    def __call__(self, G_coeffs) -> RadialFieldTable:
        samples = (self._matrix @ np.ravel(G_coeffs)).reshape(self._shape)  # (M, P+1, Nv)
        E = radial_field(np.moveaxis(samples, 0, -1), self.grid.dr, self.grid.dvr)
        return RadialFieldTable(self.r_axis, self.tau_grid, E)


def self_field_twoscale_uniform(G: Spline2D | np.ndarray, grid: PhaseGrid, tau_grid: TauGrid):
    from .spline import fit_2d

    spl = G if isinstance(G, Spline2D) else fit_2d(G, grid)
    return _uniform_poisson(grid, tau_grid)(spl.coeffs)


def self_field_twoscale_mesh(G_table, grid: PhaseGrid, tau_grid: TauGrid) -> RadialFieldTable:
    """Self-field read straight off the rotated meshes (no interpolation).

    ``G_table[m, i, j]`` holds G at ``gamma(r_i, v_j, tau_m)``.
    """
    G_table = np.asarray(G_table, dtype=float)
    P = grid.P_r
    samples = np.moveaxis(G_table[:, P:, :], 0, -1)  # (P+1, Nv, M)
    E = radial_field(samples, grid.dr, grid.dvr)
    return RadialFieldTable(grid_axes(grid)[0], tau_grid, E)


class _Averager:
    """Shared pieces of the two averaging operators."""

    def _external(self, cfg, tau, args):
        # args: projections a_k per quadrature node k, stacked on axis 0
        if not cfg.omega1_rational:
            z = np.zeros(args.shape[1:])
            return z, z.copy()
        h = cfg.tension(cfg.omega1 * tau) / (2.0 * np.pi)
        w = (h * self.dtau).reshape((-1,) + (1,) * (args.ndim - 1))
        s = np.sin(tau).reshape(w.shape)
        c = np.cos(tau).reshape(w.shape)
        return -np.sum(w * s * args, axis=0), np.sum(w * c * args, axis=0)


def _stacked_stencil(r_axis: Axis, args):
    """Horizontal stack of the per-node 1D stencils ``B_l`` at ``args[l]``."""
    return sparse.hstack([sparse_stencil_1d(r_axis, a.ravel()) for a in args], format="csr")


class UniformAverager(_Averager):
    """<E1>, <E2> at the uniform nodes (q_i, u_j)."""

    def __init__(self, cfg: FocusingConfig, grid: PhaseGrid, tau_grid: TauGrid, r_axis: Axis):
        self.dtau = tau_grid.dtau
        tau = tau_grid.tau
        q, u = grid.mesh()
        self._shape = q.shape
        t3 = tau[:, None, None]
        args = np.cos(t3) * q[None] + np.sin(t3) * u[None]  # (M, Nq, Nu)
        self._matrix = _stacked_stencil(r_axis, args)
        self._sin = np.sin(tau) * self.dtau
        self._cos = np.cos(tau) * self.dtau
        self.ext1, self.ext2 = self._external(cfg, tau, args)

    def __call__(self, E: RadialFieldTable | None) -> AveragedFieldTable:
        if E is None:
            return AveragedFieldTable(self.ext1.copy(), self.ext2.copy())
        C = E.coeffs()  # (S, M)
        w = np.stack([(self._sin * C).T.ravel(), (self._cos * C).T.ravel()], axis=1)
        S = self._matrix @ w
        return AveragedFieldTable(
            self.ext1 - S[:, 0].reshape(self._shape), self.ext2 + S[:, 1].reshape(self._shape)
        )


class MeshAverager(_Averager):
    """<E1>, <E2> at every rotated node gamma(r_i, v_j, tau_m); output shape (M, Nr, Nv)."""

    def __init__(self, cfg: FocusingConfig, grid: PhaseGrid, tau_grid: TauGrid):
        self.dtau = tau_grid.dtau
        tau = tau_grid.tau
        M = tau.size
        r, v = grid.mesh()
        self._shape = (M,) + r.shape
        t3 = tau[:, None, None]
        # at slice m the field column k is read at a_l, l = (k - m) mod M
        args = np.cos(t3) * r[None] + np.sin(t3) * v[None]
        self._matrix = _stacked_stencil(grid_axes(grid)[0], args)
        self._idx = (np.arange(M)[:, None] + np.arange(M)[None, :]) % M  # [l, m] -> k
        self._sin = np.sin(tau)[self._idx] * self.dtau
        self._cos = np.cos(tau)[self._idx] * self.dtau
        ext1 = np.empty(self._shape)
        ext2 = np.empty_like(ext1)
        for m in range(M):
            ext1[m], ext2[m] = self._external(cfg, tau, np.roll(args, m, axis=0))
        self.ext1, self.ext2 = ext1, ext2

    def __call__(self, E: RadialFieldTable | None) -> AveragedFieldTable:
        if E is None:
            return AveragedFieldTable(self.ext1.copy(), self.ext2.copy())
        C = E.coeffs()  # (S, M)
        M = C.shape[1]
        Ck = np.moveaxis(C[:, self._idx], 0, 1)  # (l, S, m)
        w = np.concatenate([
            (self._sin[:, None, :] * Ck).reshape(-1, M),
            (self._cos[:, None, :] * Ck).reshape(-1, M),
        ], axis=1)
        S = self._matrix @ w  # (N, 2M)
        out1 = self.ext1 - S[:, :M].T.reshape(self._shape)
        out2 = self.ext2 + S[:, M:].T.reshape(self._shape)
        return AveragedFieldTable(out1, out2)


@lru_cache(maxsize=8)
def _uniform_poisson(grid, tau_grid):
    return UniformPoisson(grid, tau_grid)


@lru_cache(maxsize=8)
def _uniform_averager(cfg, grid, tau_grid):
    return UniformAverager(cfg, grid, tau_grid, grid_axes(grid)[0])


@lru_cache(maxsize=8)
def _mesh_averager(cfg, grid, tau_grid):
    return MeshAverager(cfg, grid, tau_grid)


def averaged_fields_uniform(E: RadialFieldTable | None, cfg: FocusingConfig, grid: PhaseGrid,
                            tau_grid: TauGrid | None = None) -> AveragedFieldTable:
    """Periodic-trapezoid tau averages at the uniform nodes; ``E=None`` means no self-field."""
    tau_grid = tau_grid or E.tau_grid
    return _uniform_averager(cfg, grid, tau_grid)(E)


def averaged_fields_mesh(E: RadialFieldTable | None, cfg: FocusingConfig, grid: PhaseGrid,
                         tau_grid: TauGrid) -> AveragedFieldTable:
    return _mesh_averager(cfg, grid, tau_grid)(E)
