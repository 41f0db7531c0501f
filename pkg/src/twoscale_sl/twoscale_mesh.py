"""Two-scale semi-Lagrangian scheme on the rotated meshes M(Omega(tau_m)).

G is stored at ``gamma(r_i, v_j, tau_m)`` for every fast-phase node, in
slice-major tables of shape ``(M, Nr, Nv)``.  The Poisson solve and the
readout of f are then pure table reads; interpolation only happens when
averaging the field and when fetching G at the characteristic feet.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .fields import FocusingConfig, MeshAverager, self_field_twoscale_mesh
from .geometry import PhaseGrid, TauGrid, rotated_mesh
from .shifts import solve_shifts
from .spline import evaluate_2d, fit_2d, grid_axes, node_gradient


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TwoScaleMeshState:
    G_prev: np.ndarray
    G_curr: np.ndarray
    t: float
    dt: float
    step: int
    K: int
    escaped_prev: float = 0.0
    escaped: float = 0.0  # cumulative mass carried out of the box along each leapfrog chain


def time_step_multiple(dt: float, eps: float, tau_grid: TauGrid) -> int:
    """Integer K with dt = eps * dtau * K, or ConfigError."""
    K = dt / (eps * tau_grid.dtau)
    Kr = round(K)
    if Kr < 1 or abs(K - Kr) > 1e-9 * max(K, 1.0):
        raise ConfigError(
            f"dt={dt!r} is not a positive integer multiple of eps*dtau={eps * tau_grid.dtau!r}"
        )
    return int(Kr)


class MeshSolver:
    def __init__(self, cfg: FocusingConfig, grid: PhaseGrid, tau_grid: TauGrid, K: int):
        if int(K) != K or K < 1:
            raise ConfigError(f"K must be a positive integer, got {K!r}")
        self.cfg = cfg
        self.grid = grid
        self.tau_grid = tau_grid
        self.K = int(K)
        self.dt = cfg.eps * tau_grid.dtau * self.K
        self.averager = MeshAverager(cfg, grid, tau_grid)
        M = tau_grid.size
        r, v = grid.mesh()
        self._r = np.broadcast_to(r, (M,) + r.shape)
        self._v = np.broadcast_to(v, (M,) + v.shape)
        self._sl = np.arange(M)[:, None, None]
        self._cos = np.cos(tau_grid.tau)[:, None, None]
        self._sin = np.sin(tau_grid.tau)[:, None, None]
        self._axes = grid_axes(grid)
        self._feet_cache: dict[float, tuple] = {}

    def _fit(self, table):
        return fit_2d(table, self.grid).coeffs

    def shifts(self, G_n, step_dt: float):
        """Shifts d(r_i, v_j, tau_m) in (q, u) coordinates, shape (M, Nr, Nv) each."""
        E = self_field_twoscale_mesh(G_n, self.grid, self.tau_grid) if self.cfg.self_field else None
        avg = self.averager(E)
        # gradients of Pi_2^m in slice coordinates, rotated into (q, u)
        g1r, g1v = node_gradient(self._fit(avg.values1), *self._axes)
        g2r, g2v = node_gradient(self._fit(avg.values2), *self._axes)
        c, s = self._cos, self._sin
        return solve_shifts(
            avg.values1, avg.values2,
            c * g1r - s * g1v, s * g1r + c * g1v,
            c * g2r - s * g2v, s * g2r + c * g2v,
            step_dt,
        )

    def _feet(self, G_n, step_dt: float):
        if not self.cfg.self_field and step_dt in self._feet_cache:
            return self._feet_cache[step_dt]
        d1, d2 = self.shifts(G_n, step_dt)
        c, s = self._cos, self._sin
        # foot gamma(node) - 2d, expressed back in slice coordinates
        sr, sv = 2.0 * (c * d1 + s * d2), 2.0 * (-s * d1 + c * d2)
        feet = (self._r - sr, self._v - sv, self.grid.outside(self._r + sr, self._v + sv))
        if not self.cfg.self_field:
            self._feet_cache[step_dt] = feet
        return feet

    def advance(self, G_prev, G_n, step_dt: float):
        """G^{n+1} from G^{n-1} with fields of G^n, and the slice-averaged mass that left the box."""
        fr, fv, gone = self._feet(G_n, step_dt)
        G_next = evaluate_2d(self._fit(G_prev), *self._axes, fr, fv, sl=self._sl)
        lost = 2.0 * np.pi * float(np.sum(G_prev[gone])) * self.grid.dr * self.grid.dvr
        return G_next, lost / G_prev.shape[0]

    def initial_table(self, f0) -> np.ndarray:
        q, u = rotated_mesh(self.grid, self.tau_grid)
        return np.asarray(f0(q, u), dtype=float) * np.ones_like(q) / (2.0 * np.pi)

    def init_state(self, f0) -> TwoScaleMeshState:
        G0 = self.initial_table(f0)
        if not np.all(np.isfinite(G0)):
            raise ValueError("initial distribution is not finite on the rotated meshes")
        G1, lost = self.advance(G0, G0, 0.5 * self.dt)
        return TwoScaleMeshState(G0, G1, self.dt, self.dt, 1, self.K, 0.0, lost)

    def step(self, state: TwoScaleMeshState) -> TwoScaleMeshState:
        G_next, lost = self.advance(state.G_prev, state.G_curr, self.dt)
        n = state.step + 1
        return replace(state, G_prev=state.G_curr, G_curr=G_next, t=n * self.dt, step=n,
                       escaped_prev=state.escaped, escaped=state.escaped_prev + lost)

    def reconstruct(self, state: TwoScaleMeshState, out_grid: PhaseGrid | None = None):
        if out_grid is not None and not out_grid.same_as(self.grid):
            raise ConfigError("the two-scale mesh solver only reads f back on its own grid")
        return reconstruct_f_mesh(state, self.tau_grid)


def readout_slice(step: int, K: int, tau_grid: TauGrid) -> int:
    """Slice whose phase equals t_n/eps modulo 2 pi."""
    return (step * K) % tau_grid.size


def reconstruct_f_mesh(state: TwoScaleMeshState, tau_grid: TauGrid) -> np.ndarray:
    """2 pi G^n on the slice aligned with t_n/eps: a table lookup."""
    return 2.0 * np.pi * state.G_curr[readout_slice(state.step, state.K, tau_grid)]


def init_mesh_state(f0, grid, tau_grid, cfg, dt) -> TwoScaleMeshState:
    K = time_step_multiple(dt, cfg.eps, tau_grid)
    return MeshSolver(cfg, grid, tau_grid, K).init_state(f0)


def step_mesh(state, cfg, grid, tau_grid) -> TwoScaleMeshState:
    return MeshSolver(cfg, grid, tau_grid, state.K).step(state)
