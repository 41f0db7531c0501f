"""Two-scale semi-Lagrangian scheme on a uniform (q, u_r) mesh.

G is advanced with a two-level leapfrog: fields built from G^n move G^{n-1}
to G^{n+1} along shifted characteristics.  The physical distribution is
read back by interpolating G at rotated points.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .fields import AveragedFieldTable, FocusingConfig, UniformAverager, UniformPoisson
from .geometry import PhaseGrid, TauGrid, rotate
from .shifts import solve_shifts
from .spline import evaluate_2d, fit_2d, grid_axes, node_gradient


@dataclass(frozen=True)
class TwoScaleUniformState:
    G_prev: np.ndarray
    G_curr: np.ndarray
    t: float
    dt: float
    step: int
    escaped_prev: float = 0.0
    escaped: float = 0.0  # cumulative mass carried out of the box along each leapfrog chain


def compute_shifts_uniform(avg: AveragedFieldTable, grid: PhaseGrid, dt: float):
    """Shifts (d1, d2) at every node from the averaged fields."""
    s = fit_2d(np.stack([avg.values1, avg.values2]), grid)
    gx, gy = node_gradient(s.coeffs, s.ax0, s.ax1)
    J11, J12, J21, J22 = gx[0], gy[0], gx[1], gy[1]
    return solve_shifts(avg.values1, avg.values2, J11, J12, J21, J22, dt)


class UniformSolver:
    def __init__(self, cfg: FocusingConfig, grid: PhaseGrid, tau_grid: TauGrid, dt: float):
        if not dt >= 0:
            raise ValueError(f"dt must be nonnegative, got {dt}")
        self.cfg = cfg
        self.grid = grid
        self.tau_grid = tau_grid
        self.dt = dt
        self.poisson = UniformPoisson(grid, tau_grid) if cfg.self_field else None
        self.averager = UniformAverager(cfg, grid, tau_grid, grid_axes(grid)[0])
        self._q, self._u = grid.mesh()
        self._axes = grid_axes(grid)
        self._feet_cache: dict[float, tuple] = {}

    def _feet(self, G_n, step_dt: float):
        if self.poisson is None and step_dt in self._feet_cache:
            return self._feet_cache[step_dt]
        E = self.poisson(fit_2d(G_n, self.grid).coeffs) if self.poisson else None
        avg = self.averager(E)
        d1, d2 = compute_shifts_uniform(avg, self.grid, step_dt)
        feet = (self._q - 2.0 * d1, self._u - 2.0 * d2,
                self.grid.outside(self._q + 2.0 * d1, self._u + 2.0 * d2))
        if self.poisson is None:
            # without self-field the shifts never change
            self._feet_cache[step_dt] = feet
        return feet

    def advance(self, G_prev, G_n, step_dt: float):
        """G^{n+1} from G^{n-1} with fields of G^n, and the mass that left the box."""
        if step_dt == 0:
            return np.array(G_prev, dtype=float), 0.0
        fq, fu, gone = self._feet(G_n, step_dt)
        G_next = evaluate_2d(fit_2d(G_prev, self.grid).coeffs, *self._axes, fq, fu)
        lost = 2.0 * np.pi * float(np.sum(G_prev[gone])) * self.grid.dr * self.grid.dvr
        return G_next, lost

    def init_state(self, G0) -> TwoScaleUniformState:
        G0 = np.asarray(G0, dtype=float)
        if G0.shape != self.grid.shape or not np.all(np.isfinite(G0)):
            raise ValueError("G0 must be a finite table on the grid")
        # half step with G^{1/2} = G^0
        G1, lost = self.advance(G0, G0, 0.5 * self.dt)
        return TwoScaleUniformState(G0, G1, self.dt, self.dt, 1, 0.0, lost)

    def step(self, state: TwoScaleUniformState) -> TwoScaleUniformState:
        G_next, lost = self.advance(state.G_prev, state.G_curr, self.dt)
        n = state.step + 1
        return replace(state, G_prev=state.G_curr, G_curr=G_next, t=n * self.dt, step=n,
                       escaped_prev=state.escaped, escaped=state.escaped_prev + lost)

    def reconstruct(self, state: TwoScaleUniformState, out_grid: PhaseGrid):
        return reconstruct_f_uniform(state, self.cfg.eps, self.grid, out_grid)


def leapfrog_step_uniform(state, cfg, grid, tau_grid):
    return UniformSolver(cfg, grid, tau_grid, state.dt).step(state)


def init_half_step_uniform(G0, cfg, grid, tau_grid, dt):
    return UniformSolver(cfg, grid, tau_grid, dt).init_state(G0)


def reconstruct_f_uniform(state, eps: float, grid: PhaseGrid, out_grid: PhaseGrid):
    """f(r, v, t) ~ 2 pi G(gamma(r, v, t/eps)) on ``out_grid``."""
    r, v = out_grid.mesh()
    q, u = rotate(r, v, state.t / eps)
    return 2.0 * np.pi * fit_2d(state.G_curr, grid)(q, u)
