"""Classical backward semi-Lagrangian scheme with v-r-v splitting.

Works directly on the eps-dependent system, so the time step has to resolve
the fast rotation: dt = O(eps).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .fields import FocusingConfig, external_field, radial_field
from .geometry import PhaseGrid
from .spline import evaluate_rows, grid_axes, natural_coeffs


@dataclass(frozen=True)
class ClassicalState:
    f: np.ndarray
    E: np.ndarray
    t: float
    dt: float
    step: int = 0
    escaped: float = 0.0  # cumulative mass carried out of the box


def cfl_timestep(grid: PhaseGrid, cfg: FocusingConfig, field_bound: float) -> float:
    """Largest dt keeping every backward displacement within one cell.

    r moves by dt*vR/eps and v by (dt/2)*field_bound per substep; both must
    stay below a cell, which makes dt proportional to eps.
    """
    if not (grid.dr > 0 and grid.dvr > 0 and grid.vR > 0 and cfg.eps > 0):
        raise ValueError("grid spacings, vR and eps must be positive")
    if not field_bound > 0:
        raise ValueError(f"field_bound must be positive, got {field_bound}")
    return min(cfg.eps * grid.dr / grid.vR, 2.0 * grid.dvr / field_bound)


def field_bound_estimate(grid: PhaseGrid, cfg: FocusingConfig, n0: float) -> float:
    """Upper bound of |E + Xi| on the box for a beam of density scale ``n0``."""
    h1 = float(np.max(np.abs(cfg.tension(np.linspace(0.0, 2.0 * np.pi, 257)))))
    self_bound = 0.5 * n0 * grid.R if cfg.self_field else 0.0
    return (cfg.H0 / cfg.eps + h1) * grid.R + self_bound


def _leaving(x, lo, hi):
    return (x < lo - 1e-10 * abs(lo)) | (x > hi + 1e-10 * abs(hi))


def advect_v(f, shift, grid: PhaseGrid):
    """f*(r_i, v_j) = Pi_v f(r_i, v_j - shift_i); returns (f*, escaped mass)."""
    f = np.asarray(f, dtype=float)
    shift = np.asarray(shift, dtype=float)
    ax = grid_axes(grid)[1]
    v = grid.v
    c = natural_coeffs(f, 1)
    out = evaluate_rows(c, ax, v[None, :] - shift[:, None])
    gone = _leaving(v[None, :] + shift[:, None], v[0], v[-1])
    return out, float(np.sum(f[gone])) * grid.dr * grid.dvr


def advect_r(f, dt: float, eps: float, grid: PhaseGrid):
    """f**(r_i, v_j) = Pi_r f*(r_i - (dt/eps) v_j, v_j); returns (f**, escaped mass)."""
    f = np.asarray(f, dtype=float)
    ax = grid_axes(grid)[0]
    r = grid.r
    shift = (dt / eps) * grid.v
    c = natural_coeffs(f, 0)
    out = evaluate_rows(c.T, ax, r[None, :] - shift[:, None]).T
    gone = _leaving(r[:, None] + shift[None, :], r[0], r[-1])
    return out, float(np.sum(f[gone])) * grid.dr * grid.dvr


def classical_field(f, grid: PhaseGrid) -> np.ndarray:
    P = grid.P_r
    return radial_field(np.asarray(f)[P:, :], grid.dr, grid.dvr)


def init_classical(f0, grid: PhaseGrid, cfg: FocusingConfig, dt: float) -> ClassicalState:
    r, v = grid.mesh()
    f = np.asarray(f0(r, v), dtype=float) * np.ones(grid.shape)
    if not np.all(np.isfinite(f)):
        raise ValueError("initial distribution is not finite on the grid")
    E = classical_field(f, grid) if cfg.self_field else np.zeros(grid.shape[0])
    return ClassicalState(f, E, 0.0, dt, 0, 0.0)


def step_classical(state: ClassicalState, cfg: FocusingConfig, grid: PhaseGrid) -> ClassicalState:
    dt = state.dt
    r = grid.r
    t0, t1 = state.t, state.t + dt
    lost = 0.0
    f, m = advect_v(state.f, 0.5 * dt * (state.E + external_field(cfg, r, t0)), grid)
    lost += m
    f, m = advect_r(f, dt, cfg.eps, grid)
    lost += m
    E = classical_field(f, grid) if cfg.self_field else state.E
    f, m = advect_v(f, 0.5 * dt * (E + external_field(cfg, r, t1)), grid)
    lost += m
    return replace(state, f=f, E=E, t=t1, step=state.step + 1, escaped=state.escaped + lost)


class ClassicalSolver:
    def __init__(self, cfg: FocusingConfig, grid: PhaseGrid, dt: float):
        if not dt > 0:
            raise ValueError(f"dt must be positive, got {dt}")
        self.cfg = cfg
        self.grid = grid
        self.dt = dt

    def init_state(self, f0) -> ClassicalState:
        return init_classical(f0, self.grid, self.cfg, self.dt)

    def step(self, state: ClassicalState) -> ClassicalState:
        return step_classical(state, self.cfg, self.grid)

    def reconstruct(self, state: ClassicalState, out_grid: PhaseGrid | None = None):
        if out_grid is None or out_grid.same_as(self.grid):
            return state.f
        r, v = out_grid.mesh()
        from .spline import fit_2d

        return fit_2d(state.f, self.grid)(r, v)


def substeps(dt_twoscale: float, dt_cfl: float) -> int:
    """Smallest N with dt_twoscale / N within the CFL bound."""
    return max(1, math.ceil(dt_twoscale / dt_cfl - 1e-12))
