import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from twoscale_sl.fields import FocusingConfig
from twoscale_sl.geometry import PhaseGrid, TauGrid, rotate, rotated_mesh
from twoscale_sl.scenarios import BeamParams, analytic_nonresonant, semi_gaussian
from twoscale_sl.twoscale_mesh import (ConfigError, MeshSolver, TwoScaleMeshState,
                                       init_mesh_state, readout_slice, reconstruct_f_mesh,
                                       step_mesh, time_step_multiple)
from twoscale_sl.twoscale_uniform import UniformSolver

from conftest import gauss2


def test_time_step_multiple(tau16):
    dt = 1e-2 * tau16.dtau * 5
    assert time_step_multiple(dt, 1e-2, tau16) == 5
    with pytest.raises(ConfigError):
        time_step_multiple(dt * 1.01, 1e-2, tau16)
    with pytest.raises(ConfigError):
        time_step_multiple(0.0, 1e-2, tau16)
    with pytest.raises(ConfigError):
        MeshSolver(FocusingConfig(1e-2, 2.0, True), PhaseGrid(3, 3, 8, 8), tau16, 1.5)


@given(st.integers(0, 5000), st.integers(1, 12), st.integers(1, 30))
def test_readout_slice_tracks_fast_phase(n, K, P_tau):
    tg = TauGrid(P_tau)
    m = readout_slice(n, K, tg)
    phase = np.mod(n * K * tg.dtau, 2 * np.pi)
    assert 0 <= m < tg.size
    assert min(abs(tg.tau[m] - phase), 2 * np.pi - abs(tg.tau[m] - phase)) < 1e-9


def test_initial_tables(stationary_linear):
    grid = PhaseGrid(3.0, 3.0, 16, 16)
    tg = TauGrid(3)  # slices at 0, pi/2, pi, 3pi/2
    b = BeamParams()
    solver = MeshSolver(stationary_linear, grid, tg, 1)
    G0 = solver.initial_table(lambda r, v: semi_gaussian(r, v, b))
    r, v = grid.mesh()
    np.testing.assert_allclose(G0[0], semi_gaussian(r, v, b) / (2 * np.pi))
    # slice at pi/2 holds f0(-v_j, r_i)
    np.testing.assert_allclose(G0[1], G0[0][::-1, :].T, atol=1e-14)
    sym = solver.initial_table(lambda a, c: gauss2(a, c))
    for m in range(tg.size):
        np.testing.assert_allclose(sym[m], sym[0], atol=1e-15)


def test_stationary_case_is_exact(tau16, stationary_linear):
    grid = PhaseGrid(3.0, 3.0, 16, 16)
    b = BeamParams()
    st0 = init_mesh_state(lambda r, v: semi_gaussian(r, v, b), grid, tau16, stationary_linear,
                          1e-2 * tau16.dtau * 2)
    G0 = st0.G_prev
    np.testing.assert_allclose(st0.G_curr, G0, atol=1e-12)
    s = st0
    for _ in range(10):
        s = step_mesh(s, stationary_linear, grid, tau16)
    np.testing.assert_allclose(s.G_curr, G0, atol=1e-12)


def test_stationary_reconstruction_is_exact_rotation(tau16, stationary_linear):
    grid = PhaseGrid(3.0, 3.0, 16, 16)
    b = BeamParams()
    solver = MeshSolver(stationary_linear, grid, tau16, 2)
    s = solver.init_state(lambda r, v: semi_gaussian(r, v, b))
    r, v = grid.mesh()
    for _ in range(12):
        s = solver.step(s)
        exact = analytic_nonresonant(r, v, s.t, 1e-2, b)
        assert np.abs(solver.reconstruct(s) - exact).sum() * grid.dr * grid.dvr <= 1e-10


def test_resonant_slices_follow_rotation(tau16, resonant_linear):
    grid = PhaseGrid(3.0, 3.0, 48, 48)
    f0 = lambda a, b: gauss2(a - 0.5, b, 0.4)
    solver = MeshSolver(resonant_linear, grid, tau16, 4)
    s = solver.init_state(f0)
    for _ in range(9):
        s = solver.step(s)
    q, u = rotated_mesh(grid, tau16)
    c, si = np.cos(s.t / 4), np.sin(s.t / 4)
    exact = f0(c * q + si * u, -si * q + c * u) / (2 * np.pi)
    err = np.abs(s.G_curr - exact).sum(axis=(1, 2)) * grid.dr * grid.dvr
    assert err.max() < 2e-4


def test_slice_zero_matches_uniform_solver(tau16, resonant_linear):
    grid = PhaseGrid(3.0, 3.0, 24, 24)
    f0 = lambda a, b: gauss2(a - 0.5, b + 0.2, 0.4)
    K = 3
    mesh = MeshSolver(resonant_linear, grid, tau16, K)
    uni = UniformSolver(resonant_linear, grid, tau16, mesh.dt)
    sm = mesh.init_state(f0)
    r, v = grid.mesh()
    su = uni.init_state(f0(r, v) / (2 * np.pi))
    for _ in range(4):
        sm, su = mesh.step(sm), uni.step(su)
    np.testing.assert_allclose(sm.G_curr[0], su.G_curr, atol=1e-12)


def test_symmetric_profile_slices_stay_identical(tau16, resonant_linear):
    grid = PhaseGrid(3.0, 3.0, 24, 24)
    solver = MeshSolver(resonant_linear, grid, tau16, 2)
    s = solver.init_state(lambda a, b: gauss2(a, b, 0.5))
    for _ in range(5):
        s = solver.step(s)
        for m in range(1, tau16.size):
            np.testing.assert_allclose(s.G_curr[m], s.G_curr[0], atol=1e-12)


def test_symmetric_profile_reconstruction_is_step_independent(tau16, stationary_linear):
    grid = PhaseGrid(3.0, 3.0, 24, 24)
    solver = MeshSolver(stationary_linear, grid, tau16, 3)
    s = solver.init_state(lambda a, b: gauss2(a, b, 0.5))
    first = solver.reconstruct(s)
    for _ in range(7):
        s = solver.step(s)
        np.testing.assert_allclose(solver.reconstruct(s), first, atol=1e-12)


def test_reconstruction_is_table_lookup(tau16):
    G = np.random.default_rng(0).random((tau16.size, 5, 5))
    s = TwoScaleMeshState(G, G, 0.0, 0.1, 17, 1)
    np.testing.assert_array_equal(reconstruct_f_mesh(s, tau16), 2 * np.pi * G[0])
    s = TwoScaleMeshState(G, G, 0.0, 0.1, 3, 2)
    np.testing.assert_array_equal(reconstruct_f_mesh(s, tau16), 2 * np.pi * G[6])


def test_reconstruct_rejects_foreign_grid(tau16, stationary_linear):
    solver = MeshSolver(stationary_linear, PhaseGrid(3, 3, 8, 8), tau16, 1)
    s = solver.init_state(lambda a, b: gauss2(a, b))
    with pytest.raises(ConfigError):
        solver.reconstruct(s, PhaseGrid(3, 3, 16, 16))


def test_nonlinear_slices_conserve_mass(tau16):
    cfg = FocusingConfig(1e-2, 2.0, True, "cos2")
    grid = PhaseGrid(3.0, 3.0, 32, 32)
    solver = MeshSolver(cfg, grid, tau16, 2)
    s = solver.init_state(lambda a, b: gauss2(a, b, 0.4))
    m0 = s.G_prev.sum(axis=(1, 2))
    for _ in range(10):
        s = solver.step(s)
    assert np.all(np.isfinite(s.G_curr))
    np.testing.assert_allclose(s.G_curr.sum(axis=(1, 2)) / m0, 1.0, atol=1e-3)
