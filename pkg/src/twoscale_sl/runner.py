"""Run configuration, simulation driver and file output."""
from __future__ import annotations

import csv
import dataclasses
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .classical import ClassicalSolver, cfl_timestep, field_bound_estimate, substeps
from .diagnostics import DiagnosticSeries, l1_distance, record_step
from .fields import FocusingConfig
from .geometry import PhaseGrid, TauGrid
from .scenarios import ANALYTIC, CLASSICAL_N, BeamParams, initial_distribution, load_preset
from .twoscale_mesh import MeshSolver, time_step_multiple
from .twoscale_uniform import UniformSolver

SOLVERS = ("classical", "twoscale-uniform", "twoscale-mesh")


class RunError(RuntimeError):
    """Numerical failure during a run; carries the step index."""

    def __init__(self, step: int, cause: Exception):
        super().__init__(f"run aborted at step {step}: {cause}")
        self.step = step
        self.cause = cause


@dataclass(frozen=True)
class RunConfig:
    """Flat run description; every field can be overridden from a JSON file."""

    solver: str
    P_r: int
    P_vr: int
    P_tau: int
    R: float = 3.0
    vR: float = 3.0
    out_P: int | None = None
    enlarge: bool = True  # uniform two-scale runs work on [-R-vR, R+vR]^2
    eps: float = 1e-2
    omega1: float = 4.0 * math.sqrt(2.0)
    omega1_rational: bool = False
    H1: str = "cos"
    H0: float = 1.0
    self_field: bool = True
    n0: float = 4.0
    rm: float = 0.75
    vth: float = 0.1
    profile: str = "semi-gaussian"
    K: int = 2
    N: int | None = None
    T: float = 6.93
    snapshots: tuple = ()
    analytic: str | None = None
    preset: str | None = None
    case: str | None = None
    out_dir: str = "out"
    threads: int | None = None

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise ValueError(f"solver must be one of {SOLVERS}, got {self.solver!r}")
        if int(self.K) != self.K or self.K < 1:
            raise ValueError(f"K must be a positive integer (dt = eps*dtau*K), got {self.K!r}")
        if self.N is not None and (int(self.N) != self.N or self.N < 1):
            raise ValueError(f"N must be a positive integer, got {self.N!r}")
        if not self.T >= 0:
            raise ValueError(f"T must be nonnegative, got {self.T}")
        if self.analytic is not None and self.analytic not in ANALYTIC:
            raise ValueError(f"analytic must be one of {sorted(ANALYTIC)}, got {self.analytic!r}")
        if self.threads is not None and self.threads < 1:
            raise ValueError(f"threads must be >= 1, got {self.threads}")
        object.__setattr__(self, "snapshots", tuple(float(s) for s in self.snapshots))

    @classmethod
    def from_preset(cls, name: str, case: str | None = None, **overrides) -> "RunConfig":
        p = load_preset(name, case)
        c = p.case_params
        cfg = cls(
            solver=p.solver, P_r=p.P, P_vr=p.P, P_tau=p.P_tau, R=p.R, vR=p.vR, out_P=p.out_P,
            eps=p.eps, omega1=c.omega1, omega1_rational=c.omega1_rational, H1=c.H1, H0=p.H0,
            self_field=p.self_field, n0=p.n0, rm=c.rm, vth=p.vth, K=c.K, N=p.N, T=c.T,
            snapshots=c.snapshots,
            analytic={"cos-linear": "nonresonant", "cos2-linear": "resonant"}.get(p.case),
            preset=p.name, case=p.case,
        )
        return cfg.with_overrides(overrides) if overrides else cfg

    def with_overrides(self, values: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(self)}
        unknown = sorted(set(values) - names)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        return dataclasses.replace(self, **values)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["snapshots"] = list(self.snapshots)
        return d

    @property
    def focusing(self) -> FocusingConfig:
        return FocusingConfig(self.eps, self.omega1, self.omega1_rational, self.H1, self.H0,
                              self.self_field)

    @property
    def beam(self) -> BeamParams:
        return BeamParams(self.n0, self.rm, self.vth, self.profile)

    @property
    def tau_grid(self) -> TauGrid:
        return TauGrid(self.P_tau)

    @property
    def output_grid(self) -> PhaseGrid:
        P = self.out_P if self.out_P is not None else self.P_r
        Pv = self.out_P if self.out_P is not None else self.P_vr
        return PhaseGrid(self.R, self.vR, P, Pv)

    @property
    def working_grid(self) -> PhaseGrid:
        if self.solver == "twoscale-uniform" and self.enlarge:
            w = self.R + self.vR
            return PhaseGrid(w, w, self.P_r, self.P_vr)
        return PhaseGrid(self.R, self.vR, self.P_r, self.P_vr)

    @property
    def dt_twoscale(self) -> float:
        return self.eps * self.tau_grid.dtau * self.K

    @property
    def twoscale_steps(self) -> int:
        return int(round(self.T / self.dt_twoscale))

    def classical_N(self) -> int:
        """Substeps per two-scale step: explicit N, the tabulated value, or the CFL bound."""
        if self.N is not None:
            return int(self.N)
        if self.preset is not None and (self.preset, self.case) in CLASSICAL_N:
            return CLASSICAL_N[(self.preset, self.case)]
        return substeps(self.dt_twoscale, self.cfl_dt())

    def cfl_dt(self) -> float:
        grid = self.working_grid
        return cfl_timestep(grid, self.focusing, field_bound_estimate(grid, self.focusing, self.n0))

    @property
    def dt(self) -> float:
        if self.solver == "classical":
            return self.dt_twoscale / self.classical_N()
        return self.dt_twoscale

    @property
    def steps(self) -> int:
        if self.solver == "classical":
            return self.twoscale_steps * self.classical_N()
        return self.twoscale_steps

    def validate(self):
        if self.solver == "classical":
            bound = self.cfl_dt()
            if self.dt > bound * (1.0 + 1e-9):
                raise ValueError(
                    f"classical dt={self.dt:.6g} violates the CFL bound {bound:.6g}; "
                    f"raise N to at least {substeps(self.dt_twoscale, bound)}"
                )
        if self.solver == "twoscale-mesh":
            time_step_multiple(self.dt, self.eps, self.tau_grid)
            if self.out_P is not None and self.out_P != self.P_r:
                raise ValueError("the two-scale mesh solver writes snapshots on its own grid; drop out_P")
        return self

    def manifest(self) -> dict:
        d = self.to_dict()
        d.update(
            dt=self.dt, steps=self.steps, dtau=self.tau_grid.dtau, dt_twoscale=self.dt_twoscale,
            twoscale_steps=self.twoscale_steps,
            N=self.classical_N() if self.solver == "classical" else None,
            working_grid=list(self.working_grid.shape), output_grid=list(self.output_grid.shape),
        )
        return d


def load_config(path: str | Path, base: RunConfig | None = None) -> RunConfig:
    """Read a flat JSON config; ``preset``/``case`` keys select the base when none is given."""
    data = json.loads(Path(path).read_text())
    if not isinstance(data, dict):
        raise ValueError("config file must hold a JSON object")
    if base is None:
        if "preset" not in data:
            raise ValueError("config needs a 'preset' key or an explicit base preset")
        base = RunConfig.from_preset(data["preset"], data.get("case"))
        data = {k: v for k, v in data.items() if k not in ("preset", "case")}
    return base.with_overrides(data)


def set_threads(n: int | None):
    import numba

    n = numba.config.NUMBA_NUM_THREADS if n is None else min(int(n), numba.config.NUMBA_NUM_THREADS)
    numba.set_num_threads(max(1, n))


def make_solver(cfg: RunConfig):
    fc = cfg.focusing
    grid = cfg.working_grid
    if cfg.solver == "classical":
        return ClassicalSolver(fc, grid, cfg.dt)
    if cfg.solver == "twoscale-uniform":
        return UniformSolver(fc, grid, cfg.tau_grid, cfg.dt)
    return MeshSolver(fc, grid, cfg.tau_grid, cfg.K)


@dataclass
class RunResult:
    config: RunConfig
    series: DiagnosticSeries
    snapshots: dict = field(default_factory=dict)  # step -> (t, f on output grid)
    out_dir: Path | None = None


def _snapshot_steps(cfg: RunConfig) -> set[int]:
    """Two-scale step indices carrying a snapshot: start, scheduled times, end."""
    n = cfg.twoscale_steps
    marks = {0, n}
    for ts in cfg.snapshots:
        if 0 <= ts <= cfg.T + 0.5 * cfg.dt_twoscale:
            marks.add(min(n, int(round(ts / cfg.dt_twoscale))))
    return marks


def simulate(cfg: RunConfig):
    """Drive one run; yields ``(macro_step, t, f_out, escaped)`` at every two-scale step.

    Classical runs take ``N`` substeps per macro step.
    """
    cfg.validate()
    set_threads(cfg.threads)
    solver = make_solver(cfg)
    f0 = initial_distribution(cfg.beam)
    out = cfg.output_grid
    n_macro = cfg.twoscale_steps

    if cfg.solver == "classical":
        state = solver.init_state(f0)
        yield 0, 0.0, solver.reconstruct(state, out), 0.0
        N = cfg.classical_N()
        for n in range(1, n_macro + 1):
            for _ in range(N):
                state = solver.step(state)
            # exact macro time, free of accumulated rounding
            yield n, n * cfg.dt_twoscale, solver.reconstruct(state, out), state.escaped
        return

    grid = solver.grid
    if cfg.solver == "twoscale-mesh":
        f_init = solver.initial_table(f0)[0] * 2.0 * np.pi
    else:
        r, v = out.mesh()
        f_init = np.asarray(f0(r, v), dtype=float) * np.ones(out.shape)
    yield 0, 0.0, f_init, 0.0
    if n_macro == 0:
        return
    if cfg.solver == "twoscale-mesh":
        state = solver.init_state(f0)
    else:
        r, v = grid.mesh()
        state = solver.init_state(np.asarray(f0(r, v), dtype=float) * np.ones(grid.shape) / (2.0 * np.pi))
    yield 1, state.t, solver.reconstruct(state, out), state.escaped
    for n in range(2, n_macro + 1):
        try:
            state = solver.step(state)
        except FloatingPointError as exc:
            raise RunError(n, exc) from exc
        yield n, state.t, solver.reconstruct(state, out), state.escaped


def run(cfg: RunConfig, out_dir: str | Path | None = None, write: bool = True) -> RunResult:
    """Run to ``T``, write snapshots, ``diagnostics.csv`` and ``run.json``."""
    out_dir = Path(out_dir if out_dir is not None else cfg.out_dir)
    grid = cfg.output_grid
    sampler = None if cfg.analytic is None else ANALYTIC[cfg.analytic]
    beam = cfg.beam
    marks = _snapshot_steps(cfg)
    series = DiagnosticSeries()
    result = RunResult(cfg, series, out_dir=out_dir if write else None)
    if write:
        out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    for n, t, f, escaped in simulate(cfg):
        samp = None if sampler is None else (lambda r, v, t=t: sampler(r, v, t, cfg.eps, beam))
        record_step(series, t, f, grid, escaped, samp)
        if n in marks:
            result.snapshots[n] = (t, f)
            if write:
                write_snapshot(out_dir / f"snapshot_{len(result.snapshots) - 1:04d}.csv", t, f, grid)
    if write:
        write_diagnostics(out_dir / "diagnostics.csv", series)
        man = cfg.manifest()
        man["out_dir"] = str(out_dir)
        man["snapshot_files"] = sorted(p.name for p in out_dir.glob("snapshot_*.csv"))
        man["elapsed_seconds"] = time.perf_counter() - t0
        (out_dir / "run.json").write_text(json.dumps(man, indent=2, sort_keys=True))
    return result


def _fmt(x: float) -> str:
    return repr(float(x))


def write_snapshot(path: Path, t: float, f, grid: PhaseGrid):
    r, v = grid.mesh()
    with open(path, "w", newline="") as fh:
        fh.write(f"# t={_fmt(t)}\n")
        fh.write(f"# grid={grid.P_r}x{grid.P_vr}\n")
        w = csv.writer(fh, lineterminator="\n")
        for a, b, c in zip(r.ravel(), v.ravel(), np.asarray(f).ravel()):
            w.writerow((_fmt(a), _fmt(b), _fmt(c)))


def read_snapshot(path: Path):
    """Returns ``(t, (P_r, P_vr), r, v, f)`` with tables reshaped to the grid."""
    with open(path) as fh:
        t = float(fh.readline().split("=", 1)[1])
        P_r, P_vr = (int(x) for x in fh.readline().split("=", 1)[1].split("x"))
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    shape = (2 * P_r + 1, 2 * P_vr + 1)
    if data.shape[0] != shape[0] * shape[1]:
        raise ValueError(f"{path}: {data.shape[0]} rows for a {shape[0]}x{shape[1]} grid")
    return t, (P_r, P_vr), data[:, 0].reshape(shape), data[:, 1].reshape(shape), data[:, 2].reshape(shape)


def snapshot_grid(r, v, P: tuple[int, int]) -> PhaseGrid:
    P_r, P_vr = P
    return PhaseGrid(float(r[-1, 0]) * (P_r + 1) / P_r, float(v[0, -1]) * (P_vr + 1) / P_vr, P_r, P_vr)


def write_diagnostics(path: Path, series: DiagnosticSeries):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("t", "l1_error", "mass", "escaped_mass", "max_abs"))
        for t, e, m, x, a in series.rows():
            w.writerow((_fmt(t), "" if e is None else _fmt(e), _fmt(m), _fmt(x), _fmt(a)))


def read_diagnostics(path: Path) -> dict:
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    return {k: [None if r[k] == "" else float(r[k]) for r in rows] for k in rows[0]} if rows else {}


def compare_dirs(a: str | Path, b: str | Path | None = None, analytic: str | None = None,
                 eps: float | None = None, beam: BeamParams | None = None) -> list[dict]:
    """Per-snapshot L1 distances between two run directories, or one run and an analytic solution."""
    a = Path(a)
    files = sorted(a.glob("snapshot_*.csv"))
    if not files:
        raise ValueError(f"no snapshots in {a}")
    if (b is None) == (analytic is None):
        raise ValueError("give exactly one of b or analytic")
    if analytic is not None:
        man = json.loads((a / "run.json").read_text())
        eps = man["eps"] if eps is None else eps
        beam = beam or BeamParams(man["n0"], man["rm"], man["vth"], man["profile"])
        fn = ANALYTIC[analytic]
    rows = []
    for fa in files:
        t, P, r, v, f = read_snapshot(fa)
        grid = snapshot_grid(r, v, P)
        if analytic is not None:
            d = l1_distance(f, fn(r, v, t, eps, beam), grid)
            rows.append({"snapshot": fa.name, "t": t, "t_b": t, "l1": d})
            continue
        fb = Path(b) / fa.name
        if not fb.exists():
            raise ValueError(f"{fb} missing")
        tb, Pb, rb, vb, g = read_snapshot(fb)
        if Pb != P or not np.allclose(r, rb, rtol=0, atol=1e-12) or not np.allclose(v, vb, rtol=0, atol=1e-12):
            raise ValueError(f"grid mismatch between {fa} ({P}) and {fb} ({Pb})")
        rows.append({"snapshot": fa.name, "t": t, "t_b": tb, "l1": l1_distance(f, g, grid)})
    return rows


def write_report(path: Path, rows: list[dict]):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("snapshot", "t", "t_b", "l1"))
        for r in rows:
            w.writerow((r["snapshot"], _fmt(r["t"]), _fmt(r["t_b"]), _fmt(r["l1"])))
        ds = [r["l1"] for r in rows]
        fh.write(f"# max={_fmt(max(ds))}\n# final={_fmt(ds[-1])}\n")


def error_study(cfg: RunConfig, halvings: int) -> list[dict]:
    """Final-time L1 error against the analytic solution while halving dt.

    Two-scale runs halve K (so it must be divisible by 2**halvings); classical runs double N.
    """
    if cfg.analytic is None:
        raise ValueError("error-study needs a linear case with an analytic solution")
    if halvings < 1:
        raise ValueError("halvings must be >= 1")
    rows = []
    for h in range(halvings + 1):
        if cfg.solver == "classical":
            c = dataclasses.replace(cfg, N=cfg.classical_N() * 2**h)
        else:
            if cfg.K % 2**h:
                raise ValueError(f"K={cfg.K} cannot be halved {halvings} times; choose K divisible by {2**halvings}")
            c = dataclasses.replace(cfg, K=cfg.K // 2**h)
        # hold the final time fixed on the coarsest step lattice
        c = dataclasses.replace(c, T=cfg.twoscale_steps * cfg.dt_twoscale, snapshots=())
        last = None
        for _, t, f, _ in simulate(c):
            last = (t, f)
        t, f = last
        r, v = c.output_grid.mesh()
        err = l1_distance(f, ANALYTIC[cfg.analytic](r, v, t, cfg.eps, cfg.beam), c.output_grid)
        rows.append({"dt": c.dt, "t": t, "l1": err})
    for i in range(1, len(rows)):
        rows[i]["ratio"] = rows[i - 1]["l1"] / rows[i]["l1"] if rows[i]["l1"] > 0 else math.inf
    return rows


def mass_drift(series: DiagnosticSeries) -> float:
    m = np.asarray(series.mass)
    return float(np.max(np.abs(m - m[0])) / abs(m[0]))
