"""Initial beams, closed-form linear solutions and the named simulation presets."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .geometry import PhaseGrid, TauGrid, rotate


@dataclass(frozen=True)
class BeamParams:
    n0: float = 4.0
    rm: float = 0.75
    vth: float = 0.1
    profile: str = "semi-gaussian"

    def __post_init__(self):
        if not (self.n0 > 0 and self.rm > 0 and self.vth > 0):
            raise ValueError("beam parameters n0, rm, vth must be positive")
        if self.profile not in PROFILES:
            raise ValueError(f"unknown beam profile {self.profile!r}; choose from {sorted(PROFILES)}")


def semi_gaussian(r, v, b: BeamParams):
    """Uniform in |r| <= rm, Maxwellian in v."""
    r = np.asarray(r, dtype=float)
    v = np.asarray(v, dtype=float)
    g = b.n0 / (math.sqrt(2.0 * math.pi) * b.vth) * np.exp(-(v * v) / (2.0 * b.vth**2))
    return g * (np.abs(r) <= b.rm)


def gaussian_beam(r, v, b: BeamParams):
    """Smooth beam: Gaussian of width rm in r and vth in v, same v-profile as the semi-Gaussian."""
    r = np.asarray(r, dtype=float)
    v = np.asarray(v, dtype=float)
    g = b.n0 / (math.sqrt(2.0 * math.pi) * b.vth) * np.exp(-(v * v) / (2.0 * b.vth**2))
    return g * np.exp(-(r * r) / (2.0 * b.rm**2))


PROFILES = {"semi-gaussian": semi_gaussian, "gaussian": gaussian_beam}


def initial_distribution(b: BeamParams):
    fn = PROFILES[b.profile]
    return lambda r, v: fn(r, v, b)


def analytic_nonresonant(r, v, t, eps, b: BeamParams):
    """Stationary G: f0 composed with gamma(., t/eps)."""
    q, u = rotate(r, v, t / eps)
    return PROFILES[b.profile](q, u, b)


def analytic_resonant(r, v, t, eps, b: BeamParams):
    """omega1 in N_{>=2}, H1 = cos^2, no self-field: f0 rotated by t/4 - t/eps."""
    a = t / 4.0 - t / eps
    c, s = math.cos(a), math.sin(a)
    r = np.asarray(r, dtype=float)
    v = np.asarray(v, dtype=float)
    return PROFILES[b.profile](c * r + s * v, -s * r + c * v, b)


ANALYTIC = {"nonresonant": analytic_nonresonant, "resonant": analytic_resonant}


@dataclass(frozen=True)
class Case:
    omega1: float
    omega1_rational: bool
    H1: str
    K: int
    T: float
    rm: float = 0.75
    snapshots: tuple = ()


# linear runs switch the self-field off; nonlinear runs keep it
CASES = {
    "cos-linear": Case(4.0 * math.sqrt(2.0), False, "cos", 2, 6.93, snapshots=(1.1088, 6.468)),
    "cos2-linear": Case(2.0, True, "cos2", 2, 6.9854, snapshots=(0.2957, 5.9875)),
    "cos": Case(4.0 * math.sqrt(2.0), False, "cos", 5, 6.93, snapshots=(1.4784, 3.234, 5.544)),
    "cos2": Case(2.0, True, "cos2", 2, 6.9854, snapshots=(1.1458, 3.6221, 5.8027)),
    "wide": Case(1.0, True, "cos2", 1, 5.984, rm=1.85, snapshots=(1.3464, 4.3388, 5.1462, 5.984)),
}
LINEAR_CASES = ("cos-linear", "cos2-linear")

# classical substeps per two-scale step (published counts where known, CFL-derived otherwise)
CLASSICAL_N = {
    ("I", "cos"): 122, ("I", "cos-linear"): 122,
    ("I", "cos2"): 49, ("I", "cos2-linear"): 49,
    ("II'", "cos"): 480, ("II'", "cos2"): 192,
    ("II''", "wide"): 78,
}


@dataclass(frozen=True)
class Preset:
    name: str
    solver: str  # "classical" | "twoscale-uniform" | "twoscale-mesh"
    P: int
    P_tau: int
    R: float = 3.0
    vR: float = 3.0
    out_P: int | None = None
    default_case: str = "cos"
    case: str = "cos"
    eps: float = 1e-2
    H0: float = 1.0
    n0: float = 4.0
    vth: float = 0.1

    @property
    def case_params(self) -> Case:
        return CASES[self.case]

    @property
    def self_field(self) -> bool:
        return self.case not in LINEAR_CASES

    @property
    def beam(self) -> BeamParams:
        return BeamParams(self.n0, self.case_params.rm, self.vth)

    @property
    def steps(self) -> int:
        """Two-scale step count to the final time."""
        return int(round(self.case_params.T / self.dt_twoscale))

    @property
    def tau_grid(self) -> TauGrid:
        return TauGrid(self.P_tau)

    @property
    def dt_twoscale(self) -> float:
        return self.eps * self.tau_grid.dtau * self.case_params.K

    @property
    def working_grid(self) -> PhaseGrid:
        if self.solver == "twoscale-uniform":
            # rotated supports live in the enlarged box [-R-vR, R+vR]^2
            w = self.R + self.vR
            return PhaseGrid(w, w, self.P, self.P)
        return PhaseGrid(self.R, self.vR, self.P, self.P)

    @property
    def output_grid(self) -> PhaseGrid:
        P = self.out_P if self.out_P is not None else self.P
        return PhaseGrid(self.R, self.vR, P, P)

    @property
    def N(self) -> int | None:
        if self.solver != "classical":
            return None
        return CLASSICAL_N.get((self.name, self.case))


_BASE = {
    "I": Preset("I", "classical", 64, 16, default_case="cos"),
    "II": Preset("II", "classical", 128, 16, default_case="cos"),
    "II'": Preset("II'", "classical", 256, 16, default_case="cos"),
    "II''": Preset("II''", "classical", 256, 20, default_case="wide"),
    "III": Preset("III", "twoscale-mesh", 64, 16, default_case="cos"),
    "III'": Preset("III'", "twoscale-mesh", 128, 20, default_case="wide"),
    "IV": Preset("IV", "twoscale-uniform", 128, 16, out_P=64, default_case="cos"),
    "IV'": Preset("IV'", "twoscale-uniform", 256, 20, out_P=128, default_case="wide"),
}

def canonical_name(name: str) -> str:
    n = name.strip()
    n = n.replace("″", "''").replace("′", "'")
    if n.endswith("pp") and n[:-2] in ("II", "III", "IV"):
        n = n[:-2] + "''"
    elif n.endswith("p") and n[:-1] in ("II", "III", "IV"):
        n = n[:-1] + "'"
    return n


def preset_names() -> list[str]:
    return list(_BASE)


def load_preset(name: str, case: str | None = None) -> Preset:
    key = canonical_name(name)
    if key not in _BASE:
        raise KeyError(f"unknown preset {name!r}; known presets: {', '.join(_BASE)}")
    p = _BASE[key]
    case = case or p.default_case
    if case not in CASES:
        raise KeyError(f"unknown case {case!r}; known cases: {', '.join(CASES)}")
    return replace(p, case=case)
