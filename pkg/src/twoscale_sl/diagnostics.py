"""Error norms, conservation tracking and diagnostic time series."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import PhaseGrid


def l1_distance(a, b, grid: PhaseGrid) -> float:
    """Unweighted L1 distance sum |a - b| dr dv; ``b`` may be a table or a sampler b(r, v)."""
    a = np.asarray(a, dtype=float)
    if a.shape != grid.shape:
        raise ValueError(f"field of shape {a.shape} is not on grid {grid.shape}")
    if callable(b):
        r, v = grid.mesh()
        b = b(r, v)
    b = np.asarray(b, dtype=float)
    if b.shape != grid.shape:
        raise ValueError(f"field of shape {b.shape} is not on grid {grid.shape}")
    return float(np.sum(np.abs(a - b)) * grid.dr * grid.dvr)


def total_mass(f, grid: PhaseGrid, weighted: bool = False) -> float:
    """Trapezoid mass; nodes stop one cell short of the zero boundary, so all weights are full."""
    f = np.asarray(f, dtype=float)
    if weighted:
        f = f * np.abs(grid.r)[:, None]
    return float(np.sum(f) * grid.dr * grid.dvr)


@dataclass
class DiagnosticSeries:
    times: list = field(default_factory=list)
    l1_error: list = field(default_factory=list)
    mass: list = field(default_factory=list)
    escaped_mass: list = field(default_factory=list)
    max_abs: list = field(default_factory=list)

    def __len__(self):
        return len(self.times)

    @property
    def has_error(self) -> bool:
        return any(e is not None for e in self.l1_error)

    def rows(self):
        return zip(self.times, self.l1_error, self.mass, self.escaped_mass, self.max_abs)


def record_step(series: DiagnosticSeries, t: float, f, grid: PhaseGrid, escaped: float = 0.0,
                sampler=None) -> DiagnosticSeries:
    """Append one row; ``sampler(r, v)`` supplies the reference for the L1 error."""
    if series.times and t < series.times[-1]:
        raise ValueError(f"time {t} precedes last recorded time {series.times[-1]}")
    series.times.append(float(t))
    series.l1_error.append(None if sampler is None else l1_distance(f, sampler, grid))
    series.mass.append(total_mass(f, grid))
    series.escaped_mass.append(float(escaped))
    series.max_abs.append(float(np.max(np.abs(f))))
    return series
