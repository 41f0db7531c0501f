"""Two-scale semi-Lagrangian solvers for strongly oscillating axisymmetric beams."""
import numba

# the TBB layer shipped on many systems is too old; workqueue is always available
numba.config.THREADING_LAYER = "workqueue"

from .classical import ClassicalSolver, ClassicalState  # noqa: E402
from .diagnostics import DiagnosticSeries, l1_distance, record_step, total_mass  # noqa: E402
from .fields import FocusingConfig  # noqa: E402
from .geometry import PhaseGrid, TauGrid  # noqa: E402
from .runner import RunConfig, compare_dirs, error_study, run, simulate  # noqa: E402
from .scenarios import BeamParams, analytic_nonresonant, analytic_resonant, initial_distribution, load_preset  # noqa: E402
from .twoscale_mesh import MeshSolver, TwoScaleMeshState  # noqa: E402
from .twoscale_uniform import TwoScaleUniformState, UniformSolver  # noqa: E402

__all__ = [
    "BeamParams", "ClassicalSolver", "ClassicalState", "DiagnosticSeries", "FocusingConfig", "MeshSolver",
    "PhaseGrid", "RunConfig", "TauGrid", "TwoScaleMeshState", "TwoScaleUniformState", "UniformSolver",
    "analytic_nonresonant", "analytic_resonant", "compare_dirs", "error_study", "initial_distribution",
    "l1_distance", "load_preset", "record_step", "run", "simulate", "total_mass",
]
