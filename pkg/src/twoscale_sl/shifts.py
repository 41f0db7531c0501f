"""Second-order characteristic shifts d = dt (Id + dt grad U)^{-1} U."""
from __future__ import annotations

import numpy as np


class SingularShiftError(FloatingPointError):
    pass


def solve_shifts(U1, U2, J11, J12, J21, J22, dt: float):
    """Solve the 2x2 linearized fixed point at every node.

    ``J`` is the Jacobian of the interpolated advection field at the nodes.
    """
    a11 = 1.0 + dt * J11
    a12 = dt * J12
    a21 = dt * J21
    a22 = 1.0 + dt * J22
    det = a11 * a22 - a12 * a21
    bad = np.abs(det) < 1e-12
    if np.any(bad):
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        raise SingularShiftError(
            f"singular shift matrix at node {idx}: |det A| = {abs(det[idx]):.3e}; reduce dt"
        )
    d1 = dt * (a22 * U1 - a12 * U2) / det
    d2 = dt * (a11 * U2 - a21 * U1) / det
    return d1, d2
