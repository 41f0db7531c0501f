"""Natural cubic splines on uniform knots, in 1D and as 2D tensor products.

Splines are stored in B-spline form: for ``n`` nodes there are ``n + 2``
coefficients (one ghost on each side fixed by the natural end condition).
Evaluation outside the node hull returns 0, which is the compact-support
convention used by every solver in the package.

Point evaluation of 2D splines runs in a compiled kernel.  When the same
points are read against many coefficient tables (fixed meshes), the
``sparse_stencil_*`` helpers turn the evaluation into one sparse matrix.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit, prange
from scipy import sparse
from scipy.linalg import solve_banded

from .geometry import PhaseGrid, PhasePoint

BOUNDARY_CONDITIONS = ("natural",)

# points within this fraction of a cell past the last node still count as inside
_HULL_SLACK = 1e-10


@dataclass(frozen=True)
class Axis:
    x0: float
    h: float
    n: int

    @classmethod
    def from_nodes(cls, nodes) -> "Axis":
        x = np.asarray(nodes, dtype=float)
        if x.ndim != 1 or x.size < 4:
            raise ValueError(f"need at least 4 nodes, got {x.size}")
        h = (x[-1] - x[0]) / (x.size - 1)
        if h <= 0 or not np.allclose(np.diff(x), h, rtol=1e-9, atol=0):
            raise ValueError("spline nodes must be uniformly spaced and increasing")
        return cls(float(x[0]), float(h), int(x.size))

    @property
    def nodes(self) -> np.ndarray:
        return self.x0 + self.h * np.arange(self.n)


def _check_bc(bc):
    if bc not in BOUNDARY_CONDITIONS:
        raise ValueError(f"unsupported boundary condition {bc!r}")


def natural_coeffs(values, axis: int = 0) -> np.ndarray:
    """B-spline coefficients of the natural interpolating spline along ``axis``."""
    y = np.moveaxis(np.asarray(values, dtype=float), axis, 0)
    n = y.shape[0]
    if n < 4:
        raise ValueError(f"need at least 4 nodes, got {n}")
    if not np.all(np.isfinite(y)):
        raise ValueError("spline data contains non-finite values")
    c = np.empty((n + 2,) + y.shape[1:])
    # natural end: c[-1] - 2 c[0] + c[1] = 0 turns row 0 into c[0] = y[0]
    c[1] = y[0]
    c[n] = y[-1]
    rhs = 6.0 * y[1:-1]
    rhs[0] -= y[0]
    rhs[-1] -= y[-1]
    m = n - 2
    ab = np.empty((3, m))
    ab[0] = 1.0
    ab[1] = 4.0
    ab[2] = 1.0
    sol = solve_banded((1, 1), ab, rhs.reshape(m, -1), check_finite=False)
    c[2:n] = sol.reshape(rhs.shape)
    c[0] = 2.0 * c[1] - c[2]
    c[n + 1] = 2.0 * c[n] - c[n - 1]
    return np.moveaxis(c, 0, axis)


def _weights(u):
    u2 = u * u
    u3 = u2 * u
    om = 1.0 - u
    return np.stack(
        [om * om * om / 6.0, (3.0 * u3 - 6.0 * u2 + 4.0) / 6.0,
         (-3.0 * u3 + 3.0 * u2 + 3.0 * u + 1.0) / 6.0, u3 / 6.0]
    )


def _dweights(u):
    u2 = u * u
    om = 1.0 - u
    return np.stack(
        [-0.5 * om * om, 0.5 * (3.0 * u2 - 4.0 * u), 0.5 * (-3.0 * u2 + 2.0 * u + 1.0), 0.5 * u2]
    )


def _locate(ax: Axis, x):
    """Interval index, local coordinate and inside mask for points ``x``."""
    t = (np.asarray(x, dtype=float) - ax.x0) / ax.h
    inside = (t >= -_HULL_SLACK) & (t <= ax.n - 1 + _HULL_SLACK)
    t = np.where(inside, t, 0.0)
    k = np.clip(np.floor(t), 0, ax.n - 2).astype(np.intp)
    u = t - k
    return k, u, inside


@njit(parallel=True, cache=True)
def _eval2d_kernel(c, sl, x, y, x0, hx, nx, y0, hy, ny, deriv):
    # c: (B, nx+2, ny+2); deriv 0 -> value, 1 -> d/dx, 2 -> d/dy
    n = x.size
    out = np.empty(n)
    for p in prange(n):
        tx = (x[p] - x0) / hx
        ty = (y[p] - y0) / hy
        if tx < -1e-10 or tx > nx - 1 + 1e-10 or ty < -1e-10 or ty > ny - 1 + 1e-10:
            out[p] = 0.0
            continue
        kx = min(max(int(np.floor(tx)), 0), nx - 2)
        ky = min(max(int(np.floor(ty)), 0), ny - 2)
        ux = tx - kx
        uy = ty - ky
        wx = np.empty(4)
        wy = np.empty(4)
        if deriv == 1:
            _dbasis(ux, wx, hx)
        else:
            _basis(ux, wx)
        if deriv == 2:
            _dbasis(uy, wy, hy)
        else:
            _basis(uy, wy)
        b = sl[p]
        acc = 0.0
        for a in range(4):
            row = 0.0
            for e in range(4):
                row += wy[e] * c[b, kx + a, ky + e]
            acc += wx[a] * row
        out[p] = acc
    return out


@njit(cache=True, inline="always")
def _basis(u, w):
    om = 1.0 - u
    w[0] = om * om * om / 6.0
    w[1] = (3.0 * u * u * u - 6.0 * u * u + 4.0) / 6.0
    w[2] = (-3.0 * u * u * u + 3.0 * u * u + 3.0 * u + 1.0) / 6.0
    w[3] = u * u * u / 6.0


@njit(cache=True, inline="always")
def _dbasis(u, w, h):
    om = 1.0 - u
    w[0] = -0.5 * om * om / h
    w[1] = 0.5 * (3.0 * u * u - 4.0 * u) / h
    w[2] = 0.5 * (-3.0 * u * u + 2.0 * u + 1.0) / h
    w[3] = 0.5 * u * u / h


@njit(parallel=True, cache=True)
def _eval_rows_kernel(c, x, x0, h, n):
    # c: (B, n+2) coefficients per row, x: (B, m) points per row
    B, m = x.shape
    out = np.empty((B, m))
    for b in prange(B):
        w = np.empty(4)
        for p in range(m):
            t = (x[b, p] - x0) / h
            if t < -1e-10 or t > n - 1 + 1e-10:
                out[b, p] = 0.0
                continue
            k = min(max(int(np.floor(t)), 0), n - 2)
            _basis(t - k, w)
            out[b, p] = w[0] * c[b, k] + w[1] * c[b, k + 1] + w[2] * c[b, k + 2] + w[3] * c[b, k + 3]
    return out


def evaluate_rows(coeffs, ax: "Axis", x):
    """Row-batched 1D evaluation: ``out[b, p] = S_b(x[b, p])`` with ``coeffs`` of shape (B, n+2)."""
    return _eval_rows_kernel(np.ascontiguousarray(coeffs, dtype=float),
                             np.ascontiguousarray(x, dtype=float), ax.x0, ax.h, ax.n)


def evaluate_2d(coeffs, ax0: "Axis", ax1: "Axis", x, y, sl=None, deriv: int = 0):
    """Direct (unstenciled) evaluation of a possibly batched 2D spline.

    For a stack of ``B`` splines, ``sl`` picks the member per point; without
    it every member is evaluated and the result gains a leading ``B`` axis.
    """
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    if sl is None and coeffs.ndim == 3 and coeffs.shape[0] > 1:
        B = coeffs.shape[0]
        x, y = (np.broadcast_to(a, (B,) + a.shape) for a in (x, y))
        sl = np.arange(B).reshape((B,) + (1,) * (x.ndim - 1))
    shape = x.shape
    c = coeffs if coeffs.ndim == 3 else coeffs[None]
    if sl is None:
        slf = np.zeros(x.size, dtype=np.int64)
    else:
        slf = np.ascontiguousarray(np.broadcast_to(sl, shape), dtype=np.int64).ravel()
    out = _eval2d_kernel(np.ascontiguousarray(c), slf, np.ascontiguousarray(x).ravel(),
                         np.ascontiguousarray(y).ravel(), ax0.x0, ax0.h, ax0.n,
                         ax1.x0, ax1.h, ax1.n, deriv)
    return out.reshape(shape)


def node_gradient(coeffs, ax0: "Axis", ax1: "Axis"):
    """Spline gradient at every node, straight from the coefficients (last two axes)."""
    c = np.asarray(coeffs)
    # at a node the B-spline weights are (1, 4, 1)/6 and derivative weights (-1, 0, 1)/(2h)
    vy = (c[..., :-2] + 4.0 * c[..., 1:-1] + c[..., 2:]) / 6.0
    vx = (c[..., :-2, :] + 4.0 * c[..., 1:-1, :] + c[..., 2:, :]) / 6.0
    gx = (vy[..., 2:, :] - vy[..., :-2, :]) / (2.0 * ax0.h)
    gy = (vx[..., 2:] - vx[..., :-2]) / (2.0 * ax1.h)
    return gx, gy


def sparse_stencil_1d(ax: "Axis", x, col=None, ncols: int = 1):
    """Matrix mapping a flattened coefficient table ``(n+2, ncols)`` to values at ``x``."""
    k, u, inside = _locate(ax, x)
    w = _weights(u) * inside
    npts = k.size
    c = np.zeros(k.shape, dtype=np.intp) if col is None else np.broadcast_to(col, k.shape)
    rows = np.repeat(np.arange(npts), 4)
    cols = ((k.ravel()[:, None] + np.arange(4)) * ncols + c.ravel()[:, None]).ravel()
    vals = w.reshape(4, -1).T.ravel()
    return sparse.csr_matrix((vals, (rows, cols)), shape=(npts, (ax.n + 2) * ncols))


def sparse_stencil_2d(ax0: "Axis", ax1: "Axis", x, y):
    """Matrix mapping flattened 2D coefficients ``(n0+2, n1+2)`` to values at ``(x, y)``."""
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    kx, ux, inx = _locate(ax0, x)
    ky, uy, iny = _locate(ax1, y)
    wx = (_weights(ux) * (inx & iny)).reshape(4, -1)
    wy = _weights(uy).reshape(4, -1)
    s1 = ax1.n + 2
    base = (kx * s1 + ky).ravel()
    off = (np.arange(4)[:, None] * s1 + np.arange(4)[None, :]).ravel()
    cols = (base[:, None] + off[None, :]).ravel()
    vals = (wx.T[:, :, None] * wy.T[:, None, :]).reshape(-1)
    npts = base.size
    rows = np.repeat(np.arange(npts), 16)
    return sparse.csr_matrix((vals, (rows, cols)), shape=(npts, (ax0.n + 2) * s1))


@dataclass(frozen=True)
class Stencil1D:
    """Precomputed evaluation of 1D splines on ``ax`` at fixed points.

    ``col`` selects, per point, which column of a batched coefficient table
    is read (``None`` for unbatched tables).
    """

    k: np.ndarray
    w: np.ndarray
    dw: np.ndarray
    col: np.ndarray | None

    @classmethod
    def build(cls, ax: Axis, x, col=None) -> "Stencil1D":
        k, u, inside = _locate(ax, x)
        w = _weights(u) * inside
        dw = _dweights(u) * inside / ax.h
        if col is not None:
            col = np.broadcast_to(np.asarray(col, dtype=np.intp), k.shape)
        return cls(k, w, dw, col)

    def _gather(self, coeffs, a):
        if self.col is None:
            return coeffs[self.k + a]
        return coeffs[self.k + a, self.col]

    def apply(self, coeffs, derivative: bool = False):
        w = self.dw if derivative else self.w
        out = w[0] * self._gather(coeffs, 0)
        for a in range(1, 4):
            out += w[a] * self._gather(coeffs, a)
        return out


@dataclass(frozen=True)
class Spline1D:
    axis: Axis
    coeffs: np.ndarray
    bc: str = "natural"

    def __call__(self, x, col=None):
        return Stencil1D.build(self.axis, x, col).apply(self.coeffs)

    def derivative(self, x, col=None):
        return Stencil1D.build(self.axis, x, col).apply(self.coeffs, derivative=True)


def fit_1d(values, axis, bc: str = "natural") -> Spline1D:
    """Fit along the first dimension of ``values``; trailing dims are batch columns."""
    _check_bc(bc)
    ax = axis if isinstance(axis, Axis) else Axis.from_nodes(axis)
    values = np.asarray(values, dtype=float)
    if values.shape[0] != ax.n:
        raise ValueError(f"{values.shape[0]} values for {ax.n} nodes")
    return Spline1D(ax, natural_coeffs(values, 0), bc)


def eval_1d(s: Spline1D, x, col=None):
    return s(x, col)


@dataclass(frozen=True)
class Spline2D:
    ax0: Axis
    ax1: Axis
    coeffs: np.ndarray
    bc: str = "natural"

    def __call__(self, x, y, sl=None):
        return evaluate_2d(self.coeffs, self.ax0, self.ax1, x, y, sl)

    def grad(self, x, y, sl=None):
        return (evaluate_2d(self.coeffs, self.ax0, self.ax1, x, y, sl, deriv=1),
                evaluate_2d(self.coeffs, self.ax0, self.ax1, x, y, sl, deriv=2))


def grid_axes(grid: PhaseGrid) -> tuple[Axis, Axis]:
    return (Axis(-grid.P_r * grid.dr, grid.dr, 2 * grid.P_r + 1),
            Axis(-grid.P_vr * grid.dvr, grid.dvr, 2 * grid.P_vr + 1))


def fit_2d(values, grid: PhaseGrid, bc: str = "natural") -> Spline2D:
    """Tensor spline through a ``grid.shape`` table, or a ``(B, *grid.shape)`` stack."""
    _check_bc(bc)
    values = np.asarray(values, dtype=float)
    if values.shape[-2:] != grid.shape or values.ndim not in (2, 3):
        raise ValueError(f"values of shape {values.shape} do not match grid {grid.shape}")
    c = natural_coeffs(natural_coeffs(values, -2), -1)
    ax0, ax1 = grid_axes(grid)
    return Spline2D(ax0, ax1, np.ascontiguousarray(c), bc)


def eval_2d(s: Spline2D, p: PhasePoint):
    return s(p[0], p[1])


def eval_grad_2d(s: Spline2D, p: PhasePoint):
    return s.grad(p[0], p[1])
