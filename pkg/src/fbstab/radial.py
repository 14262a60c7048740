"""Sampled radial profiles and the shared finite-difference/quadrature
utilities used by every radial solver in the package."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .errors import GridError


@dataclass
class RadialFunction:
    """A function of the radius sampled on a strictly increasing grid.

    When derivative values are available the profile evaluates by cubic
    Hermite interpolation (C^1, exact on the nodes, O(h^4) between them);
    otherwise by a cubic spline.
    """

    nodes: np.ndarray
    values: np.ndarray
    derivs: np.ndarray | None = None
    _spline: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.derivs is not None:
            self.derivs = np.asarray(self.derivs, dtype=float)
        if self.nodes.ndim != 1 or self.nodes.size < 2:
            raise GridError("need at least two nodes")
        if not np.all(np.diff(self.nodes) > 0):
            raise GridError("nodes must be strictly increasing")
        if self.values.shape != self.nodes.shape:
            raise GridError("values shape mismatch")
        if self.derivs is not None and self.derivs.shape != self.nodes.shape:
            raise GridError("derivs shape mismatch")

    @property
    def r_max(self) -> float:
        return float(self.nodes[-1])

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        scalar = r.ndim == 0
        rq = np.clip(r, self.nodes[0], self.nodes[-1])
        if self.derivs is not None:
            out = _hermite_eval(self.nodes, self.values, self.derivs, rq)
        else:
            out = self._cubic()(rq)
        return float(out) if scalar else out

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        scalar = r.ndim == 0
        rq = np.clip(r, self.nodes[0], self.nodes[-1])
        if self.derivs is not None:
            out = _hermite_eval(self.nodes, self.derivs, None, rq)
        else:
            out = self._cubic().derivative()(rq)
        return float(out) if scalar else out

    def _cubic(self):
        if self._spline is None:
            from scipy.interpolate import CubicSpline

            self._spline = CubicSpline(self.nodes, self.values)
        return self._spline


def _hermite_eval(x, y, dy, xq):
    """Cubic Hermite when dy is given, else linear-in-cell spline fallback
    used for interpolating a derivative table (itself O(h^4) accurate when
    the parent profile came from an order-4 integrator on a fine grid)."""
    idx = np.clip(np.searchsorted(x, xq, side="right") - 1, 0, x.size - 2)
    h = x[idx + 1] - x[idx]
    t = (xq - x[idx]) / h
    if dy is None:
        from scipy.interpolate import CubicSpline

        return CubicSpline(x, y)(xq)
    h00 = (1 + 2 * t) * (1 - t) ** 2
    h10 = t * (1 - t) ** 2
    h01 = t * t * (3 - 2 * t)
    h11 = t * t * (t - 1)
    return h00 * y[idx] + h10 * h * dy[idx] + h01 * y[idx + 1] + h11 * h * dy[idx + 1]


# ---------------------------------------------------------------------------
# quadrature

def simpson_weights(n_nodes: int, h: float) -> np.ndarray:
    """Composite Simpson weights on a uniform grid with ``n_nodes`` nodes.

    ``n_nodes`` must be odd (even number of intervals); the caller's grids
    are powers of two plus one, so this always holds.
    """
    if n_nodes < 9:
        raise GridError("grid too coarse for composite Simpson (need >= 8 intervals)")
    if n_nodes % 2 == 0:
        raise GridError("composite Simpson needs an even number of intervals")
    w = np.ones(n_nodes)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * (h / 3.0)


def integrate_simpson(values: np.ndarray, h: float) -> float:
    return float(simpson_weights(len(values), h) @ values)


def cumulative_simpson(values: np.ndarray, h: float) -> np.ndarray:
    """Cumulative integral on a uniform grid, 4th order.

    Even nodes get composite-Simpson partial sums; odd nodes add half-cell
    corrections from a local cubic fit, keeping the order uniform.
    """
    y = np.asarray(values, dtype=float)
    n = y.size
    out = np.zeros(n)
    if n < 5:
        raise GridError("cumulative Simpson needs at least 5 nodes")
    # pairwise Simpson panels
    pair = (h / 3.0) * (y[:-2:2] + 4.0 * y[1:-1:2] + y[2::2])
    out[2::2] = np.cumsum(pair)
    # odd nodes: integral over the half panel via cubic through 4 neighbors
    # ∫_{x0}^{x1} on stencil (x0..x3): h*(9 y0 + 19 y1 - 5 y2 + y3)/24
    i = np.arange(1, n, 2)
    left = np.clip(i - 1, 0, n - 4)
    y0, y1, y2, y3 = y[left], y[left + 1], y[left + 2], y[left + 3]
    frac = np.where(
        i - 1 == left,
        (h / 24.0) * (9.0 * y0 + 19.0 * y1 - 5.0 * y2 + y3),
        # i-1 == left+2 happens only at the last node of an even-size grid
        (h / 24.0) * (-y0 + 13.0 * y1 + 13.0 * y2 - y3),
    )
    out[i] = out[i - 1] + frac
    return out


# ---------------------------------------------------------------------------
# finite-difference boundary-value machinery on the unit interval

def boundary_derivative_stencil(h: float) -> np.ndarray:
    """4th-order one-sided stencil for u'(1) on the last five nodes."""
    return np.array([3.0, -16.0, 36.0, -48.0, 25.0]) / (12.0 * h)


@dataclass
class RadialBVP:
    """Discretization of  v'' + (n-1)/r v' - q(r) v = rhs  on [0, 1] with
    v(1) = 0 and the regular branch at the origin (even extension for
    k = 0, Dirichlet v(0) = 0 for k >= 1).

    The banded matrix is kept in solve_banded layout; unknowns are the nodes
    0..N-1 for k = 0 and 1..N-1 for k >= 1.
    """

    n: int
    k: int
    grid_n: int
    q: np.ndarray  # q(r) on all N+1 nodes (lambda_k/r^2 + extra terms)

    def __post_init__(self):
        N = self.grid_n
        h = 1.0 / N
        r = np.arange(N + 1) * h
        self.h = h
        self.r = r
        if self.k == 0:
            rows = N  # unknowns v_0 .. v_{N-1}
            lower = np.zeros(rows)
            diag = np.zeros(rows)
            upper = np.zeros(rows)
            # r = 0 row: n * v'' = rhs with even extension, q(0) finite
            diag[0] = -2.0 * self.n / h**2 - self.q[0]
            upper[1] = 2.0 * self.n / h**2
            ri = r[1:N]
            lower[:-1] = 1.0 / h**2 - (self.n - 1) / (2.0 * h * ri)
            diag[1:] = -2.0 / h**2 - self.q[1:N]
            upper[2:] = 1.0 / h**2 + (self.n - 1) / (2.0 * h * ri[:-1])
            self.offset = 0
        else:
            rows = N - 1  # unknowns v_1 .. v_{N-1}
            lower = np.zeros(rows)
            diag = np.zeros(rows)
            upper = np.zeros(rows)
            ri = r[1:N]
            diag[:] = -2.0 / h**2 - self.q[1:N]
            upper[1:] = 1.0 / h**2 + (self.n - 1) / (2.0 * h * ri[:-1])
            lower[:-1] = 1.0 / h**2 - (self.n - 1) / (2.0 * h * ri[1:])
            self.offset = 1
        self.ab = np.vstack([upper, diag, lower])
        self.rows = rows

    def solve(self, rhs_nodes: np.ndarray) -> np.ndarray:
        """Solve for the full node vector v_0..v_N (boundary values filled)."""
        b = np.asarray(rhs_nodes, dtype=float)[self.offset : self.grid_n]
        sol = solve_banded((1, 1), self.ab, b)
        v = np.zeros(self.grid_n + 1)
        v[self.offset : self.grid_n] = sol
        return v

    def solve_transposed(self, rhs_reduced: np.ndarray) -> np.ndarray:
        """Solve A^T x = rhs on the reduced unknowns (for adjoint folding)."""
        upper, diag, lower = self.ab
        abT = np.vstack([np.r_[0.0, lower[:-1]], diag, np.r_[upper[1:], 0.0]])
        return solve_banded((1, 1), abT, np.asarray(rhs_reduced, dtype=float))

    def apply(self, v_nodes: np.ndarray) -> np.ndarray:
        """Apply the discrete operator to a full node vector (residual use)."""
        b = np.zeros(self.rows)
        v = v_nodes[self.offset : self.grid_n]
        upper, diag, lower = self.ab
        b += diag * v
        b[:-1] += upper[1:] * v[1:]
        b[1:] += lower[:-1] * v[:-1]
        return b
