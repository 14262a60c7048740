"""Linearized per-mode dynamics: dense discretization of the k-th
spherical-harmonic block of the linearized operator, implicit time
integration of the pair (bulk profile v, boundary coefficient eta), and the
dominant eigenvalue for cross-validation against the fixed-point values.

The block acts as

    d/dt (v, eta) = ( c^{-1} L_k^f v + sigma_s'(1) w_k(r) [J_k(v) + alpha eta],
                      J_k(v) + alpha eta ),

with L_k^f the mode-k radial operator including the -f'(sigma_s) term, J_k
the boundary-flux functional of :mod:`fbstab.eigenc`, w_k the mode-k bulk
extension, and alpha the k-th multiplier of the boundary operator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import ConvergenceError, SolverError
from .model import TumorModel
from .radial import RadialFunction, boundary_derivative_stencil
from .eigenc import _alpha_of, _j_bvp, _lkf_bvp, solve_wk
from .spectrum import _profiles
from .stationary import StationaryState


@dataclass
class ModeState:
    """Initial data for one mode: bulk perturbation v (v(1) = 0; v(0) = 0
    for k >= 1) and boundary coefficient eta."""

    k: int
    v: np.ndarray | RadialFunction | None
    eta: float


@dataclass
class DiscreteModeOperator:
    matrix: np.ndarray
    k: int
    gamma: float
    c: float
    grid_n: int
    offset: int  # first interior node index carried by the unknown vector
    r: np.ndarray
    alpha: float
    w: np.ndarray
    j_row: np.ndarray

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def pack(self, state: ModeState) -> np.ndarray:
        x = np.zeros(self.size)
        if state.v is not None:
            v = state.v(self.r) if callable(state.v) else np.asarray(state.v, float)
            if v.shape != self.r.shape:
                raise SolverError("v must be sampled on the operator grid")
            if abs(v[-1]) > 1e-12:
                raise SolverError("bulk perturbation must vanish at r = 1")
            x[:-1] = v[self.offset : self.grid_n]
        x[-1] = state.eta
        return x

    def unpack(self, x: np.ndarray) -> tuple[np.ndarray, float]:
        v = np.zeros(self.grid_n + 1)
        v[self.offset : self.grid_n] = x[:-1]
        return v, float(x[-1])

    def null_direction(self) -> np.ndarray:
        """The translation-neutral direction for k = 1 in the operator's own
        coordinates.

        The raw neutral pair is ([phi(r-1) r - 1] sigma_s'(r), 1); under the
        block transformation that produces this operator its bulk component
        collapses identically because sigma_s'(1) w_1(r) = sigma_s'(r), so
        the discretized direction is (v = 0, eta = 1).
        """
        if self.k != 1:
            raise SolverError("the exact null direction is known for k = 1 only")
        e = np.zeros(self.size)
        e[-1] = 1.0
        return e


def _dense_lkf(bvp) -> np.ndarray:
    upper, diag, lower = bvp.ab
    rows = bvp.rows
    out = np.zeros((rows, rows))
    idx = np.arange(rows)
    out[idx, idx] = diag
    out[idx[:-1], idx[:-1] + 1] = upper[1:]
    out[idx[1:], idx[1:] - 1] = lower[:-1]
    return out


def assemble_mode_operator(
    model: TumorModel,
    state: StationaryState,
    k: int,
    gamma: float,
    c: float,
    grid_n: int = 2048,
) -> DiscreteModeOperator:
    """Dense matrix of the mode-k block over (interior v nodes, eta)."""
    if grid_n < 64:
        raise ValueError("grid_n must be at least 64")
    if c <= 0.0:
        raise ValueError("the stiff bulk block needs c > 0")
    model, state, prof = _profiles(model, state, grid_n)
    n = model.n
    alpha = _alpha_of(model, state, k, gamma, grid_n)
    w = solve_wk(model, state, k, grid_n).values
    sp1 = prof.sigma_prime_boundary
    fp_nodes = prof.fp_half[::2]

    lkf = _lkf_bvp(n, k, grid_n, fp_nodes)
    jb = _j_bvp(n, k, grid_n)
    offset = lkf.offset
    rows = lkf.rows

    # fold J_k into a dense row: J_k(v) = d^T B^{-1} (g' v) = (B^{-T} d)^T (g' v)
    stencil = boundary_derivative_stencil(prof.h)
    d_red = np.zeros(rows)
    d_red[-4:] = stencil[:4]
    y = jb.solve_transposed(d_red)
    j_row = y * prof.gp[offset : grid_n]

    w_red = w[offset : grid_n]
    size = rows + 1
    M = np.zeros((size, size))
    M[:rows, :rows] = _dense_lkf(lkf) / c
    M[:rows, :rows] += sp1 * np.outer(w_red, j_row)
    M[:rows, -1] = sp1 * w_red * alpha
    M[-1, :rows] = j_row
    M[-1, -1] = alpha
    if not np.all(np.isfinite(M)):
        raise SolverError("mode operator assembly produced non-finite entries")
    return DiscreteModeOperator(
        matrix=M, k=k, gamma=gamma, c=c, grid_n=grid_n, offset=offset,
        r=prof.r, alpha=alpha, w=w, j_row=j_row,
    )


def apply_mode_operator(op: DiscreteModeOperator, v_nodes, eta: float):
    """Apply the block to a full-grid pair (v, eta); returns (dv, deta)."""
    x = op.pack(ModeState(k=op.k, v=v_nodes, eta=eta))
    out = op.matrix @ x
    return op.unpack(out)


def evolve_mode(
    op: DiscreteModeOperator,
    init: ModeState,
    dt: float,
    t_end: float,
    method: str = "backward_euler",
    stride: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """Implicit time integration of the mode block.

    Returns (times, norms) where the norm is max(||v||_inf, |eta|).
    Backward Euler is unconditionally stable; the trapezoidal variant keeps
    second-order accuracy for rate measurements.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    x = op.pack(init)
    n_steps = int(round(t_end / dt))
    eye = np.eye(op.size)
    if method == "backward_euler":
        lu = lu_factor(eye - dt * op.matrix)
        rhs_mat = None
    elif method == "trapezoidal":
        lu = lu_factor(eye - 0.5 * dt * op.matrix)
        rhs_mat = eye + 0.5 * dt * op.matrix
    else:
        raise ValueError(f"unknown method {method!r}")

    def norm(vec):
        return float(np.abs(vec).max())

    times = [0.0]
    norms = [norm(x)]
    for step in range(1, n_steps + 1):
        b = x if rhs_mat is None else rhs_mat @ x
        x = lu_solve(lu, b)
        if not np.all(np.isfinite(x)):
            raise SolverError("mode evolution produced non-finite state")
        if step % stride == 0 or step == n_steps:
            times.append(step * dt)
            norms.append(norm(x))
    return np.asarray(times), np.asarray(norms)


def dominant_eigen(
    op: DiscreteModeOperator,
    shift: float | None = None,
    tol: float = 1e-11,
    max_iter: int = 100,
    deflate_kernel: bool = False,
) -> complex:
    """Eigenvalue of largest real part via shifted inverse power iteration.

    The mode blocks have a single O(1) eigenvalue separated from the rest of
    the spectrum by O(1/c), so an O(1) positive shift isolates it; a Rayleigh
    update polishes the estimate.  ``deflate_kernel`` projects out the exact
    k = 1 translation kernel to expose the leading nonzero eigenvalue.
    Falls back to the dense solver if the iteration stalls (complex pair).
    """
    M = op.matrix
    size = op.size
    if deflate_kernel:
        if op.k != 1:
            raise SolverError("kernel deflation applies to the k = 1 block")
        keep = np.arange(size - 1)
        M = M[np.ix_(keep, keep)]
        size -= 1
    if shift is None:
        shift = abs(op.alpha) if op.alpha != 0.0 else 1e-4

    rng = np.random.default_rng(0)
    x = rng.standard_normal(size)
    x /= np.linalg.norm(x)
    lam = shift
    scale = max(1.0, float(np.abs(M).max()))
    refactor = True
    lu = None
    for it in range(max_iter):
        if refactor:
            try:
                lu = lu_factor(M - lam * np.eye(size))
            except np.linalg.LinAlgError:
                lam *= 1.0 + 1e-8
                lu = lu_factor(M - lam * np.eye(size))
            refactor = False
        y = lu_solve(lu, x)
        ny = np.linalg.norm(y)
        if not np.isfinite(ny) or ny == 0.0:
            break
        x = y / ny
        rayleigh = float(x @ (M @ x))
        residual = np.linalg.norm(M @ x - rayleigh * x)
        if residual <= tol * scale:
            return complex(rayleigh)
        if it % 4 == 3:
            lam = rayleigh
            refactor = True
    # iteration stalled: dense fallback (handles complex-pair dominance)
    eigs = np.linalg.eigvals(M)
    out = eigs[np.argmax(eigs.real)]
    if not np.isfinite(out):
        raise ConvergenceError("dominant eigenvalue iteration failed")
    return complex(out)
