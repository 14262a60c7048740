"""Finite-dimensional verification of the equivariant center-manifold
picture: for an ODE u' = F(u) whose vector field commutes with a local group
action and whose linearization at an equilibrium has a kernel of exactly the
group dimension with the rest of the spectrum strictly stable, trajectories
near the equilibrium converge to a group translate of it at the spectral
rate, and convergence to the equilibrium itself is characterized by the
vanishing of the kernel component plus the accumulated kernel-projected
nonlinearity.

Everything here is desk-scale: dense Jacobians by central differences,
spectral projections by eigendecomposition, RK4 flows.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConvergenceError, SolverError
from .radialsim import measure_rate


@dataclass
class EquivariantSystem:
    """An ODE with a local group action mapping solutions to solutions."""

    dim: int
    field_fn: Callable[[np.ndarray], np.ndarray]
    action: Callable[[np.ndarray, np.ndarray], np.ndarray]  # (params, u) -> u
    group_dim: int
    u_s: np.ndarray
    param_bounds: tuple[float, float] = (-np.pi, np.pi)
    neighborhood: float = 2.0
    omega_minus_exact: float | None = None

    def F(self, u):
        return self.field_fn(np.asarray(u, dtype=float))

    def S(self, params, u):
        params = np.atleast_1d(np.asarray(params, dtype=float))
        return self.action(params, np.asarray(u, dtype=float))

    def equivariance_residual(self, u, params, h: float = 6e-6) -> float:
        """|| F(S(u)) - DS(u) F(u) ||, DS by central differences (the step
        balances truncation against roundoff near eps^(1/3))."""
        fu = self.F(u)
        ds_fu = (self.S(params, u + h * fu) - self.S(params, u - h * fu)) / (2 * h)
        return float(np.linalg.norm(self.F(self.S(params, u)) - ds_fu))


@dataclass
class SpectralSplit:
    """Kernel/range splitting of the linearization at the equilibrium."""

    A: np.ndarray
    kernel_basis: np.ndarray  # (dim, group_dim)
    P: np.ndarray  # projection onto the kernel along the range
    omega_minus: float


def _jacobian(F, u, h):
    dim = u.size
    A = np.empty((dim, dim))
    for j in range(dim):
        e = np.zeros(dim)
        e[j] = h
        A[:, j] = (F(u + e) - F(u - e)) / (2.0 * h)
    return A


def linearize(sys: EquivariantSystem, h: float = 1e-5) -> SpectralSplit:
    """Central-difference Jacobian, SVD kernel detection at 1e-6 * ||A||,
    spectral projection separating the near-zero eigenvalue cluster."""
    if not 1e-7 <= h <= 1e-4:
        raise ValueError("finite-difference step h must lie in [1e-7, 1e-4]")
    A = _jacobian(sys.F, sys.u_s, h)
    norm = np.linalg.norm(A, 2)
    tol = 1e-6 * max(norm, 1.0)
    _, svals, vt = np.linalg.svd(A)
    kernel_dim = int(np.sum(svals < tol))
    if kernel_dim != sys.group_dim:
        raise SolverError(
            f"kernel dimension {kernel_dim} != group dimension {sys.group_dim}"
        )
    kernel_basis = vt[sys.dim - kernel_dim :].T

    evals, evecs = np.linalg.eig(A)
    near_zero = np.abs(evals) < tol
    if int(near_zero.sum()) != kernel_dim:
        raise SolverError("eigenvalue cluster at 0 does not match the kernel")
    # spectral projector onto the zero cluster: V diag(1_cluster) V^{-1}
    sel = np.diag(near_zero.astype(float))
    P = np.real(evecs @ sel @ np.linalg.inv(evecs))
    nonzero = evals[~near_zero]
    omega_minus = float(-np.max(nonzero.real))
    if not omega_minus > 0.0:
        raise SolverError(
            f"nonzero spectrum is not strictly stable: omega_minus = {omega_minus}"
        )
    return SpectralSplit(A=A, kernel_basis=kernel_basis, P=P,
                         omega_minus=omega_minus)


def integrate_flow(
    sys: EquivariantSystem,
    u0: np.ndarray,
    t_end: float,
    dt: float = 1e-3,
    stride: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """RK4 trajectory (times, states); errors out when the solution leaves
    the configured neighborhood of the equilibrium (the guarantees here are
    local)."""
    u = np.asarray(u0, dtype=float).copy()
    n_steps = max(1, int(round(t_end / dt)))
    if stride is None:
        stride = max(1, n_steps // 4000)
    times = [0.0]
    states = [u.copy()]
    F = sys.F
    for step in range(1, n_steps + 1):
        k1 = F(u)
        k2 = F(u + 0.5 * dt * k1)
        k3 = F(u + 0.5 * dt * k2)
        k4 = F(u + dt * k3)
        u = u + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if np.linalg.norm(u - sys.u_s) > sys.neighborhood:
            raise SolverError("trajectory escaped the local neighborhood")
        if step % stride == 0 or step == n_steps:
            times.append(step * dt)
            states.append(u.copy())
    return np.asarray(times), np.asarray(states)


def _tail_converged(states, tol=1e-8):
    tail = states[-max(3, len(states) // 50):]
    return float(np.linalg.norm(tail[-1] - tail[0])) < tol


def limit_identify(
    sys: EquivariantSystem,
    trajectory: tuple[np.ndarray, np.ndarray],
    split: SpectralSplit,
    tol: float = 1e-8,
):
    """Match the trajectory tail to the manifold of translated equilibria
    {S_sigma(u_s)} by golden-section per group parameter plus a Newton
    polish; returns (sigma_hat, limit_point)."""
    times, states = trajectory
    if not _tail_converged(states, tol=1e-8):
        raise ConvergenceError("trajectory tail has not settled")
    target = states[-1]

    def mismatch(params):
        return float(np.linalg.norm(sys.S(params, sys.u_s) - target))

    best = np.zeros(sys.group_dim)
    for axis in range(sys.group_dim):
        lo, hi = sys.param_bounds
        best[axis] = _golden(lambda x: mismatch(_put(best, axis, x)), lo, hi)
    best = _newton_polish(mismatch, best)
    limit = sys.S(best, sys.u_s)
    if float(np.linalg.norm(limit - target)) > max(tol, 1e2 * tol):
        raise SolverError("trajectory tail is not on the equilibrium manifold")
    return best, limit


def _put(vec, axis, x):
    out = vec.copy()
    out[axis] = x
    return out


def _golden(f, lo, hi, iters=80):
    gr = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - gr * (b - a)
    d = a + gr * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - gr * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + gr * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def _newton_polish(f, x0, h=1e-6, iters=12):
    x = x0.copy()
    for _ in range(iters):
        grad = np.zeros_like(x)
        hess = np.eye(x.size)
        f0 = f(x)
        for i in range(x.size):
            e = np.zeros_like(x)
            e[i] = h
            fp, fm = f(x + e), f(x - e)
            grad[i] = (fp - fm) / (2 * h)
            hess[i, i] = (fp - 2 * f0 + fm) / (h * h)
        if np.any(np.abs(np.diag(hess)) < 1e-12):
            break
        step = grad / np.diag(hess)
        x = x - step
        if np.linalg.norm(step) < 1e-12:
            break
    return x


def check_limit_identity(
    sys: EquivariantSystem,
    trajectory: tuple[np.ndarray, np.ndarray],
    split: SpectralSplit,
    tol: float = 1e-8,
) -> float:
    """Residual of the convergence characterization

        P(u_0 - u_s) + int_0^inf P N(u(s)) ds = 0,   N(u) = F(u) - A (u - u_s),

    for a trajectory converging to u_s itself.  The improper integral uses
    trapezoid quadrature on the samples plus a geometric tail fit (the
    integrand decays exponentially)."""
    times, states = trajectory
    if float(np.linalg.norm(states[-1] - sys.u_s)) > 1e-6:
        raise SolverError(
            "the identity applies to trajectories converging to the "
            "equilibrium itself (run in the group-fixed slice)"
        )
    P, A = split.P, split.A
    dev = states - sys.u_s
    N = np.array([sys.F(u) for u in states]) - dev @ A.T
    PN = N @ P.T
    integral = np.trapezoid(PN, x=times, axis=0)
    # geometric tail: fit the decay of ||PN|| over the last decade of samples
    norms = np.linalg.norm(PN, axis=1)
    tail_norm = norms[-1]
    if tail_norm > 0.0:
        m = max(4, len(times) // 10)
        good = norms[-m:] > 0.0
        if good.sum() >= 3:
            rate = measure_rate((times[-m:][good], norms[-m:][good]), window=1.0)
            if rate > 0.0:
                integral = integral + PN[-1] / rate
    x0 = P @ (states[0] - sys.u_s)
    return float(np.linalg.norm(x0 + integral))


def builtin_rotation_example() -> EquivariantSystem:
    """Planar normal form: radial relaxation to the unit circle with frozen
    angle (rdot = r (1 - r), thetadot = 0) in Cartesian coordinates; the
    rotation group acts, the unit circle is the equilibrium manifold, and
    the nonzero spectrum at (1, 0) is {-1}."""

    def field(u):
        return u * (1.0 - np.linalg.norm(u))

    def action(params, u):
        phi = params[0]
        c, s = np.cos(phi), np.sin(phi)
        rot = np.array([[c, -s], [s, c]])
        return rot @ u

    return EquivariantSystem(
        dim=2,
        field_fn=field,
        action=action,
        group_dim=1,
        u_s=np.array([1.0, 0.0]),
        param_bounds=(-np.pi, np.pi),
        neighborhood=2.0,
        omega_minus_exact=1.0,
    )
