"""Eigenvalues of the linearized moving-boundary operator for c > 0.

Per spherical-harmonic mode k the linearization acts on pairs (bulk profile,
boundary coefficient); its near-zero eigenvalue has the perturbative form

    lambda_{k,gamma} = alpha_{k,gamma} + c * mu_{k,gamma}(c),

where mu solves a scalar fixed-point problem built from two radial BVPs:

    w_k:  w'' + (n-1)/r w' - (lambda_k/r^2 + f'(sigma_s)) w = 0,  w(1) = 1,
          regular (~ r^k) at the origin;
    J_k:  u -> v'(1) where v'' + (n-1)/r v' - (lambda_k/r^2) v = g'(sigma_s) u,
          v(1) = 0, regular branch at the origin.

The fixed point iterates the linear solve

    L_k^f a = -c sigma_s'(1) J_k(a) w_k + c alpha a + c^2 a J_k(a)
              - sigma_s'(1) alpha w_k,     a'(0) = 0 (k = 0) / a(0) = 0,  a(1) = 0,

with L_k^f u = u'' + (n-1)/r u' - (lambda_k/r^2 + f'(sigma_s)) u, and reads
off mu = J_k(a).  The mode k = 1 is translation-neutral: lambda = 0 exactly,
with the (cutoff-dressed) eigenprofile [phi(r-1) r - 1] sigma_s'(r).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, SolverError
from .model import TumorModel
from .radial import RadialBVP, RadialFunction, boundary_derivative_stencil
from .spectrum import (
    GRID_N_DEFAULT,
    _profiles,
    _solve_regular_ivp,
    alpha_0,
    alpha_k,
    gamma_k,
    mode_constants,
)
from .stationary import StationaryState

MAX_FIXED_POINT_ITER = 200


@dataclass
class EigenModeResult:
    """One converged mode eigenvalue with its bulk profile."""

    k: int
    c: float
    gamma: float
    a_profile: RadialFunction
    mu: float
    lam: float
    iterations: int
    residual: float
    alpha: float


def solve_wk(
    model: TumorModel,
    state: StationaryState,
    k: int,
    grid_n: int = GRID_N_DEFAULT,
) -> RadialFunction:
    """Mode-k bulk extension with unit boundary value.

    Marched as the Frobenius-normalized forward integration: writing
    w = r^k y removes the r^{-2} singularity and leaves the regular IVP
    y'' + ((2k+n-1)/r) y' = f'(sigma_s) y, after which w is normalized to
    w(1) = 1.  The profile is strictly positive on (0, 1].
    """
    model, state, prof = _profiles(model, state, grid_n)
    mc = mode_constants(model.n, k)
    y, dy = _solve_regular_ivp(float(mc.a_k), prof.fp_half, grid_n)
    if not y[-1] > 0.0:
        raise SolverError(f"w_{k} normalization failed (y(1) = {y[-1]})")
    r = prof.r
    rk = r**k
    w = rk * y / y[-1]
    dw = (k * r ** max(k - 1, 0) * y + rk * dy) / y[-1] if k >= 1 else dy / y[-1]
    return RadialFunction(r, w, dw)


def _j_bvp(n: int, k: int, grid_n: int) -> RadialBVP:
    mc = mode_constants(n, k)
    r = np.linspace(0.0, 1.0, grid_n + 1)
    q = np.zeros(grid_n + 1)
    if mc.lambda_k:
        with np.errstate(divide="ignore"):
            q[1:] = mc.lambda_k / r[1:] ** 2
    return RadialBVP(n=n, k=k, grid_n=grid_n, q=q)


def _lkf_bvp(n: int, k: int, grid_n: int, fp_nodes: np.ndarray) -> RadialBVP:
    mc = mode_constants(n, k)
    r = np.linspace(0.0, 1.0, grid_n + 1)
    q = fp_nodes.astype(float).copy()
    if mc.lambda_k:
        with np.errstate(divide="ignore"):
            q[1:] += mc.lambda_k / r[1:] ** 2
        q[0] = 0.0  # row not used for k >= 1 (Dirichlet origin)
    return RadialBVP(n=n, k=k, grid_n=grid_n, q=q)


def _boundary_slope(v_nodes: np.ndarray, h: float) -> float:
    stencil = boundary_derivative_stencil(h)
    return float(stencil @ v_nodes[-5:])


def apply_Jk(
    model: TumorModel,
    state: StationaryState,
    k: int,
    u,
    grid_n: int = GRID_N_DEFAULT,
) -> float:
    """The boundary-flux functional J_k(u) = v'(1) of the sourced BVP
    above, by centered finite differences, a banded solve, and a 4th-order
    one-sided boundary stencil."""
    model, state, prof = _profiles(model, state, grid_n)
    bvp = _j_bvp(model.n, k, grid_n)
    u_nodes = u(prof.r) if callable(u) else np.asarray(u, dtype=float)
    if u_nodes.shape != prof.r.shape:
        raise SolverError("u must be sampled on the shared unit grid")
    v = bvp.solve(prof.gp * u_nodes)
    return _boundary_slope(v, prof.h)


def _alpha_of(model, state, k, gamma, grid_n):
    if k == 0:
        return alpha_0(model, state, grid_n)
    if k == 1:
        return 0.0
    return alpha_k(gamma_k(model, state, k, grid_n), model.n, k, gamma)


def _translation_profile(state: StationaryState, grid_n: int) -> np.ndarray:
    """The neutral k = 1 bulk profile [phi(r-1) r - 1] sigma_s'(r)."""
    from .liegroup import CutoffProfile

    phi = CutoffProfile()
    r = np.linspace(0.0, 1.0, grid_n + 1)
    return (phi(r - 1.0) * r - 1.0) * state.sigma_s.derivative(r)


def solve_mode_eigen(
    model: TumorModel,
    state: StationaryState,
    k: int,
    gamma: float,
    c: float,
    tol: float = 1e-12,
    grid_n: int = GRID_N_DEFAULT,
) -> EigenModeResult:
    """Damped fixed-point construction of (a_{k,gamma}, mu, lambda).

    c = 0 is allowed and degenerates to a single linear solve with
    lambda = alpha exactly.  k = 1 returns the exact neutral result.
    """
    if c < 0.0:
        raise ValueError("c must be nonnegative")
    model, state, prof = _profiles(model, state, grid_n)
    n = model.n
    if k == 1:
        a_nodes = _translation_profile(state, grid_n)
        profile = RadialFunction(prof.r, a_nodes)
        return EigenModeResult(
            k=1, c=c, gamma=gamma, a_profile=profile, mu=0.0, lam=0.0,
            iterations=0, residual=0.0, alpha=0.0,
        )

    alpha = _alpha_of(model, state, k, gamma, grid_n)
    w = solve_wk(model, state, k, grid_n).values
    fp_nodes = prof.fp_half[::2]
    lkf = _lkf_bvp(n, k, grid_n, fp_nodes)
    jb = _j_bvp(n, k, grid_n)
    sp1 = prof.sigma_prime_boundary

    def rhs(a_nodes, m):
        return (
            -c * sp1 * m * w
            + c * alpha * a_nodes
            + c * c * m * a_nodes
            - sp1 * alpha * w
        )

    a = np.zeros(grid_n + 1)
    mu = 0.0
    mu_prev_delta = np.inf
    iterations = 0
    converged = False
    while iterations < MAX_FIXED_POINT_ITER:
        iterations += 1
        a_new = lkf.solve(rhs(a, mu))
        mu_new = _boundary_slope(jb.solve(prof.gp * a_new), prof.h)
        delta = abs(mu_new - mu)
        if delta > mu_prev_delta and iterations > 1:
            # oscillating iterates: damp
            a_new = 0.5 * (a_new + a)
            mu_new = _boundary_slope(jb.solve(prof.gp * a_new), prof.h)
            delta = abs(mu_new - mu)
        a, mu_old, mu = a_new, mu, mu_new
        mu_prev_delta = delta
        if delta < tol or c == 0.0:
            converged = True
            break
    if not converged:
        raise ConvergenceError(
            f"mode k = {k} fixed point did not converge in "
            f"{MAX_FIXED_POINT_ITER} iterations (last |d mu| = {mu_prev_delta:.3g}); "
            "c may exceed the smallness range"
        )
    res = lkf.apply(a) - rhs(a, mu)[lkf.offset : grid_n]
    scale = max(1.0, float(np.abs(a).max()))
    residual = float(np.abs(res).max()) / scale
    lam = alpha + c * mu
    profile = RadialFunction(prof.r, a)
    return EigenModeResult(
        k=k, c=c, gamma=gamma, a_profile=profile, mu=mu, lam=lam,
        iterations=iterations, residual=residual, alpha=alpha,
    )


@dataclass(frozen=True)
class ModeBoundEntry:
    k: int
    lam: float
    bound: float
    ok: bool


@dataclass
class BoundCheckReport:
    entries: list[ModeBoundEntry]
    alpha_star_half: float
    all_pass: bool

    def violations(self) -> list[ModeBoundEntry]:
        return [e for e in self.entries if not e.ok]


def spectral_bound_check(
    report,
    mode_results,
    gamma: float,
    c: float,
    neutral_tol: float = 1e-8,
) -> BoundCheckReport:
    """Check every computed eigenvalue against the resolvent bound
    sup Re sigma \\ {0} <= alpha_star / 2, with the k = 1 mode required to
    sit at 0 (within ``neutral_tol``).

    ``mode_results`` may hold :class:`EigenModeResult` objects or bare
    (k, lambda) pairs (the latter covers the degenerate c = 0 case where
    lambda = alpha).  Below threshold (gamma < gamma_star) the report simply
    flags the violating positive modes.
    """
    half = 0.5 * report.alpha_star
    entries = []
    for item in mode_results:
        if isinstance(item, EigenModeResult):
            k, lam = item.k, item.lam
        else:
            k, lam = item
        if k == 1:
            ok = abs(lam) <= neutral_tol
            entries.append(ModeBoundEntry(k=1, lam=lam, bound=0.0, ok=ok))
        else:
            entries.append(ModeBoundEntry(k=k, lam=lam, bound=half, ok=lam <= half))
    return BoundCheckReport(
        entries=entries,
        alpha_star_half=half,
        all_pass=all(e.ok for e in entries),
    )
