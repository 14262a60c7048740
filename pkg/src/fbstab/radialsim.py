"""Nonlinear radially symmetric moving-boundary dynamics.

The evolution is posed on the fixed scaled coordinate s = r/R(t) in [0, 1]:

    c [ d sigma/dt - (s Rdot/R) d sigma/ds ]
        = R^{-2} [ sigma_ss + (n-1)/s sigma_s ] - f(sigma),
    sigma(1, t) = sigma_bar,
    Rdot = R * integral_0^1 g(sigma) s^{n-1} ds,

with an IMEX step (implicit diffusion, explicit reaction and advection) in
the parabolic regime c > 0, and an exact quasi-static elliptic solve of
sigma'' + (n-1)/s sigma' = R^2 f(sigma) when c = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .errors import ConvergenceError, SolverError
from .model import TumorModel
from .radial import RadialFunction, simpson_weights
from .stationary import StationaryState

GRID_N_DEFAULT = 256
NEWTON_TOL = 1e-11
NEWTON_DAMPING = 0.5
BLOWUP_FACTOR = 10.0


@dataclass
class RadialSimState:
    """One snapshot of the moving-boundary simulation."""

    t: float
    R: float
    sigma: RadialFunction  # on the scaled coordinate s in [0, 1]
    mode: str  # "parabolic" | "quasi_static"

    def __post_init__(self):
        if self.R <= 0.0:
            raise SolverError(f"free radius must stay positive, got {self.R}")


def _grid_of(state: RadialSimState):
    s = state.sigma.nodes
    if abs(s[0]) > 1e-14 or abs(s[-1] - 1.0) > 1e-14:
        raise SolverError("scaled profile must live on [0, 1]")
    return s


def boundary_speed(model: TumorModel, state: RadialSimState) -> float:
    """Rdot = R * int_0^1 g(sigma(s)) s^{n-1} ds (Simpson on the state grid)."""
    s = _grid_of(state)
    h = s[1] - s[0]
    integrand = model.g_fn(state.sigma.values) * s ** (model.n - 1)
    return state.R * float(simpson_weights(s.size, h) @ integrand)


def _diffusion_system(n, grid_n, h, coef, dt):
    """Banded (I - dt*coef*Lap_s) for unknowns s_0..s_{N-1} (Dirichlet at 1).

    Returns (ab, boundary_column) where boundary_column carries the coupling
    of node N-1 to the fixed boundary value.
    """
    rows = grid_n
    upper = np.zeros(rows)
    diag = np.zeros(rows)
    lower = np.zeros(rows)
    a = dt * coef / (h * h)
    diag[0] = 1.0 + 2.0 * n * a
    upper[1] = -2.0 * n * a
    si = np.arange(1, grid_n) * h
    diag[1:] = 1.0 + 2.0 * a
    upper[2:] = -a * (1.0 + (n - 1) * h / (2.0 * si[:-1]))
    lower[:-1] = -a * (1.0 - (n - 1) * h / (2.0 * si))
    boundary = a * (1.0 + (n - 1) * h / (2.0 * si[-1]))
    return np.vstack([upper, diag, lower]), boundary


def _max_principle_check(model, sigma):
    if np.any(sigma <= 0.0) or np.any(sigma > model.sigma_bar * (1.0 + 1e-9)):
        raise SolverError(
            "sigma left the admissible band (0, sigma_bar]; "
            "reduce dt or check the model"
        )


def step_radial(model: TumorModel, state: RadialSimState, dt: float) -> RadialSimState:
    """Advance one step: IMEX-1 in the parabolic regime, damped-Newton
    elliptic solve in the quasi-static regime, then move the radius."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    s = _grid_of(state)
    grid_n = s.size - 1
    h = s[1] - s[0]
    n = model.n
    sig = state.sigma.values.copy()
    R = state.R
    rdot = boundary_speed(model, state)

    if state.mode == "parabolic":
        c = model.c
        if c <= 0.0:
            raise SolverError("parabolic stepping needs c > 0")
        # explicit advection (s Rdot / R) d_s sigma, centered interior
        dsig = np.gradient(sig, h)
        advect = s * (rdot / R) * dsig
        expl = sig + dt * (advect - model.f_fn(sig) / c)
        expl_red = expl[:grid_n]
        ab, bcol = _diffusion_system(n, grid_n, h, 1.0 / (c * R * R), dt)
        rhs = expl_red.copy()
        rhs[-1] += bcol * model.sigma_bar
        new_red = solve_banded((1, 1), ab, rhs)
        new = np.append(new_red, model.sigma_bar)
    elif state.mode == "quasi_static":
        new = _solve_quasi_static(model, sig, R, grid_n, h)
    else:
        raise SolverError(f"unknown mode {state.mode!r}")

    _max_principle_check(model, new)
    R_new = R + dt * rdot
    profile = RadialFunction(s, new)
    return RadialSimState(t=state.t + dt, R=R_new, sigma=profile, mode=state.mode)


def _solve_quasi_static(model, sig_init, R, grid_n, h, tol=NEWTON_TOL,
                        max_iter=60):
    """Damped Newton for sigma'' + (n-1)/s sigma' = R^2 f(sigma),
    sigma'(0) = 0, sigma(1) = sigma_bar, warm-started from sig_init."""
    n = model.n
    sig = sig_init.copy()
    sig[-1] = model.sigma_bar
    # the residual is dominated by second differences, so its rounding floor
    # scales like eps * sigma / h^2
    floor = 64.0 * np.finfo(float).eps * model.sigma_bar / (h * h)

    def residual(v):
        lap = np.zeros(grid_n)
        lap[0] = 2.0 * n * (v[1] - v[0]) / (h * h)
        si = np.arange(1, grid_n) * h
        lap[1:] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / (h * h) + (
            (n - 1) / si
        ) * (v[2:] - v[:-2]) / (2.0 * h)
        return lap - R * R * model.f_fn(v[:grid_n])

    res = residual(sig)
    scale = max(1.0, R * R * float(np.abs(model.f_fn(sig)).max()))
    target = max(tol * scale, floor)
    for _ in range(max_iter):
        if np.abs(res).max() <= target:
            return sig
        fp = R * R * model.fp_fn(sig[:grid_n])
        ab, _ = _diffusion_system(n, grid_n, h, 1.0, 1.0)
        # reuse the (I - Lap) template: convert to (Lap - diag(fp)) rows
        upper = -(ab[0])
        diag = -(ab[1] - 1.0) - fp
        lower = -(ab[2])
        jac = np.vstack([upper, diag, lower])
        delta = solve_banded((1, 1), jac, -res)
        step = 1.0
        while step > 1e-4:
            trial = sig.copy()
            trial[:grid_n] += step * delta
            res_trial = residual(trial)
            if np.abs(res_trial).max() < np.abs(res).max():
                sig, res = trial, res_trial
                break
            step *= NEWTON_DAMPING
        else:
            if np.abs(res).max() <= 10.0 * floor:
                return sig
            raise ConvergenceError("quasi-static Newton stalled")
    raise ConvergenceError("quasi-static Newton did not converge")


@dataclass
class RadialTrajectory:
    times: np.ndarray
    radii: np.ndarray
    sigma_err: np.ndarray
    final: RadialSimState
    R_s: float

    def radius_error_series(self):
        return self.times, np.abs(self.radii - self.R_s)


def default_dt(model: TumorModel) -> float:
    """Stability budget of the IMEX-1 split: the explicit reaction f/c caps
    the step at O(c); the implicit diffusion imposes nothing."""
    if model.c <= 0.0:
        return 1e-2
    return min(1e-3, 0.5 * model.c)


def run_radial(
    model: TumorModel,
    gamma: float,
    R0: float,
    sigma0: RadialFunction | None,
    t_end: float,
    dt: float | None = None,
    reference: StationaryState | None = None,
    grid_n: int = GRID_N_DEFAULT,
    stride: int | None = None,
) -> RadialTrajectory:
    """Evolve from radius R0 and scaled profile sigma0 (stationary-slaved
    when None) and record (t, R, ||sigma - sigma_s(R .)||_inf).

    ``gamma`` is carried for interface symmetry: the radial dynamics are
    driven by the mass balance alone and the surface tension only normalizes
    the slaved pressure, which is not emitted here.
    """
    del gamma
    if R0 <= 0.0:
        raise ValueError("R0 must be positive")
    if reference is None:
        from .stationary import solve_stationary

        reference = solve_stationary(model)
    R_s = reference.R_s
    s = np.linspace(0.0, 1.0, grid_n + 1)
    if sigma0 is None:
        init_vals = _slaved_profile(model, reference, R0, s)
        sigma0 = RadialFunction(s, init_vals)
    else:
        vals = sigma0(s)
        if abs(vals[-1] - model.sigma_bar) > 1e-9:
            raise SolverError("sigma0(1) must equal sigma_bar")
        sigma0 = RadialFunction(s, vals)
    mode = "parabolic" if model.c > 0.0 else "quasi_static"
    state = RadialSimState(t=0.0, R=R0, sigma=sigma0, mode=mode)
    if dt is None:
        dt = default_dt(model)
    n_steps = max(1, int(round(t_end / dt))) if t_end > 0 else 0
    if stride is None:
        stride = max(1, n_steps // 2000)

    ref_prof = reference.sigma_extended or reference.sigma_s

    def sigma_err(st):
        target = ref_prof(np.clip(st.R * s, 0.0, ref_prof.r_max))
        return float(np.abs(st.sigma.values - target).max())

    times = [0.0]
    radii = [R0]
    errs = [sigma_err(state)]
    for step in range(1, n_steps + 1):
        state = step_radial(model, state, dt)
        if state.R > BLOWUP_FACTOR * R_s or state.R < R_s / BLOWUP_FACTOR:
            raise SolverError(
                f"radial run diverged: R = {state.R:.4g} left "
                f"[{R_s / BLOWUP_FACTOR:.4g}, {BLOWUP_FACTOR * R_s:.4g}]"
            )
        if step % stride == 0 or step == n_steps:
            times.append(state.t)
            radii.append(state.R)
            errs.append(sigma_err(state))
    return RadialTrajectory(
        times=np.asarray(times),
        radii=np.asarray(radii),
        sigma_err=np.asarray(errs),
        final=state,
        R_s=R_s,
    )


def _slaved_profile(model, reference, R, s):
    """Quasi-static nutrient profile for radius R (used as initial data)."""
    grid_n = s.size - 1
    h = s[1] - s[0]
    guess = reference.sigma_s(np.clip(R * s, 0.0, reference.sigma_s.r_max))
    guess[-1] = model.sigma_bar
    return _solve_quasi_static(model, guess, R, grid_n, h)


def measure_rate(series, window: float = 0.4) -> float:
    """Decay rate of the tail of a positive series by least squares on
    log(value) vs t over the final ``window`` fraction.

    Returns a positive number for decay; a growing tail yields the negated
    growth rate (instability signal).
    """
    if not 0.0 < window <= 1.0:
        raise ValueError("window must lie in (0, 1]")
    if isinstance(series, tuple):
        t, v = series
    else:
        arr = np.asarray(series, dtype=float)
        t, v = arr[:, 0], arr[:, 1]
    t = np.asarray(t, dtype=float)
    v = np.asarray(v, dtype=float)
    if t.size < 4:
        raise ValueError("need at least 4 samples")
    t0 = t[-1] - window * (t[-1] - t[0])
    mask = t >= t0
    tt, vv = t[mask], v[mask]
    if np.any(vv <= 0.0):
        raise SolverError("tail values must be positive to measure a rate")
    slope = np.polyfit(tt, np.log(vv), 1)[0]
    return float(-slope)
