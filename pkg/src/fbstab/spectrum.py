"""The c = 0 linearized spectrum at the stationary state (unit-ball frame):
mode constants, the radial profiles u_bar_k, the bifurcation values gamma_k,
the surface-mode eigenvalues alpha_{k,gamma}, the radial eigenvalue
alpha_{0,gamma}, the stability threshold gamma_star with its maximizer, the
bulk operator's top eigenvalue nu_1, and the smallness bound c_0.

All quantities are computed in the unit frame; physical-frame inputs are
rescaled first.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import ConvergenceError, SolverError
from .model import TumorModel
from .radial import RadialFunction, simpson_weights
from .stationary import StationaryState, ensure_unit_frame

GRID_N_DEFAULT = 2048
K_MAX_DEFAULT = 64


@dataclass(frozen=True)
class ModeConstants:
    """Spherical-harmonic mode data: Laplace-Beltrami eigenvalue lambda_k,
    the radial ODE exponent a_k = 2k + n - 1, and the eigenspace dimension."""

    k: int
    lambda_k: int
    a_k: int
    d_k: int


def mode_constants(n: int, k: int) -> ModeConstants:
    """Exact integer mode constants (python ints never overflow, so the
    k <= 10^6 guard of the contract is automatic)."""
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    if k < 0:
        raise ValueError(f"need k >= 0, got {k}")
    lam = k * k + (n - 2) * k
    a = 2 * k + n - 1
    if k == 0:
        d = 1
    elif k == 1:
        d = n
    else:
        d = math.comb(n + k - 1, k) - math.comb(n + k - 3, k - 2)
    return ModeConstants(k=k, lambda_k=lam, a_k=a, d_k=d)


# ---------------------------------------------------------------------------
# shared radial profiles on the unit grid

class UnitGridProfiles:
    """sigma_s and the composed coefficients f'(sigma_s), g'(sigma_s)
    sampled on the uniform unit grid and its midpoints (the RK4 stages)."""

    def __init__(self, model: TumorModel, state: StationaryState, grid_n: int):
        if state.frame != "unit":
            raise SolverError("spectral computations require the unit frame")
        self.grid_n = grid_n
        self.h = 1.0 / grid_n
        self.r = np.linspace(0.0, 1.0, grid_n + 1)
        r_half = np.linspace(0.0, 1.0, 2 * grid_n + 1)
        sigma_half = state.sigma_s(r_half)
        self.fp_half = np.broadcast_to(
            np.asarray(model.fp_fn(sigma_half), dtype=float), r_half.shape
        ).copy()
        self.gp = np.broadcast_to(
            np.asarray(model.gp_fn(sigma_half[::2]), dtype=float), self.r.shape
        ).copy()
        self.sigma = sigma_half[::2]
        self.sigma_prime_boundary = state.sigma_prime_boundary
        self.g_at_bar = float(model.g_fn(model.sigma_bar))


def _profiles(model, state, grid_n):
    state, model = ensure_unit_frame(state, model)
    return model, state, UnitGridProfiles(model, state, grid_n)


# ---------------------------------------------------------------------------
# the regular radial IVP  u'' + (a/r) u' = Q(r) u,  u(0) = 1, u'(0) = 0

def _series_coeffs(q0, q2, a, r0, n_terms=64):
    """Power series sum c_m r^{2m} (c_0 = 1) of the regular solution with
    Q(r) ~ q0 + q2 r^2, evaluated with its derivative at r0."""
    c_prev2 = 0.0
    c_prev = 1.0
    u = 1.0
    du = 0.0
    r2 = r0 * r0
    rpow = 1.0
    for m in range(1, n_terms):
        c = (q0 * c_prev + q2 * c_prev2) / (2.0 * m * (2.0 * m - 1.0 + a))
        rpow *= r2
        term = c * rpow
        u += term
        du += 2.0 * m * c * rpow / r0
        if abs(term) < 1e-18 * abs(u):
            break
        c_prev2, c_prev = c_prev, c
    return u, du


def _solve_regular_ivp(a: float, q_half: np.ndarray, grid_n: int):
    """March the regular solution across the uniform grid.

    The RK4 start index m0 ~ a/2.5 keeps the singular drag term a*h/r inside
    the stability region; nodes below m0 are filled from the power series
    (with the quadratic Taylor model of Q).
    """
    h = 1.0 / grid_n
    m0 = max(1, int(math.ceil(a / 2.5)))
    if m0 > grid_n // 4:
        raise SolverError(
            f"mode exponent a = {a} too large for grid_n = {grid_n}; "
            "refine the grid"
        )
    u = np.empty(grid_n + 1)
    du = np.empty(grid_n + 1)
    q0 = q_half[0]
    r_fit = m0 * h
    q2 = (q_half[2 * m0] - q0) / (r_fit * r_fit) if r_fit > 0 else 0.0
    u[0] = 1.0
    du[0] = 0.0
    for i in range(1, m0 + 1):
        u[i], du[i] = _series_coeffs(q0, q2, a, i * h)
    ui = u[m0]
    vi = du[m0]
    r = r_fit
    for i in range(m0, grid_n):
        q1 = q_half[2 * i]
        qm = q_half[2 * i + 1]
        q2r = q_half[2 * i + 2]
        rm = r + 0.5 * h
        rp = r + h
        k1u = vi
        k1v = q1 * ui - a / r * vi
        u2 = ui + 0.5 * h * k1u
        v2 = vi + 0.5 * h * k1v
        k2v = qm * u2 - a / rm * v2
        u3 = ui + 0.5 * h * v2
        v3 = vi + 0.5 * h * k2v
        k3v = qm * u3 - a / rm * v3
        u4 = ui + h * v3
        v4 = vi + h * k3v
        k4v = q2r * u4 - a / rp * v4
        ui += h / 6.0 * (k1u + 2.0 * v2 + 2.0 * v3 + v4)
        vi += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        u[i + 1] = ui
        du[i + 1] = vi
        r = rp
    return u, du


def solve_ubar(
    model: TumorModel,
    state: StationaryState,
    k: int,
    grid_n: int = GRID_N_DEFAULT,
) -> RadialFunction:
    """The normalized mode profile: u'' + (a_k/r) u' = f'(sigma_s(r)) u with
    u(0) = 1, u'(0) = 0, marched to r = 1 on the unit grid."""
    model, state, prof = _profiles(model, state, grid_n)
    mc = mode_constants(model.n, k)
    u, du = _solve_regular_ivp(float(mc.a_k), prof.fp_half, grid_n)
    if np.any(u <= 0.0):
        raise SolverError(f"u_bar_{k} lost positivity (integration failure)")
    return RadialFunction(prof.r, u, du)


def _ubar_values(prof: UnitGridProfiles, a_k: int):
    u, du = _solve_regular_ivp(float(a_k), prof.fp_half, prof.grid_n)
    if np.any(u <= 0.0):
        raise SolverError("u_bar lost positivity (integration failure)")
    return u, du


def _gamma_k_from_profiles(prof: UnitGridProfiles, n: int, k: int):
    mc = mode_constants(n, k)
    u, _ = _ubar_values(prof, mc.a_k)
    w = simpson_weights(prof.grid_n + 1, prof.h)
    integral = float(w @ (prof.gp * u * prof.r ** mc.a_k))
    bracket = prof.g_at_bar - prof.sigma_prime_boundary / u[-1] * integral
    return (n - 1.0) / ((mc.lambda_k - n + 1.0) * k) * bracket, float(u[-1])


def gamma_k(
    model: TumorModel,
    state: StationaryState,
    k: int,
    grid_n: int = GRID_N_DEFAULT,
) -> float:
    """Bifurcation value of mode k >= 2:

        gamma_k = (n-1) / ((lambda_k - n + 1) k) *
                  [ g(sigma_bar) - sigma_s'(1)/u_k(1) *
                    int_0^1 g'(sigma_s(rho)) u_k(rho) rho^{a_k} drho ].
    """
    if k < 2:
        raise ValueError("gamma_k is defined for k >= 2 (the factor "
                         "lambda_k - n + 1 vanishes at k = 1)")
    model, state, prof = _profiles(model, state, grid_n)
    value, _ = _gamma_k_from_profiles(prof, model.n, k)
    return value


def alpha_k(gamma_k_value: float, n: int, k: int, gamma: float) -> float:
    """Surface-mode eigenvalue  alpha_{k,gamma} =
    -((lambda_k - n + 1) k / (n - 1)) (gamma - gamma_k); alpha_{1,gamma} = 0
    by the translation-neutrality convention."""
    if k == 1:
        return 0.0
    if k < 2:
        raise ValueError("alpha_k needs k >= 2 (or the k = 1 neutral branch)")
    mc = mode_constants(n, k)
    return -((mc.lambda_k - n + 1.0) * k / (n - 1.0)) * (gamma - gamma_k_value)


def alpha_0(
    model: TumorModel,
    state: StationaryState,
    grid_n: int = GRID_N_DEFAULT,
) -> float:
    """Radial-mode eigenvalue

        alpha_0 = g(sigma_bar) - sigma_s'(1)/u_0(1) *
                  int_0^1 g'(sigma_s(r)) u_0(r) r^{n-1} dr,

    independent of gamma and negative for every valid model."""
    model, state, prof = _profiles(model, state, grid_n)
    n = model.n
    u, _ = _ubar_values(prof, mode_constants(n, 0).a_k)
    w = simpson_weights(prof.grid_n + 1, prof.h)
    integral = float(w @ (prof.gp * u * prof.r ** (n - 1)))
    return prof.g_at_bar - prof.sigma_prime_boundary / u[-1] * integral


def gamma_star(
    model: TumorModel,
    state: StationaryState,
    k_max: int = K_MAX_DEFAULT,
    grid_n: int = GRID_N_DEFAULT,
    strict: bool = False,
) -> tuple[float, int]:
    """max over 2 <= k <= k_max of gamma_k, with a tail-decay sanity check
    (gamma_{k_max} must fall below half the max, since gamma_k -> 0)."""
    if k_max < 8:
        raise ValueError("k_max must be at least 8")
    model, state, prof = _profiles(model, state, grid_n)
    best, arg = -np.inf, -1
    last = None
    for k in range(2, k_max + 1):
        value, _ = _gamma_k_from_profiles(prof, model.n, k)
        if value > best:
            best, arg = value, k
        last = value
    if not last < 0.5 * best:
        msg = (f"gamma_k tail has not decayed at k_max = {k_max}: "
               f"gamma_kmax = {last:.3g} vs gamma_star = {best:.3g}")
        if strict:
            raise ConvergenceError(msg)
        warnings.warn(msg, stacklevel=2)
    return best, arg


def nu1(
    model: TumorModel,
    state: StationaryState,
    grid_n: int = GRID_N_DEFAULT,
    tol: float = 1e-12,
) -> float:
    """Largest eigenvalue of the radial Dirichlet problem

        u'' + (n-1)/r u' - f'(sigma_s) u = nu u,  u'(0) = 0, u(1) = 0,

    by shooting in nu.  f' >= 0 makes the operator negative, so nu_1 < 0.
    """
    model, state, prof = _profiles(model, state, grid_n)
    a = float(model.n - 1)

    def boundary_value(nu):
        u, _ = _solve_regular_ivp(a, prof.fp_half + nu, grid_n)
        return u[-1]

    hi = 0.0
    val_hi = boundary_value(hi)
    if val_hi <= 0.0:
        raise SolverError("u(1; 0) <= 0: operator not negative definite?")
    # march down in steps small enough never to jump the first two eigenvalues
    step = 2.0
    lo = hi
    val_lo = val_hi
    for _ in range(10000):
        lo_new = lo - step
        val_new = boundary_value(lo_new)
        if val_new * val_lo < 0.0:
            lo, hi = lo_new, lo
            break
        lo, val_lo = lo_new, val_new
        if lo < -1e6:
            raise SolverError("nu_1 bracket failure below -1e6")
    else:
        raise SolverError("nu_1 bracket failure")
    root = brentq(boundary_value, lo, hi, xtol=tol)
    if not root < 0.0:
        raise SolverError(f"nu_1 = {root} is not negative")
    return float(root)


def c0_bound(nu_1: float, alpha_star: float) -> float:
    """Smallness bound c_0 = nu_1 / alpha_star (both strictly negative)."""
    if not nu_1 < 0.0:
        raise ValueError(f"nu_1 must be negative, got {nu_1}")
    if not alpha_star < 0.0:
        raise ValueError(
            f"alpha_star must be negative (gamma > gamma_star), got {alpha_star}"
        )
    return nu_1 / alpha_star


# ---------------------------------------------------------------------------
# report

@dataclass(frozen=True)
class SpectralRow:
    constants: ModeConstants
    ubar_boundary: float
    gamma_k: float | None  # None for k < 2
    alpha_k: float


@dataclass
class SpectralReport:
    """Per-mode table plus the derived thresholds for one (model, gamma)."""

    rows: list[SpectralRow]
    alpha_0: float
    gamma_star: float
    argmax_k: int
    alpha_star: float
    nu1: float
    c0: float | None  # None when gamma <= gamma_star (bound meaningless)
    k_max: int
    gamma: float

    def stable(self) -> bool:
        return self.gamma > self.gamma_star

    def row(self, k: int) -> SpectralRow:
        return self.rows[k]

    def alpha_of(self, k: int) -> float:
        if k == 0:
            return self.alpha_0
        return self.rows[k].alpha_k


def spectral_report(
    model: TumorModel,
    state: StationaryState,
    k_max: int = K_MAX_DEFAULT,
    grid_n: int = GRID_N_DEFAULT,
    strict: bool = False,
) -> SpectralReport:
    """Assemble the full c = 0 spectral table for the model's gamma."""
    if k_max < 8:
        raise ValueError("k_max must be at least 8")
    model, state, prof = _profiles(model, state, grid_n)
    n = model.n
    gamma = model.gamma
    rows = []
    g_star, arg = -np.inf, -1
    a_star = -np.inf
    for k in range(0, k_max + 1):
        mc = mode_constants(n, k)
        u, _ = _ubar_values(prof, mc.a_k)
        ubar1 = float(u[-1])
        if k < 2:
            gk = None
        else:
            gk, ubar1 = _gamma_k_from_profiles(prof, n, k)
            if not gk > 0.0:
                raise SolverError(f"gamma_{k} = {gk} is not positive")
            if gk > g_star:
                g_star, arg = gk, k
        if k == 0:
            ak = alpha_0(model, state, grid_n)
            a0 = ak
        elif k == 1:
            ak = 0.0
        else:
            ak = alpha_k(gk, n, k, gamma)
            a_star = max(a_star, ak)
        rows.append(SpectralRow(constants=mc, ubar_boundary=ubar1,
                                gamma_k=gk, alpha_k=ak))
    last_gamma = rows[-1].gamma_k
    if not last_gamma < 0.5 * g_star:
        msg = (f"gamma_k tail has not decayed at k_max = {k_max}: "
               f"gamma_kmax = {last_gamma:.3g} vs gamma_star = {g_star:.3g}")
        if strict:
            raise ConvergenceError(msg)
        warnings.warn(msg, stacklevel=2)
    n1 = nu1(model, state, grid_n)
    c0 = None
    if a_star < 0.0:
        c0 = c0_bound(n1, a_star)
    return SpectralReport(
        rows=rows,
        alpha_0=a0,
        gamma_star=g_star,
        argmax_k=arg,
        alpha_star=a_star,
        nu1=n1,
        c0=c0,
        k_max=k_max,
        gamma=gamma,
    )
