"""Radially symmetric stationary free-boundary solver.

The stationary pair (sigma_s, p_s) on the unknown ball of radius R_s solves

    sigma'' + (n-1)/r sigma' = f(sigma),   sigma'(0) = 0, sigma(R_s) = sigma_bar,
    p''     + (n-1)/r p'     = -g(sigma),  p'(0) = 0,  p(R_s) = gamma / R_s,

closed by the zero-flux condition p'(R_s) = 0, which (after one integration
of the pressure equation) is equivalent to the mass balance

    integral_0^{R_s} g(sigma_s(r)) r^{n-1} dr = 0.

The solver shoots in the center value sigma_c = sigma_s(0): each trial value
is integrated outward until sigma reaches sigma_bar, defining R(sigma_c);
the sign of the mass balance then drives a bisection in sigma_c.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import SolverError
from .model import TumorModel
from .radial import RadialFunction, cumulative_simpson, simpson_weights

N_STEPS_DEFAULT = 4096
R_MAX_DEFAULT = 32.0
HIT_TOL = 1e-12
SIGMA_C_BRACKET_MARGIN = 1e-6
MAX_BISECT = 200


@dataclass
class StationaryState:
    """Solved stationary data in either the physical or the unit-ball frame."""

    sigma_s: RadialFunction
    p_s: RadialFunction
    R_s: float
    sigma_center: float
    sigma_prime_boundary: float
    frame: str = "physical"  # "physical" | "unit"
    sigma_extended: RadialFunction | None = None  # past R_s, for diagnostics

    def validate(self, model: TumorModel) -> dict:
        """Residuals of the stationary invariants (all should be ~ solver tol)."""
        res = {}
        res["sigma_boundary"] = abs(self.sigma_s(self.R_s) - model.sigma_bar)
        res["mass_balance"] = abs(mass_balance(model, self.sigma_s, self.R_s))
        res["p_prime_boundary"] = abs(self.p_s.derivs[-1])
        values = self.sigma_s.values
        res["monotone"] = 0.0 if np.all(np.diff(values) > 0) else np.inf
        return res


def _rk4_step(f, n, r, sig, dsig, h):
    """One classical RK4 step of sigma'' + (n-1)/r sigma' = f(sigma)."""
    nm1 = n - 1.0
    k1s = dsig
    k1d = f(sig) - nm1 / r * dsig
    rm = r + 0.5 * h
    s2 = sig + 0.5 * h * k1s
    d2 = dsig + 0.5 * h * k1d
    k2d = f(s2) - nm1 / rm * d2
    s3 = sig + 0.5 * h * d2
    d3 = dsig + 0.5 * h * k2d
    k3d = f(s3) - nm1 / rm * d3
    rp = r + h
    s4 = sig + h * d3
    d4 = dsig + h * k3d
    k4d = f(s4) - nm1 / rp * d4
    sig_new = sig + h / 6.0 * (k1s + 2.0 * d2 + 2.0 * d3 + d4)
    dsig_new = dsig + h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d)
    return sig_new, dsig_new


def _series_start(f, n, sigma_c, h):
    """2-term Taylor start at the regular singular point r = 0."""
    a = f(sigma_c) / (2.0 * n)
    return sigma_c + a * h * h, 2.0 * a * h


def _shoot(model: TumorModel, sigma_c, r_max, n_steps):
    """Integrate outward until sigma crosses sigma_bar.

    Returns (hit radius or None, state at the last step).  The crossing is
    refined by bisection on the substep width inside the bracketing step.
    """
    f = model.f_scalar
    n = model.n
    sigma_bar = model.sigma_bar
    if sigma_c >= sigma_bar:
        return 0.0, (0.0, sigma_c, 0.0)
    h = r_max / n_steps
    sig, dsig = _series_start(f, n, sigma_c, h)
    if sig >= sigma_bar:
        return _refine_series_hit(f, n, sigma_c, sigma_bar, h), (h, sig, dsig)
    r = h
    for _ in range(1, n_steps):
        sig_new, dsig_new = _rk4_step(f, n, r, sig, dsig, h)
        if dsig_new < -1e-9:
            raise SolverError(
                f"non-monotone sigma profile at r = {r + h:.6g} "
                "(assumption (A1) violated or step too large)"
            )
        if sig_new >= sigma_bar:
            lo, hi = 0.0, h
            while hi - lo > HIT_TOL:
                mid = 0.5 * (lo + hi)
                s_mid, _ = _rk4_step(f, n, r, sig, dsig, mid)
                if s_mid >= sigma_bar:
                    hi = mid
                else:
                    lo = mid
            return r + 0.5 * (lo + hi), (r + h, sig_new, dsig_new)
        sig, dsig = sig_new, dsig_new
        r += h
    return None, (r, sig, dsig)


def _refine_series_hit(f, n, sigma_c, sigma_bar, h):
    lo, hi = 0.0, h
    while hi - lo > HIT_TOL:
        mid = 0.5 * (lo + hi)
        s_mid, _ = _series_start(f, n, sigma_c, mid)
        if s_mid >= sigma_bar:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _integrate_span(model: TumorModel, sigma_c, span, n_steps):
    """Integrate on [0, span] with n_steps uniform RK4 steps, storing the
    profile and its derivative on the nodes."""
    f = model.f_scalar
    n = model.n
    h = span / n_steps
    sigma = np.empty(n_steps + 1)
    dsigma = np.empty(n_steps + 1)
    sigma[0] = sigma_c
    dsigma[0] = 0.0
    sig, dsig = _series_start(f, n, sigma_c, h)
    sigma[1] = sig
    dsigma[1] = dsig
    r = h
    for i in range(2, n_steps + 1):
        sig, dsig = _rk4_step(f, n, r, sig, dsig, h)
        sigma[i] = sig
        dsigma[i] = dsig
        r += h
    nodes = np.linspace(0.0, span, n_steps + 1)
    return nodes, sigma, dsigma


def integrate_sigma(
    model: TumorModel,
    sigma_c: float,
    r_max: float = R_MAX_DEFAULT,
    n_steps: int = N_STEPS_DEFAULT,
) -> tuple[RadialFunction, float | None]:
    """Shoot the nutrient ODE from center value ``sigma_c``.

    Returns the profile (resampled on a uniform grid of the traversed span)
    together with the radius where sigma first reaches sigma_bar, or None if
    sigma_bar is not reached before ``r_max``.
    """
    if not 0.0 < sigma_c:
        raise SolverError(f"sigma_c must be positive, got {sigma_c}")
    if sigma_c >= model.sigma_bar:
        # boundary value attained at the center already; degenerate hit
        nodes = np.array([0.0, r_max])
        vals = np.array([sigma_c, sigma_c])
        return RadialFunction(nodes, vals, np.zeros(2)), 0.0
    hit, _ = _shoot(model, sigma_c, r_max, n_steps)
    span = hit if hit is not None else r_max
    nodes, sigma, dsigma = _integrate_span(model, sigma_c, span, n_steps)
    return RadialFunction(nodes, sigma, dsigma), hit


def mass_balance(model: TumorModel, sigma: RadialFunction, R: float) -> float:
    """Composite-Simpson value of  integral_0^R g(sigma(r)) r^{n-1} dr."""
    nodes = sigma.nodes
    uniform = (
        abs(nodes[-1] - R) <= 1e-12 * max(1.0, R)
        and nodes.size % 2 == 1
        and np.allclose(np.diff(nodes), nodes[1] - nodes[0], rtol=1e-10)
    )
    if uniform:
        r = nodes
        vals = sigma.values
        h = nodes[1] - nodes[0]
    else:
        m = max(512, 2 * ((nodes.size - 1) // 2))
        r = np.linspace(0.0, R, m + 1)
        vals = sigma(r)
        h = R / m
    integrand = model.g_fn(vals) * r ** (model.n - 1)
    return float(simpson_weights(r.size, h) @ integrand)


def _mass_of_trial(model, sigma_c, r_max, n_steps):
    """Mass balance of the trial profile reaching sigma_bar, or None if the
    trial never reaches sigma_bar before r_max."""
    hit, _ = _shoot(model, sigma_c, r_max, n_steps)
    if hit is None:
        return None
    if hit == 0.0:
        return 0.0
    _, sigma, _ = _integrate_span(model, sigma_c, hit, n_steps)
    r = np.linspace(0.0, hit, n_steps + 1)
    integrand = model.g_fn(sigma) * r ** (model.n - 1)
    return float(simpson_weights(r.size, hit / n_steps) @ integrand)


def solve_stationary(
    model: TumorModel,
    tol: float = 1e-10,
    r_max: float = R_MAX_DEFAULT,
    n_steps: int = N_STEPS_DEFAULT,
) -> StationaryState:
    """Solve the stationary free-boundary problem by bisection on the center
    value sigma_c, with the sign of the mass balance driving the bracket."""
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    sigma_bar = model.sigma_bar
    lo = SIGMA_C_BRACKET_MARGIN * sigma_bar
    hi = (1.0 - SIGMA_C_BRACKET_MARGIN) * sigma_bar

    m_lo = _mass_of_trial(model, lo, r_max, n_steps)
    m_hi = _mass_of_trial(model, hi, r_max, n_steps)
    if m_lo is None:
        raise SolverError(
            f"sigma never reaches sigma_bar before r_max = {r_max} at the "
            "low end of the sigma_c bracket; increase r_max"
        )
    if m_lo > 0.0 or m_hi < 0.0:
        raise SolverError(
            "no sign change of the mass balance in the sigma_c bracket "
            f"({m_lo:.3g} .. {m_hi:.3g}); the model admits no stationary "
            "solution in (0, sigma_bar)"
        )

    def bisect(lo, hi, span, target):
        iterations = 0
        while hi - lo > target:
            iterations += 1
            if iterations > MAX_BISECT:
                raise SolverError(
                    f"sigma_c bisection did not reach tolerance {tol} in "
                    f"{MAX_BISECT} iterations"
                )
            mid = 0.5 * (lo + hi)
            m_mid = _mass_of_trial(model, mid, span, n_steps)
            if m_mid is None:
                raise SolverError(f"no hit before r_max for sigma_c = {mid}")
            if m_mid < 0.0:
                lo = mid
            else:
                hi = mid
        return lo, hi

    # stage 1: locate the radius on the wide horizon (coarse step)
    target = max(tol * sigma_bar * 0.5, 1e-15 * sigma_bar)
    lo, hi = bisect(lo, hi, r_max, max(target, 1e-7 * sigma_bar))
    sigma_c = 0.5 * (lo + hi)
    hit, _ = _shoot(model, sigma_c, r_max, n_steps)
    if hit is None or hit == 0.0:
        raise SolverError("degenerate stationary radius")

    # stage 2: re-shoot on a horizon just past the radius, which shrinks the
    # integration step ~ r_max / R_s fold and the hit error accordingly
    span = min(r_max, 1.5 * hit)
    width = hi - lo
    lo2 = max(SIGMA_C_BRACKET_MARGIN * sigma_bar, lo - 4.0 * width)
    hi2 = min((1.0 - SIGMA_C_BRACKET_MARGIN) * sigma_bar, hi + 4.0 * width)
    m_lo2 = _mass_of_trial(model, lo2, span, n_steps)
    m_hi2 = _mass_of_trial(model, hi2, span, n_steps)
    if m_lo2 is not None and m_hi2 is not None and m_lo2 < 0.0 < m_hi2:
        lo, hi = bisect(lo2, hi2, span, max(0.05 * target, 1e-16 * sigma_bar))
        sigma_c = 0.5 * (lo + hi)
        hit, _ = _shoot(model, sigma_c, span, n_steps)
        if hit is None or hit == 0.0:
            raise SolverError("degenerate stationary radius")
    R_s = hit
    nodes, sigma, dsigma = _integrate_span(model, sigma_c, R_s, n_steps)
    profile = RadialFunction(nodes, sigma, dsigma)

    # extension past R_s for diagnostics of over-inflated transients
    ext_span = 1.3 * R_s
    ext_nodes, ext_sigma, ext_dsigma = _integrate_span(
        model, sigma_c, ext_span, n_steps
    )
    extended = RadialFunction(ext_nodes, ext_sigma, ext_dsigma)

    state = StationaryState(
        sigma_s=profile,
        p_s=None,
        R_s=R_s,
        sigma_center=sigma_c,
        sigma_prime_boundary=float(dsigma[-1]),
        frame="physical",
        sigma_extended=extended,
    )
    state.p_s = pressure_profile(state, model)
    return state


def pressure_profile(state: StationaryState, model: TumorModel) -> RadialFunction:
    """Pressure from quadrature of  p'(r) = -r^{1-n} int_0^r g(sigma_s) s^{n-1} ds
    normalized by p(R_s) = gamma / R_s."""
    if state.sigma_s is None:
        raise SolverError("state has no sigma profile")
    r = state.sigma_s.nodes
    h = r[1] - r[0]
    n = model.n
    integrand = model.g_fn(state.sigma_s.values) * r ** (n - 1)
    cum = cumulative_simpson(integrand, h)
    with np.errstate(divide="ignore", invalid="ignore"):
        p_prime = -cum / r ** (n - 1)
    p_prime[0] = 0.0
    # p(r) = p(R_s) - int_r^{R_s} p' = gamma/R_s - (P(R_s) - P(r))
    anti = cumulative_simpson(p_prime, h)
    p_vals = model.gamma / state.R_s - (anti[-1] - anti)
    return RadialFunction(r, p_vals, p_prime)


def rescale_to_unit(
    state: StationaryState, model: TumorModel
) -> tuple[StationaryState, TumorModel]:
    """Map the solved state onto the unit ball: r_hat = r / R_s, with the
    model laws scaled by R_s^2 so the stationary system holds on [0, 1].

    The surface-tension coefficient becomes gamma / R_s so the pressure
    boundary normalization p(1) = gamma_hat stays consistent.
    """
    R = state.R_s
    if state.frame == "unit" or abs(R - 1.0) < 1e-14:
        unit_model = model if abs(R - 1.0) < 1e-15 else model.with_scaled_laws(R * R, gamma=model.gamma / R)
        return replace(state, frame="unit"), unit_model
    scaled = model.with_scaled_laws(R * R, gamma=model.gamma / R)

    def shrink(prof):
        if prof is None:
            return None
        return RadialFunction(prof.nodes / R, prof.values, prof.derivs * R)

    new_state = StationaryState(
        sigma_s=shrink(state.sigma_s),
        p_s=shrink(state.p_s),
        R_s=1.0,
        sigma_center=state.sigma_center,
        sigma_prime_boundary=state.sigma_prime_boundary * R,
        frame="unit",
        sigma_extended=shrink(state.sigma_extended),
    )
    return new_state, scaled


def ensure_unit_frame(
    state: StationaryState, model: TumorModel
) -> tuple[StationaryState, TumorModel]:
    """Pass through unit-frame inputs, rescale physical-frame ones."""
    if state.frame == "unit":
        return state, model
    return rescale_to_unit(state, model)
