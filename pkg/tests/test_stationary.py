import math

import numpy as np
import pytest

from fbstab.errors import SolverError
from fbstab.model import build_model
from fbstab.stationary import (
    integrate_sigma,
    mass_balance,
    pressure_profile,
    rescale_to_unit,
    solve_stationary,
)

import oracles


def test_integrate_sigma_closed_form(mstar):
    profile, hit = integrate_sigma(mstar, oracles.SIGMA_CENTER_STAR)
    assert hit == pytest.approx(1.0, abs=1e-8)
    r = np.linspace(0.0, 1.0, 57)
    assert np.abs(profile(r) - oracles.sigma_s_closed_form(r)).max() < 1e-8


def test_integrate_sigma_degenerate_center(mstar):
    _, hit = integrate_sigma(mstar, mstar.sigma_bar)
    assert hit == 0.0


def test_integrate_sigma_hit_monotone_in_center_value(mstar):
    hits = [integrate_sigma(mstar, sc)[1] for sc in (0.6, 0.7, 0.8)]
    assert all(h is not None for h in hits)
    # the hit radius grows as sigma_c decreases
    assert hits[0] > hits[1] > hits[2]
    # oracle check: closed form R(sigma_c) solves sigma_c sinh R / R = 1
    for sc, hit in zip((0.6, 0.7, 0.8), hits):
        assert sc * math.sinh(hit) / hit == pytest.approx(1.0, abs=1e-9)


def test_mass_balance_stationary_profile(mstar, mstar_state):
    assert abs(mass_balance(mstar, mstar_state.sigma_s, mstar_state.R_s)) < 1e-9


def test_mass_balance_constant_at_sigma_tilde(mstar):
    from fbstab.radial import RadialFunction

    nodes = np.linspace(0.0, 1.0, 257)
    flat = RadialFunction(nodes, np.full(257, mstar.sigma_tilde))
    assert mass_balance(mstar, flat, 1.0) == 0.0


def test_mass_balance_negative_below_stationary_radius(mstar):
    profile, _ = integrate_sigma(mstar, oracles.SIGMA_CENTER_STAR)
    from fbstab.radial import RadialFunction

    nodes = np.linspace(0.0, 0.5, 513)
    half = RadialFunction(nodes, profile(nodes))
    value = mass_balance(mstar, half, 0.5)
    assert value < 0.0
    assert value == pytest.approx(oracles.mass_integral_oracle(0.5), abs=1e-9)


def test_solve_stationary_reference_oracle(mstar_state):
    assert mstar_state.R_s == pytest.approx(1.0, abs=1e-8)
    assert mstar_state.sigma_center == pytest.approx(
        oracles.SIGMA_CENTER_STAR, abs=1e-8
    )
    assert mstar_state.sigma_prime_boundary == pytest.approx(
        oracles.SIGMA_PRIME_STAR, abs=1e-7
    )


def test_solve_stationary_transcendental_variant():
    model = build_model(
        {
            "n": 3,
            "f": "sigma",
            "g": "sigma - 0.5",
            "sigma_bar": 1.0,
            "c": 1e-3,
            "gamma": 1.0,
        }
    )
    state = solve_stationary(model, tol=1e-10)
    oracle = oracles.stationary_radius_oracle(1.0, 0.5)
    assert state.R_s == pytest.approx(oracle, abs=1e-8)


def test_solve_stationary_self_convergence(mstar):
    base = solve_stationary(mstar, tol=1e-10)
    tight = solve_stationary(mstar, tol=1e-12)
    assert abs(base.R_s - tight.R_s) < 1e-9


def test_pressure_boundary_normalization(mstar, mstar_state):
    p = mstar_state.p_s
    assert p.values[-1] == mstar.gamma / mstar_state.R_s
    assert abs(p.derivs[-1]) < 1e-8


def test_pressure_slope_quadrature_oracle(mstar, mstar_state):
    p = pressure_profile(mstar_state, mstar)
    for r in (0.25, 0.5, 0.75, 1.0):
        oracle = -oracles.mass_integral_oracle(r) / r**2
        idx = np.argmin(np.abs(p.nodes - r))
        assert p.derivs[idx] == pytest.approx(oracle, abs=1e-7)


def test_rescale_identity_for_unit_radius(mstar, mstar_state):
    state, model = rescale_to_unit(mstar_state, mstar)
    assert state.R_s == 1.0
    r = np.linspace(0.0, 1.0, 33)
    assert np.abs(state.sigma_s(r) - mstar_state.sigma_s(r)).max() < 1e-10


def test_rescale_nonunit_radius_satisfies_invariants():
    model = build_model(
        {
            "n": 3,
            "f": "sigma",
            "g": "sigma - 0.5",
            "sigma_bar": 1.0,
            "c": 1e-3,
            "gamma": 1.0,
        }
    )
    state = solve_stationary(model, tol=1e-10)
    assert abs(state.R_s - 1.0) > 1e-3
    unit_state, unit_model = rescale_to_unit(state, model)
    assert unit_state.R_s == 1.0
    assert abs(mass_balance(unit_model, unit_state.sigma_s, 1.0)) < 1e-9
    assert unit_state.sigma_s(1.0) == pytest.approx(model.sigma_bar, abs=1e-9)
    # oracle: re-solving in the rescaled frame reproduces the profile
    resolved = solve_stationary(unit_model, tol=1e-10)
    assert resolved.R_s == pytest.approx(1.0, abs=1e-8)
    r = np.linspace(0.0, 1.0, 21)
    assert np.abs(resolved.sigma_s(r) - unit_state.sigma_s(r)).max() < 1e-7


def test_profile_strictly_monotone(mstar_state):
    values = mstar_state.sigma_s.values
    assert np.all(np.diff(values) > 0.0)
    assert mstar_state.sigma_center < values[-1]


def test_rk4_order_of_radius(mstar):
    # the hit radius of the shot from the exact center value is exactly 1;
    # halving the step must shrink its error at 4th order
    sigma_c = oracles.SIGMA_CENTER_STAR
    errors = []
    for n_steps in (32, 64, 128, 256):
        _, hit = integrate_sigma(mstar, sigma_c, r_max=4.0, n_steps=n_steps)
        errors.append(abs(hit - 1.0))
    slope = math.log(errors[0] / errors[-1]) / math.log(8.0)
    assert 3.5 <= slope <= 4.5


def test_scaling_g_leaves_solution_invariant(mstar, mstar_state):
    scaled = build_model(
        {
            "n": 3,
            "f": "sigma",
            "g": f"3.7*(sigma - {oracles.SIGMA_TILDE_STAR!r})",
            "sigma_bar": 1.0,
            "c": 1e-3,
            "gamma": 1.0,
        }
    )
    state = solve_stationary(scaled, tol=1e-10)
    assert state.R_s == pytest.approx(mstar_state.R_s, abs=1e-9)
    r = np.linspace(0.0, 1.0, 21)
    assert np.abs(state.sigma_s(r) - mstar_state.sigma_s(r)).max() < 1e-9


def test_no_stationary_solution_outside_bracket():
    # sigma_tilde close to sigma_bar starves the bracket: g < 0 on most of
    # the admissible profiles, so the mass balance cannot change sign
    model = build_model(
        {
            "n": 3,
            "f": "sigma",
            "g": "sigma - 0.999999",
            "sigma_bar": 1.0,
            "c": 1e-3,
            "gamma": 1.0,
        }
    )
    with pytest.raises(SolverError):
        solve_stationary(model, tol=1e-10, r_max=8.0)
