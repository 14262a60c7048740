import dataclasses
import math

import numpy as np
import pytest

from fbstab.cmtoy import (
    builtin_rotation_example,
    check_limit_identity,
    integrate_flow,
    limit_identify,
    linearize,
)
from fbstab.errors import SolverError
from fbstab.radialsim import measure_rate

import oracles


@pytest.fixture(scope="module")
def system():
    return builtin_rotation_example()


@pytest.fixture(scope="module")
def split(system):
    return linearize(system)


def test_equilibrium(system):
    assert np.linalg.norm(system.F(system.u_s)) < 1e-12


def test_equivariance_residual(system):
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(20):
        u = system.u_s + 0.3 * rng.standard_normal(2)
        params = rng.uniform(-np.pi, np.pi, 1)
        worst = max(worst, system.equivariance_residual(u, params))
    assert worst < 1e-10


def test_equilibrium_circle(system):
    angles = np.linspace(0.0, 2.0 * np.pi, 64, endpoint=False)
    for a in angles:
        u = np.array([math.cos(a), math.sin(a)])
        assert np.linalg.norm(system.F(u)) < 1e-12


def test_linearize_spectrum(system, split):
    evals = np.sort(np.linalg.eigvals(split.A).real)
    assert evals == pytest.approx([-1.0, 0.0], abs=1e-8)
    assert split.omega_minus == pytest.approx(1.0, abs=1e-8)
    assert split.kernel_basis.shape == (2, 1)


def test_projector_identities(system, split):
    rng = np.random.default_rng(2)
    for _ in range(100):
        v = rng.standard_normal(2)
        assert np.linalg.norm(split.P @ (split.P @ v) - split.P @ v) < 1e-10
    assert np.abs(split.A @ split.P).max() < 1e-8


def test_linearize_rejects_bad_step(system):
    with pytest.raises(ValueError):
        linearize(system, h=1e-2)


def test_flow_constant_at_equilibrium(system):
    times, states = integrate_flow(system, system.u_s, t_end=3.0, dt=1e-3)
    assert np.abs(states - system.u_s).max() < 1e-13


def test_flow_matches_logistic_closed_form(system):
    theta0 = 0.7
    u0 = 1.2 * np.array([math.cos(theta0), math.sin(theta0)])
    times, states = integrate_flow(system, u0, t_end=10.0, dt=1e-3)
    radii = np.linalg.norm(states, axis=1)
    exact = oracles.logistic_radius(1.2, times)
    assert np.abs(radii - exact).max() < 1e-10
    angles = np.arctan2(states[:, 1], states[:, 0])
    assert np.abs(angles - theta0).max() < 1e-12


def test_flow_rk4_order(system):
    u0 = np.array([1.2, 0.3])
    ref = integrate_flow(system, u0, t_end=1.0, dt=1e-4)[1][-1]
    errs = []
    for dt in (0.02, 0.01):
        end = integrate_flow(system, u0, t_end=1.0, dt=dt)[1][-1]
        errs.append(np.linalg.norm(end - ref))
    assert errs[0] / errs[1] == pytest.approx(16.0, rel=0.5)


def test_flow_escape_detection(system):
    with pytest.raises(SolverError):
        integrate_flow(system, np.array([3.5, 0.0]), t_end=1.0, dt=1e-3)


def test_limit_identify_recovers_angle(system, split):
    theta0 = 0.7
    u0 = 1.2 * np.array([math.cos(theta0), math.sin(theta0)])
    traj = integrate_flow(system, u0, t_end=25.0, dt=1e-3)
    sigma, limit = limit_identify(system, traj, split)
    assert sigma[0] == pytest.approx(theta0, abs=1e-6)
    assert np.linalg.norm(limit - np.array([math.cos(theta0), math.sin(theta0)])) < 1e-6


def test_limit_identify_stable_slice(system, split):
    traj = integrate_flow(system, np.array([1.3, 0.0]), t_end=25.0, dt=1e-3)
    sigma, limit = limit_identify(system, traj, split)
    assert abs(sigma[0]) < 1e-6
    assert np.linalg.norm(limit - system.u_s) < 1e-6


def test_convergence_rate_matches_omega(system, split):
    theta0 = -0.4
    u0 = 1.25 * np.array([math.cos(theta0), math.sin(theta0)])
    traj = integrate_flow(system, u0, t_end=25.0, dt=1e-3)
    times, states = traj
    sigma, limit = limit_identify(system, traj, split)
    dist = np.linalg.norm(states - limit, axis=1)
    mask = dist > 1e-12
    rate = measure_rate((times[mask], dist[mask]), window=0.3)
    assert rate >= 0.98 * split.omega_minus
    assert rate <= 1.02 * split.omega_minus


def test_limit_identity_residual(system, split):
    traj = integrate_flow(system, np.array([1.3, 0.0]), t_end=25.0, dt=1e-3)
    assert check_limit_identity(system, traj, split) < 1e-6


def test_limit_identity_at_equilibrium(system, split):
    traj = integrate_flow(system, system.u_s, t_end=5.0, dt=1e-3)
    assert check_limit_identity(system, traj, split) < 1e-12


def test_limit_identity_detects_wrong_projector(system, split):
    bad = dataclasses.replace(split, P=np.eye(2) - split.P)
    traj = integrate_flow(system, np.array([1.3, 0.0]), t_end=25.0, dt=1e-3)
    assert check_limit_identity(system, traj, bad) > 1e-2


def test_limit_identity_rejects_off_slice_trajectory(system, split):
    theta0 = 0.5
    u0 = 1.2 * np.array([math.cos(theta0), math.sin(theta0)])
    traj = integrate_flow(system, u0, t_end=25.0, dt=1e-3)
    with pytest.raises(SolverError):
        check_limit_identity(system, traj, split)


def test_orbit_of_solutions(system):
    phi = np.array([0.9])
    u0 = np.array([1.15, -0.2])
    t_end = 4.0
    _, states_a = integrate_flow(system, u0, t_end=t_end, dt=1e-3)
    _, states_b = integrate_flow(system, system.S(phi, u0), t_end=t_end, dt=1e-3)
    mapped = np.array([system.S(phi, u) for u in states_a])
    assert np.abs(mapped - states_b).max() < 1e-10


def test_identified_limit_continuous_in_initial_data(system, split):
    base = 1.2 * np.array([math.cos(0.3), math.sin(0.3)])
    sigmas = []
    for delta in (0.0, 1e-4):
        u0 = base + delta * np.array([0.0, 1.0])
        traj = integrate_flow(system, u0, t_end=25.0, dt=1e-3)
        sigma, _ = limit_identify(system, traj, split)
        sigmas.append(sigma[0])
    assert abs(sigmas[1] - sigmas[0]) < 5e-4
