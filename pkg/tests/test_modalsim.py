import numpy as np
import pytest

from fbstab.eigenc import solve_mode_eigen
from fbstab.modalsim import (
    ModeState,
    apply_mode_operator,
    assemble_mode_operator,
    dominant_eigen,
    evolve_mode,
)
from fbstab.radialsim import measure_rate

GRID = 512


@pytest.fixture(scope="module")
def gamma_stable(gamma_star_value):
    gs, _ = gamma_star_value
    return 2.0 * gs


def test_assemble_rejects_tiny_grid(unit_case, gamma_stable):
    state, model = unit_case
    with pytest.raises(ValueError):
        assemble_mode_operator(model, state, 2, gamma_stable, 1e-3, grid_n=32)


def test_k1_kernel_annihilated(unit_case, gamma_stable):
    state, model = unit_case
    op = assemble_mode_operator(model, state, 1, gamma_stable, 1e-3, grid_n=GRID)
    direction = op.null_direction()
    assert np.abs(op.matrix @ direction).max() < 1e-10
    # the raw translation pair reduces to this direction because
    # sigma_s'(1) w_1(r) = sigma_s'(r); verify that identity on the grid
    from fbstab.eigenc import solve_wk

    w1 = solve_wk(model, state, 1, grid_n=GRID)
    lhs = state.sigma_prime_boundary * w1.values
    rhs = state.sigma_s.derivative(op.r)
    assert np.abs(lhs - rhs).max() < 1e-7


def test_c_scaling_of_bulk_block(unit_case, gamma_stable):
    state, model = unit_case
    op1 = assemble_mode_operator(model, state, 2, gamma_stable, 1e-3, grid_n=128)
    op2 = assemble_mode_operator(model, state, 2, gamma_stable, 2e-3, grid_n=128)
    rows = op1.size - 1
    sp1 = state.sigma_prime_boundary
    outer = sp1 * np.outer(op1.w[op1.offset:op1.grid_n], op1.j_row)
    scaled1 = (op1.matrix[:rows, :rows] - outer) * 1e-3
    scaled2 = (op2.matrix[:rows, :rows] - outer) * 2e-3
    assert np.array_equal(scaled1, scaled2)


def test_eta_column_and_row(unit_case, gamma_stable):
    state, model = unit_case
    op = assemble_mode_operator(model, state, 3, gamma_stable, 1e-3, grid_n=128)
    assert op.matrix[-1, -1] == op.alpha
    rows = op.size - 1
    expected = state.sigma_prime_boundary * op.w[op.offset:op.grid_n] * op.alpha
    assert np.array_equal(op.matrix[:rows, -1], expected)
    assert np.array_equal(op.matrix[-1, :rows], op.j_row)


def test_evolve_zero_stays_zero(unit_case, gamma_stable):
    state, model = unit_case
    op = assemble_mode_operator(model, state, 2, gamma_stable, 1e-3, grid_n=128)
    ts, ns = evolve_mode(op, ModeState(k=2, v=None, eta=0.0), dt=0.1, t_end=5.0)
    assert np.all(ns == 0.0)


def test_evolve_rate_matches_eigenvalue(unit_case, gamma_stable):
    state, model = unit_case
    lam = solve_mode_eigen(model, state, 2, gamma_stable, 1e-3, grid_n=GRID).lam
    op = assemble_mode_operator(model, state, 2, gamma_stable, 1e-3, grid_n=GRID)
    ts, ns = evolve_mode(op, ModeState(k=2, v=None, eta=1.0), dt=0.1,
                         t_end=350.0, method="trapezoidal", stride=5)
    rate = measure_rate((ts, ns), window=0.5)
    assert rate == pytest.approx(abs(lam), rel=1e-2)


def test_evolve_unstable_mode_grows(unit_case, gamma_star_value):
    state, model = unit_case
    gs, arg = gamma_star_value
    gamma = 0.5 * gs
    lam = solve_mode_eigen(model, state, arg, gamma, 1e-3, grid_n=GRID).lam
    assert lam > 0.0
    op = assemble_mode_operator(model, state, arg, gamma, 1e-3, grid_n=GRID)
    ts, ns = evolve_mode(op, ModeState(k=arg, v=None, eta=1.0), dt=0.1,
                         t_end=300.0, method="trapezoidal", stride=5)
    assert ns[-1] > ns[0]
    rate = measure_rate((ts, ns), window=0.5)
    assert rate < 0.0
    assert -rate == pytest.approx(lam, rel=1e-2)


def test_dominant_eigen_consistency(unit_case, gamma_stable):
    state, model = unit_case
    lam = solve_mode_eigen(model, state, 2, gamma_stable, 1e-3, grid_n=GRID).lam
    op = assemble_mode_operator(model, state, 2, gamma_stable, 1e-3, grid_n=GRID)
    dom = dominant_eigen(op)
    assert abs(dom.real - lam) / abs(lam) < 1e-3
    assert abs(dom.imag) < 1e-12


def test_dominant_eigen_neutral_mode(unit_case, gamma_stable):
    state, model = unit_case
    op = assemble_mode_operator(model, state, 1, gamma_stable, 1e-3, grid_n=GRID)
    dom = dominant_eigen(op)
    assert abs(dom) < 1e-8


def test_dominant_eigen_radial_mode_negative(unit_case, gamma_stable):
    state, model = unit_case
    op = assemble_mode_operator(model, state, 0, gamma_stable, 1e-3, grid_n=GRID)
    dom = dominant_eigen(op)
    assert dom.imag == 0.0
    assert dom.real < 0.0


def test_grid_refinement_shrinks_consistency_error(unit_case, gamma_stable):
    state, model = unit_case
    errs = []
    for grid_n in (128, 512):
        lam = solve_mode_eigen(model, state, 3, gamma_stable, 1e-2,
                               grid_n=grid_n).lam
        ref = solve_mode_eigen(model, state, 3, gamma_stable, 1e-2,
                               grid_n=2048).lam
        errs.append(abs(lam - ref))
    assert errs[1] < errs[0]


def test_apply_mode_operator_pack_unpack(unit_case, gamma_stable):
    state, model = unit_case
    op = assemble_mode_operator(model, state, 2, gamma_stable, 1e-3, grid_n=128)
    v = np.zeros(129)
    v[1:-1] = np.sin(np.pi * op.r[1:-1])
    dv, deta = apply_mode_operator(op, v, 0.5)
    assert dv.shape == (129,)
    assert np.isfinite(deta)
