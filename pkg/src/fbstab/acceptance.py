"""The package's acceptance suite: ten oracle- and property-based criteria
run against the reference configuration (n = 3, f = sigma,
g = sigma - 3(coth 1 - 1), sigma_bar = 1), whose stationary radius is
exactly 1 by construction.

Each criterion is a function returning a :class:`CriterionResult`; the
`check` subcommand and the pytest acceptance module both consume this list.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .cmtoy import (
    builtin_rotation_example,
    check_limit_identity,
    integrate_flow,
    limit_identify,
    linearize,
)
from .eigenc import solve_mode_eigen, spectral_bound_check
from .liegroup import (
    GraphFunction,
    infinitesimal_generator,
    linear_graph,
    sphere_translation_exact,
    translate_graph,
)
from .model import reference_model
from .modalsim import ModeState, assemble_mode_operator, dominant_eigen, evolve_mode
from .radialsim import measure_rate, run_radial
from .spectrum import alpha_k, gamma_k, gamma_star, spectral_report
from .stationary import rescale_to_unit, solve_stationary


@dataclass
class CriterionResult:
    name: str
    passed: bool
    detail: str
    elapsed: float


class ReferenceCase:
    """Lazily solved shared ingredients of the acceptance criteria.

    The grid knobs default to the pinned acceptance resolutions; the check
    subcommand lowers them for deliberate negative controls.
    """

    def __init__(self, c: float = 1e-3, eigen_grid_n: int = 2048,
                 sim_grid_n: int = 512, radial_grid_n: int = 512):
        self.c = c
        self.eigen_grid_n = eigen_grid_n
        self.sim_grid_n = sim_grid_n
        self.radial_grid_n = radial_grid_n

    @cached_property
    def model(self):
        return reference_model(c=self.c, gamma=1.0)

    @cached_property
    def stationary(self):
        return solve_stationary(self.model, tol=1e-10)

    @cached_property
    def unit(self):
        state, model = rescale_to_unit(self.stationary, self.model)
        return state, model

    @cached_property
    def gamma_star(self):
        state, model = self.unit
        return gamma_star(model, state, k_max=64)

    @cached_property
    def report_above(self):
        """Spectral report at gamma = 2 gamma_star (stable side)."""
        state, model = self.unit
        gs, _ = self.gamma_star
        from dataclasses import replace

        return spectral_report(replace(model, gamma=2.0 * gs), state, k_max=64)


def _result(name, passed, detail, t0):
    return CriterionResult(name=name, passed=bool(passed), detail=detail,
                           elapsed=time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# oracles local to the acceptance suite

def _ubar_series_reference(k, n, r):
    """Power-series profile for f' = 1 (the reference model):
    c_m = c_{m-1} / (2m (2m - 1 + a_k))."""
    a = 2 * k + n - 1
    r = np.asarray(r, dtype=float)
    coeff = 1.0
    out = np.ones_like(r)
    rp = np.ones_like(r)
    for m in range(1, 200):
        coeff = coeff / (2.0 * m * (2.0 * m - 1.0 + a))
        rp = rp * r * r
        out = out + coeff * rp
        if coeff < 1e-22:
            break
    return out


def _gamma_k_oracle_reference(k, n=3):
    """Independent gamma_k: series u_bar + closed-form sigma_s + adaptive
    quadrature (the main path uses RK4 profiles + Simpson)."""
    from scipy.integrate import quad

    a = 2 * k + n - 1
    lam = k * k + (n - 2) * k
    sigma_tilde = 3.0 * (math.cosh(1.0) / math.sinh(1.0) - 1.0)
    g_at_bar = 1.0 - sigma_tilde
    sp1 = math.cosh(1.0) / math.sinh(1.0) - 1.0
    ub1 = float(_ubar_series_reference(k, n, np.array([1.0]))[0])
    integral, _ = quad(
        lambda rho: float(_ubar_series_reference(k, n, np.array([rho]))[0])
        * rho**a,
        0.0,
        1.0,
        epsabs=1e-14,
        epsrel=1e-13,
        limit=200,
    )
    return (n - 1.0) / ((lam - n + 1.0) * k) * (g_at_bar - sp1 / ub1 * integral)


def _stationary_radius_oracle(sigma_bar, sigma_tilde):
    """Root of the reference-model transcendental identity
    sigma_bar (coth R - 1/R) = sigma_tilde R / 3 (residual positive for
    small R and negative for large R)."""
    def h(R):
        return sigma_bar * (math.cosh(R) / math.sinh(R) - 1.0 / R) - sigma_tilde * R / 3.0

    lo, hi = 0.05, 20.0
    sign_lo = h(lo) > 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if (h(mid) > 0.0) == sign_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# criteria

def criterion_stationary_oracle(case: ReferenceCase) -> CriterionResult:
    t0 = time.perf_counter()
    model = case.model
    state = solve_stationary(model, tol=1e-10)
    r_oracle = _stationary_radius_oracle(model.sigma_bar, model.sigma_tilde)
    sp_exact = math.cosh(1.0) / math.sinh(1.0) - 1.0
    err_r = abs(state.R_s - r_oracle)
    err_sp = abs(state.sigma_prime_boundary - sp_exact)
    elapsed = time.perf_counter() - t0
    passed = err_r < 1e-8 and err_sp < 1e-7 and elapsed < 1.0
    return _result(
        "stationary-oracle", passed,
        f"|R_s - oracle| = {err_r:.2e} (<1e-8), "
        f"|sigma_s'(1) - (coth 1 - 1)| = {err_sp:.2e} (<1e-7), "
        f"runtime {elapsed:.2f}s (<1s)", t0,
    )


def criterion_spectrum_oracle(case: ReferenceCase) -> CriterionResult:
    t0 = time.perf_counter()
    state, model = case.unit
    worst = 0.0
    for k in range(2, 9):
        main = gamma_k(model, state, k)
        oracle = _gamma_k_oracle_reference(k)
        worst = max(worst, abs(main - oracle) / abs(oracle))
    elapsed = time.perf_counter() - t0
    passed = worst < 1e-6 and elapsed < 5.0
    return _result(
        "spectrum-oracle", passed,
        f"max rel error of gamma_k (k=2..8) vs series+quad oracle = "
        f"{worst:.2e} (<1e-6), runtime {elapsed:.1f}s (<5s)", t0,
    )


def _mode_eigenvalues(case, gamma, c, ks, grid_n=2048):
    state, model = case.unit
    return [solve_mode_eigen(model, state, k, gamma, c, grid_n=grid_n) for k in ks]


def criterion_threshold_dichotomy(case: ReferenceCase) -> CriterionResult:
    t0 = time.perf_counter()
    state, model = case.unit
    gs, _ = case.gamma_star
    report = case.report_above
    c = 1e-3
    ok_c0 = report.c0 is not None and c < report.c0
    ks = [0, 1] + list(range(2, 17))
    stable = _mode_eigenvalues(case, 2.0 * gs, c, ks)
    check = spectral_bound_check(report, stable, 2.0 * gs, c)
    lam1 = next(r.lam for r in stable if r.k == 1)
    # unstable side
    unstable = _mode_eigenvalues(case, 0.5 * gs, c, [0] + list(range(2, 17)))
    has_positive = any(r.lam > 0.0 for r in unstable)
    elapsed = time.perf_counter() - t0
    passed = (
        ok_c0 and check.all_pass and report.alpha_star < 0.0
        and abs(lam1) <= 1e-8 and has_positive and elapsed < 30.0
    )
    worst = max(r.lam - 0.5 * report.alpha_star for r in stable if r.k != 1)
    return _result(
        "threshold-dichotomy", passed,
        f"gamma=2gamma_*: all lambda_k <= alpha*/2 = "
        f"{0.5 * report.alpha_star:.3e} (margin {-worst:.2e}), |lambda_1| = "
        f"{abs(lam1):.1e}; gamma=gamma_*/2: positive mode found = "
        f"{has_positive}; c0 = {report.c0:.3g} > c; runtime {elapsed:.0f}s (<30s)",
        t0,
    )


def criterion_modal_consistency(case: ReferenceCase) -> CriterionResult:
    t0 = time.perf_counter()
    state, model = case.unit
    gs, _ = case.gamma_star
    gamma = 2.0 * gs
    worst = 0.0
    details = []
    grid_n = case.eigen_grid_n
    for k in (0, 2, 3):
        for c in (1e-3, 1e-2):
            lam_fp = solve_mode_eigen(model, state, k, gamma, c, grid_n=grid_n).lam
            op = assemble_mode_operator(model, state, k, gamma, c, grid_n=grid_n)
            lam_de = dominant_eigen(op).real
            rel = abs(lam_de - lam_fp) / abs(lam_fp)
            worst = max(worst, rel)
            details.append(f"k={k},c={c:g}:{rel:.1e}")
    elapsed = time.perf_counter() - t0
    passed = worst < 1e-3 and elapsed < 60.0
    return _result(
        "modal-eigen-consistency", passed,
        f"max rel |dominant - fixed-point| = {worst:.2e} (<1e-3) "
        f"[{', '.join(details)}], runtime {elapsed:.0f}s (<60s)", t0,
    )


def criterion_linear_rate(case: ReferenceCase) -> CriterionResult:
    t0 = time.perf_counter()
    state, model = case.unit
    gs, _ = case.gamma_star
    gamma = 2.0 * gs
    c = 1e-3
    grid_n = case.sim_grid_n
    worst = 0.0
    details = []
    for k in (0, 2, 3):
        lam = solve_mode_eigen(model, state, k, gamma, c, grid_n=2048).lam
        op = assemble_mode_operator(model, state, k, gamma, c, grid_n=grid_n)
        t_end = min(400.0, 7.0 / abs(lam))
        ts, ns = evolve_mode(
            op, ModeState(k=k, v=None, eta=1.0), dt=0.1, t_end=t_end,
            method="trapezoidal", stride=5,
        )
        rate = measure_rate((ts, ns), window=0.5)
        rel = abs(rate - abs(lam)) / abs(lam)
        worst = max(worst, rel)
        details.append(f"k={k}:{rel:.1e}")
    elapsed = time.perf_counter() - t0
    passed = worst < 1e-2 and elapsed < 60.0
    return _result(
        "modal-rate-reproduction", passed,
        f"max rel |tail rate - |lambda|| = {worst:.2e} (<1e-2) "
        f"[{', '.join(details)}], runtime {elapsed:.0f}s (<60s)", t0,
    )


def criterion_radial_convergence(case: ReferenceCase) -> CriterionResult:
    t0 = time.perf_counter()
    state, model = case.unit
    gs, _ = case.gamma_star
    gamma = 2.0 * gs
    lam0 = solve_mode_eigen(model, state, 0, gamma, 1e-3).lam
    traj = run_radial(
        model, gamma, R0=1.1, sigma0=None, t_end=280.0, dt=1e-3,
        reference=state, grid_n=case.radial_grid_n,
    )
    final_err = abs(traj.radii[-1] - traj.R_s)
    t, e = traj.radius_error_series()
    mask = t <= 0.65 * t[-1]  # stop before the discrete fixed-point floor
    rate = measure_rate((t[mask], e[mask]), window=0.6)
    rel = abs(rate - abs(lam0)) / abs(lam0)
    elapsed = time.perf_counter() - t0
    passed = final_err < 1e-5 and rel < 0.05 and elapsed < 60.0
    return _result(
        "radial-nonlinear-convergence", passed,
        f"final |R - R_s| = {final_err:.2e} (<1e-5), rate rel err = "
        f"{rel:.2e} (<5e-2) vs |lambda_0| = {abs(lam0):.4g}, "
        f"runtime {elapsed:.0f}s (<60s)", t0,
    )


def criterion_group_properties(case: ReferenceCase) -> CriterionResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    base = GraphFunction.zero(3, 16)
    deg = base.basis.degree
    low = np.where((deg >= 1) & (deg <= 4))[0]
    coeffs = np.zeros(base.basis.size)
    coeffs[rng.choice(low, 8, replace=False)] = 0.008 * rng.standard_normal(8)
    rho = GraphFunction(3, 16, coeffs)
    assert rho.sup_norm() < 0.05 and rho.grad_sup_norm() < 0.05

    ident = translate_graph(rho, np.zeros(3))
    id_exact = np.array_equal(ident.coeffs, rho.coeffs)

    worst_group = worst_inverse = 0.0
    for _ in range(3):
        z = rng.uniform(-1.0, 1.0, 3)
        z *= rng.uniform(0.0, 0.03) / np.linalg.norm(z)
        w = rng.uniform(-1.0, 1.0, 3)
        w *= rng.uniform(0.0, 0.03) / np.linalg.norm(w)
        lhs = translate_graph(translate_graph(rho, w), z)
        rhs = translate_graph(rho, z + w)
        worst_group = max(
            worst_group, float(np.abs(lhs.samples() - rhs.samples()).max())
        )
        back = translate_graph(translate_graph(rho, z), -z)
        worst_inverse = max(
            worst_inverse, float(np.abs(back.samples() - rho.samples()).max())
        )

    z = np.array([0.6, -0.3, 0.5])
    z /= np.linalg.norm(z)
    target = linear_graph(z)
    gen_errs = {}
    for eps in (1e-4, 1e-5):
        gen = infinitesimal_generator(z, eps_fd=eps)
        gen_errs[eps] = float(np.abs(gen.samples() - target.samples()).max())
    # O(eps^2) bound (the odd symmetry of the action makes the central
    # difference exact up to roundoff, so the bound holds with huge margin)
    gen_ok = all(err <= eps * eps for eps, err in gen_errs.items())

    elapsed = time.perf_counter() - t0
    passed = (
        id_exact and worst_group < 1e-8 and worst_inverse < 1e-8
        and gen_ok and elapsed < 10.0
    )
    return _result(
        "lie-group-properties", passed,
        f"S_0 identity exact = {id_exact}, group law {worst_group:.1e} (<1e-8), "
        f"inverse law {worst_inverse:.1e} (<1e-8), generator errors "
        f"{ {k: f'{v:.1e}' for k, v in gen_errs.items()} } <= eps^2, "
        f"runtime {elapsed:.1f}s (<10s)", t0,
    )


def criterion_sphere_translation(case: ReferenceCase) -> CriterionResult:
    t0 = time.perf_counter()
    z = np.array([0.6, -0.3, 0.5])
    z *= 0.03 / np.linalg.norm(z)
    tr = translate_graph(GraphFunction.zero(3, 16), z)
    exact = sphere_translation_exact(z, tr.grid_points)
    err = float(np.abs(tr.samples() - exact).max())
    elapsed = time.perf_counter() - t0
    passed = err < 1e-9 and elapsed < 5.0
    return _result(
        "sphere-translation-closed-form", passed,
        f"max |S_z(0) - closed form| = {err:.2e} (<1e-9), "
        f"runtime {elapsed:.1f}s (<5s)", t0,
    )


def criterion_center_manifold(case: ReferenceCase) -> CriterionResult:
    t0 = time.perf_counter()
    system = builtin_rotation_example()
    split = linearize(system)
    kernel_dim = split.kernel_basis.shape[1]
    omega_err = abs(split.omega_minus - 1.0)
    theta0 = 0.7
    u0 = 1.2 * np.array([math.cos(theta0), math.sin(theta0)])
    traj = integrate_flow(system, u0, t_end=25.0, dt=1e-3)
    sigma_hat, limit = limit_identify(system, traj, split)
    angle_err = abs(sigma_hat[0] - theta0)
    times, states = traj
    dist = np.linalg.norm(states - limit, axis=1)
    mask = dist > 1e-12
    rate = measure_rate((times[mask], dist[mask]), window=0.3)
    traj_slice = integrate_flow(system, np.array([1.3, 0.0]), t_end=25.0, dt=1e-3)
    residual = check_limit_identity(system, traj_slice, split)
    elapsed = time.perf_counter() - t0
    passed = (
        kernel_dim == 1 and omega_err <= 1e-8 and angle_err <= 1e-6
        and 0.98 <= rate <= 1.02 and residual < 1e-6 and elapsed < 5.0
    )
    return _result(
        "center-manifold-desk-scale", passed,
        f"kernel dim = {kernel_dim}, |omega_- - 1| = {omega_err:.1e} (<=1e-8), "
        f"angle err = {angle_err:.1e} (<=1e-6), rate = {rate:.4f} in "
        f"[0.98, 1.02], identity residual = {residual:.1e} (<1e-6), "
        f"runtime {elapsed:.1f}s (<5s)", t0,
    )


def criterion_alpha_asymptotics(case: ReferenceCase) -> CriterionResult:
    t0 = time.perf_counter()
    state, model = case.unit
    k = 200
    gamma = model.gamma
    gk = gamma_k(model, state, k, grid_n=2048)
    ak = alpha_k(gk, model.n, k, gamma)
    ratio = ak / (-gamma * k**3 / (model.n - 1.0))
    elapsed = time.perf_counter() - t0
    passed = 0.95 <= ratio <= 1.05 and elapsed < 5.0
    return _result(
        "alpha-asymptotics", passed,
        f"alpha_k / (-gamma k^3/(n-1)) at k=200 = {ratio:.4f} in "
        f"[0.95, 1.05], runtime {elapsed:.1f}s (<5s)", t0,
    )


CRITERIA = [
    criterion_stationary_oracle,
    criterion_spectrum_oracle,
    criterion_threshold_dichotomy,
    criterion_modal_consistency,
    criterion_linear_rate,
    criterion_radial_convergence,
    criterion_group_properties,
    criterion_sphere_translation,
    criterion_center_manifold,
    criterion_alpha_asymptotics,
]


def criterion_names() -> list[str]:
    return [fn.__name__.replace("criterion_", "") for fn in CRITERIA]


def run_all(case: ReferenceCase | None = None, printer=print) -> list[CriterionResult]:
    case = case or ReferenceCase()
    results = []
    for fn in CRITERIA:
        result = fn(case)
        results.append(result)
        status = "PASS" if result.passed else "FAIL"
        printer(f"{status}  {result.name}  ({result.elapsed:.1f}s)  {result.detail}")
    return results
