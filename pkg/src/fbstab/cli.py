"""Command-line front end.

Subcommands: stationary, spectrum, eigen, simulate radial, simulate mode,
translate, cm-demo, check.  A config file supplies `key = value` pairs;
command-line flags override file values.  Exit codes: 0 ok, 1 usage error,
2 invalid model, 3 numerical failure, 4 acceptance failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import acceptance
from .config import RunConfig, config_from_sources, parse_config_file
from .errors import (
    AssumptionError,
    EvalDomainError,
    FbstabError,
    GridError,
    ParseError,
    SolverError,
    UsageError,
)
from .model import build_model
from .stationary import mass_balance, rescale_to_unit, solve_stationary

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_MODEL = 2
EXIT_NUMERICAL = 3
EXIT_ACCEPTANCE = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def write_csv(path: str, header: list[str], rows) -> str:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def write_json(path: str, payload: dict) -> str:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _parallel_map(fn, items, threads: int):
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _build_parser() -> _Parser:
    parser = _Parser(prog="fbstab", description=__doc__)
    parser.add_argument("--config", help="path to a key = value config file")
    parser.add_argument("--out-dir", dest="out_dir")
    parser.add_argument("--n", type=int)
    parser.add_argument("--f")
    parser.add_argument("--g")
    parser.add_argument("--sigma-bar", dest="sigma_bar", type=float)
    parser.add_argument("--sigma-tilde", dest="sigma_tilde", type=float)
    parser.add_argument("--c", type=float)
    parser.add_argument("--gamma", type=float)
    parser.add_argument("--grid-n", dest="grid_n", type=int)
    parser.add_argument("--k-max", dest="k_max", type=int)
    parser.add_argument("--tol", type=float)
    parser.add_argument("--dt", type=float)
    parser.add_argument("--t-end", dest="t_end", type=float)
    parser.add_argument("--window", type=float)
    parser.add_argument("--method")
    parser.add_argument("--strict", action="store_const", const=True, default=None)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--threads", type=int)
    parser.add_argument("--k", type=int)
    parser.add_argument("--k-list", dest="k_list")
    parser.add_argument("--c-list", dest="c_list")
    parser.add_argument("--gamma-list", dest="gamma_list")
    parser.add_argument("--R0", dest="R0", type=float)
    parser.add_argument("--sim-grid-n", dest="sim_grid_n", type=int)

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("stationary")
    sub.add_parser("spectrum")
    sub.add_parser("eigen")
    sim = sub.add_parser("simulate")
    sim.add_argument("regime", choices=["radial", "mode"])
    tr = sub.add_parser("translate")
    tr.add_argument("--graph", help="input graph CSV (coefficients or samples)")
    tr.add_argument("--z", required=True, help="shift vector, comma separated")
    tr.add_argument("--graph-kmax", type=int, default=16)
    tr.add_argument("--graph-dim", type=int, default=3, choices=[2, 3])
    sub.add_parser("cm-demo")
    chk = sub.add_parser("check")
    chk.add_argument("--list", action="store_true", dest="list_only")
    return parser


def _config_from_args(args) -> RunConfig:
    file_map = parse_config_file(args.config) if args.config else None
    overrides = {
        key: getattr(args, key)
        for key in (
            "out_dir", "n", "f", "g", "sigma_bar", "sigma_tilde", "c", "gamma",
            "grid_n", "k_max", "tol", "dt", "t_end", "window", "method",
            "strict", "seed", "threads", "k", "k_list", "c_list", "gamma_list",
            "R0", "sim_grid_n",
        )
        if getattr(args, key, None) is not None
    }
    return config_from_sources(file_map, overrides)


def _solved_model(config: RunConfig):
    model = build_model(config.model_mapping())
    state = solve_stationary(
        model, tol=config.tol, r_max=config.r_max, n_steps=config.n_steps
    )
    return model, state


def _out(config: RunConfig, name: str) -> str:
    os.makedirs(config.out_dir, exist_ok=True)
    return os.path.join(config.out_dir, name)


# ---------------------------------------------------------------------------
# subcommands

def cmd_stationary(config: RunConfig) -> int:
    model, state = _solved_model(config)
    written = []
    if config.write_csv:
        rows = zip(state.sigma_s.nodes, state.sigma_s.values, state.p_s.values)
        written.append(write_csv(_out(config, "stationary.csv"),
                                 ["r", "sigma_s", "p_s"], rows))
    if config.write_json:
        payload = {
            "R_s": state.R_s,
            "sigma_center": state.sigma_center,
            "sigma_prime_boundary": state.sigma_prime_boundary,
            "mass_balance_residual": mass_balance(model, state.sigma_s, state.R_s),
        }
        written.append(write_json(_out(config, "stationary.json"), payload))
    for path in written:
        print(path)
    return EXIT_OK


def cmd_spectrum(config: RunConfig) -> int:
    from .eigenc import solve_mode_eigen
    from .spectrum import spectral_report

    model, state = _solved_model(config)
    unit_state, unit_model = rescale_to_unit(state, model)
    report = spectral_report(
        unit_model, unit_state, k_max=config.k_max, grid_n=config.grid_n,
        strict=config.strict,
    )
    lam = {}
    if model.c > 0.0:
        ks = [k for k in range(config.k_max + 1) if k != 1]

        def one(k):
            return k, solve_mode_eigen(
                unit_model, unit_state, k, model.gamma, model.c,
                grid_n=config.grid_n,
            ).lam

        lam = dict(_parallel_map(one, ks, config.threads))
        lam[1] = 0.0
    header = ["k", "lambda_k", "a_k", "d_k", "ubar_1", "gamma_k", "alpha_k"]
    if lam:
        header.append("lambda_kc")
    rows = []
    for row in report.rows:
        mc = row.constants
        out = [mc.k, mc.lambda_k, mc.a_k, mc.d_k, row.ubar_boundary,
               row.gamma_k, row.alpha_k]
        if lam:
            out.append(lam.get(mc.k))
        rows.append(out)
    written = []
    if config.write_csv:
        written.append(write_csv(_out(config, "spectrum.csv"), header, rows))
    if config.write_json:
        verdict = (
            "stable (gamma > gamma_star)" if report.stable()
            else "unstable (gamma < gamma_star)"
        )
        payload = {
            "gamma_star": report.gamma_star,
            "argmax_k": report.argmax_k,
            "alpha_star": report.alpha_star,
            "alpha_0": report.alpha_0,
            "nu1": report.nu1,
            "c0": report.c0,
            "verdict": verdict,
        }
        if not report.stable():
            payload["violating_k"] = report.argmax_k
        written.append(write_json(_out(config, "spectrum.json"), payload))
    for path in written:
        print(path)
    return EXIT_OK


def cmd_eigen(config: RunConfig) -> int:
    from .eigenc import solve_mode_eigen

    model, state = _solved_model(config)
    unit_state, unit_model = rescale_to_unit(state, model)
    ks = config.k_list or ([config.k] if config.k is not None else [0, 2, 3])
    cs = config.c_list or [model.c]
    gammas = config.gamma_list or [model.gamma]
    jobs = [(k, c, g) for k in ks for c in cs for g in gammas]

    def one(job):
        k, c, g = job
        res = solve_mode_eigen(unit_model, unit_state, k, g, c,
                               grid_n=config.grid_n)
        return (k, c, g, res.alpha, res.mu, res.lam, res.iterations,
                res.residual)

    rows = _parallel_map(one, jobs, config.threads)
    path = write_csv(
        _out(config, "eigen.csv"),
        ["k", "c", "gamma", "alpha_k", "mu", "lambda", "iterations", "residual"],
        rows,
    )
    print(path)
    return EXIT_OK


def cmd_simulate_radial(config: RunConfig) -> int:
    from .radialsim import measure_rate, run_radial

    model, state = _solved_model(config)
    unit_state, unit_model = rescale_to_unit(state, model)
    R0 = config.R0 if config.R0 is not None else 1.1
    traj = run_radial(
        unit_model, unit_model.gamma, R0, None, config.t_end, dt=config.dt,
        reference=unit_state, grid_n=config.sim_grid_n,
    )
    written = []
    if config.write_csv:
        rows = zip(traj.times, traj.radii, traj.sigma_err)
        written.append(write_csv(_out(config, "radial.csv"),
                                 ["t", "R", "sigma_err"], rows))
    t, e = traj.radius_error_series()
    rate = None
    converged = bool(abs(traj.radii[-1] - traj.R_s) < 1e-4)
    if len(t) > 4 and np.all(e[1:] > 0):
        mask = t <= 0.65 * t[-1]
        if mask.sum() > 4:
            rate = measure_rate((t[mask], e[mask]), window=config.window)
    if config.write_json:
        payload = {"final_R": float(traj.radii[-1]), "rate": rate,
                   "converged": converged}
        written.append(write_json(_out(config, "radial.json"), payload))
    for path in written:
        print(path)
    return EXIT_OK


def cmd_simulate_mode(config: RunConfig) -> int:
    from .modalsim import ModeState, assemble_mode_operator, dominant_eigen, evolve_mode
    from .radialsim import measure_rate

    model, state = _solved_model(config)
    unit_state, unit_model = rescale_to_unit(state, model)
    k = config.k if config.k is not None else 2
    grid_n = min(config.grid_n, 1024)
    op = assemble_mode_operator(
        unit_model, unit_state, k, model.gamma, model.c, grid_n=grid_n
    )
    dom = dominant_eigen(op)
    dt = config.dt if config.dt is not None else 0.1
    ts, ns = evolve_mode(
        op, ModeState(k=k, v=None, eta=1.0), dt=dt, t_end=config.t_end,
        method=config.method if config.method in ("backward_euler", "trapezoidal")
        else "backward_euler",
    )
    written = []
    if config.write_csv:
        written.append(write_csv(_out(config, "mode.csv"), ["t", "norm"],
                                 zip(ts, ns)))
    rate = None
    if config.t_end > 0 and np.all(ns > 0) and len(ts) > 4:
        rate = measure_rate((ts, ns), window=config.window)
    if config.write_json:
        payload = {
            "k": k,
            "gamma": model.gamma,
            "c": model.c,
            "dominant_re": dom.real,
            "dominant_im": dom.imag,
            "measured_rate": rate,
        }
        written.append(write_json(_out(config, "mode.json"), payload))
    for path in written:
        print(path)
    return EXIT_OK


def _read_graph(path: str, n: int, k_max: int):
    from .liegroup import GraphFunction, get_basis

    basis = get_basis(n, k_max)
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    if header[:2] == ["k", "l"]:
        coeffs = np.zeros(basis.size)
        table = {pair: i for i, pair in enumerate(basis.index)}
        for row in rows:
            key = (int(row[0]), int(row[1]))
            if key not in table:
                raise UsageError(f"coefficient {key} outside the k_max={k_max} basis")
            coeffs[table[key]] = float(row[2])
        return GraphFunction(n=n, k_max=k_max, coeffs=coeffs)
    samples = np.array([float(row[-1]) for row in rows])
    if samples.size != basis.points.shape[0]:
        raise UsageError(
            f"sample count {samples.size} does not match the quadrature grid "
            f"({basis.points.shape[0]} nodes)"
        )
    return GraphFunction.from_samples(n, k_max, samples)


def _write_graph(path: str, rho) -> str:
    rows = [(k, l, b) for (k, l), b in zip(rho.basis.index, rho.coeffs)]
    return write_csv(path, ["k", "l", "b_kl"], rows)


def _write_graph_samples(path: str, rho) -> str:
    basis = rho.basis
    vals = rho.samples()
    if rho.n == 3:
        theta = np.arccos(basis.cos_theta)
        rows = zip(theta, basis.phi, vals)
        header = ["theta", "phi", "rho"]
    else:
        rows = zip(basis.theta, vals)
        header = ["theta", "rho"]
    return write_csv(path, header, rows)


def cmd_translate(config: RunConfig, args) -> int:
    from .liegroup import GraphFunction, translate_graph

    n = args.graph_dim
    k_max = args.graph_kmax
    z = np.array([float(v) for v in args.z.split(",")])
    if z.size != n:
        raise UsageError(f"--z needs {n} components for n = {n}")
    rho = (_read_graph(args.graph, n, k_max) if args.graph
           else GraphFunction.zero(n, k_max))
    out = translate_graph(rho, z)
    paths = [
        _write_graph(_out(config, "translated_coeffs.csv"), out),
        _write_graph_samples(_out(config, "translated_samples.csv"), out),
    ]
    for path in paths:
        print(path)
    return EXIT_OK


def cmd_cm_demo(config: RunConfig) -> int:
    from .cmtoy import (
        builtin_rotation_example,
        check_limit_identity,
        integrate_flow,
        limit_identify,
        linearize,
    )
    from .radialsim import measure_rate

    system = builtin_rotation_example()
    split = linearize(system)
    theta0 = 0.7
    u0 = 1.2 * np.array([math.cos(theta0), math.sin(theta0)])
    traj = integrate_flow(system, u0, t_end=25.0, dt=1e-3)
    sigma_hat, limit = limit_identify(system, traj, split)
    times, states = traj
    dist = np.linalg.norm(states - limit, axis=1)
    mask = dist > 1e-12
    rate = measure_rate((times[mask], dist[mask]), window=0.3)
    slice_traj = integrate_flow(system, np.array([1.3, 0.0]), t_end=25.0, dt=1e-3)
    residual = check_limit_identity(system, slice_traj, split)
    payload = {
        "omega_minus": split.omega_minus,
        "kernel_dim": int(split.kernel_basis.shape[1]),
        "sigma_hat": float(sigma_hat[0]),
        "rate_measured": rate,
        "identity_residual": residual,
    }
    path = write_json(_out(config, "cm_demo.json"), payload)
    print(path)
    return EXIT_OK


def cmd_check(config: RunConfig, args) -> int:
    if args.list_only:
        for fn in acceptance.CRITERIA:
            print(fn.__name__.replace("criterion_", "").replace("_", "-"))
        return EXIT_OK
    if config.grid_n != 2048:
        # deliberate resolution override (negative controls)
        case = acceptance.ReferenceCase(
            eigen_grid_n=config.grid_n,
            sim_grid_n=min(config.grid_n, 512),
            radial_grid_n=min(config.grid_n, 512),
        )
    else:
        case = acceptance.ReferenceCase()
    results = acceptance.run_all(case)
    if all(r.passed for r in results):
        return EXIT_OK
    first = next(r for r in results if not r.passed)
    print(f"acceptance failure: {first.name}", file=sys.stderr)
    return EXIT_ACCEPTANCE


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        config = _config_from_args(args)
        if args.command == "stationary":
            return cmd_stationary(config)
        if args.command == "spectrum":
            return cmd_spectrum(config)
        if args.command == "eigen":
            return cmd_eigen(config)
        if args.command == "simulate":
            if args.regime == "radial":
                return cmd_simulate_radial(config)
            return cmd_simulate_mode(config)
        if args.command == "translate":
            return cmd_translate(config, args)
        if args.command == "cm-demo":
            return cmd_cm_demo(config)
        if args.command == "check":
            return cmd_check(config, args)
        raise UsageError(f"unknown command {args.command!r}")
    except (UsageError, KeyError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (AssumptionError, ParseError) as exc:
        print(f"invalid model: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except (SolverError, GridError, EvalDomainError, FbstabError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
