#!/usr/bin/env python3
"""Print the linearized spectrum of the reference model: the per-mode table
(gamma_k, alpha_k), the stability threshold, and the smallness bound."""

from dataclasses import replace

from fbstab.model import reference_model
from fbstab.spectrum import gamma_star, spectral_report
from fbstab.stationary import rescale_to_unit, solve_stationary


def main():
    model = reference_model(c=1e-3, gamma=1.0)
    state = solve_stationary(model, tol=1e-10)
    unit_state, unit_model = rescale_to_unit(state, model)

    gs, argmax = gamma_star(unit_model, unit_state, k_max=64)
    print(f"gamma_star = {gs:.12g} at k = {argmax}")

    for label, factor in (("stable", 2.0), ("unstable", 0.5)):
        gamma = factor * gs
        report = spectral_report(replace(unit_model, gamma=gamma), unit_state,
                                 k_max=16)
        print(f"\n--- gamma = {gamma:.6g} ({label} side) ---")
        print(f"{'k':>3} {'lambda_k':>9} {'a_k':>4} {'d_k':>5} "
              f"{'ubar(1)':>12} {'gamma_k':>14} {'alpha_k':>14}")
        for row in report.rows:
            mc = row.constants
            gk = f"{row.gamma_k:.6e}" if row.gamma_k is not None else "-"
            print(f"{mc.k:>3} {mc.lambda_k:>9} {mc.a_k:>4} {mc.d_k:>5} "
                  f"{row.ubar_boundary:>12.8f} {gk:>14} {row.alpha_k:>14.6e}")
        print(f"alpha_0 = {report.alpha_0:.8g}, alpha_star = "
              f"{report.alpha_star:.8g}, nu1 = {report.nu1:.8g}, "
              f"c0 = {report.c0}")


if __name__ == "__main__":
    main()
