"""Acceptance suite: every release criterion at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one PASS/FAIL line
per criterion. All checks are desk scale (two-level systems, grids up to 1e5
steps, at most 1e6 Monte-Carlo shots) and each criterion finishes well inside
its 60 s budget.
"""

import numpy as np
import pytest

from qfisher import (
    ControlConfig,
    RotatingFieldConfig,
    TimeGrid,
    adaptive_estimate,
    appendix_a_distinction,
    boundary_times,
    build_controlled_drive,
    closed_form_transformed_drive,
    expand_generator,
    fisher_invariance_check,
    generator_integral,
    make_rotating_qubit,
    optimal_qfi,
    propagate,
    sample_shots,
    sigma_y_removal_frame,
    spectral_gap_integral,
    synthesize_cd,
    track_eigenbasis,
    transform_hamiltonian,
    upper_bound_qfi,
)
from qfisher.estimation import build_observable
from qfisher.operators import SIGMA_Y, pauli_components

B_VALUES = (0.5, 1.0, 2.0)
T_VALUES = (1.0, 2.0, 4.0, 8.0)


def report(name: str, ok: bool, detail: str) -> None:
    print(f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"{name}: {detail}"


def test_criterion_01_upper_bound_b2t4():
    worst = 0.0
    for b_field in B_VALUES:
        model = make_rotating_qubit(RotatingFieldConfig(B=b_field, omega=1.0))
        for t_end in T_VALUES:
            grid = TimeGrid(t_end=t_end, steps=max(1000, int(400 * t_end)))
            bound = upper_bound_qfi(model, 1.0, grid)
            worst = max(worst, abs(bound / (b_field**2 * t_end**4) - 1.0))
    model = make_rotating_qubit(RotatingFieldConfig(B=1.0, omega=1.0))
    values = [
        upper_bound_qfi(model, 1.0, TimeGrid(t_end=t, steps=int(400 * t)))
        for t in T_VALUES
    ]
    slope = np.polyfit(np.log(T_VALUES), np.log(values), 1)[0]
    ok = worst <= 1e-6 and abs(slope - 4.0) <= 0.02
    report(
        "01 upper bound B^2 T^4",
        ok,
        f"max rel dev {worst:.2e} (tol 1e-6), log-log slope {slope:.4f} (4.00 +- 0.02)",
    )


def test_criterion_02_saturation_with_control():
    worst = 0.0
    for b_field in B_VALUES:
        model = make_rotating_qubit(RotatingFieldConfig(B=b_field, omega=1.0))
        for t_end in T_VALUES:
            grid = TimeGrid(t_end=t_end, steps=int(1000 * t_end))
            drive = build_controlled_drive(model, 1.0, ControlConfig(g_c=1.0), grid)
            h_gen = generator_integral(model, 1.0, drive.hamiltonian, grid)
            qfi, _ = optimal_qfi(h_gen)
            worst = max(worst, abs(qfi / (b_field**2 * t_end**4) - 1.0))
    ok = worst <= 1e-4
    report(
        "02 controlled saturation",
        ok,
        f"max rel dev from B^2 T^4 {worst:.2e} (tol 1e-4)",
    )


def test_criterion_03_no_control_asymptote():
    model = make_rotating_qubit(RotatingFieldConfig(B=1.0, omega=1.0))
    ratios = []
    for t_end in (12.5, 25.0, 50.0):
        grid = TimeGrid(t_end=t_end, steps=int(400 * t_end))
        h_gen = generator_integral(
            model, 1.0, lambda t: model.hamiltonian(1.0, t), grid
        )
        qfi, _ = optimal_qfi(h_gen)
        ratios.append(qfi / (4.0 * t_end**2 / 5.0))
    in_window = all(0.95 <= r <= 1.05 for r in ratios)
    # The asymptote carries oscillatory finite-time corrections, so the
    # deviation is compared across the full doubling sweep.
    trend = abs(ratios[-1] - 1.0) <= abs(ratios[0] - 1.0)
    ok = in_window and trend and 0.95 <= ratios[-1] <= 1.05
    report(
        "03 no-control asymptote",
        ok,
        f"ratios {[f'{r:.4f}' for r in ratios]} in [0.95, 1.05], deviation "
        f"trend {abs(ratios[0] - 1):.4f} -> {abs(ratios[-1] - 1):.4f}",
    )


def test_criterion_04_generator_expansion():
    b_field, t_end = 1.0, 2.0
    model = make_rotating_qubit(RotatingFieldConfig(B=b_field, omega=1.0))
    grid = TimeGrid(t_end=t_end, steps=4000)
    deltas = [s * m for m in (0.001, 0.002, 0.003, 0.004, 0.005) for s in (1, -1)]
    fit = expand_generator(model, 1.0, grid, deltas)
    z0 = fit.coefficients[3][0]
    x1 = fit.coefficients[1][1]
    err_z = abs(z0 / (-b_field * t_end**2 / 2.0) - 1.0)
    err_x = abs(x1 / (-b_field * t_end**3 / 3.0) - 1.0)
    ok = err_z <= 0.01 and err_x <= 0.01
    report(
        "04 generator expansion",
        ok,
        f"sz const {z0:.6f} (rel err {err_z:.2e}), sx linear {x1:.6f} "
        f"(rel err {err_x:.2e}), tol 1%",
    )


def test_criterion_05_eigenvalue_and_qfi_expansion():
    b_field, t_end = 1.0, 2.0
    model = make_rotating_qubit(RotatingFieldConfig(B=b_field, omega=1.0))
    grid = TimeGrid(t_end=t_end, steps=4000)
    deltas = [s * m for m in (0.001, 0.002, 0.003, 0.004, 0.005) for s in (1, -1)]
    fit = expand_generator(model, 1.0, grid, deltas)
    tau_quad = np.polynomial.polynomial.polyfit(fit.deltas, fit.tau_max, 2)[2]
    qfi_quad = np.polynomial.polynomial.polyfit(fit.deltas, fit.optimal_qfi, 2)[2]
    err_tau = abs(tau_quad / (-b_field * t_end**4 / 72.0) - 1.0)
    err_qfi = abs(qfi_quad / (-(b_field**2) * t_end**6 / 18.0) - 1.0)
    ok = err_tau <= 0.02 and err_qfi <= 0.02
    report(
        "05 eigenvalue/QFI expansion",
        ok,
        f"tau quad {tau_quad:.6f} (rel err {err_tau:.2e}), qfi quad "
        f"{qfi_quad:.4f} (rel err {err_qfi:.2e}), tol 2%",
    )


def test_criterion_06_cd_hamiltonian():
    omega = 1.0
    model = make_rotating_qubit(RotatingFieldConfig(B=1.0, omega=omega))
    grid = TimeGrid(t_end=2.0, steps=4000)
    basis = track_eigenbasis(model, omega, grid)
    cd = synthesize_cd(basis)
    target = -0.5 * omega * SIGMA_Y
    pointwise = float(np.max(np.abs(cd.matrices - target)))
    prop = propagate(cd, grid)
    min_overlap = 1.0
    for k in (0, 1):
        traj = np.einsum("nij,j->ni", prop.unitaries, basis.vectors[0, :, k])
        overlaps = np.abs(np.einsum("ni,ni->n", basis.vectors[:, :, k].conj(), traj))
        min_overlap = min(min_overlap, float(np.min(overlaps)))
    ok = pointwise <= 1e-6 and min_overlap >= 1.0 - 1e-5
    report(
        "06 transitionless control operator",
        ok,
        f"max |Hcd - (-w/2) sy| = {pointwise:.2e} (tol 1e-6), min driving "
        f"overlap {min_overlap:.8f} (>= 1 - 1e-5)",
    )


def test_criterion_07_frame_invariance():
    b_field, omega_c, delta = 1.0, 1.0, 0.01
    omega = omega_c - delta
    model = make_rotating_qubit(RotatingFieldConfig(B=b_field, omega=omega))
    t_end = boundary_times(omega_c, 1)
    grid = TimeGrid(t_end=t_end, steps=20000)
    frame = sigma_y_removal_frame(omega_c)

    def family(g, t):
        drive = build_controlled_drive(model, g, ControlConfig(g_c=omega_c), grid)
        return drive.hamiltonian(t)

    transformed = transform_hamiltonian(lambda t: family(omega, t), frame)
    closed = closed_form_transformed_drive(b_field, omega, omega_c)
    sample = grid.points[::40]
    mats = transformed(sample)
    closed_diff = float(np.max(np.abs(mats - closed(sample))))
    sy_max = float(np.max(np.abs([pauli_components(m)[2] for m in mats])))
    invariance = fisher_invariance_check(model, omega, family, frame, grid)
    boundary_dev = max(
        frame.boundary_deviation(boundary_times(omega_c, n)) for n in (1, 2, 3)
    )
    ok = (
        closed_diff <= 1e-8
        and sy_max <= 1e-10
        and invariance.optimal_rel_diff <= 1e-5
        and boundary_dev <= 1e-10
    )
    report(
        "07 frame invariance",
        ok,
        f"closed-form diff {closed_diff:.2e} (1e-8), sigma_y {sy_max:.2e} "
        f"(1e-10), QFI rel diff {invariance.optimal_rel_diff:.2e} (1e-5), "
        f"||G(T)-I|| {boundary_dev:.2e} (1e-10)",
    )


def test_criterion_08_estimator_variance_and_adaptive_loop():
    b_field, t_end, omega = 1.0, 2.0, 1.0
    delta, n_shots, reps = 0.02, 10**4, 100
    model = make_rotating_qubit(RotatingFieldConfig(B=b_field, omega=omega))
    grid = TimeGrid(t_end=t_end, steps=2000)
    gamma = spectral_gap_integral(model, omega, grid)

    # Part 1: variance of the single-round magnitude estimator at a fixed
    # known offset, 100 seeded repetitions.
    g_c = omega - delta
    drive = build_controlled_drive(model, omega, ControlConfig(g_c=g_c), grid)
    psi0 = (drive.basis.vectors[0, :, 0] + drive.basis.vectors[0, :, 1]) / np.sqrt(2)
    psi_final = propagate(drive.hamiltonian, grid).final @ psi0
    setup = build_observable(drive.basis, shots=n_shots)
    rng = np.random.default_rng(7)
    estimates = []
    for _ in range(reps):
        mean = float(np.mean(sample_shots(psi_final, setup, rng)))
        estimates.append(g_c + np.arccos(np.clip(mean, -1.0, 1.0)) / gamma)
    crb = 1.0 / (n_shots * b_field**2 * t_end**4)
    ratio = float(np.var(estimates, ddof=1) / crb)
    var_ok = 1.0 <= ratio <= 3.0

    # Part 2: the adaptive loop shrinks the error from the initial offset in
    # at least 90% of 50 seeded runs.
    reduced = 0
    for seed in range(50):
        trace = adaptive_estimate(
            model, omega, omega + 0.05, rounds=5, shots_per_round=n_shots,
            grid=grid, rng_seed=1000 + seed,
        )
        if abs(trace.final_estimate - omega) < 0.05:
            reduced += 1
    loop_ok = reduced >= 45
    ok = var_ok and loop_ok
    report(
        "08 estimator variance / adaptive loop",
        ok,
        f"Var(w_hat)/CRB = {ratio:.3f} in [1, 3]; error reduced in "
        f"{reduced}/50 seeded runs (>= 45)",
    )


def test_criterion_09_naive_control_t2_scaling():
    omega = 1.0
    model = make_rotating_qubit(RotatingFieldConfig(B=1.0, omega=omega))

    def dparam_cd(g, t):
        mat = -0.5 * SIGMA_Y
        if np.isscalar(t) or np.ndim(t) == 0:
            return mat.copy()
        return np.broadcast_to(mat, (np.asarray(t).shape[0], 2, 2)).copy()

    values = []
    for t_end in T_VALUES:
        grid = TimeGrid(t_end=t_end, steps=int(500 * t_end))
        h_gen = generator_integral(
            model,
            omega,
            lambda t: model.analytic_cd(omega, t),
            grid,
            dparam=dparam_cd,
        )
        values.append(optimal_qfi(h_gen)[0])
    slope = np.polyfit(np.log(T_VALUES), np.log(values), 1)[0]
    ok = abs(slope - 2.0) <= 0.1
    report(
        "09 naive control scales as T^2",
        ok,
        f"log-log slope {slope:.4f} (2.0 +- 0.1), values {[f'{v:.3g}' for v in values]}",
    )


def test_criterion_10_picture_distinction():
    result = appendix_a_distinction(1.0, 1.0, 0.1, n_periods=1, steps=50000)
    ok = (
        result.formal_unitary_max_diff <= 1e-8
        and result.interior_max_deficit > 1e-3
        and result.endpoint_state_diff <= 1e-6
    )
    report(
        "10 formal vs physical transformation",
        ok,
        f"formal agreement {result.formal_unitary_max_diff:.2e} (1e-8), "
        f"interior deficit {result.interior_max_deficit:.3f} (> 1e-3), "
        f"endpoint diff {result.endpoint_state_diff:.2e} (1e-6)",
    )
