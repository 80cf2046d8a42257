"""Acceptance suite: one checked criterion per test, one PASS/FAIL line each.

Run with ``pytest -v tests/test_acceptance.py``; the per-criterion lines are
echoed in the terminal summary.  Criteria 4 and 6 are statistical and run on
the package's default seed; everything else is deterministic.
"""

import dataclasses
import json
import math
from time import perf_counter

import numpy as np
import pytest

from wvbench import analysis as ana
from wvbench import interferometer as itf
from wvbench import qubit_core as qc
from wvbench import signal_gen as sg
from wvbench.cli import main as cli_main


def check(log, num, name, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    line = f"criterion {num} ({name}): {status}"
    if detail:
        line += f" -- {detail}"
    log.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def default_noisy_analysis():
    """One noisy campaign at package defaults, shared by criteria 4 and 6."""
    config = sg.default_config()
    t0 = perf_counter()
    datasets = sg.generate_dataset(config)
    result = ana.analyze_campaign(
        datasets,
        alpha=config.protocol.alpha,
        omega=config.protocol.omega,
        delta=config.protocol.delta,
    )
    wall = perf_counter() - t0
    return result, wall


def test_criterion_1_commutator_oracle(acceptance_log):
    """Weak-value route to the commutator equals the direct matrix route."""
    t0 = perf_counter()
    rng = np.random.default_rng(20240601)
    worst = 0.0
    checked = 0
    while checked < 1000:
        psi = qc.normalize(rng.normal(size=2) + 1j * rng.normal(size=2))
        proj_a = qc.projector_from_state(
            qc.bloch_state(rng.uniform(0, np.pi), rng.uniform(0, 2 * np.pi))
        )
        post_b = qc.bloch_state(rng.uniform(0, np.pi), rng.uniform(0, 2 * np.pi))
        if abs(qc.inner(post_b, psi)) ** 2 < 1e-6:
            continue
        op_a = 2.0 * proj_a - np.eye(2)
        op_b = 2.0 * qc.projector_from_state(post_b) - np.eye(2)
        direct = qc.commutator_expectation_direct(op_a, op_b, psi)
        via = qc.commutator_via_weak_value(psi, proj_a, post_b)
        worst = max(worst, abs(via - direct))
        checked += 1
    wall = perf_counter() - t0
    check(
        acceptance_log,
        1,
        "commutator identity oracle",
        worst <= 1e-12 and wall < 1.0,
        f"max |via - direct| = {worst:.2e} over 1000 draws in {wall:.2f}s",
    )


def test_criterion_2_analytic_weak_value(acceptance_log):
    """w(chi) = 1/(1 + e^{i chi}) on a dense grid, with Re w = 1/2."""
    chis = (np.arange(100) + 0.5) * 2.0 * np.pi / 100.0
    worst = 0.0
    for chi in chis:
        result = qc.weak_value(
            qc.relative_phase_state(chi),
            qc.PLUS_X,
            qc.projector_from_state(qc.KET_0),
        )
        worst = max(worst, abs(result.value - 1.0 / (1.0 + np.exp(1j * chi))))
        worst = max(worst, abs(result.value.real - 0.5))
    at_zero = qc.weak_value(
        qc.relative_phase_state(0.0), qc.PLUS_X, qc.projector_from_state(qc.KET_0)
    ).value
    worst = max(worst, abs(at_zero - 0.5))
    check(
        acceptance_log,
        2,
        "analytic weak value",
        worst <= 1e-12,
        f"max deviation {worst:.2e} on 100-point grid",
    )


def test_criterion_3_noiseless_pipeline(acceptance_log):
    """Noiseless end-to-end run reproduces sin(chi) to 1e-8."""
    t0 = perf_counter()
    config = sg.default_config(noiseless=True)
    datasets = sg.generate_dataset(config)
    result = ana.analyze_campaign(
        datasets,
        alpha=config.protocol.alpha,
        omega=config.protocol.omega,
        delta=config.protocol.delta,
    )
    wall = perf_counter() - t0
    residuals = [
        abs(row.lhs - row.rhs) for row in result.report.rows if not row.excluded
    ]
    worst = max(residuals)
    dark_ok = result.report.n_excluded == 1 and all(
        abs(row.chi - np.pi) < 1e-9 for row in result.report.rows if row.excluded
    )
    check(
        acceptance_log,
        3,
        "noiseless pipeline identity",
        worst < 1e-8 and dark_ok and wall < 5.0,
        f"max |lhs - rhs| = {worst:.2e}, dark setting excluded, {wall:.2f}s",
    )


def test_criterion_4_statistical_pipeline(acceptance_log, default_noisy_analysis):
    """Noisy campaign at defaults: residuals, coverage and contrast recovery."""
    result, wall = default_noisy_analysis
    rms = result.report.rms_residual
    eta = result.visibility.eta
    covered = all(
        abs(row.lhs - row.theory) <= 3 * row.sigma_lhs
        and abs(row.rhs - row.theory) <= 3 * row.sigma_rhs
        for row in result.report.rows
        if not row.excluded
    )
    ok = rms < 0.05 and covered and abs(eta - 0.79) <= 0.01 and wall < 60.0
    check(
        acceptance_log,
        4,
        "statistical pipeline",
        ok,
        f"rms = {rms:.4f}, eta = {eta:.4f}, 3-sigma coverage = {covered}, {wall:.2f}s",
    )


def test_criterion_5_first_order_model_gap(acceptance_log):
    """Halving alpha shrinks the exact/first-order gap about fourfold."""

    def gap(alpha):
        params = itf.ProtocolParams(chi=0.0, alpha=alpha)
        t = np.linspace(0.0, params.period, 512, endpoint=False)
        return float(
            np.max(np.abs(itf.exact_intensity(t, params) - itf.ideal_intensity(t, params)))
        )

    ratio = gap(np.pi / 9) / gap(np.pi / 18)
    check(
        acceptance_log,
        5,
        "second-order model gap",
        3.2 <= ratio <= 4.8,
        f"gap ratio = {ratio:.3f} (expect ~4)",
    )


def test_criterion_6_weak_value_band(acceptance_log, default_noisy_analysis):
    """Reconstructed Re/Im track 1/(1 + e^{i chi}) within 3 sigma."""
    result, _ = default_noisy_analysis
    worst_pull = 0.0
    for est in result.weak_values:
        if est.excluded:
            continue
        w = 1.0 / (1.0 + np.exp(1j * est.chi))
        worst_pull = max(
            worst_pull,
            abs(est.re - w.real) / est.sigma_re,
            abs(est.im - w.imag) / est.sigma_im,
        )
    excluded = [est.chi for est in result.weak_values if est.excluded]
    dark_ok = len(excluded) == 1 and abs(excluded[0] - np.pi) < 1e-9
    check(
        acceptance_log,
        6,
        "weak-value reconstruction band",
        worst_pull <= 3.0 and dark_ok,
        f"max pull = {worst_pull:.2f} sigma, excluded settings = {len(excluded)}",
    )


def test_criterion_7_tamper_detection(acceptance_log, tmp_path):
    """Corrupting the recorded rotation angle must fail verification."""
    t0 = perf_counter()
    config_path = tmp_path / "config.json"
    config_path.write_text(
        json.dumps(
            sg.config_to_dict(
                sg.default_config(chi_grid=sg.default_chi_grid(6), counts_per_setting=1e5)
            )
        )
    )
    sim, ana_dir, ver = tmp_path / "sim", tmp_path / "ana", tmp_path / "ver"
    assert cli_main(["simulate", "--config", str(config_path), "--out", str(sim)]) == 0

    # clean chain passes
    assert cli_main(["analyze", "--data", str(sim), "--out", str(ana_dir)]) == 0
    clean = cli_main(["verify", "--data", str(ana_dir), "--out", str(ver)])

    # halve the recorded alpha: reconstruction doubles, the identity breaks
    manifest = json.loads((sim / "manifest.json").read_text())
    manifest["config"]["protocol"]["alpha"] /= 2.0
    (sim / "manifest.json").write_text(json.dumps(manifest))
    ana2, ver2 = tmp_path / "ana2", tmp_path / "ver2"
    assert cli_main(["analyze", "--data", str(sim), "--out", str(ana2)]) == 0
    tampered = cli_main(["verify", "--data", str(ana2), "--out", str(ver2)])
    wall = perf_counter() - t0
    check(
        acceptance_log,
        7,
        "tamper detection",
        clean == 0 and tampered == 1,
        f"clean exit {clean}, tampered exit {tampered}, {wall:.2f}s",
    )
