"""Acceptance suite: every criterion prints one pass/fail line in the
terminal summary (see conftest) and asserts its stated tolerance."""

import math

import numpy as np
import pytest

from conftest import record_acceptance

from crowbarsim.calibration import fit_polynomial, KcSample
from crowbarsim.cli import build_validation_report
from crowbarsim.core import Topology, base_fault_current
from crowbarsim.fault_model import (
    CORRECTION_COEFFS,
    FaultModel,
    ModelShape,
    build_model,
    correction_factor,
    normalized_follow_on,
)
from crowbarsim.fusewire import (
    FuseWireGeometry,
    _melting_energy_forms,
    melting_energy,
    melting_joules_integral,
)
from crowbarsim.rectifier_sim import joules_integral_sim


def _rel(value, reference):
    return abs(value - reference) / abs(reference)


def _check(name, checks):
    """checks: list of (label, value, reference, rel_tol). Records one line."""
    failures = [
        f"{label}={value:.6g} vs {ref:.6g} (rel {_rel(value, ref):.2%} > {tol:.2%})"
        for label, value, ref, tol in checks
        if _rel(value, ref) > tol
    ]
    detail = "; ".join(
        f"{label}={value:.6g} (ref {ref:.6g}, {_rel(value, ref) * 100:.3f}%)"
        for label, value, ref, _ in checks
    )
    record_acceptance(name, not failures, detail)
    assert not failures, f"{name}: " + "; ".join(failures)


def test_criterion_1_parallel_model_parameters(ref_parallel):
    m = build_model(ref_parallel)
    _check(
        "1 parallel model parameters",
        [
            ("i_f_base", m.i_f_base, 33.77, 0.01),
            ("delta", m.shape.delta, 5454.6, 0.01),
            ("delta/omega_d", m.shape.delta / m.shape.omega_d, 16.32, 0.01),
            ("cap_peak", m.cap_peak, 154.54, 0.01),
            ("1/cap_tau", 1.0 / m.cap_tau, 988.14, 0.01),
        ],
    )


def test_criterion_2_series_model_parameters(ref_series):
    m = build_model(ref_series)
    _check(
        "2 series model parameters",
        [
            ("i_f_base", m.i_f_base, 59.67, 0.01),
            ("delta", m.shape.delta, 1513.6, 0.01),
            ("delta/omega_d", m.shape.delta / m.shape.omega_d, 4.53, 0.01),
            ("cap_peak", m.cap_peak, 309.09, 0.01),
        ],
    )


def test_criterion_3_model_joules_integral_and_peaks(ref_parallel, ref_series):
    m_par = build_model(ref_parallel)
    m_ser = build_model(ref_series)
    _check(
        "3 model Joules integrals and peaks",
        [
            ("J_I(104ms) parallel", m_par.joules_integral(0.104), 137.70, 0.02),
            ("J_I(102ms) series", m_ser.joules_integral(0.102), 413.10, 0.02),
            ("peak parallel", m_par.peak()[0], 154.54, 0.005),
            ("peak series", m_ser.peak()[0], 309.09, 0.005),
        ],
    )


def test_criterion_4_correction_polynomial_spot_values():
    v1 = correction_factor(0.052)
    v2 = correction_factor(0.2048)
    ok = abs(v1 - 0.912) <= 0.005 and abs(v2 - 0.9858) <= 0.005
    record_acceptance(
        "4 correction polynomial spot values",
        ok,
        f"k_c(0.052)={v1:.4f} (ref 0.912), k_c(0.2048)={v2:.4f} (ref 0.9858)",
    )
    assert ok


def test_criterion_5_fuse_model(copper, ref_parallel, ref_series):
    geom = FuseWireGeometry.from_diameter(0.136e-3, 0.165)
    j_im = melting_joules_integral(geom.area, copper)

    rng = np.random.default_rng(20260811)
    n = 1_000_000
    area = rng.uniform(1e-9, 1e-6, n)
    length = rng.uniform(1e-3, 1.0, n)
    sigma = rng.uniform(1e6, 1e8, n)
    alpha = rng.uniform(1e-4, 1e-2, n)
    rho = rng.uniform(1e3, 2e4, n)
    c_p = rng.uniform(100.0, 1000.0, n)
    t_o = rng.uniform(0.0, 50.0, n)
    t_m = t_o + rng.uniform(100.0, 3000.0, n)
    volume_form, exponential_form = _melting_energy_forms(
        area, length, sigma, alpha, rho, c_p, t_o, t_m
    )
    identity_max = float(np.max(np.abs(exponential_form / volume_form - 1.0)))

    e_fm = melting_energy(geom, copper)
    report = build_validation_report(ref_parallel, ref_series, with_sim=False)
    energy_row = next(r for r in report.rows if "energy" in r.name)
    flagged = (not energy_row.gated) and bool(energy_row.note)

    ok = (
        _rel(j_im, 16.19) <= 0.02
        and identity_max < 1e-9
        and _rel(e_fm, 9.51) <= 0.10
        and flagged
    )
    record_acceptance(
        "5 fuse model",
        ok,
        f"J_Im={j_im:.3f} (ref 16.19, {_rel(j_im, 16.19) * 100:.2f}%), "
        f"energy identity max rel dev {identity_max:.2e} over 1e6 draws, "
        f"E_fm={e_fm:.3f} J (reported 9.51, {_rel(e_fm, 9.51) * 100:.2f}%), "
        f"discrepancy flagged in validation output: {flagged}",
    )
    assert ok


def test_criterion_6_simulator_sanity(ref_parallel, bolted_traces):
    coarse, fine = bolted_traces
    eq = ref_parallel.equivalents()
    expected = base_fault_current(Topology.PARALLEL, ref_parallel.source, eq, 0.0)
    mean_dc = float(coarse.i_dc[coarse.t >= 0.06].mean())
    mean_err = _rel(mean_dc, expected)
    residual = coarse.energy_balance_residual
    j_coarse = joules_integral_sim(coarse, 0.1)
    j_fine = joules_integral_sim(fine, 0.1)
    dt_change = abs(j_fine - j_coarse) / j_coarse
    ok = mean_err <= 0.03 and residual < 0.01 and dt_change < 0.005
    record_acceptance(
        "6 simulator sanity",
        ok,
        f"bolted mean {mean_dc:.1f} A vs closed form {expected:.1f} A ({mean_err * 100:.2f}%), "
        f"energy residual {residual * 100:.4f}%, dt-halving J_I change {dt_change * 100:.4f}%",
    )
    assert ok


def test_criterion_7_calibration_band(coarse_calibration):
    corrected = np.array([row[4] for row in coarse_calibration.corrected])
    uncorrected = np.array([row[4] for row in coarse_calibration.uncorrected])
    per_topology_ok = all(
        max(abs(row[4]) for row in coarse_calibration.corrected if row[0] is topo) <= 5.0
        for topo in (Topology.PARALLEL, Topology.SERIES)
    )
    band_ok = bool(np.all(np.abs(corrected) <= 5.0)) and per_topology_ok
    uncorrected_ok = uncorrected.max() > 5.0 and uncorrected.min() < -5.0
    ok = band_ok and uncorrected_ok and not coarse_calibration.failures
    record_acceptance(
        "7 calibration band",
        ok,
        f"corrected errors in [{corrected.min():+.2f}, {corrected.max():+.2f}]% with one "
        f"polynomial over both topologies ({corrected.size} points); uncorrected spans "
        f"[{uncorrected.min():+.2f}, {uncorrected.max():+.2f}]%",
    )
    assert ok


def test_criterion_8a_polynomial_self_fit():
    xs = np.linspace(0.01, 3.6, 30)
    samples = [
        KcSample(10.0, float(x), correction_factor(float(x), warn=False), 0.0, 1.0,
                 Topology.PARALLEL)
        for x in xs
    ]
    fit = fit_polynomial(samples)
    coeff_err = float(np.max(np.abs(np.array(fit.coefficients) - np.array(CORRECTION_COEFFS))))
    ok = coeff_err < 1e-9 and fit.r_squared > 1.0 - 1e-12
    record_acceptance(
        "8a polynomial self-fit",
        ok,
        f"max coefficient deviation {coeff_err:.2e}, R^2 = {fit.r_squared:.12f}",
    )
    assert ok


def test_criterion_8b_simulator_fit_r_squared(coarse_calibration):
    # The solved correction factors carry a genuine one-to-two-percent
    # series-versus-parallel split at matched system X/R (different
    # conduction averaging of the two interconnections), so the single
    # pooled quartic that criterion 7 requires caps just below the target.
    r2 = coarse_calibration.fit.r_squared
    ok = r2 >= 0.99
    record_acceptance(
        "8b simulator-derived fit R^2",
        ok,
        f"pooled quartic over both topologies: R^2 = {r2:.5f} (target 0.99; "
        f"per-topology quartics exceed 0.99 but cannot serve both interconnections)",
    )
    assert ok, (
        f"pooled fit R^2 = {r2:.5f} < 0.99: structural ceiling from the measured "
        "topology split; see the decisions ledger"
    )


def test_criterion_9_model_property_suite(ref_parallel):
    shape = ModelShape.from_decay(5454.6)
    nf0 = normalized_follow_on(shape, 0.0)
    # zero initial slope: the response starts quadratically with curvature
    # (delta^2 + omega_d^2); any linear term would break this ratio
    h = 1e-6
    curvature = normalized_follow_on(shape, h) / h**2
    expected_curvature = (shape.delta**2 + shape.omega_d**2) / 2.0
    quadratic_start_dev = abs(curvature / expected_curvature - 1.0)
    peak_dev = abs(normalized_follow_on(shape, shape.t_p) - (1.0 + shape.m_p)) / (1.0 + shape.m_p)

    m = build_model(ref_parallel)
    cap_only = FaultModel(i_f_base=0.0, shape=m.shape, cap_peak=m.cap_peak,
                          cap_tau=m.cap_tau, k_c=m.k_c, x_r_system=m.x_r_system)
    cap_dev = 0.0
    for t in (1e-3, 0.02, 0.1):
        closed = m.cap_peak**2 * m.cap_tau / 2.0 * (1.0 - math.exp(-2.0 * t / m.cap_tau))
        cap_dev = max(cap_dev, abs(cap_only.joules_integral(t) - closed) / closed)

    rng = np.random.default_rng(11)
    monotone = True
    for _ in range(1000):
        model = FaultModel(
            i_f_base=float(rng.uniform(1.0, 500.0)),
            shape=ModelShape.from_decay(float(rng.uniform(20.0, 8000.0)),
                                        float(rng.uniform(2e-3, 12e-3))),
            cap_peak=float(rng.uniform(0.0, 400.0)),
            cap_tau=float(rng.uniform(2e-4, 5e-3)),
            k_c=1.0,
            x_r_system=1.0,
        )
        ts = (2e-4, 1e-3, 2e-3)
        jis = [model.joules_integral(t, dt=1e-6) for t in ts]
        if not (0.0 <= jis[0] <= jis[1] <= jis[2]):
            monotone = False
            break

    ok = (
        nf0 == 0.0
        and quadratic_start_dev < 0.01
        and peak_dev < 1e-12
        and cap_dev < 1e-6
        and monotone
    )
    record_acceptance(
        "9 model property suite",
        ok,
        f"follow-on(0)={nf0}, quadratic-start curvature dev {quadratic_start_dev:.2e}, "
        f"first-peak identity dev {peak_dev:.2e}, capacitor closed-form dev {cap_dev:.2e}, "
        f"Joules integral monotone on 1000 random models: {monotone}",
    )
    assert ok
