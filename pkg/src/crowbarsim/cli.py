"""Command-line front end.

Subcommands: ``model`` (closed-form fault current), ``sim`` (switched-circuit
transient), ``validate`` (model vs the measured qualification-test results),
``fuse design`` / ``fuse simulate`` (wire sizing and thermal traces) and
``calibrate`` (correction-factor re-derivation).  Every report path emits
CSV/JSON and, unless ``--no-figures`` is given, a PNG figure alongside.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from crowbarsim import fusewire, reporting
from crowbarsim.calibration import SweepGrid, run_calibration
from crowbarsim.core import ConfigError, SystemConfig, Topology, reference_supply
from crowbarsim.fault_model import CORRECTION_COEFFS, build_model
from crowbarsim.fusewire import (
    FuseWireGeometry,
    FuseWireMaterial,
    InfeasibleDesignError,
    design_fuse,
    melting_energy,
    melting_joules_integral,
    nearest_swg,
    simulate_fuse,
)
from crowbarsim.rectifier_sim import SimConfig, joules_integral_sim, simulate

# Measurements from the crowbar qualification test bench (read-only
# reference data for the validation report).
MEASURED_REFERENCE = {
    "ji_parallel": 135.70,  # A^2 s at 104 ms, paralleled bridges
    "peak_parallel": 158.40,  # A
    "ji_series": 404.60,  # A^2 s at 102 ms, seriesed bridges
    "peak_series": 315.10,  # A
    "fuse_ji": 15.70,  # A^2 s at wire melt
    "fuse_energy": 9.96,  # J at wire melt
}

# Model-side figure reported alongside the measured fuse energy; not
# reproducible from the reported material constants (see the validation note).
REPORTED_FUSE_ENERGY_MODEL = 9.51

_REFERENCE_WIRE_DIAMETER = 0.136e-3
_REFERENCE_WIRE_LENGTH = 0.165


@dataclass
class ValidationRow:
    name: str
    model_value: float
    reference_value: float
    error_percent: float
    gated: bool = True
    note: str = ""


@dataclass
class ValidationReport:
    rows: list[ValidationRow]
    passed: bool

    def to_json_dict(self) -> dict:
        return {
            "rows": [vars(r) for r in self.rows],
            "passed": self.passed,
        }


def _error_percent(reference: float, model: float) -> float:
    return (reference - model) / reference * 100.0


def _load_config(args) -> SystemConfig:
    if getattr(args, "config", None):
        config = SystemConfig.from_json_file(args.config)
    else:
        config = reference_supply()
    topology = getattr(args, "topology", None)
    if topology:
        config = config.replace_topology(Topology.parse(topology))
    return config


def _out_dir(args) -> Path:
    return reporting.ensure_dir(getattr(args, "out", None) or ".")


def cmd_model(args) -> int:
    config = _load_config(args)
    v_c = args.vc if args.vc is not None else None
    model = build_model(config, v_c=v_c)
    until = args.until
    if until < 0:
        print("error: --until must be >= 0", file=sys.stderr)
        return 2
    ji = model.joules_integral(until) if until > 0 else 0.0

    out = _out_dir(args)
    reporting.write_model_trace_csv(out / "model_trace.csv", model, until, args.sample_period)
    summary = model.summary()
    summary["ji_at_until"] = ji
    summary["until_s"] = until
    reporting.write_json(out / "model_summary.json", summary)
    if not args.no_figures and until >= args.sample_period:
        ts = np.linspace(0.0, until, 2000)
        reporting.save_current_figure(
            out / "model_current.png", ts, model.current(ts),
            f"dc fault current model ({config.topology.value})",
        )
    print(
        f"i_f_base = {model.i_f_base:.2f} A, delta = {model.shape.delta:.1f} 1/s, "
        f"k_c = {model.k_c:.4f}, J_I({until * 1e3:.0f} ms) = {ji:.2f} A^2 s"
    )
    return 0


def cmd_sim(args) -> int:
    config = _load_config(args)
    sim_cfg = SimConfig(
        system=config,
        fault_angle=None if args.worst_case else args.fault_angle,
        duration=args.duration,
        dt=args.dt,
        include_dc_cap=not args.no_cap,
        r_load_override=args.r_load,
        settle_prefault=not args.no_settle,
    )
    trace = simulate(sim_cfg)
    out = _out_dir(args)
    reporting.write_sim_trace_csv(out / "sim_trace.csv", trace)
    report = {
        "fault_angle": trace.fault_angle_used,
        "peak_A": float(np.max(np.abs(trace.i_dc))),
        "ji_at_end": float(trace.ji[-1]),
        "energy_residual": trace.energy_balance_residual,
    }
    reporting.write_json(out / "sim_report.json", report)
    if not args.no_figures:
        reporting.save_current_figure(
            out / "sim_current.png", trace.t, trace.i_dc,
            f"simulated dc fault current ({config.topology.value})", ji=trace.ji,
        )
    print(
        f"fault angle = {report['fault_angle']:.4f} rad, peak = {report['peak_A']:.2f} A, "
        f"J_I(end) = {report['ji_at_end']:.2f} A^2 s, "
        f"energy residual = {report['energy_residual'] * 100.0:.3f}%"
    )
    return 0


def _load_material(args) -> FuseWireMaterial:
    if getattr(args, "material", None):
        doc = json.loads(Path(args.material).read_text(encoding="utf-8"))
        return FuseWireMaterial.from_dict(doc)
    return FuseWireMaterial.copper()


def build_validation_report(
    config_par: SystemConfig,
    config_ser: SystemConfig,
    with_sim: bool = True,
    fault_angle: float | None = 0.0,
    self_check: bool = False,
) -> ValidationReport:
    """Assemble the model-versus-measurement table.

    The six gated rows compare the closed-form model and fuse model against
    the bench measurements; optional simulator rows are reported alongside
    without affecting the pass flag.  ``self_check`` replaces the references
    with the model's own values (all errors vanish), a plumbing sanity mode.
    """
    mat = FuseWireMaterial.copper()
    geom = FuseWireGeometry.from_diameter(_REFERENCE_WIRE_DIAMETER, _REFERENCE_WIRE_LENGTH)
    model_par = build_model(config_par)
    model_ser = build_model(config_ser)

    values = [
        ("J_I at 104 ms, parallel (A^2 s)", model_par.joules_integral(0.104), "ji_parallel", True, ""),
        ("peak current, parallel (A)", model_par.peak()[0], "peak_parallel", True, ""),
        ("J_I at 102 ms, series (A^2 s)", model_ser.joules_integral(0.102), "ji_series", True, ""),
        ("peak current, series (A)", model_ser.peak()[0], "peak_series", True, ""),
        ("fuse melting J_I (A^2 s)", melting_joules_integral(geom.area, mat), "fuse_ji", True, ""),
        (
            "fuse melting energy (J)",
            melting_energy(geom, mat),
            "fuse_energy",
            False,
            "known inconsistency: the reported model figure "
            f"{REPORTED_FUSE_ENERGY_MODEL} J cannot be reproduced from the "
            "reported material constants; this row carries the closed-form "
            "volume value and is excluded from the pass gate",
        ),
    ]

    rows: list[ValidationRow] = []
    for name, model_value, ref_key, gated, note in values:
        reference = model_value if self_check else MEASURED_REFERENCE[ref_key]
        rows.append(
            ValidationRow(
                name=name,
                model_value=float(model_value),
                reference_value=float(reference),
                error_percent=_error_percent(reference, model_value),
                gated=gated,
                note=note,
            )
        )

    if with_sim and not self_check:
        note = "simulator cross-check, informational"
        for topology, cfg, t_ji, ji_key, pk_key in [
            (Topology.PARALLEL, config_par, 0.104, "ji_parallel", "peak_parallel"),
            (Topology.SERIES, config_ser, 0.102, "ji_series", "peak_series"),
        ]:
            try:
                trace = simulate(
                    SimConfig(system=cfg, fault_angle=fault_angle, duration=t_ji + 1e-3)
                )
                ji = joules_integral_sim(trace, t_ji)
                peak = float(np.max(trace.i_dc))
                rows.append(ValidationRow(
                    f"J_I sim, {topology.value} (A^2 s)", ji, MEASURED_REFERENCE[ji_key],
                    _error_percent(MEASURED_REFERENCE[ji_key], ji), gated=False, note=note,
                ))
                rows.append(ValidationRow(
                    f"peak sim, {topology.value} (A)", peak, MEASURED_REFERENCE[pk_key],
                    _error_percent(MEASURED_REFERENCE[pk_key], peak), gated=False, note=note,
                ))
            except Exception as exc:  # noqa: BLE001 - row failures keep the report alive
                rows.append(ValidationRow(
                    f"simulation, {topology.value}", math.nan, MEASURED_REFERENCE[ji_key],
                    math.nan, gated=False, note=f"failed: {exc}",
                ))

    passed = all(abs(r.error_percent) <= 5.0 for r in rows if r.gated)
    return ValidationReport(rows=rows, passed=passed)


def cmd_validate(args) -> int:
    config_par = reference_supply(Topology.PARALLEL)
    config_ser = reference_supply(Topology.SERIES)
    if getattr(args, "config", None):
        base = SystemConfig.from_json_file(args.config)
        config_par = base.replace_topology(Topology.PARALLEL)
        config_ser = base.replace_topology(Topology.SERIES)

    report = build_validation_report(
        config_par,
        config_ser,
        with_sim=not args.no_sim,
        fault_angle=args.fault_angle,
        self_check=args.self_check,
    )
    out = _out_dir(args)
    reporting.write_json(out / "validation_report.json", report.to_json_dict())
    reporting.write_csv(
        out / "validation_report.csv",
        ["name", "model_value", "reference_value", "error_percent", "gated", "note"],
        [(r.name, r.model_value, r.reference_value, r.error_percent, r.gated, r.note)
         for r in report.rows],
    )
    if not args.no_figures:
        reporting.save_validation_figure(out / "validation_report.png", report.rows)

    width = max(len(r.name) for r in report.rows)
    print(f"{'quantity'.ljust(width)}  {'model':>10}  {'measured':>10}  {'err %':>7}")
    for r in report.rows:
        flag = "" if r.gated else "  [informational]"
        print(
            f"{r.name.ljust(width)}  {r.model_value:10.2f}  {r.reference_value:10.2f}  "
            f"{r.error_percent:7.2f}{flag}"
        )
        if r.note:
            print(f"  note: {r.note}")
    print(f"overall: {'PASS' if report.passed else 'FAIL'} (gated rows within 5%)")
    return 0 if report.passed else 1


def cmd_fuse_design(args) -> int:
    mat = _load_material(args)
    try:
        geom = design_fuse(
            energy_target=args.energy,
            ji_limit=args.ji_max,
            operating_voltage_kv=args.kv,
            mat=mat,
            length=args.length_mm * 1e-3 if args.length_mm is not None else None,
        )
    except InfeasibleDesignError as exc:
        print(f"infeasible design: {exc}", file=sys.stderr)
        return 2
    j_im = melting_joules_integral(geom.area, mat)
    e_fm = melting_energy(geom, mat)
    print(
        f"diameter = {geom.diameter * 1e3:.4f} mm (nearest SWG {nearest_swg(geom.diameter)}), "
        f"length = {geom.length * 1e3:.1f} mm"
    )
    print(f"melting J_I = {j_im:.2f} A^2 s, melting energy = {e_fm:.2f} J")
    if args.out:
        out = _out_dir(args)
        reporting.write_json(out / "fuse_design.json", {
            "diameter_m": geom.diameter,
            "length_m": geom.length,
            "area_m2": geom.area,
            "nearest_swg": nearest_swg(geom.diameter),
            "melting_ji_A2s": j_im,
            "melting_energy_J": e_fm,
        })
    return 0


def cmd_fuse_simulate(args) -> int:
    mat = _load_material(args)
    geom = FuseWireGeometry.from_diameter(args.diameter_mm * 1e-3, args.length_mm * 1e-3)
    rows = np.genfromtxt(args.profile, delimiter=",", names=True)
    try:
        times = np.atleast_1d(rows["t_s"])
        currents = np.atleast_1d(rows["i_A"])
    except (KeyError, ValueError):
        print("error: profile CSV needs columns t_s,i_A", file=sys.stderr)
        return 2
    trace = simulate_fuse(times, currents, geom, mat, dt=args.dt)
    out = _out_dir(args)
    trace.to_csv(out / "fuse_trace.csv")
    if not args.no_figures:
        reporting.save_fuse_figure(out / "fuse_trace.png", trace)
    if trace.melted:
        k = len(trace.t) - 1
        print(
            f"wire melts at {trace.melted_at * 1e3:.2f} ms with "
            f"J_I = {trace.joules_integral[k]:.2f} A^2 s, energy = {trace.energy[k]:.2f} J"
        )
    else:
        print(
            f"wire survives: final temperature {trace.temperature[-1]:.1f} degC, "
            f"J_I = {trace.joules_integral[-1]:.2f} A^2 s, energy = {trace.energy[-1]:.2f} J"
        )
    return 0


def cmd_calibrate(args) -> int:
    grid = SweepGrid.from_json_file(args.grid) if args.grid else SweepGrid()
    result = run_calibration(
        grid,
        dt=args.dt,
        fault_angle=args.fault_angle,
        tol=args.tol,
        include_tp_sweep=not args.skip_tp,
    )
    out = _out_dir(args)
    reporting.write_csv(
        out / "kc_table.csv",
        ["x_r_trx", "x_r_system", "k_c_solved", "residual_delta_ji_percent", "r_load", "topology"],
        [(s.x_r_trx, s.x_r_system, s.k_c_solved, s.residual_delta_ji_percent,
          s.r_load, s.topology.value) for s in result.samples],
    )
    if result.fit is not None:
        reporting.write_json(out / "kc_polynomial.json", result.fit.to_json_dict())
        for topo, fname in [(Topology.PARALLEL, "corrected_parallel.csv"),
                            (Topology.SERIES, "corrected_series.csv")]:
            reporting.write_csv(
                out / fname,
                ["x_r_trx", "r_load", "x_r_system", "delta_ji_percent_100ms"],
                [(xr, rl, ratio, err) for t, xr, rl, ratio, err in result.corrected if t is topo],
            )
        reporting.write_csv(
            out / "uncorrected.csv",
            ["topology", "x_r_trx", "r_load", "x_r_system", "delta_ji_percent_100ms"],
            [(t.value, xr, rl, ratio, err) for t, xr, rl, ratio, err in result.uncorrected],
        )
        if not args.no_figures:
            reporting.save_kc_figure(out / "kc_fit.png", result.samples, result.fit)
            reporting.save_error_band_figure(
                out / "corrected_errors.png", result.corrected,
                "Joules-integral error with the fitted correction",
            )
            reporting.save_error_band_figure(
                out / "uncorrected_errors.png", result.uncorrected,
                "Joules-integral error without correction",
            )
        print(f"fitted quartic: {np.round(result.fit.coefficients, 5).tolist()}, "
              f"R^2 = {result.fit.r_squared:.5f}")
        if args.compare_reference:
            print(f"built-in quartic: {list(CORRECTION_COEFFS)}")
    else:
        print(f"{len(result.samples)} sample(s): too few for a quartic fit, table written only")

    if result.tp_rows:
        reporting.write_csv(
            out / "tp_error.csv",
            ["x_r_trx", "t_p_s", "delta_ji_percent_100ms"],
            result.tp_rows,
        )
        if not args.no_figures:
            reporting.save_tp_figure(out / "tp_error.png", result.tp_rows)

    for xr, rl, exc in result.failures:
        print(f"point x_r_trx={xr} r_load={rl} failed: {exc}", file=sys.stderr)
    return 1 if result.failures else 0


def _add_common(parser: argparse.ArgumentParser, topology: bool = True) -> None:
    parser.add_argument("--config", help="system-config JSON (defaults to the reference supply)")
    parser.add_argument("--out", help="output directory (default: current directory)")
    parser.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    if topology:
        parser.add_argument("--topology", choices=["parallel", "series"],
                            help="override the config's dc-side interconnection")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crowbarsim",
        description="DC fault-current and fuse-wire models for crowbar protection design",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_model = sub.add_parser("model", help="evaluate the closed-form fault-current model")
    _add_common(p_model)
    p_model.add_argument("--until", type=float, default=0.1, help="horizon in seconds")
    p_model.add_argument("--vc", type=float, help="override capacitor precharge (V)")
    p_model.add_argument("--sample-period", type=float, default=50e-6,
                         help="trace sample period in seconds")
    p_model.set_defaults(func=cmd_model)

    p_sim = sub.add_parser("sim", help="run the switched-circuit transient simulator")
    _add_common(p_sim)
    angle = p_sim.add_mutually_exclusive_group()
    angle.add_argument("--fault-angle", type=float, default=None,
                       help="source phase at the fault instant (rad)")
    angle.add_argument("--worst-case", action="store_true",
                       help="search the worst-case fault angle (default when no angle given)")
    p_sim.add_argument("--no-cap", action="store_true",
                       help="follow-on oracle circuit without the dc capacitor")
    p_sim.add_argument("--r-load", type=float, default=None,
                       help="dc load resistance for --no-cap runs (ohm)")
    p_sim.add_argument("--duration", type=float, default=0.1)
    p_sim.add_argument("--dt", type=float, default=1e-5)
    p_sim.add_argument("--no-settle", action="store_true",
                       help="start from a blocked rectifier instead of the settled no-load state")
    p_sim.set_defaults(func=cmd_sim)

    p_val = sub.add_parser("validate", help="compare models against the bench measurements")
    _add_common(p_val, topology=False)
    p_val.add_argument("--no-sim", action="store_true", help="skip the simulator rows")
    p_val.add_argument("--fault-angle", type=float, default=0.0,
                       help="fault angle for the simulator rows (rad)")
    p_val.add_argument("--self-check", action="store_true",
                       help="model-vs-model mode: all errors must vanish")
    p_val.set_defaults(func=cmd_validate)

    p_fuse = sub.add_parser("fuse", help="fuse-wire sizing and thermal simulation")
    fuse_sub = p_fuse.add_subparsers(dest="fuse_command", required=True)

    p_design = fuse_sub.add_parser("design", help="size a wire for energy and J_I limits")
    p_design.add_argument("--energy", type=float, required=True, help="melt energy target (J)")
    p_design.add_argument("--ji-max", type=float, required=True,
                          help="maximum melting Joules integral (A^2 s)")
    p_design.add_argument("--kv", type=float, default=0.0, help="operating voltage (kV)")
    p_design.add_argument("--length-mm", type=float, default=None, help="force the wire length")
    p_design.add_argument("--material", help="material-constant overrides (JSON)")
    p_design.add_argument("--out", help="write fuse_design.json here")
    p_design.set_defaults(func=cmd_fuse_design)

    p_fsim = fuse_sub.add_parser("simulate", help="step the wire model under a current profile")
    p_fsim.add_argument("--profile", required=True, help="CSV with columns t_s,i_A")
    p_fsim.add_argument("--diameter-mm", type=float, required=True)
    p_fsim.add_argument("--length-mm", type=float, required=True)
    p_fsim.add_argument("--dt", type=float, default=1e-5)
    p_fsim.add_argument("--material", help="material-constant overrides (JSON)")
    p_fsim.add_argument("--out", help="output directory")
    p_fsim.add_argument("--no-figures", action="store_true")
    p_fsim.set_defaults(func=cmd_fuse_simulate)

    p_cal = sub.add_parser("calibrate", help="re-derive the correction factor from the simulator")
    p_cal.add_argument("--grid", help="sweep-grid JSON (defaults to the standard grid)")
    p_cal.add_argument("--out", help="output directory")
    p_cal.add_argument("--dt", type=float, default=1e-5)
    p_cal.add_argument("--fault-angle", type=float, default=0.0)
    p_cal.add_argument("--tol", type=float, default=0.25,
                       help="bisection tolerance on the percent error")
    p_cal.add_argument("--skip-tp", action="store_true", help="skip the time-to-peak sweep")
    p_cal.add_argument("--compare-reference", action="store_true",
                       help="print the built-in quartic next to the fitted one")
    p_cal.add_argument("--no-figures", action="store_true")
    p_cal.set_defaults(func=cmd_calibrate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
