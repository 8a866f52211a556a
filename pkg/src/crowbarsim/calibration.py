"""Re-derivation of the correction factor against the switched-circuit oracle.

For every grid point (transformer X/R ratio, dc-side resistance) the factor
k_c scaling the referred load resistance is solved by bisection until the
closed-form model's 100 ms Joules integral matches the simulator's, the
samples are pooled over both rectifier interconnections and fitted with an
ordinary-least-squares quartic in the system X/R ratio, and the fitted
polynomial is validated by re-running the error sweep with it applied.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from crowbarsim.core import (
    DcLinkParams,
    SourceParams,
    SystemConfig,
    Topology,
    TransformerParams,
    referred_load_resistance,
    reference_supply,
    x_r_system,
)
from crowbarsim.fault_model import follow_on_model
from crowbarsim.rectifier_sim import (
    SimConfig,
    SimTrace,
    delta_ji_percent,
    simulate,
)

_DEFAULT_R_LOAD = tuple(float(x) for x in np.geomspace(5.0, 300.0, 8).round(4))
_DEFAULT_T_P = (1.5e-3, 3.0e-3, 4.5e-3, 6.0e-3, 7.5e-3, 9.4e-3, 10.0e-3)


class BracketError(RuntimeError):
    """The correction-factor bracket does not straddle a root."""

    def __init__(self, lo: float, f_lo: float, hi: float, f_hi: float):
        self.endpoints = (lo, f_lo, hi, f_hi)
        super().__init__(
            f"no sign change on [{lo:g}, {hi:g}]: "
            f"error {f_lo:+.3f}% at {lo:g}, {f_hi:+.3f}% at {hi:g}"
        )


@dataclass(frozen=True)
class SweepGrid:
    """Calibration grid: transformer X/R ratios, dc-side resistances,
    evaluation horizon and the time-to-peak values of the shape sweep."""

    x_r_trx: tuple = (2.5, 5.0, 7.5, 10.0, 12.5, 15.0)
    r_load: tuple = _DEFAULT_R_LOAD
    t_eval: float = 0.1
    t_p: tuple = _DEFAULT_T_P

    def __post_init__(self) -> None:
        if not self.x_r_trx or any(x <= 0 for x in self.x_r_trx):
            raise ValueError("x_r_trx values must be positive")
        if not self.r_load or any(r <= 0 for r in self.r_load):
            raise ValueError("r_load values must be positive")
        if self.t_eval < 0.05:
            raise ValueError("t_eval must be >= 0.05 s")
        if not self.t_p or any(t <= 0 for t in self.t_p):
            raise ValueError("t_p values must be positive")

    @classmethod
    def from_json_file(cls, path: str | Path) -> "SweepGrid":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        kwargs = {}
        for key in ("x_r_trx", "r_load", "t_p"):
            if key in doc:
                kwargs[key] = tuple(float(x) for x in doc[key])
        if "t_eval" in doc:
            kwargs["t_eval"] = float(doc["t_eval"])
        return cls(**kwargs)


@dataclass(frozen=True)
class KcSample:
    """One solved correction factor with its residual Joules-integral error."""

    x_r_trx: float
    x_r_system: float
    k_c_solved: float
    residual_delta_ji_percent: float
    r_load: float
    topology: Topology


@dataclass(frozen=True)
class PolyFit:
    """Least-squares polynomial with its goodness of fit."""

    coefficients: tuple  # highest power first
    r_squared: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.r_squared <= 1.0 + 1e-12:
            raise ValueError("r_squared must lie in [0, 1]")

    def __call__(self, x: float) -> float:
        return float(np.polyval(self.coefficients, x))

    def to_json_dict(self) -> dict:
        return {"coeffs": list(self.coefficients), "r2": self.r_squared}


def grid_point_config(x_r_trx: float, base: SystemConfig | None = None) -> SystemConfig:
    """Synthetic supply with a prescribed transformer X/R ratio.

    The reactances (and their common-versus-secondary split) stay at the
    reference supply's values; only the resistances are rescaled, keeping
    the reference split between primary and secondary shares.  Sweeping the
    resistance at fixed reactance kept the correction factor a clean
    function of the system X/R ratio; the alternative (fixed resistance,
    scaled reactances) was measured to break that collapse.
    """
    if base is None:
        base = reference_supply()
    eq = base.equivalents()
    r_total = eq.x_lp_eq / x_r_trx
    f_common = base.transformer.r_p_delta / eq.r_p_eq
    trx = TransformerParams(
        r_p_delta=r_total * f_common,
        x_lp_delta=base.transformer.x_lp_delta,
        r_sp=2.0 * r_total * (1.0 - f_common),
        x_l_sp=base.transformer.x_l_sp,
        v_prim_ll=base.transformer.v_prim_ll,
        v_sec_ll=base.transformer.v_sec_ll,
        rating=base.transformer.rating,
    )
    dc = DcLinkParams(r1=base.dc_link.r1, r2=base.dc_link.r2, r3=base.dc_link.r3,
                      c_dc=base.dc_link.c_dc, v_c=0.0)
    return SystemConfig(trx, base.source, dc, base.topology)


def oracle_trace(
    config: SystemConfig,
    topology: Topology,
    r_load: float,
    t_eval: float = 0.1,
    dt: float = 1e-5,
    fault_angle: float = 0.0,
) -> SimTrace:
    """Follow-on oracle run: no dc capacitor, bare load resistance."""
    sim_cfg = SimConfig(
        system=config.replace_topology(topology),
        fault_angle=fault_angle,
        duration=t_eval,
        dt=dt,
        include_dc_cap=False,
        r_load_override=r_load,
    )
    return simulate(sim_cfg)


def solve_correction(
    config: SystemConfig,
    topology: Topology,
    r_load: float,
    trace: SimTrace,
    t_eval: float = 0.1,
    tol: float = 0.25,
    bracket: tuple[float, float] = (0.3, 3.6),
) -> KcSample:
    """Bisect k_c until the model's Joules-integral error vanishes.

    The error is monotone increasing in k_c (more correction means more
    damping and a smaller model integral), so plain bisection on the
    bracket is robust.  Raises BracketError with both endpoint errors when
    the bracket does not straddle zero.
    """
    if tol <= 0.0:
        raise ValueError("tol must be > 0")
    eq = config.equivalents()
    src = config.source

    def error_at(k_c: float) -> float:
        model = follow_on_model(src, eq, topology, r_load, k_c=k_c)
        return delta_ji_percent(trace, model, t_eval)

    lo, hi = bracket
    f_lo = error_at(lo)
    f_hi = error_at(hi)
    if f_lo == 0.0:
        k_c, residual = lo, f_lo
    elif f_hi == 0.0:
        k_c, residual = hi, f_hi
    elif f_lo * f_hi > 0.0:
        raise BracketError(lo, f_lo, hi, f_hi)
    else:
        k_c = 0.5 * (lo + hi)
        residual = error_at(k_c)
        for _ in range(80):
            if abs(residual) < tol:
                break
            if residual * f_lo > 0.0:
                lo, f_lo = k_c, residual
            else:
                hi = k_c
            k_c = 0.5 * (lo + hi)
            residual = error_at(k_c)
        else:
            raise RuntimeError("bisection did not reach tolerance")
    ratio = x_r_system(eq, referred_load_resistance(topology, r_load, eq))
    return KcSample(
        x_r_trx=eq.x_r_trx,
        x_r_system=ratio,
        k_c_solved=k_c,
        residual_delta_ji_percent=residual,
        r_load=r_load,
        topology=topology,
    )


def sweep_correction(
    grid: SweepGrid,
    topology: Topology,
    dt: float = 1e-5,
    fault_angle: float = 0.0,
    tol: float = 0.25,
    traces: dict | None = None,
) -> tuple[list[KcSample], list[tuple]]:
    """Solve k_c on every (x_r_trx, r_load) grid point for one topology.

    Returns the samples and a list of (x_r_trx, r_load, error) for points
    whose solve failed; failures do not abort the sweep.  ``traces`` caches
    oracle runs keyed by (topology, x_r_trx, r_load) for reuse.
    """
    samples: list[KcSample] = []
    failures: list[tuple] = []
    for xr in grid.x_r_trx:
        config = grid_point_config(xr)
        for r_load in grid.r_load:
            key = (topology, xr, r_load)
            try:
                trace = traces.get(key) if traces is not None else None
                if trace is None:
                    trace = oracle_trace(config, topology, r_load, grid.t_eval, dt, fault_angle)
                    if traces is not None:
                        traces[key] = trace
                samples.append(
                    solve_correction(config, topology, r_load, trace, grid.t_eval, tol)
                )
            except Exception as exc:  # noqa: BLE001 - per-point failures are collected
                failures.append((xr, r_load, exc))
    return samples, failures


def fit_polynomial(samples: list[KcSample], degree: int = 4) -> PolyFit:
    """Ordinary least squares of k_c against the system X/R ratio."""
    if len(samples) < degree + 2:
        raise ValueError(
            f"need at least {degree + 2} samples for a degree-{degree} fit, got {len(samples)}"
        )
    x = np.array([s.x_r_system for s in samples])
    y = np.array([s.k_c_solved for s in samples])
    rank_warning = getattr(np.exceptions, "RankWarning", None) or getattr(np, "RankWarning")
    import warnings as _warnings

    with _warnings.catch_warnings():
        _warnings.simplefilter("error", rank_warning)
        try:
            coeffs = np.polyfit(x, y, degree)
        except rank_warning:
            raise ValueError("design matrix is rank deficient") from None
    residuals = y - np.polyval(coeffs, x)
    ss_res = float(np.sum(residuals**2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r_squared = 1.0 if ss_tot == 0.0 and ss_res == 0.0 else 1.0 - ss_res / ss_tot
    return PolyFit(coefficients=tuple(float(c) for c in coeffs), r_squared=min(max(r_squared, 0.0), 1.0))


def sweep_time_to_peak(
    grid: SweepGrid,
    dt: float = 1e-5,
    worst_case: bool = True,
    angle_resolution: int = 12,
) -> list[tuple[float, float, float]]:
    """Joules-integral error of the uncorrected bolted-fault model.

    One oracle run per transformer X/R ratio at zero load resistance (the
    transient-dominated case, so the worst-case fault angle is searched by
    default), then the model error is evaluated for every time-to-peak
    value.  Returns rows (x_r_trx, t_p, error percent at t_eval).
    """
    from crowbarsim.rectifier_sim import worst_case_fault_angle

    rows: list[tuple[float, float, float]] = []
    for xr in grid.x_r_trx:
        config = grid_point_config(xr)
        sim_cfg = SimConfig(
            system=config,
            fault_angle=0.0,
            duration=grid.t_eval,
            dt=dt,
            include_dc_cap=False,
            r_load_override=0.0,
        )
        if worst_case:
            angle = worst_case_fault_angle(sim_cfg, resolution=angle_resolution)
            sim_cfg = SimConfig(
                system=config,
                fault_angle=angle,
                duration=grid.t_eval,
                dt=dt,
                include_dc_cap=False,
                r_load_override=0.0,
            )
        trace = simulate(sim_cfg)
        eq = config.equivalents()
        for t_p in grid.t_p:
            model = follow_on_model(config.source, eq, config.topology, 0.0, k_c=1.0, t_p=t_p)
            rows.append((xr, t_p, delta_ji_percent(trace, model, grid.t_eval)))
    return rows


def validate_correction(
    kc_fn,
    grid: SweepGrid,
    topologies: tuple[Topology, ...] = (Topology.PARALLEL, Topology.SERIES),
    dt: float = 1e-5,
    fault_angle: float = 0.0,
    traces: dict | None = None,
) -> list[tuple]:
    """Joules-integral error sweep with a given correction function applied.

    ``kc_fn`` maps the system X/R ratio to a correction factor (pass
    ``lambda s: 1.0`` for the uncorrected sweep).  Returns rows
    (topology, x_r_trx, r_load, x_r_system, error percent).
    """
    rows: list[tuple] = []
    for topology in topologies:
        for xr in grid.x_r_trx:
            config = grid_point_config(xr)
            eq = config.equivalents()
            for r_load in grid.r_load:
                key = (topology, xr, r_load)
                trace = traces.get(key) if traces is not None else None
                if trace is None:
                    trace = oracle_trace(config, topology, r_load, grid.t_eval, dt, fault_angle)
                    if traces is not None:
                        traces[key] = trace
                ratio = x_r_system(eq, referred_load_resistance(topology, r_load, eq))
                model = follow_on_model(
                    config.source, eq, topology, r_load, k_c=float(kc_fn(ratio))
                )
                rows.append(
                    (topology, xr, r_load, ratio, delta_ji_percent(trace, model, grid.t_eval))
                )
    return rows


@dataclass
class CalibrationResult:
    """Everything one calibration run produces."""

    grid: SweepGrid
    samples: list[KcSample]
    fit: PolyFit | None
    corrected: list[tuple]
    uncorrected: list[tuple]
    tp_rows: list[tuple]
    failures: list[tuple] = field(default_factory=list)


def run_calibration(
    grid: SweepGrid,
    dt: float = 1e-5,
    fault_angle: float = 0.0,
    tol: float = 0.25,
    include_tp_sweep: bool = True,
) -> CalibrationResult:
    """Full pipeline: solve k_c on both topologies, fit, validate.

    Samples from the parallel and series interconnections are pooled into a
    single fit; the series points extend the sampled X/R range upward
    (their referred resistance is four times smaller), so pooling both
    keeps the quartic interpolating rather than extrapolating.  Oracle
    traces are cached and reused by the validation sweeps.
    """
    traces: dict = {}
    samples: list[KcSample] = []
    failures: list[tuple] = []
    for topology in (Topology.PARALLEL, Topology.SERIES):
        part, fails = sweep_correction(grid, topology, dt, fault_angle, tol, traces)
        samples.extend(part)
        failures.extend(fails)

    fit = None
    if len(samples) >= 6:
        fit = fit_polynomial(samples, degree=4)

    corrected: list[tuple] = []
    uncorrected: list[tuple] = []
    if fit is not None:
        corrected = validate_correction(fit, grid, dt=dt, fault_angle=fault_angle, traces=traces)
        uncorrected = validate_correction(
            lambda s: 1.0, grid, dt=dt, fault_angle=fault_angle, traces=traces
        )

    tp_rows = sweep_time_to_peak(grid, dt=dt) if include_tp_sweep else []
    return CalibrationResult(
        grid=grid,
        samples=samples,
        fit=fit,
        corrected=corrected,
        uncorrected=uncorrected,
        tp_rows=tp_rows,
        failures=failures,
    )
