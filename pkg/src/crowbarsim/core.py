"""Electrical parameter types and referred-impedance arithmetic.

The supply under study is a dual-secondary (delta and wye) transformer
feeding two 6-pulse diode bridges whose dc sides are either paralleled or
connected in series.  All impedances are carried in ohms at grid frequency
on the primary delta-winding basis; the two secondaries are assumed
identical, so their referred impedances combine as a parallel pair:

    R'_p  = R_p_delta + R_sp / 2
    X'_lp = X_lp_delta + X_l_sp / 2 + 3 X_s

The dc-side limiting resistance R_L is moved to the ac side through
active-power equality.  Keeping the dissipated power equal between the dc
resistance and its primary-referred image gives

    R_Lp = (2/3) (sqrt(3) N1/N2 k12)^2 R_L    (paralleled dc outputs)
    R_Lp = (1/6) (sqrt(3) N1/N2 k12)^2 R_L    (seriesed dc outputs)

where k12 = 0.9886 is the average-to-peak ratio of a 12-pulse rectified
waveform and N1/N2 is carried as the line-line voltage ratio.  The bolted
steady-state dc fault current (also the per-unit base for the follow-on
model) and the exponential decay rate follow from the resulting series
R-X divider:

    I_f_base = sqrt(2) E / |R'_p + R_Lpc + j X'_lp| * sqrt(3) N1/N2 k12
    delta    = omega (R'_p + R_Lpc) / X'_lp

with ``R_Lpc`` the (optionally correction-scaled) referred load resistance,
and I_f_base halved for the series interconnection because the same output
power is then drawn at half the input current.

Everything in this module is a pure function over frozen value types, so
values can be shared freely across threads or processes.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from enum import Enum
from pathlib import Path

# Average-to-peak ratio of an ideal 12-pulse rectified waveform,
# sin(pi/12)/(pi/12).
TWELVE_PULSE_AVG_TO_PEAK = 0.9886


class ConfigError(ValueError):
    """Raised when a system-config document is missing or malformed."""


class Topology(Enum):
    """DC-side interconnection of the two rectifier bridges."""

    PARALLEL = "parallel"
    SERIES = "series"

    @classmethod
    def parse(cls, text: str) -> "Topology":
        try:
            return cls(str(text).strip().lower())
        except ValueError:
            raise ConfigError(
                f"topology: expected 'parallel' or 'series', got {text!r}"
            ) from None


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ValueError(message)


@dataclass(frozen=True)
class TransformerParams:
    """Winding data of the dual-secondary rectifier transformer.

    Resistances and leakage reactances are in ohms on the primary
    delta-winding basis; secondary quantities are already referred to the
    primary and apply per secondary.  Voltages are nominal line-line rms.
    """

    r_p_delta: float
    x_lp_delta: float
    r_sp: float
    x_l_sp: float
    v_prim_ll: float
    v_sec_ll: float
    rating: float = 0.0  # VA, informational only

    def __post_init__(self) -> None:
        for name in ("r_p_delta", "x_lp_delta", "r_sp", "x_l_sp"):
            _require(getattr(self, name) >= 0.0, f"{name} must be >= 0")
        _require(self.v_prim_ll > 0.0, "v_prim_ll must be > 0")
        _require(self.v_sec_ll > 0.0, "v_sec_ll must be > 0")


@dataclass(frozen=True)
class SourceParams:
    """Grid interface: operating voltage, angular frequency, source reactance."""

    e_ll: float  # V rms line-line at the operating point
    omega: float  # rad/s
    x_s: float  # ohm per phase

    def __post_init__(self) -> None:
        _require(self.e_ll > 0.0, "e_ll must be > 0")
        _require(self.omega > 0.0, "omega must be > 0")
        _require(self.x_s >= 0.0, "x_s must be >= 0")


@dataclass(frozen=True)
class DcLinkParams:
    """DC-side resistances, link capacitance and precharge voltage.

    ``r1 + r2`` is the fault-loop resistance (never zero in a tube-fault
    scenario); ``r3`` is the follow-on limiting resistor between the bridge
    output and the dc-link capacitor.
    """

    r1: float
    r2: float
    r3: float
    c_dc: float
    v_c: float

    def __post_init__(self) -> None:
        for name in ("r1", "r2", "r3"):
            _require(getattr(self, name) >= 0.0, f"{name} must be >= 0")
        _require(self.r1 + self.r2 > 0.0, "r1 + r2 must be > 0 (fault loop resistance)")
        _require(self.c_dc > 0.0, "c_dc must be > 0")
        _require(self.v_c >= 0.0, "v_c must be >= 0")

    @property
    def fault_resistance(self) -> float:
        """Resistance limiting the capacitor discharge, r1 + r2."""
        return self.r1 + self.r2

    @property
    def follow_on_resistance(self) -> float:
        """Total dc-side resistance in the follow-on path, r1 + r2 + r3."""
        return self.r1 + self.r2 + self.r3


@dataclass(frozen=True)
class EquivalentImpedance:
    """Transformer plus source impedance referred to the primary.

    ``turns_factor`` is sqrt(3) N1/N2 k12, the scale between the primary
    winding current amplitude and the rectified dc current.
    """

    r_p_eq: float
    x_lp_eq: float
    turns_factor: float
    x_r_trx: float

    def __post_init__(self) -> None:
        _require(self.r_p_eq > 0.0, "r_p_eq must be > 0")
        _require(self.x_lp_eq >= 0.0, "x_lp_eq must be >= 0")
        _require(self.turns_factor > 0.0, "turns_factor must be > 0")
        expected = self.x_lp_eq / self.r_p_eq
        _require(
            math.isclose(self.x_r_trx, expected, rel_tol=1e-9, abs_tol=1e-12),
            "x_r_trx must equal x_lp_eq / r_p_eq",
        )

    @classmethod
    def from_ratio(
        cls, x_lp_eq: float, x_r_trx: float, turns_factor: float
    ) -> "EquivalentImpedance":
        """Build an equivalent with a prescribed X/R ratio at fixed reactance."""
        _require(x_r_trx > 0.0, "x_r_trx must be > 0")
        return cls(
            r_p_eq=x_lp_eq / x_r_trx,
            x_lp_eq=x_lp_eq,
            turns_factor=turns_factor,
            x_r_trx=x_r_trx,
        )


def referred_equivalents(trx: TransformerParams, src: SourceParams) -> EquivalentImpedance:
    """Combine transformer and source impedances referred to the primary.

    The two secondaries act in parallel (hence the factor 1/2 on their
    referred impedances) and the per-phase source reactance enters the
    delta-winding basis with a factor 3.
    """
    r_p_eq = trx.r_p_delta + trx.r_sp / 2.0
    x_lp_eq = trx.x_lp_delta + trx.x_l_sp / 2.0 + 3.0 * src.x_s
    if r_p_eq <= 0.0:
        raise ValueError("equivalent resistance is zero; X/R ratio undefined")
    turns_factor = math.sqrt(3.0) * (trx.v_prim_ll / trx.v_sec_ll) * TWELVE_PULSE_AVG_TO_PEAK
    return EquivalentImpedance(
        r_p_eq=r_p_eq,
        x_lp_eq=x_lp_eq,
        turns_factor=turns_factor,
        x_r_trx=x_lp_eq / r_p_eq,
    )


def referred_load_resistance(
    topology: Topology, r_load: float, eq: EquivalentImpedance
) -> float:
    """Refer the total dc-side follow-on resistance to the ac primary.

    Active-power equality gives a factor 2/3 for paralleled dc outputs and
    1/6 for seriesed ones (the series circuit draws half the input current
    for the same output power).
    """
    _require(r_load >= 0.0, "r_load must be >= 0")
    factor = 2.0 / 3.0 if topology is Topology.PARALLEL else 1.0 / 6.0
    return factor * eq.turns_factor**2 * r_load


def x_r_system(eq: EquivalentImpedance, r_lp_val: float) -> float:
    """System-level X/R ratio once the referred load resistance is included.

    The correction factor is a function of this ratio and is deliberately
    not applied inside it.
    """
    denom = eq.r_p_eq + r_lp_val
    if denom <= 0.0:
        raise ValueError("r_p_eq + r_lp_val must be > 0")
    return eq.x_lp_eq / denom


def base_fault_current(
    topology: Topology,
    src: SourceParams,
    eq: EquivalentImpedance,
    r_lp_corrected: float,
) -> float:
    """Steady-state dc fault current in amps.

    ``r_lp_corrected`` is the referred load resistance already scaled by the
    correction factor (zero for a bolted dc fault).  Halved for the series
    interconnection.
    """
    z = math.hypot(eq.r_p_eq + r_lp_corrected, eq.x_lp_eq)
    if z <= 0.0:
        raise ValueError("impedance magnitude must be > 0")
    i_base = math.sqrt(2.0) * src.e_ll / z * eq.turns_factor
    if topology is Topology.SERIES:
        i_base *= 0.5
    return i_base


def decay_rate(src: SourceParams, eq: EquivalentImpedance, r_lp_corrected: float) -> float:
    """Reciprocal time constant of the follow-on transient, in 1/s."""
    _require(eq.x_lp_eq > 0.0, "x_lp_eq must be > 0")
    return src.omega * (eq.r_p_eq + r_lp_corrected) / eq.x_lp_eq


# ----------------------------------------------------------------------
# System configuration document
# ----------------------------------------------------------------------

_SECTION_FIELDS = {
    "transformer": ("r_p_delta", "x_lp_delta", "r_sp", "x_l_sp", "v_prim_ll", "v_sec_ll"),
    "source": ("e_ll", "omega", "x_s"),
    "dc_link": ("r1", "r2", "r3", "c_dc", "v_c"),
}


@dataclass(frozen=True)
class SystemConfig:
    """Complete electrical description of one supply-under-fault setup."""

    transformer: TransformerParams
    source: SourceParams
    dc_link: DcLinkParams
    topology: Topology

    def equivalents(self) -> EquivalentImpedance:
        return referred_equivalents(self.transformer, self.source)

    @classmethod
    def from_dict(cls, doc: dict) -> "SystemConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config root must be a JSON object")
        kwargs = {}
        for section, fields in _SECTION_FIELDS.items():
            sub = doc.get(section)
            if not isinstance(sub, dict):
                raise ConfigError(f"{section}: missing or not an object")
            values = {}
            for field in fields:
                if field not in sub:
                    raise ConfigError(f"{section}.{field}: missing")
                try:
                    values[field] = float(sub[field])
                except (TypeError, ValueError):
                    raise ConfigError(
                        f"{section}.{field}: expected a number, got {sub[field]!r}"
                    ) from None
            if section == "transformer" and "rating" in sub:
                values["rating"] = float(sub["rating"])
            kwargs[section] = values
        if "topology" not in doc:
            raise ConfigError("topology: missing")
        try:
            return cls(
                transformer=TransformerParams(**kwargs["transformer"]),
                source=SourceParams(**kwargs["source"]),
                dc_link=DcLinkParams(**kwargs["dc_link"]),
                topology=Topology.parse(doc["topology"]),
            )
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_json_file(cls, path: str | Path) -> "SystemConfig":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
            ) from None
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        doc = {
            "transformer": asdict(self.transformer),
            "source": asdict(self.source),
            "dc_link": asdict(self.dc_link),
            "topology": self.topology.value,
        }
        return doc

    def to_json_file(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    def replace_topology(self, topology: Topology) -> "SystemConfig":
        return SystemConfig(self.transformer, self.source, self.dc_link, topology)


def reference_supply(
    topology: Topology = Topology.PARALLEL, v_c: float | None = None
) -> SystemConfig:
    """Electrical parameters of the crowbar qualification test supply.

    A 50 kVA 415 V / dual-1100 V transformer with 3, 8 and 38 ohm dc-side
    resistors and a 92 uF link capacitor.  The default precharge matches the
    fault tests: 1700 V with paralleled bridges, 3400 V with seriesed ones.
    """
    if v_c is None:
        v_c = 1700.0 if topology is Topology.PARALLEL else 3400.0
    return SystemConfig(
        transformer=TransformerParams(
            r_p_delta=0.059,
            x_lp_delta=0.121,
            r_sp=0.134,
            x_l_sp=0.209,
            v_prim_ll=415.0,
            v_sec_ll=1100.0,
            rating=50e3,
        ),
        source=SourceParams(e_ll=465.0, omega=2.0 * math.pi * 50.0, x_s=0.166),
        dc_link=DcLinkParams(r1=3.0, r2=8.0, r3=38.0, c_dc=92e-6, v_c=v_c),
        topology=topology,
    )
