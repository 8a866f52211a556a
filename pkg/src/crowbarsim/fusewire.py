"""Pre-arc thermal model of the fuse wire used as the tube surrogate.

During a wire-survivability test the microwave tube is replaced by a thin
copper fuse wire; the crowbar qualifies if the wire stays intact.  Fusing
times are short (inside the ~100 ms breaker window), so heat lost to
conduction, convection and radiation is neglected and all joule heating
goes into the wire's own thermal mass.  With conductivity varying linearly
in temperature,

    sigma(T) = sigma_o / (1 + alpha_o (T - T_o)),

the heat balance integrates in closed form and the wire temperature depends
on the current only through the accumulated Joules integral J = int i^2 dt:

    T(J) = (1/alpha_o) [exp(alpha_o J / (A^2 rho c_p sigma_o)) - 1] + T_o

The melting Joules integral therefore scales with the cross-section alone,

    A^2 = K J_m,   K = alpha_o / (rho c_p sigma_o ln(1 + alpha_o (T_m - T_o))),

independent of wire length, while the energy absorbed up to melt is set by
the heated volume:

    E_m = A l rho c_p (T_m - T_o).

The model covers the pre-arc phase only; traces are truncated at melt.
Skin effect, thermal expansion and surface oxidation are neglected.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

# Length-per-voltage clearance rule used when sizing wires: 10 mm/kV keeps
# the recovery voltage from arcing across the wire ends.
LENGTH_PER_KV = 0.010  # m per kV

# Standard wire gauge diameters in metres, informational output only.
SWG_DIAMETERS = {
    26: 0.4572e-3,
    27: 0.4166e-3,
    28: 0.3759e-3,
    29: 0.3454e-3,
    30: 0.3150e-3,
    31: 0.2946e-3,
    32: 0.2743e-3,
    33: 0.2540e-3,
    34: 0.2337e-3,
    35: 0.2134e-3,
    36: 0.1930e-3,
    37: 0.1727e-3,
    38: 0.1524e-3,
    39: 0.1321e-3,
    40: 0.1219e-3,
    41: 0.1118e-3,
    42: 0.1016e-3,
    43: 0.0914e-3,
    44: 0.0813e-3,
    45: 0.0711e-3,
    46: 0.0610e-3,
}


class InfeasibleDesignError(ValueError):
    """No wire geometry satisfies the requested energy and J_m constraints."""


@dataclass(frozen=True)
class FuseWireMaterial:
    """Physical constants of the wire material."""

    sigma_o: float  # S/m electrical conductivity at t_o
    alpha_o: float  # 1/degC temperature coefficient of conductivity
    rho: float  # kg/m^3 mass density
    c_p: float  # J/(kg degC) specific heat
    t_o: float  # degC reference (ambient) temperature
    t_m: float  # degC melting temperature

    def __post_init__(self) -> None:
        if self.sigma_o <= 0.0:
            raise ValueError("sigma_o must be > 0")
        if self.alpha_o <= 0.0:
            raise ValueError("alpha_o must be > 0")
        if self.rho <= 0.0 or self.c_p <= 0.0:
            raise ValueError("rho and c_p must be > 0")
        if self.t_m <= self.t_o:
            raise ValueError("t_m must exceed t_o")

    @classmethod
    def copper(cls) -> "FuseWireMaterial":
        """Copper constants, conductivity as measured on the test wires."""
        return cls(
            sigma_o=5.13e7,
            alpha_o=3.8e-3,
            rho=8950.0,
            c_p=395.0,
            t_o=30.0,
            t_m=1083.0,
        )

    @classmethod
    def from_dict(cls, doc: dict) -> "FuseWireMaterial":
        base = cls.copper()
        fields = {f: getattr(base, f) for f in ("sigma_o", "alpha_o", "rho", "c_p", "t_o", "t_m")}
        for key, value in doc.items():
            if key not in fields:
                raise ValueError(f"unknown material field {key!r}")
            fields[key] = float(value)
        return cls(**fields)


@dataclass(frozen=True)
class FuseWireGeometry:
    """Wire cross-section area (m^2) and length (m)."""

    area: float
    length: float

    def __post_init__(self) -> None:
        if self.area <= 0.0:
            raise ValueError("area must be > 0")
        if self.length <= 0.0:
            raise ValueError("length must be > 0")

    @classmethod
    def from_diameter(cls, diameter: float, length: float) -> "FuseWireGeometry":
        return cls(area=math.pi * diameter**2 / 4.0, length=length)

    @property
    def diameter(self) -> float:
        return math.sqrt(4.0 * self.area / math.pi)


@dataclass
class FuseTrace:
    """Time-stamped thermal trajectory of a wire under a current profile.

    ``joules_integral`` and ``energy`` are non-decreasing; ``melted_at`` is
    the first sample time at which the melting temperature was reached, or
    None if the wire survived the profile.
    """

    t: np.ndarray
    temperature: np.ndarray
    resistance: np.ndarray
    joules_integral: np.ndarray
    energy: np.ndarray
    melted_at: float | None

    @property
    def melted(self) -> bool:
        return self.melted_at is not None

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t_s", "temp_C", "res_ohm", "ji_A2s", "energy_J"])
            for row in zip(self.t, self.temperature, self.resistance,
                           self.joules_integral, self.energy):
                writer.writerow([repr(float(x)) for x in row])


def melting_coefficient(mat: FuseWireMaterial) -> float:
    """Constant K relating cross-section to melting Joules integral, A^2 = K J_m."""
    return mat.alpha_o / (
        mat.rho * mat.c_p * mat.sigma_o * math.log1p(mat.alpha_o * (mat.t_m - mat.t_o))
    )


def melting_joules_integral(area: float, mat: FuseWireMaterial) -> float:
    """Joules integral (A^2 s) that brings a wire of this cross-section to melt."""
    if area <= 0.0:
        raise ValueError("area must be > 0")
    return area**2 / melting_coefficient(mat)


def area_for_joules_integral(j_im: float, mat: FuseWireMaterial) -> float:
    """Cross-section (m^2) whose melting Joules integral equals ``j_im``."""
    if j_im <= 0.0:
        raise ValueError("j_im must be > 0")
    return math.sqrt(melting_coefficient(mat) * j_im)


def _heating_exponent(j_i, area: float, mat: FuseWireMaterial):
    return mat.alpha_o * j_i / (area**2 * mat.rho * mat.c_p * mat.sigma_o)


def temperature_at(
    j_i: float, area: float, mat: FuseWireMaterial, max_ji_ratio: float = 10.0
) -> float:
    """Wire temperature (degC) once ``j_i`` A^2 s have accumulated.

    Rejects Joules integrals beyond ``max_ji_ratio`` times the melting value:
    the pre-arc model has no meaning there and the exponential would
    eventually overflow.
    """
    if j_i < 0.0:
        raise ValueError("j_i must be >= 0")
    if j_i > max_ji_ratio * melting_joules_integral(area, mat):
        raise ValueError(
            f"j_i={j_i:.4g} exceeds {max_ji_ratio:g} times the melting Joules integral"
        )
    return math.expm1(_heating_exponent(j_i, area, mat)) / mat.alpha_o + mat.t_o


def resistance_at(
    j_i: float,
    geom: FuseWireGeometry,
    mat: FuseWireMaterial,
    max_ji_ratio: float = 10.0,
) -> float:
    """Wire resistance (ohm) once ``j_i`` A^2 s have accumulated."""
    if j_i < 0.0:
        raise ValueError("j_i must be >= 0")
    if j_i > max_ji_ratio * melting_joules_integral(geom.area, mat):
        raise ValueError(
            f"j_i={j_i:.4g} exceeds {max_ji_ratio:g} times the melting Joules integral"
        )
    cold = geom.length / (mat.sigma_o * geom.area)
    return cold * math.exp(_heating_exponent(j_i, geom.area, mat))


def _melting_energy_forms(area, length, sigma_o, alpha_o, rho, c_p, t_o, t_m):
    """Volume-form and exponential-form melting energies, vectorized.

    The exponential form runs through the melting coefficient and the
    heating law; analytically it collapses to the volume form, and keeping
    both evaluation paths pins down that algebra numerically.
    """
    volume_form = area * length * rho * c_p * (t_m - t_o)
    k = alpha_o / (rho * c_p * sigma_o * np.log1p(alpha_o * (t_m - t_o)))
    exponent = alpha_o / (rho * c_p * sigma_o * k)
    exponential_form = area * length * rho * c_p / alpha_o * np.expm1(exponent)
    return volume_form, exponential_form


def melting_energy(geom: FuseWireGeometry, mat: FuseWireMaterial) -> float:
    """Energy (J) absorbed by the wire from ambient to melt, volume form."""
    return geom.area * geom.length * mat.rho * mat.c_p * (mat.t_m - mat.t_o)


def melting_energy_exponential(geom: FuseWireGeometry, mat: FuseWireMaterial) -> float:
    """Melting energy via the exponential heating law; equals the volume form."""
    _, exponential_form = _melting_energy_forms(
        geom.area, geom.length, mat.sigma_o, mat.alpha_o, mat.rho, mat.c_p, mat.t_o, mat.t_m
    )
    return float(exponential_form)


def simulate_fuse(
    times: np.ndarray,
    currents: np.ndarray,
    geom: FuseWireGeometry,
    mat: FuseWireMaterial,
    dt: float = 1e-5,
) -> FuseTrace:
    """Step the heat balance forward under a sampled current profile.

    The profile is linearly resampled onto a uniform ``dt`` grid and the
    incremental heat balance i^2 R dt = A l rho c_p dT is integrated
    explicitly, with the resistance tracking the instantaneous temperature.
    Integration stops at the first sample reaching the melting temperature;
    the arcing phase is outside the model.
    """
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    times = np.asarray(times, dtype=float)
    currents = np.asarray(currents, dtype=float)
    if times.ndim != 1 or times.shape != currents.shape or times.size < 2:
        raise ValueError("profile must be two equal-length 1-d arrays with >= 2 samples")
    if not (np.all(np.isfinite(times)) and np.all(np.isfinite(currents))):
        raise ValueError("profile samples must be finite")
    if np.any(np.diff(times) <= 0.0):
        raise ValueError("profile times must be strictly increasing")

    n = int(math.floor((times[-1] - times[0]) / dt))
    t_grid = times[0] + dt * np.arange(n + 1)
    i_grid = np.interp(t_grid, times, currents)

    heat_capacity = geom.area * geom.length * mat.rho * mat.c_p  # J/degC
    cold_factor = geom.length / (mat.sigma_o * geom.area)

    temp = np.empty(n + 1)
    res = np.empty(n + 1)
    ji = np.empty(n + 1)
    energy = np.empty(n + 1)

    temp[0] = mat.t_o
    res[0] = cold_factor
    ji[0] = 0.0
    energy[0] = 0.0
    melted_at = None
    last = n

    for k in range(n):
        r_k = cold_factor * (1.0 + mat.alpha_o * (temp[k] - mat.t_o))
        i2 = i_grid[k] ** 2
        power = i2 * r_k
        temp[k + 1] = temp[k] + power * dt / heat_capacity
        ji[k + 1] = ji[k] + i2 * dt
        energy[k + 1] = energy[k] + power * dt
        res[k + 1] = cold_factor * (1.0 + mat.alpha_o * (temp[k + 1] - mat.t_o))
        if temp[k + 1] >= mat.t_m:
            melted_at = float(t_grid[k + 1])
            last = k + 1
            break

    end = last + 1
    return FuseTrace(
        t=t_grid[:end],
        temperature=temp[:end],
        resistance=res[:end],
        joules_integral=ji[:end],
        energy=energy[:end],
        melted_at=melted_at,
    )


def nearest_swg(diameter: float) -> int:
    """Standard wire gauge whose diameter is closest to ``diameter`` (m)."""
    return min(SWG_DIAMETERS, key=lambda g: abs(SWG_DIAMETERS[g] - diameter))


def design_fuse(
    energy_target: float,
    ji_limit: float,
    operating_voltage_kv: float,
    mat: FuseWireMaterial,
    length: float | None = None,
) -> FuseWireGeometry:
    """Size a wire for a given melt energy under a melting-J_m ceiling.

    The melt energy pins the volume A*l.  The length is either forced by the
    caller or chosen as the larger of the voltage-clearance rule
    (LENGTH_PER_KV) and the minimum length compatible with the J_m ceiling;
    the diameter then follows from the constant volume.  Raises
    InfeasibleDesignError when the resulting wire would exceed ``ji_limit``.
    """
    if energy_target <= 0.0:
        raise InfeasibleDesignError("energy_target must be > 0")
    if ji_limit <= 0.0:
        raise InfeasibleDesignError("ji_limit must be > 0")
    if operating_voltage_kv < 0.0:
        raise ValueError("operating_voltage_kv must be >= 0")

    volume = energy_target / (mat.rho * mat.c_p * (mat.t_m - mat.t_o))
    area_max = area_for_joules_integral(ji_limit, mat)
    min_length = volume / area_max

    if length is None:
        length = max(LENGTH_PER_KV * operating_voltage_kv, min_length)
    elif length <= 0.0:
        raise ValueError("length must be > 0")

    area = volume / length
    geom = FuseWireGeometry(area=area, length=length)
    j_im = melting_joules_integral(area, mat)
    if j_im > ji_limit * (1.0 + 1e-9):
        raise InfeasibleDesignError(
            f"melting Joules integral {j_im:.3f} A^2 s exceeds the limit "
            f"{ji_limit:.3f} A^2 s; increase the length (>= {min_length * 1e3:.1f} mm)"
        )
    return geom
