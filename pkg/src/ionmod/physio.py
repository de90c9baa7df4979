"""Physical parameters of the transmitter and derived dimensionless constants.

All public interfaces use SI units (m, s, K, kg, molecules).  Radial and
temporal scalings are rho = r / r_m and tau = D1 * t / r_m**2; conversion is
explicit via :func:`to_dimensionless` / :func:`from_dimensionless`.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, replace

BOLTZMANN = 1.380649e-23  # J/K, exact SI
POTASSIUM_ION_MASS = 6.4923e-26  # kg (39.0983 u); set ion_mass for other species

# Reference scenario: 5 um cell, 0.5 um generator shell, 1 nm channels,
# potassium in water at 27 C (300.15 K), 20 ms on-interval in a 40 ms slot.
DEFAULTS = {
    "r_m": 5e-6,
    "r_s": 0.5e-6,
    "r_c": 1e-9,
    "N": 10_000_000,
    "D1": 1.14e-9,
    "D2": 1.14e-9,
    "S_rate": 3e14,
    "T_conc": 1e18,
    "temperature": 300.15,
    "ion_mass": POTASSIUM_ION_MASS,
    "T1": 0.020,
    "T_slot": 0.040,
}


@dataclass(frozen=True)
class TransmitterSpec:
    """Geometry, transport, and source parameters of the spherical transmitter.

    Fields (SI): r_m cell radius, r_s generator shell radius, r_c open-channel
    radius, N channel count, D1/D2 diffusivities inside/outside, S_rate
    generation rate per shell area [molecules/(m^2 s)], T_conc initial interior
    concentration [molecules/m^3], temperature [K], ion_mass [kg], T1 on
    interval [s], T_slot slot length [s].
    """

    r_m: float
    r_s: float
    r_c: float
    N: int
    D1: float
    D2: float
    S_rate: float
    T_conc: float
    temperature: float = 300.15
    ion_mass: float = POTASSIUM_ION_MASS
    T1: float = 0.020
    T_slot: float = 0.040

    def __post_init__(self):
        if not 0.0 < self.r_s < self.r_m:
            raise ValueError("require 0 < r_s < r_m")
        if self.r_c <= 0.0:
            raise ValueError("require r_c > 0")
        if self.N < 0 or self.N != int(self.N):
            raise ValueError("N must be a non-negative integer")
        if self.D1 <= 0.0 or self.D2 <= 0.0:
            raise ValueError("diffusivities must be positive")
        if self.S_rate < 0.0 or self.T_conc < 0.0:
            raise ValueError("source parameters must be non-negative")
        if self.temperature <= 0.0 or self.ion_mass <= 0.0:
            raise ValueError("temperature and ion_mass must be positive")
        if not 0.0 < self.T1 < self.T_slot:
            raise ValueError("require 0 < T1 < T_slot")
        # Open channels cannot cover more than the membrane itself (z < 1).
        if self.N * math.pi * self.r_c**2 >= 4.0 * math.pi * self.r_m**2:
            raise ValueError("open-channel area N*pi*r_c^2 exceeds membrane area")

    @property
    def t0(self) -> float:
        """Diffusive time scale r_m^2 / D1 in seconds."""
        return self.r_m**2 / self.D1


def thermal_speed(spec: TransmitterSpec) -> float:
    """sqrt(k_B T / (2 pi m)), the kinetic wall-flux velocity in m/s."""
    return math.sqrt(BOLTZMANN * spec.temperature / (2.0 * math.pi * spec.ion_mass))


def permeability(spec: TransmitterSpec, p_open_final: float) -> float:
    """Average open fraction of the membrane area, z = p * N * r_c^2 / (4 r_m^2)."""
    if not 0.0 <= p_open_final <= 1.0:
        raise ValueError("p_open_final must be a probability")
    z = p_open_final * spec.N * spec.r_c**2 / (4.0 * spec.r_m**2)
    if z >= 1.0:
        raise ValueError(f"unphysical membrane coverage z={z} >= 1")
    return z


def boundary_h(spec: TransmitterSpec, z: float) -> float:
    """Dimensionless membrane constant h = (r_m/D1) * z/(1-z) * thermal_speed."""
    if not 0.0 <= z < 1.0:
        raise ValueError("require 0 <= z < 1")
    return (spec.r_m / spec.D1) * (z / (1.0 - z)) * thermal_speed(spec)


def to_dimensionless(t: float, r: float, spec: TransmitterSpec) -> tuple[float, float]:
    """(t [s], r [m]) -> (tau, rho)."""
    if t < 0.0 or r < 0.0:
        raise ValueError("t and r must be non-negative")
    return t * spec.D1 / spec.r_m**2, r / spec.r_m


def from_dimensionless(tau: float, rho: float, spec: TransmitterSpec) -> tuple[float, float]:
    """(tau, rho) -> (t [s], r [m])."""
    return tau * spec.r_m**2 / spec.D1, rho * spec.r_m


@dataclass(frozen=True)
class DimensionlessParams:
    """Derived boundary constants: permeability z, diffusivity ratio A = D2/D1,
    membrane constant h, and the kinetic velocity factor v_thermal [m/s]."""

    z: float
    A: float
    h: float
    v_thermal: float

    def __post_init__(self):
        if not 0.0 <= self.z < 1.0:
            raise ValueError("require 0 <= z < 1")
        if self.A <= 0.0:
            raise ValueError("require A > 0")
        if self.h < 0.0 or (self.h == 0.0) != (self.z == 0.0):
            raise ValueError("require h >= 0 with h = 0 iff z = 0")

    @classmethod
    def from_spec(cls, spec: TransmitterSpec, p_open_final: float = 1.0) -> "DimensionlessParams":
        z = permeability(spec, p_open_final)
        return cls(z=z, A=spec.D2 / spec.D1, h=boundary_h(spec, z), v_thermal=thermal_speed(spec))


def default_spec(N: int = DEFAULTS["N"]) -> TransmitterSpec:
    """Reference transmitter with the given channel count."""
    return spec_from_mapping({"N": N})


def spec_from_mapping(mapping: dict) -> TransmitterSpec:
    """Build a spec from a key/value mapping; unset keys take defaults.

    Keys match field names (r_m, r_s, r_c, N, D1, D2, S_rate, T_conc,
    temperature, ion_mass, T1, T_slot), SI units throughout.
    """
    merged = dict(DEFAULTS)
    for key, val in mapping.items():
        if key not in merged:
            raise KeyError(f"unknown transmitter parameter {key!r}")
        merged[key] = val
    merged["N"] = int(merged["N"])
    return TransmitterSpec(**merged)


def load_spec(path: str) -> TransmitterSpec:
    """Read a JSON config file of transmitter parameters (SI units)."""
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError("config file must hold a JSON object")
    known = {k: v for k, v in data.items() if k in DEFAULTS}
    return spec_from_mapping(known)


def dump_spec(spec: TransmitterSpec, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(asdict(spec), fh, indent=2, sort_keys=True)
        fh.write("\n")


def with_channels(spec: TransmitterSpec, N: int) -> TransmitterSpec:
    return replace(spec, N=int(N))
