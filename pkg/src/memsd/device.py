"""Physical device description: beam, material, transducer electrodes, damping.

Everything is SI.  Configurations are frozen dataclasses, validated on
construction, and safe to share between concurrent workers.  Two built-in
presets describe the fabricated polysilicon test beams whose first flexural
modes sit at 1 MHz (L = 51.75 um) and 454.5 kHz (L = 76.75 um).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

from .errors import ConfigError

#: vacuum/air permittivity (F/m); the gap medium is air
EPS0 = 8.854e-12

#: max thickness-to-length ratio accepted by the thin-beam model
SLENDERNESS_LIMIT = 0.2


def zeta_from_q(q: float) -> float:
    """Damping ratio equivalent to a quality factor, Q = 1/(2*zeta*sqrt(1-zeta^2)).

    Takes the underdamped root zeta < 1/sqrt(2); requires Q >= 1.
    """
    if q < 1.0:
        raise ConfigError(f"quality factor must be >= 1, got {q}")
    if math.isinf(q):
        return 0.0
    # 1 - sqrt(1 - x) rewritten as x/(1 + sqrt(1 - x)) to avoid cancellation
    x = 1.0 / (q * q)
    return math.sqrt(0.5 * x / (1.0 + math.sqrt(1.0 - x)))


def q_from_zeta(zeta: float) -> float:
    """Quality factor for a damping ratio in [0, 1/sqrt(2))."""
    if not 0.0 <= zeta < 1.0 / math.sqrt(2.0):
        raise ConfigError(f"damping ratio must lie in [0, 1/sqrt(2)), got {zeta}")
    if zeta == 0.0:
        return math.inf
    return 1.0 / (2.0 * zeta * math.sqrt(1.0 - zeta * zeta))


@dataclass(frozen=True)
class Material:
    """Structural material plus the permittivity of the gap medium.

    Attributes:
        youngs_modulus: Young's modulus (Pa)
        density: mass density (kg/m^3)
        gap_permittivity: permittivity of the electrode gap medium (F/m)
    """

    youngs_modulus: float
    density: float
    gap_permittivity: float = EPS0

    def __post_init__(self):
        for name in ("youngs_modulus", "density", "gap_permittivity"):
            if not getattr(self, name) > 0.0:
                raise ConfigError(f"Material.{name} must be strictly positive")


@dataclass(frozen=True)
class BeamGeometry:
    """Rectangular cantilever geometry: length, width, thickness (m)."""

    length: float
    width: float
    thickness: float

    def __post_init__(self):
        for name in ("length", "width", "thickness"):
            if not getattr(self, name) > 0.0:
                raise ConfigError(f"BeamGeometry.{name} must be strictly positive")
        if self.thickness / self.length >= SLENDERNESS_LIMIT:
            raise ConfigError(
                f"thickness/length = {self.thickness / self.length:.3g} violates the "
                f"thin-beam bound (< {SLENDERNESS_LIMIT}); the flexural model does not apply"
            )


class SectionProperties(NamedTuple):
    second_moment: float  # I (m^4)
    area: float  # A (m^2)


def section_properties(beam: BeamGeometry) -> SectionProperties:
    """I = W h^3 / 12 and A = W h for the rectangular cross-section."""
    return SectionProperties(
        second_moment=beam.width * beam.thickness**3 / 12.0,
        area=beam.width * beam.thickness,
    )


@dataclass(frozen=True)
class Electrode:
    """Fixed bottom electrode under the beam.

    Attributes:
        x_start, x_end: span along the beam axis, measured from the clamp (m)
        gap: static electrode-to-beam spacing d0 (m)
    """

    x_start: float
    x_end: float
    gap: float

    def __post_init__(self):
        if not 0.0 <= self.x_start < self.x_end:
            raise ConfigError(
                f"electrode span [{self.x_start}, {self.x_end}] must satisfy 0 <= x_start < x_end"
            )
        if not self.gap > 0.0:
            raise ConfigError("electrode gap must be strictly positive")

    @property
    def span(self) -> float:
        return self.x_end - self.x_start

    def overlap_area(self, beam: BeamGeometry) -> float:
        """Plate overlap area W * (x_end - x_start) (m^2)."""
        return beam.width * self.span


@dataclass(frozen=True)
class Damping:
    """Viscous damping, given either as quality factor or damping ratio.

    Exactly one of the two fields may be supplied; the other is derived
    through Q = 1/(2*zeta*sqrt(1-zeta^2)) on demand.  zeta = 0 (undamped)
    is allowed and maps to Q = inf.
    """

    q: float | None = None
    zeta: float | None = None

    def __post_init__(self):
        if (self.q is None) == (self.zeta is None):
            raise ConfigError("give exactly one of damping q or zeta")
        if self.q is not None and self.q < 1.0:
            raise ConfigError(f"quality factor must be >= 1, got {self.q}")
        if self.zeta is not None and not 0.0 <= self.zeta < 1.0 / math.sqrt(2.0):
            raise ConfigError(f"damping ratio must lie in [0, 1/sqrt(2)), got {self.zeta}")

    @property
    def zeta_value(self) -> float:
        return self.zeta if self.zeta is not None else zeta_from_q(self.q)

    @property
    def q_value(self) -> float:
        return self.q if self.q is not None else q_from_zeta(self.zeta)


@dataclass(frozen=True)
class DeviceConfig:
    """Complete physical device: beam, material, two transducers, damping, load."""

    beam: BeamGeometry
    material: Material
    input_electrode: Electrode
    output_electrode: Electrode
    damping: Damping = field(default_factory=lambda: Damping(q=40.0))
    load_resistance: float = 1.0e6

    def __post_init__(self):
        for name in ("input_electrode", "output_electrode"):
            el = getattr(self, name)
            if el.x_end > self.beam.length:
                raise ConfigError(f"{name} extends past the beam tip ({el.x_end} > {self.beam.length})")
        a, b = self.input_electrode, self.output_electrode
        if a.x_start < b.x_end and b.x_start < a.x_end:
            raise ConfigError("input and output electrodes overlap")
        if self.load_resistance < 0.0:
            raise ConfigError("load resistance must be >= 0")


PRESET_NAMES = ("beam-1MHz", "beam-455kHz")

# Fabricated beam lengths; W = 10 um, h = 2 um, air gap d0 = 2 um.
# E = 160 GPa and rho = 2330 kg/m^3 are chosen so the first-mode design
# frequencies come out at 1.000 MHz / 454.5 kHz; both remain overridable.
_PRESET_LENGTHS = {"beam-1MHz": 51.75e-6, "beam-455kHz": 76.75e-6}


def preset(name: str) -> DeviceConfig:
    """Return a fully populated built-in device configuration.

    The input electrode spans [0.10 L, 0.50 L] and the output electrode
    [0.55 L, 0.95 L]; the exact extents of the fabricated bottom electrodes
    are not documented, so both are declared defaults rather than ground
    truth, and can be overridden via JSON configs.
    """
    if name not in _PRESET_LENGTHS:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}")
    length = _PRESET_LENGTHS[name]
    return DeviceConfig(
        beam=BeamGeometry(length=length, width=10e-6, thickness=2e-6),
        material=Material(youngs_modulus=160e9, density=2330.0, gap_permittivity=EPS0),
        input_electrode=Electrode(x_start=0.10 * length, x_end=0.50 * length, gap=2e-6),
        output_electrode=Electrode(x_start=0.55 * length, x_end=0.95 * length, gap=2e-6),
        damping=Damping(q=40.0),
        load_resistance=1.0e6,
    )


def with_damping(device: DeviceConfig, *, q: float | None = None, zeta: float | None = None) -> DeviceConfig:
    """Copy of the device with the damping spec replaced."""
    return replace(device, damping=Damping(q=q, zeta=zeta))


# --- JSON serialization -----------------------------------------------------
#
# Schema (SI units):
#   beam{length,width,thickness}
#   material{youngs_modulus,density,gap_permittivity}
#   input_electrode/output_electrode{x_start,x_end,gap}
#   damping{q | zeta}
#   load_resistance
# Unknown keys are rejected at every level.


def _take(mapping: dict, context: str, required: tuple, optional: tuple = ()) -> dict:
    if not isinstance(mapping, dict):
        raise ConfigError(f"{context}: expected an object, got {type(mapping).__name__}")
    unknown = set(mapping) - set(required) - set(optional)
    if unknown:
        raise ConfigError(f"{context}: unknown keys {sorted(unknown)}")
    missing = [k for k in required if k not in mapping]
    if missing:
        raise ConfigError(f"{context}: missing keys {missing}")
    return mapping


def _number(value, context: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{context}: expected a number, got {value!r}")
    return float(value)


def device_to_dict(device: DeviceConfig) -> dict:
    damping = {"q": device.damping.q} if device.damping.q is not None else {"zeta": device.damping.zeta}
    return {
        "beam": {
            "length": device.beam.length,
            "width": device.beam.width,
            "thickness": device.beam.thickness,
        },
        "material": {
            "youngs_modulus": device.material.youngs_modulus,
            "density": device.material.density,
            "gap_permittivity": device.material.gap_permittivity,
        },
        "input_electrode": {
            "x_start": device.input_electrode.x_start,
            "x_end": device.input_electrode.x_end,
            "gap": device.input_electrode.gap,
        },
        "output_electrode": {
            "x_start": device.output_electrode.x_start,
            "x_end": device.output_electrode.x_end,
            "gap": device.output_electrode.gap,
        },
        "damping": damping,
        "load_resistance": device.load_resistance,
    }


def device_from_dict(data: dict) -> DeviceConfig:
    data = _take(
        data,
        "device",
        required=("beam", "material", "input_electrode", "output_electrode", "damping"),
        optional=("load_resistance",),
    )
    beam_d = _take(data["beam"], "beam", ("length", "width", "thickness"))
    mat_d = _take(data["material"], "material", ("youngs_modulus", "density"), ("gap_permittivity",))
    beam = BeamGeometry(
        length=_number(beam_d["length"], "beam.length"),
        width=_number(beam_d["width"], "beam.width"),
        thickness=_number(beam_d["thickness"], "beam.thickness"),
    )
    material = Material(
        youngs_modulus=_number(mat_d["youngs_modulus"], "material.youngs_modulus"),
        density=_number(mat_d["density"], "material.density"),
        gap_permittivity=_number(mat_d.get("gap_permittivity", EPS0), "material.gap_permittivity"),
    )
    electrodes = {}
    for key in ("input_electrode", "output_electrode"):
        el_d = _take(data[key], key, ("x_start", "x_end", "gap"))
        electrodes[key] = Electrode(
            x_start=_number(el_d["x_start"], f"{key}.x_start"),
            x_end=_number(el_d["x_end"], f"{key}.x_end"),
            gap=_number(el_d["gap"], f"{key}.gap"),
        )
    damp_d = _take(data["damping"], "damping", (), ("q", "zeta"))
    if not damp_d:
        raise ConfigError("damping: give one of q or zeta")
    damping = Damping(
        q=_number(damp_d["q"], "damping.q") if "q" in damp_d else None,
        zeta=_number(damp_d["zeta"], "damping.zeta") if "zeta" in damp_d else None,
    )
    return DeviceConfig(
        beam=beam,
        material=material,
        input_electrode=electrodes["input_electrode"],
        output_electrode=electrodes["output_electrode"],
        damping=damping,
        load_resistance=_number(data.get("load_resistance", 1.0e6), "load_resistance"),
    )


def device_to_json(device: DeviceConfig, indent: int | None = 2) -> str:
    return json.dumps(device_to_dict(device), indent=indent)


def device_from_json(text: str) -> DeviceConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"device config is not valid JSON: {exc}") from exc
    return device_from_dict(data)
