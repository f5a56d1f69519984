import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import memsd
from memsd.device import (
    BeamGeometry,
    Damping,
    DeviceConfig,
    Electrode,
    Material,
    device_from_dict,
    device_from_json,
    device_to_dict,
    device_to_json,
    preset,
    q_from_zeta,
    section_properties,
    zeta_from_q,
)
from memsd.errors import ConfigError


def test_section_properties_reference_values():
    beam = BeamGeometry(length=76.75e-6, width=10e-6, thickness=2e-6)
    sec = section_properties(beam)
    assert sec.second_moment == pytest.approx(6.666666666666667e-24, rel=1e-12)
    assert sec.area == pytest.approx(2.0e-11, rel=1e-12)


def test_section_properties_thickness_scaling():
    a = section_properties(BeamGeometry(length=200e-6, width=10e-6, thickness=2e-6))
    b = section_properties(BeamGeometry(length=200e-6, width=10e-6, thickness=4e-6))
    assert b.second_moment == pytest.approx(8.0 * a.second_moment, rel=1e-12)
    assert b.area == pytest.approx(2.0 * a.area, rel=1e-12)


@settings(deadline=None)
@given(s=st.floats(min_value=0.1, max_value=10.0, allow_nan=False))
def test_section_properties_homogeneous_scaling(s):
    base = BeamGeometry(length=100e-6, width=10e-6, thickness=2e-6)
    scaled = BeamGeometry(length=s * base.length, width=s * base.width, thickness=s * base.thickness)
    a, b = section_properties(base), section_properties(scaled)
    assert b.second_moment == pytest.approx(s**4 * a.second_moment, rel=1e-11)
    assert b.area == pytest.approx(s**2 * a.area, rel=1e-11)


def test_degenerate_geometry_rejected():
    with pytest.raises(ConfigError):
        BeamGeometry(length=100e-6, width=0.0, thickness=2e-6)
    with pytest.raises(ConfigError):
        BeamGeometry(length=100e-6, width=10e-6, thickness=-1e-6)


def test_slenderness_bound():
    # h/L = 0.3 is outside thin-beam territory
    with pytest.raises(ConfigError):
        BeamGeometry(length=10e-6, width=10e-6, thickness=3e-6)


@pytest.mark.parametrize(
    "name,target",
    [("beam-1MHz", 1.000e6), ("beam-455kHz", 454.5e3)],
)
def test_preset_design_frequencies(name, target):
    dev = preset(name)
    f1 = memsd.natural_frequency(1, dev.beam, dev.material)
    assert abs(f1 - target) / target < 5e-3


def test_preset_unknown_name():
    with pytest.raises(ConfigError):
        preset("beam-xyz")


def test_presets_pass_invariants():
    for name in memsd.PRESET_NAMES:
        dev = preset(name)
        assert dev.input_electrode.x_end <= dev.output_electrode.x_start
        assert dev.damping.q_value == 40.0
        assert dev.beam.thickness / dev.beam.length < 0.2


def test_electrode_validation():
    with pytest.raises(ConfigError):
        Electrode(x_start=5e-6, x_end=5e-6, gap=2e-6)
    with pytest.raises(ConfigError):
        Electrode(x_start=-1e-6, x_end=5e-6, gap=2e-6)
    with pytest.raises(ConfigError):
        Electrode(x_start=0.0, x_end=5e-6, gap=0.0)


def test_overlapping_electrodes_rejected():
    dev = preset("beam-455kHz")
    bad = Electrode(x_start=0.4 * dev.beam.length, x_end=0.6 * dev.beam.length, gap=2e-6)
    with pytest.raises(ConfigError):
        dataclasses.replace(dev, input_electrode=bad)


def test_electrode_past_tip_rejected():
    dev = preset("beam-455kHz")
    bad = Electrode(x_start=0.55 * dev.beam.length, x_end=1.05 * dev.beam.length, gap=2e-6)
    with pytest.raises(ConfigError):
        dataclasses.replace(dev, output_electrode=bad)


def test_damping_exactly_one_spec():
    with pytest.raises(ConfigError):
        Damping()
    with pytest.raises(ConfigError):
        Damping(q=40.0, zeta=0.0125)
    assert Damping(q=40.0).zeta_value == pytest.approx(0.0125009768296, rel=1e-9)
    assert Damping(zeta=0.0125).q_value == pytest.approx(40.0031253663, rel=1e-9)
    assert Damping(zeta=0.0).q_value == math.inf


def test_damping_conversions_roundtrip():
    for q in (1.5, 10.0, 40.0, 500.0):
        assert q_from_zeta(zeta_from_q(q)) == pytest.approx(q, rel=1e-12)
    with pytest.raises(ConfigError):
        zeta_from_q(0.5)
    with pytest.raises(ConfigError):
        q_from_zeta(0.8)


def test_negative_load_resistance_rejected():
    dev = preset("beam-455kHz")
    with pytest.raises(ConfigError):
        dataclasses.replace(dev, load_resistance=-1.0)


def test_json_roundtrip_bit_identical():
    for name in memsd.PRESET_NAMES:
        dev = preset(name)
        again = device_from_json(device_to_json(dev))
        assert again == dev  # frozen dataclasses compare field-by-field


@settings(deadline=None, max_examples=40)
@given(
    length=st.floats(min_value=20e-6, max_value=500e-6),
    width=st.floats(min_value=2e-6, max_value=50e-6),
    thickness_frac=st.floats(min_value=0.005, max_value=0.15),
    gap=st.floats(min_value=0.5e-6, max_value=5e-6),
    q=st.floats(min_value=2.0, max_value=1e4),
)
def test_json_roundtrip_random_configs(length, width, thickness_frac, gap, q):
    dev = DeviceConfig(
        beam=BeamGeometry(length=length, width=width, thickness=thickness_frac * length),
        material=Material(youngs_modulus=160e9, density=2330.0),
        input_electrode=Electrode(x_start=0.1 * length, x_end=0.5 * length, gap=gap),
        output_electrode=Electrode(x_start=0.55 * length, x_end=0.95 * length, gap=gap),
        damping=Damping(q=q),
        load_resistance=1e6,
    )
    again = device_from_json(device_to_json(dev))
    assert again == dev


def test_unknown_keys_rejected():
    data = device_to_dict(preset("beam-455kHz"))
    data["bogus"] = 1
    with pytest.raises(ConfigError, match="unknown keys"):
        device_from_dict(data)

    data = device_to_dict(preset("beam-455kHz"))
    data["beam"]["frobnicate"] = 2.0
    with pytest.raises(ConfigError, match="unknown keys"):
        device_from_dict(data)


def test_missing_and_malformed_keys_rejected():
    data = device_to_dict(preset("beam-455kHz"))
    del data["material"]
    with pytest.raises(ConfigError, match="missing"):
        device_from_dict(data)
    with pytest.raises(ConfigError):
        device_from_json("not json {")
    data = device_to_dict(preset("beam-455kHz"))
    data["beam"]["length"] = "long"
    with pytest.raises(ConfigError, match="number"):
        device_from_dict(data)
