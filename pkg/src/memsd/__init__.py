"""Reduced-order simulator for electrostatically driven MEMS cantilever
resonators and frequency doublers.

The square-law voltage-to-force transfer of an air-gap capacitive transducer
puts drive energy at DC and at twice the excitation frequency; wiring the
bias in series with the AC source removes the linear term entirely, so a
beam driven at half its first flexural resonance responds at the resonance
itself and delivers a frequency-doubled motional current at the output
electrode.  This package models that device end to end: beam modal analysis
(analytic and finite-element), distributed electrostatics with pull-in
bounds, transient reduced-order simulation, and spectral extraction of
resonance frequency, quality factor, and spectral purity.
"""

from .device import (
    BeamGeometry,
    Damping,
    DeviceConfig,
    Electrode,
    Material,
    PRESET_NAMES,
    device_from_json,
    device_to_json,
    preset,
    q_from_zeta,
    section_properties,
    with_damping,
    zeta_from_q,
)
from .electrostatics import (
    DriveSignal,
    ForceHarmonics,
    SweptSine,
    capacitance_curvature,
    capacitance_gradient,
    electrostatic_force,
    force_harmonics,
    gap_capacitance,
    motional_current,
    pull_in_voltage,
    static_equilibrium,
    transducer_voltage,
    uniform_shape,
    voltage_squared_harmonics,
)
from .errors import (
    ConfigError,
    ConvergenceError,
    MemsdError,
    OverclosureError,
    PhysicsError,
    PullInError,
    SpectralFitError,
    UnsettledWarning,
)
from .fem import FemModalResult, fem_modal, tip_normalized_deflection
from .modal import (
    ModalBasis,
    ModeShape,
    cantilever_wavenumbers,
    characteristic_residual,
    modal_basis,
    modal_mass_stiffness,
    mode_shape,
    natural_frequency,
)
from .spectral import (
    HarmonicLevel,
    ResonanceFit,
    Spectrum,
    amplitude_spectrum,
    purity_report,
    reconstruct_time_samples,
    resonance_fit,
)
from .transient import (
    FrequencyResponse,
    Trajectory,
    doubler_run,
    frequency_sweep,
    simulate,
    steady_slice,
)

__version__ = "0.1.0"
