"""Air-gap capacitive transducers: capacitance, force, currents, pull-in.

The beam deflection enters through a single modal coordinate q (m, positive
toward the electrodes) times a dimensionless shape phi(x).  Distributed
quantities integrate the parallel-plate density over each electrode span:

    C(q)      = int eps W / (d0 - q phi(x)) dx
    dC/dq     = int eps W phi  / (d0 - q phi)^2 dx
    d2C/dq2   = int 2 eps W phi^2 / (d0 - q phi)^3 dx

Forces come from the energy method, F = 0.5 dV^2 dC/dq, attractive and
therefore even in the applied voltage difference: a pure sinusoidal drive
produces force only at DC and twice the drive frequency, which is the whole
frequency-doubling mechanism.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .device import BeamGeometry, DeviceConfig, Electrode, Material
from .errors import ConfigError, OverclosureError, PhysicsError, PullInError
from .modal import ModalBasis, modal_basis
from .quadrature import checked_simpson, simpson_nodes

BASE_QUAD_POINTS = 129  # per electrode span; cross-checked against 257


# --- drive signals ----------------------------------------------------------


@dataclass(frozen=True)
class SweptSine:
    """Linear chirp from f_lo to f_hi over `duration`, then steady at f_hi."""

    f_lo: float
    f_hi: float
    duration: float

    def __post_init__(self):
        if not 0.0 < self.f_lo < self.f_hi:
            raise ConfigError("swept-sine needs 0 < f_lo < f_hi")
        if self.duration <= 0.0:
            raise ConfigError("swept-sine duration must be positive")


@dataclass(frozen=True)
class DriveSignal:
    """Electrical drive: wiring mode, bias, AC amplitude/frequency, waveform.

    mode "resonator": bias on the beam, AC on the input electrode, so the
    input transducer sees V_dc - v_i(t).  mode "doubler": the bias is wired
    in series with the AC source, cancelling across the input transducer,
    which then sees v_i(t) alone.  The output transducer is biased at V_dc
    in both modes.  waveform None means a fixed-frequency sine at f_in.
    """

    mode: str
    v_dc: float
    v_amp: float
    f_in: float
    waveform: SweptSine | None = None

    def __post_init__(self):
        if self.mode not in ("resonator", "doubler"):
            raise ConfigError(f"drive mode must be 'resonator' or 'doubler', got {self.mode!r}")
        if self.v_dc < 0.0:
            raise ConfigError("V_dc must be >= 0")
        if self.v_amp < 0.0:
            raise ConfigError("AC amplitude must be >= 0")
        if not self.f_in > 0.0:
            raise ConfigError("input frequency must be positive")


def ac_phase(t, drive: DriveSignal):
    """Oscillator phase (rad) of the AC source at time t."""
    t = np.asarray(t, dtype=float)
    w = drive.waveform
    if w is None:
        return 2.0 * math.pi * drive.f_in * t
    rate = (w.f_hi - w.f_lo) / w.duration
    chirp = 2.0 * math.pi * (w.f_lo * t + 0.5 * rate * t * t)
    end = 2.0 * math.pi * (w.f_lo * w.duration + 0.5 * rate * w.duration**2)
    after = end + 2.0 * math.pi * w.f_hi * (t - w.duration)
    return np.where(t <= w.duration, chirp, after)


def ac_voltage(t, drive: DriveSignal):
    """Instantaneous AC source voltage v_i(t)."""
    return drive.v_amp * np.sin(ac_phase(t, drive))


def transducer_voltage(t, drive: DriveSignal):
    """Voltage differences (dV_in, dV_out) across the two transducers at time t."""
    vi = ac_voltage(t, drive)
    if drive.mode == "doubler":
        dv_in = vi
    else:
        dv_in = drive.v_dc - vi
    dv_out = drive.v_dc if np.isscalar(vi) else np.full_like(vi, drive.v_dc)
    return dv_in, dv_out


# --- distributed capacitance ------------------------------------------------


def uniform_shape(x):
    """Rigid-plate deflection profile (phi = 1 everywhere); test/oracle mode."""
    return np.ones_like(np.asarray(x, dtype=float))


class TransducerTables(NamedTuple):
    """Fixed quadrature tables for one electrode span.

    cap_weights already contain eps*W and the Simpson weights, so
    C(q) = sum(cap_weights / (gap - q*phi)) and
    dC/dq = sum(cap_weights*phi / (gap - q*phi)^2).
    """

    gap: float
    phi: np.ndarray
    cap_weights: np.ndarray
    phi_max: float  # max |phi| over the span; contact when q*phi_max >= gap


def transducer_tables(
    electrode: Electrode,
    beam: BeamGeometry,
    material: Material,
    shape: Callable,
    n: int = BASE_QUAD_POINTS,
) -> TransducerTables:
    x, w = simpson_nodes(n, electrode.x_start, electrode.x_end)
    phi = np.asarray(shape(x), dtype=float)
    return TransducerTables(
        gap=electrode.gap,
        phi=phi,
        cap_weights=w * material.gap_permittivity * beam.width,
        phi_max=float(np.max(np.abs(phi))),
    )


def _check_gap_open(q: float, electrode: Electrode, shape: Callable, samples: int = 513):
    x = np.linspace(electrode.x_start, electrode.x_end, samples)
    closure = q * np.asarray(shape(x), dtype=float)
    if np.any(closure >= electrode.gap):
        raise OverclosureError(
            f"gap closed at q = {q:.4g} m over [{electrode.x_start:.4g}, {electrode.x_end:.4g}] m",
            q=q,
        )


def gap_capacitance(
    q: float, electrode: Electrode, beam: BeamGeometry, material: Material, shape: Callable
) -> float:
    """Transducer capacitance (F) at modal deflection q.

    Reduces exactly to eps A / d0 at q = 0 and to the parallel-plate value
    for the rigid-plate shape.
    """
    _check_gap_open(q, electrode, shape)
    eps_w = material.gap_permittivity * beam.width
    return checked_simpson(
        lambda x: eps_w / (electrode.gap - q * np.asarray(shape(x), dtype=float)),
        electrode.x_start,
        electrode.x_end,
        n=BASE_QUAD_POINTS,
    )


def capacitance_gradient(
    q: float, electrode: Electrode, beam: BeamGeometry, material: Material, shape: Callable
) -> float:
    """dC/dq (F/m) at modal deflection q; eps A / d0^2 in the rigid-plate limit."""
    _check_gap_open(q, electrode, shape)
    eps_w = material.gap_permittivity * beam.width

    def integrand(x):
        phi = np.asarray(shape(x), dtype=float)
        return eps_w * phi / (electrode.gap - q * phi) ** 2

    return checked_simpson(integrand, electrode.x_start, electrode.x_end, n=BASE_QUAD_POINTS)


def capacitance_curvature(
    q: float, electrode: Electrode, beam: BeamGeometry, material: Material, shape: Callable
) -> float:
    """d2C/dq2 (F/m^2); sets the electrostatic softening and pull-in stability."""
    _check_gap_open(q, electrode, shape)
    eps_w = material.gap_permittivity * beam.width

    def integrand(x):
        phi = np.asarray(shape(x), dtype=float)
        return 2.0 * eps_w * phi * phi / (electrode.gap - q * phi) ** 3

    return checked_simpson(integrand, electrode.x_start, electrode.x_end, n=BASE_QUAD_POINTS)


def electrostatic_force(
    dv: float,
    q: float,
    electrode: Electrode,
    beam: BeamGeometry,
    material: Material,
    shape: Callable,
) -> float:
    """Generalized modal force (N), F = 0.5 dV^2 dC/dq; attractive, even in dV."""
    return 0.5 * (dv * dv) * capacitance_gradient(q, electrode, beam, material, shape)


# --- harmonic decomposition of the drive force --------------------------------


@dataclass(frozen=True)
class ForceHarmonics:
    """Force amplitudes (N) at DC, the drive frequency, and twice the drive."""

    dc: float
    at_drive: float
    at_double: float


def voltage_squared_harmonics(drive: DriveSignal) -> tuple[float, float, float]:
    """Exact decomposition of dV_in(t)^2 for a sine drive: (DC, f_in, 2 f_in) in V^2.

    Resonator wiring: (V_dc^2 + v^2/2, 2 V_dc v, v^2/2).
    Doubler wiring:   (v^2/2, 0, v^2/2) -- no component at the drive frequency.
    """
    if drive.waveform is not None:
        raise ConfigError("harmonic decomposition is defined for the sine waveform only")
    v = drive.v_amp
    if drive.mode == "doubler":
        return (0.5 * v * v, 0.0, 0.5 * v * v)
    vdc = drive.v_dc
    return (vdc * vdc + 0.5 * v * v, 2.0 * vdc * v, 0.5 * v * v)


def force_harmonics(
    drive: DriveSignal,
    electrode: Electrode,
    beam: BeamGeometry,
    material: Material,
    shape: Callable,
) -> ForceHarmonics:
    """Input-transducer force components at q = 0 for a sine drive."""
    grad0 = capacitance_gradient(0.0, electrode, beam, material, shape)
    dc, at_f, at_2f = voltage_squared_harmonics(drive)
    return ForceHarmonics(
        dc=0.5 * grad0 * dc, at_drive=0.5 * grad0 * at_f, at_double=0.5 * grad0 * at_2f
    )


# --- motional current ---------------------------------------------------------


def motional_current(q, q_dot, device: DeviceConfig, v_dc: float, shape: Callable):
    """Output current i_o = V_dc (dC_out/dq) q_dot and load voltage i_o R_L.

    Exact chain rule on the distributed capacitance (no small-signal
    linearization).  Accepts scalars or arrays; arrays are evaluated on the
    same fixed transducer grid the transient kernel uses.
    """
    tabs = transducer_tables(device.output_electrode, device.beam, device.material, shape)
    q_arr = np.atleast_1d(np.asarray(q, dtype=float))
    if np.any(q_arr[:, None] * tabs.phi >= tabs.gap):
        raise OverclosureError("gap closed over the output electrode", q=float(np.max(q_arr)))
    den = tabs.gap - q_arr[:, None] * tabs.phi
    grad = (tabs.cap_weights * tabs.phi / (den * den)).sum(axis=1)
    i_o = v_dc * grad * np.atleast_1d(np.asarray(q_dot, dtype=float))
    v_load = i_o * device.load_resistance
    if np.isscalar(q) or np.asarray(q).ndim == 0:
        return float(i_o[0]), float(v_load[0])
    return i_o, v_load


# --- static equilibrium and pull-in -------------------------------------------


def _resolve_rom(device, basis, shape, k_eff):
    if shape is None or k_eff is None:
        if basis is None:
            basis = modal_basis(device, 1)
        shape = shape if shape is not None else basis.shape
        k_eff = k_eff if k_eff is not None else basis.k_eff
    return shape, k_eff


def _contact_limit(device: DeviceConfig, shape: Callable) -> float:
    """Smallest positive q that closes either gap."""
    limits = []
    for el in (device.input_electrode, device.output_electrode):
        tabs = transducer_tables(el, device.beam, device.material, shape, n=513)
        pos_max = float(np.max(tabs.phi))
        if pos_max > 0.0:
            limits.append(el.gap / pos_max)
    if not limits:
        raise ConfigError("mode shape never deflects toward the electrodes")
    return min(limits)


def _net_force_grid(q_grid, device, shape, voltages):
    """Electrostatic force (N) on a grid of q, both transducers."""
    total = np.zeros_like(q_grid)
    for el, v in zip((device.input_electrode, device.output_electrode), voltages):
        if v == 0.0:
            continue
        tabs = transducer_tables(el, device.beam, device.material, shape)
        den = tabs.gap - q_grid[:, None] * tabs.phi
        grad = (tabs.cap_weights * tabs.phi / (den * den)).sum(axis=1)
        total += 0.5 * v * v * grad
    return total


def static_equilibrium(
    device: DeviceConfig,
    v_in: float = 0.0,
    v_out: float = 0.0,
    basis: ModalBasis | None = None,
    shape: Callable | None = None,
    k_eff: float | None = None,
) -> float:
    """Stable static deflection q* (m) under DC transducer voltages.

    Solves k_eff q = 0.5 v_in^2 dC_in/dq + 0.5 v_out^2 dC_out/dq for the
    smallest positive root and verifies stability (positive net stiffness).
    Raises PullInError when no stable root exists.
    """
    if v_in < 0.0 or v_out < 0.0:
        raise ConfigError("static voltages must be >= 0")
    if v_in == 0.0 and v_out == 0.0:
        return 0.0
    shape, k_eff = _resolve_rom(device, basis, shape, k_eff)
    q_max = _contact_limit(device, shape)

    grid = np.linspace(0.0, 0.999 * q_max, 2049)
    g = k_eff * grid - _net_force_grid(grid, device, shape, (v_in, v_out))
    crossing = np.nonzero((g[:-1] <= 0.0) & (g[1:] > 0.0))[0]
    if crossing.size == 0:
        raise PullInError(
            f"no stable equilibrium at v_in={v_in:.6g} V, v_out={v_out:.6g} V (pull-in)"
        )
    i = int(crossing[0])

    def g_scalar(q):
        f = 0.0
        for el, v in zip((device.input_electrode, device.output_electrode), (v_in, v_out)):
            if v != 0.0:
                f += 0.5 * v * v * capacitance_gradient(q, el, device.beam, device.material, shape)
        return k_eff * q - f

    lo, hi = grid[i], grid[i + 1]
    g_lo = g_scalar(lo)
    if g_lo > 0.0:  # checked quadrature may disagree with the scan by a hair
        lo = grid[max(i - 1, 0)]
        g_lo = g_scalar(lo)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        g_mid = g_scalar(mid)
        if (g_lo <= 0.0) == (g_mid <= 0.0):
            lo, g_lo = mid, g_mid
        else:
            hi = mid
        if hi - lo <= 1e-16 * q_max:
            break
    root = 0.5 * (lo + hi)

    softening = 0.0
    for el, v in zip((device.input_electrode, device.output_electrode), (v_in, v_out)):
        if v != 0.0:
            softening += 0.5 * v * v * capacitance_curvature(root, el, device.beam, device.material, shape)
    if not k_eff - softening > 0.0:
        raise PullInError("equilibrium root is unstable (net stiffness <= 0)")
    return float(root)


def _has_stable_root(device, shape, k_eff, voltages, q_max) -> bool:
    grid = np.linspace(0.0, 0.999 * q_max, 4097)
    g = k_eff * grid - _net_force_grid(grid, device, shape, voltages)
    return bool(np.any(g[1:] > 0.0))


def pull_in_voltage(
    device: DeviceConfig,
    electrode: str = "input",
    basis: ModalBasis | None = None,
    shape: Callable | None = None,
    k_eff: float | None = None,
    resolution: float = 1e-3,
) -> float:
    """Pull-in voltage (V) of one transducer, the other left unbiased.

    Bisects on voltage with existence of a stable static equilibrium as the
    predicate, to `resolution` volts.  The rigid-plate limit reproduces the
    parallel-plate closed form sqrt(8 k d0^3 / (27 eps A)).
    """
    if electrode not in ("input", "output"):
        raise ConfigError("electrode must be 'input' or 'output'")
    shape, k_eff = _resolve_rom(device, basis, shape, k_eff)
    q_max = _contact_limit(device, shape)

    def stable(v: float) -> bool:
        voltages = (v, 0.0) if electrode == "input" else (0.0, v)
        return _has_stable_root(device, shape, k_eff, voltages, q_max)

    lo, hi = 0.0, 1.0
    for _ in range(40):
        if not stable(hi):
            break
        lo, hi = hi, 2.0 * hi
        if hi > 1.048576e6:
            raise PhysicsError(f"no pull-in found below {lo:.3g} V; bracket cap reached")
    else:
        raise PhysicsError("pull-in bracketing failed")

    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if stable(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
