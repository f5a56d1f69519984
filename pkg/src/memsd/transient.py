"""Transient integration of the single-mode reduced-order beam model.

The retained equation of motion is

    m_eff q'' + c q' + k_eff q = F_in(dV_in(t), q) + F_out(V_dc, q)

with c = 2 zeta sqrt(k_eff m_eff) and both transducer forces evaluated from
the distributed capacitance gradients (no small-signal linearization).  Only
the first flexural mode is retained: the drive places force at f_in and
2 f_in, and the nearest neglected mode sits a factor (b2/b1)^2 = 6.27 above
the fundamental, so the truncation error is second order.

Integration is classical fixed-step RK4 -- the system is smooth and
periodically driven, and a fixed step gives determinism plus trivially
uniform sampling for FFTs.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from ._kernel import integrate_rom
from .device import DeviceConfig
from .electrostatics import DriveSignal, static_equilibrium, transducer_tables
from .errors import ConfigError, OverclosureError, UnsettledWarning
from .modal import ModalBasis, modal_basis

#: settling: consecutive-cycle RMS change threshold and run length required
SETTLE_REL_TOL = 1e-4
SETTLE_WINDOW = 12
#: cycles discarded between settling detection and steady-state measurement
SETTLE_GUARD_CYCLES = 8
#: hard settling cap in units of Q (cycles)
SETTLE_CAP_Q_MULTIPLE = 20.0
#: fallback cap (cycles) when the device is undamped
SETTLE_CAP_UNDAMPED = 1000

_CHUNK_CYCLES = 64


class _Rom:
    """Precomputed kernel arguments for one device + drive + basis."""

    def __init__(self, device: DeviceConfig, drive: DriveSignal, basis: ModalBasis):
        self.device = device
        self.drive = drive
        self.basis = basis
        zeta = device.damping.zeta_value
        self.m = basis.m_eff
        self.k = basis.k_eff
        self.c = 2.0 * zeta * math.sqrt(basis.k_eff * basis.m_eff)

        self.tabs_in = transducer_tables(device.input_electrode, device.beam, device.material, basis.shape)
        self.tabs_out = transducer_tables(device.output_electrode, device.beam, device.material, basis.shape)
        self.grad_num_in = np.ascontiguousarray(self.tabs_in.cap_weights * self.tabs_in.phi)
        self.grad_num_out = np.ascontiguousarray(self.tabs_out.cap_weights * self.tabs_out.phi)
        self.phi_in = np.ascontiguousarray(self.tabs_in.phi)
        self.phi_out = np.ascontiguousarray(self.tabs_out.phi)

        # deflection bounds beyond which a gap has closed somewhere
        hi, lo = math.inf, -math.inf
        for tabs in (self.tabs_in, self.tabs_out):
            p_max = float(np.max(tabs.phi))
            p_min = float(np.min(tabs.phi))
            if p_max > 0.0:
                hi = min(hi, tabs.gap / p_max)
            if p_min < 0.0:
                lo = max(lo, tabs.gap / p_min)
        self.q_hi, self.q_lo = hi, lo

        w = drive.waveform
        if w is None:
            self.wave_args = (False, 2.0 * math.pi * drive.f_in, 0.0, 0.0, math.inf, 0.0, 0.0)
        else:
            c0 = 2.0 * math.pi * w.f_lo
            c1 = math.pi * (w.f_hi - w.f_lo) / w.duration
            phase_end = c0 * w.duration + c1 * w.duration**2
            self.wave_args = (True, 0.0, c0, c1, w.duration, 2.0 * math.pi * w.f_hi, phase_end)

    def run(self, q0: float, v0: float, dt: float, n_steps: int, step_offset: int):
        q_arr = np.empty(n_steps + 1)
        v_arr = np.empty(n_steps + 1)
        status = integrate_rom(
            q0, v0, dt, n_steps, step_offset,
            self.m, self.k, self.c,
            self.tabs_in.gap, self.phi_in, self.grad_num_in,
            self.tabs_out.gap, self.phi_out, self.grad_num_out,
            self.drive.v_dc, self.drive.v_amp, self.drive.mode == "doubler",
            *self.wave_args,
            self.q_hi, self.q_lo,
            q_arr, v_arr,
        )
        if status >= 0:
            t_fail = (step_offset + status) * dt
            raise OverclosureError(
                f"gap closed during integration at t = {t_fail:.6g} s "
                f"(q = {q_arr[status]:.4g} m); pull-in or excessive drive",
                time=t_fail,
                q=float(q_arr[status]),
            )
        return q_arr, v_arr

    def bias_deflection(self) -> float:
        v_in = 0.0 if self.drive.mode == "doubler" else self.drive.v_dc
        return static_equilibrium(self.device, v_in, self.drive.v_dc, basis=self.basis)

    def output_capacitance(self, q: np.ndarray) -> np.ndarray:
        tabs = self.tabs_out
        out = np.empty_like(q)
        for i in range(0, len(q), 8192):
            block = q[i : i + 8192, None]
            out[i : i + 8192] = (tabs.cap_weights / (tabs.gap - block * tabs.phi)).sum(axis=1)
        return out

    def output_gradient(self, q: np.ndarray) -> np.ndarray:
        tabs = self.tabs_out
        out = np.empty_like(q)
        for i in range(0, len(q), 8192):
            den = tabs.gap - q[i : i + 8192, None] * tabs.phi
            out[i : i + 8192] = (self.grad_num_out / (den * den)).sum(axis=1)
        return out


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled reduced-order trajectory plus derived electrical signals.

    q is the modal tip deflection (m); i_o and v_load follow the output
    transducer at the drive bias.  settling_index is the first sample
    considered steady state (None when the run never settled).
    """

    dt: float
    q: np.ndarray
    q_dot: np.ndarray
    c_out: np.ndarray
    i_o: np.ndarray
    v_load: np.ndarray
    drive: DriveSignal
    settled: bool
    settling_index: int | None
    samples_per_cycle: int | None

    def __post_init__(self):
        n = len(self.q)
        if not (len(self.q_dot) == len(self.c_out) == len(self.i_o) == len(self.v_load) == n):
            raise ConfigError("trajectory arrays must have equal length")
        if not self.dt > 0.0:
            raise ConfigError("dt must be positive")
        if self.settling_index is not None and not 0 <= self.settling_index < n:
            raise ConfigError("settling index out of range")

    @property
    def time(self) -> np.ndarray:
        return np.arange(len(self.q)) * self.dt


def _cycle_rms(q: np.ndarray, n_per: int) -> np.ndarray:
    n_cycles = len(q) // n_per
    if n_cycles == 0:
        return np.empty(0)
    blocks = q[: n_cycles * n_per].reshape(n_cycles, n_per)
    return np.sqrt(np.mean(blocks * blocks, axis=1))


def _detect_settling(rms: np.ndarray, rel_tol=SETTLE_REL_TOL, window=SETTLE_WINDOW) -> int | None:
    """Index of the first cycle ending a run of `window` small RMS changes."""
    if len(rms) < window + 1:
        return None
    changes = np.abs(np.diff(rms)) / np.maximum(rms[1:], 1e-300)
    run = 0
    for i, ok in enumerate(changes < rel_tol):
        run = run + 1 if ok else 0
        if run >= window:
            return i + 1
    return None


def _settle_cap_cycles(device: DeviceConfig, override: int | None) -> int:
    if override is not None:
        return override
    q_val = device.damping.q_value
    if math.isinf(q_val):
        return SETTLE_CAP_UNDAMPED
    return int(math.ceil(SETTLE_CAP_Q_MULTIPLE * q_val))


def _max_dt(drive: DriveSignal, f1: float) -> float:
    return 1.0 / (200.0 * max(2.0 * drive.f_in, f1))


def _assemble(rom: _Rom, dt: float, q: np.ndarray, v: np.ndarray,
              settled: bool, settling_index, n_per) -> Trajectory:
    grad = rom.output_gradient(q)
    i_o = rom.drive.v_dc * grad * v
    return Trajectory(
        dt=dt,
        q=q,
        q_dot=v,
        c_out=rom.output_capacitance(q),
        i_o=i_o,
        v_load=i_o * rom.device.load_resistance,
        drive=rom.drive,
        settled=settled,
        settling_index=settling_index,
        samples_per_cycle=n_per,
    )


def simulate(
    device: DeviceConfig,
    drive: DriveSignal,
    duration: float,
    dt: float,
    basis: ModalBasis | None = None,
    q0: float | None = None,
    v0: float = 0.0,
) -> Trajectory:
    """Integrate the driven ROM for `duration` seconds at fixed step dt.

    dt must resolve the fastest relevant frequency, dt <= 1/(200 f_max) with
    f_max = max(2 f_in, f1), and duration must cover at least 10 beam
    periods.  Initial conditions default to the static bias deflection at
    rest; q0/v0 override them (free-vibration studies).
    """
    if basis is None:
        basis = modal_basis(device, 1)
    f1 = basis.frequency_hz
    if dt > _max_dt(drive, f1) * (1.0 + 1e-12):
        raise ConfigError(
            f"dt = {dt:.3e} s too coarse; need dt <= 1/(200 max(2 f_in, f1)) = {_max_dt(drive, f1):.3e} s"
        )
    if duration < 10.0 / f1:
        raise ConfigError(f"duration {duration:.3e} s shorter than 10 beam periods ({10.0 / f1:.3e} s)")

    rom = _Rom(device, drive, basis)
    if q0 is None:
        q0 = rom.bias_deflection()
    n_steps = int(round(duration / dt))
    q, v = rom.run(q0, v0, dt, n_steps, 0)

    settled, settling_index, n_per = False, None, None
    if drive.waveform is None:
        n_per = int(round(1.0 / (drive.f_in * dt)))
        if n_per >= 8:
            cycle = _detect_settling(_cycle_rms(q, n_per))
            if cycle is not None:
                settled = True
                settling_index = (cycle + 1) * n_per
        if not settled:
            warnings.warn(
                f"trajectory did not settle within {duration:.3e} s "
                f"(cycle-RMS change stayed above {SETTLE_REL_TOL:g})",
                UnsettledWarning,
            )
    return _assemble(rom, dt, q, v, settled, settling_index, n_per)


def _run_settled(rom: _Rom, dt: float, n_per: int, cap_cycles: int, extra_cycles: int,
                 q0: float, v0: float):
    """Integrate whole cycles until the RMS criterion fires, then extra_cycles more.

    Returns (q, v, settled, settling_index).  On an unsettled cap, the last
    extra_cycles are still appended so downstream analysis has a segment.
    Global sample k sits at time k*dt; cycle c spans samples [c*n_per, (c+1)*n_per).
    """
    chunks_q, chunks_v = [], []
    rms_parts = []
    q_cur, v_cur = q0, v0
    total_cycles = 0
    settle_cycle = None
    while total_cycles < cap_cycles and settle_cycle is None:
        n_cycles = min(_CHUNK_CYCLES, cap_cycles - total_cycles)
        n_steps = n_cycles * n_per
        q, v = rom.run(q_cur, v_cur, dt, n_steps, total_cycles * n_per)
        first = not chunks_q
        chunks_q.append(q if first else q[1:])
        chunks_v.append(v if first else v[1:])
        rms_parts.append(_cycle_rms(q[:-1], n_per))  # chunk samples minus the boundary sample
        q_cur, v_cur = float(q[-1]), float(v[-1])
        total_cycles += n_cycles
        settle_cycle = _detect_settling(np.concatenate(rms_parts))

    settled = settle_cycle is not None
    settling_index = (settle_cycle + 1) * n_per if settled else None

    q, v = rom.run(q_cur, v_cur, dt, extra_cycles * n_per, total_cycles * n_per)
    chunks_q.append(q[1:])
    chunks_v.append(v[1:])
    return np.concatenate(chunks_q), np.concatenate(chunks_v), settled, settling_index


def _samples_per_cycle(drive: DriveSignal, f1: float) -> int:
    f_max = max(2.0 * drive.f_in, f1)
    return int(math.ceil(200.0 * f_max / drive.f_in))


def doubler_run(
    device: DeviceConfig,
    drive: DriveSignal | None = None,
    cycles: int = 84,
    basis: ModalBasis | None = None,
    settle_cap_cycles: int | None = None,
) -> Trajectory:
    """Drive the beam at half its resonance in doubler wiring and capture steady state.

    `cycles` counts post-settling drive cycles kept for spectral analysis.
    The default drive is V_dc = 10 V, v_amp = 5 V at f_in = f1/2.
    """
    if basis is None:
        basis = modal_basis(device, 1)
    f1 = basis.frequency_hz
    if drive is None:
        drive = DriveSignal(mode="doubler", v_dc=10.0, v_amp=5.0, f_in=0.5 * f1)
    if drive.mode != "doubler":
        raise ConfigError("doubler_run requires doubler wiring")
    if drive.waveform is not None:
        raise ConfigError("doubler_run requires the sine waveform")
    if abs(drive.f_in - 0.5 * f1) > 0.05 * 0.5 * f1:
        raise ConfigError(
            f"drive frequency {drive.f_in:.6g} Hz is more than 5% away from f1/2 = {0.5 * f1:.6g} Hz"
        )
    if cycles < 1:
        raise ConfigError("cycles must be >= 1")

    rom = _Rom(device, drive, basis)
    n_per = _samples_per_cycle(drive, f1)
    dt = 1.0 / (drive.f_in * n_per)
    cap = _settle_cap_cycles(device, settle_cap_cycles)
    q, v, settled, settling_index = _run_settled(
        rom, dt, n_per, cap, cycles, rom.bias_deflection(), 0.0
    )
    if not settled:
        warnings.warn("doubler run hit the settling cap; spectra use the trailing cycles",
                      UnsettledWarning)
    return _assemble(rom, dt, q, v, settled, settling_index, n_per)


@dataclass(frozen=True)
class FrequencyResponse:
    """Steady-state response versus drive frequency (strictly increasing)."""

    freq_hz: np.ndarray
    amp_m: np.ndarray
    phase_rad: np.ndarray
    i_amp: np.ndarray
    settled: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.freq_hz) <= 0.0):
            raise ConfigError("sweep frequencies must be strictly increasing")


def frequency_sweep(
    device: DeviceConfig,
    drive: DriveSignal,
    f_lo: float,
    f_hi: float,
    n_points: int,
    spacing: str = "linear",
    basis: ModalBasis | None = None,
    settle_cap_cycles: int | None = None,
) -> FrequencyResponse:
    """Point-by-point steady-state sweep of the drive frequency.

    Each point integrates to the settling criterion, discards a guard
    interval, and measures amplitude and phase of the displacement (and the
    output-current amplitude) by sine/cosine inner products over the final 8
    whole drive cycles.  The measurement frequency is the drive frequency in
    resonator wiring and twice the drive frequency in doubler wiring (where
    the square-law force puts all the response at 2 f).  Phase is reported
    relative to sin(w_meas t); in resonator wiring the transduced force
    component at the drive frequency is -2 V_dc v sin(wt), so the
    low-frequency limit sits at +-pi rather than 0.

    A chirped time-domain drive excites the same band but convolves the
    resonance with transient ringing; the per-point sweep measures the
    transfer function cleanly, which is why it is the protocol here.
    """
    if not f_lo < f_hi:
        raise ConfigError("need f_lo < f_hi")
    if n_points < 2:
        raise ConfigError("need at least 2 sweep points")
    if spacing == "linear":
        freqs = np.linspace(f_lo, f_hi, n_points)
    elif spacing == "log":
        if f_lo <= 0.0:
            raise ConfigError("log spacing needs f_lo > 0")
        freqs = np.geomspace(f_lo, f_hi, n_points)
    else:
        raise ConfigError(f"spacing must be 'linear' or 'log', got {spacing!r}")

    if basis is None:
        basis = modal_basis(device, 1)
    f1 = basis.frequency_hz
    cap = _settle_cap_cycles(device, settle_cap_cycles)
    measure_cycles = 8

    amp = np.empty(n_points)
    phase = np.empty(n_points)
    i_amp = np.empty(n_points)
    settled_flags = np.zeros(n_points, dtype=bool)

    q0 = None
    for idx, f in enumerate(freqs):
        point_drive = replace(drive, f_in=float(f), waveform=None)
        rom = _Rom(device, point_drive, basis)
        if q0 is None:
            q0 = rom.bias_deflection()  # same bias for every point of this sweep
        n_per = _samples_per_cycle(point_drive, f1)
        dt = 1.0 / (f * n_per)
        q, v, settled, settling_index = _run_settled(
            rom, dt, n_per, cap, SETTLE_GUARD_CYCLES + measure_cycles, q0, 0.0
        )
        settled_flags[idx] = settled
        if not settled:
            warnings.warn(f"sweep point at {f:.6g} Hz did not settle", UnsettledWarning)

        n_win = measure_cycles * n_per
        sl = slice(len(q) - n_win, len(q))
        k_global = np.arange(sl.start, sl.stop)
        f_meas = 2.0 * f if drive.mode == "doubler" else f
        wt = (2.0 * math.pi * f_meas * dt) * k_global
        s, cth = np.sin(wt), np.cos(wt)
        q_win = q[sl]
        in_phase = 2.0 * np.mean(q_win * s)
        quad = 2.0 * np.mean(q_win * cth)
        amp[idx] = math.hypot(in_phase, quad)
        phase[idx] = math.atan2(quad, in_phase)

        i_win = point_drive.v_dc * rom.output_gradient(q_win) * v[sl]
        i_amp[idx] = math.hypot(2.0 * np.mean(i_win * s), 2.0 * np.mean(i_win * cth))

    return FrequencyResponse(freq_hz=freqs, amp_m=amp, phase_rad=phase, i_amp=i_amp,
                             settled=settled_flags)


def steady_slice(traj: Trajectory, max_samples: int | None = None) -> slice:
    """Post-settling slice covering a whole number of drive cycles.

    Falls back to the trailing cycles when the run never settled (the caller
    can tell from traj.settled).  max_samples bounds the slice length, again
    keeping whole cycles.
    """
    n_per = traj.samples_per_cycle
    if n_per is None:
        raise ConfigError("trajectory has no cycle structure (chirp drive?)")
    n = len(traj.q)
    start = traj.settling_index if traj.settled else None
    budget = n - start if start is not None else n
    n_cycles = budget // n_per
    if max_samples is not None:
        n_cycles = min(n_cycles, max_samples // n_per)
    if n_cycles < 1:
        raise ConfigError("trajectory too short for one whole post-settling cycle")
    if start is None:
        start = n - n_cycles * n_per
    return slice(start, start + n_cycles * n_per)
