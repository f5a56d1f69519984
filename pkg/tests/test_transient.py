import math
import warnings

import numpy as np
import pytest

import memsd
from memsd.device import with_damping
from memsd.electrostatics import (
    DriveSignal,
    SweptSine,
    force_harmonics,
    static_equilibrium,
)
from memsd.errors import ConfigError, OverclosureError, UnsettledWarning
from memsd.spectral import amplitude_spectrum
from memsd.transient import doubler_run, frequency_sweep, simulate, steady_slice


@pytest.fixture(scope="module")
def dev():
    return memsd.preset("beam-455kHz")


@pytest.fixture(scope="module")
def dev_undamped(dev):
    return with_damping(dev, zeta=0.0)


@pytest.fixture(scope="module")
def basis(dev):
    return memsd.modal_basis(dev)


def _free_drive(f1):
    return DriveSignal(mode="resonator", v_dc=0.0, v_amp=0.0, f_in=f1)


def test_undamped_amplitude_conserved(dev_undamped, basis):
    f1 = basis.frequency_hz
    n_per = 800
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UnsettledWarning)
        traj = simulate(dev_undamped, _free_drive(f1), duration=100.0 / f1,
                        dt=1.0 / (n_per * f1), basis=basis, q0=1e-9)
    pp_first = traj.q[:n_per].max() - traj.q[:n_per].min()
    pp_last = traj.q[-n_per:].max() - traj.q[-n_per:].min()
    assert abs(pp_last / pp_first - 1.0) < 1e-9


def test_undamped_energy_drift_at_dt_ceiling(dev_undamped, basis):
    # drive at f_in = f1 implies the ceiling dt = 1/(400 f1)
    f1 = basis.frequency_hz
    cycles = 20
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UnsettledWarning)
        traj = simulate(dev_undamped, _free_drive(f1), duration=cycles / f1,
                        dt=1.0 / (400.0 * f1), basis=basis, q0=1e-9)
    energy = 0.5 * basis.k_eff * traj.q**2 + 0.5 * basis.m_eff * traj.q_dot**2
    drift_per_cycle = abs(energy[-1] / energy[0] - 1.0) / cycles
    assert drift_per_cycle < 1e-9


def test_damped_envelope_eminus_pi(dev, basis):
    # Q = 40: after 40 cycles the free envelope sits at e^-pi of the start
    f1 = basis.frequency_hz
    n_per = 400
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UnsettledWarning)
        traj = simulate(dev, _free_drive(f1), duration=41.5 / f1,
                        dt=1.0 / (n_per * f1), basis=basis, q0=1e-9)
    peak_start = np.abs(traj.q[: int(0.75 * n_per)]).max()
    i40 = int(39.75 * n_per)
    peak_40 = np.abs(traj.q[i40 : i40 + n_per]).max()
    assert peak_40 / peak_start == pytest.approx(math.exp(-math.pi), rel=5e-3)


def test_driven_resonance_amplitude(dev, basis):
    f1 = basis.frequency_hz
    drive = DriveSignal(mode="resonator", v_dc=1.0, v_amp=0.01, f_in=f1)
    traj = simulate(dev, drive, duration=260.0 / f1, dt=1.0 / (400.0 * f1), basis=basis)
    assert traj.settled
    tail = traj.q[-8 * 400 :]
    amp = 0.5 * (tail.max() - tail.min())
    f_drive = force_harmonics(drive, dev.input_electrode, dev.beam, dev.material,
                              basis.shape).at_drive
    assert amp == pytest.approx(40.0 * f_drive / basis.k_eff, rel=1e-2)


def test_amplitude_linear_in_drive(dev, basis):
    f1 = basis.frequency_hz

    def steady_amp(v_amp):
        drive = DriveSignal(mode="resonator", v_dc=1.0, v_amp=v_amp, f_in=f1)
        traj = simulate(dev, drive, duration=260.0 / f1, dt=1.0 / (400.0 * f1), basis=basis)
        tail = traj.q[-8 * 400 :]
        return 0.5 * (tail.max() - tail.min())

    assert steady_amp(0.02) / steady_amp(0.01) == pytest.approx(2.0, rel=5e-3)


def test_rk4_fourth_order_convergence(dev_undamped, basis):
    f1 = basis.frequency_hz
    drive = DriveSignal(mode="resonator", v_dc=0.5, v_amp=0.05, f_in=0.8 * f1)
    duration = 10.0 / drive.f_in
    dt0 = 1.0 / (400.0 * drive.f_in)  # ceiling for f_max = 2 f_in
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UnsettledWarning)
        ref = simulate(dev_undamped, drive, duration, dt0 / 8.0, basis=basis, q0=0.0)
        errs = {}
        for divider in (1, 2):
            traj = simulate(dev_undamped, drive, duration, dt0 / divider, basis=basis, q0=0.0)
            stride = 8 // divider
            errs[divider] = np.max(np.abs(traj.q - ref.q[::stride][: len(traj.q)]))
    ratio = errs[1] / errs[2]
    assert 12.0 < ratio < 20.0


def test_determinism_bit_identical(dev, basis):
    f1 = basis.frequency_hz
    drive = DriveSignal(mode="doubler", v_dc=10.0, v_amp=5.0, f_in=0.5 * f1)
    kwargs = dict(cycles=4, basis=basis, settle_cap_cycles=40)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UnsettledWarning)
        a = doubler_run(dev, drive, **kwargs)
        b = doubler_run(dev, drive, **kwargs)
    assert np.array_equal(a.q, b.q)
    assert np.array_equal(a.q_dot, b.q_dot)
    assert np.array_equal(a.i_o, b.i_o)


def test_simulate_precondition_validation(dev, basis):
    f1 = basis.frequency_hz
    drive = DriveSignal(mode="resonator", v_dc=1.0, v_amp=0.1, f_in=f1)
    with pytest.raises(ConfigError, match="dt"):
        simulate(dev, drive, duration=100.0 / f1, dt=1.0 / (100.0 * f1), basis=basis)
    with pytest.raises(ConfigError, match="duration"):
        simulate(dev, drive, duration=5.0 / f1, dt=1.0 / (400.0 * f1), basis=basis)


def test_doubler_requires_wiring_and_band(dev, basis):
    f1 = basis.frequency_hz
    with pytest.raises(ConfigError, match="wiring"):
        doubler_run(dev, DriveSignal(mode="resonator", v_dc=10.0, v_amp=5.0, f_in=0.5 * f1),
                    basis=basis)
    with pytest.raises(ConfigError, match="5%"):
        doubler_run(dev, DriveSignal(mode="doubler", v_dc=10.0, v_amp=5.0, f_in=0.56 * f1),
                    basis=basis)


@pytest.mark.parametrize("v_amp", [0.5, 10.0])
def test_doubler_frequency_lock_across_amplitudes(dev, basis, v_amp):
    f1 = basis.frequency_hz
    drive = DriveSignal(mode="doubler", v_dc=10.0, v_amp=v_amp, f_in=0.5 * f1)
    traj = doubler_run(dev, drive, cycles=44, basis=basis)
    assert traj.settled
    sl = steady_slice(traj, max_samples=16384)
    spec = amplitude_spectrum(traj.q[sl] - np.mean(traj.q[sl]), traj.dt,
                              window="hann", pad_to=16384)
    peak_hz = spec.freq_hz[int(np.argmax(spec.amplitude))]
    assert abs(peak_hz - 2.0 * drive.f_in) <= spec.bin_spacing


def test_doubler_zero_amplitude_decays_to_bias(dev, basis):
    f1 = basis.frequency_hz
    drive = DriveSignal(mode="doubler", v_dc=10.0, v_amp=0.0, f_in=0.5 * f1)
    traj = simulate(dev, drive, duration=400.0 / f1, dt=1.0 / (400.0 * f1),
                    basis=basis, q0=0.0)
    q_star = static_equilibrium(dev, 0.0, drive.v_dc, basis=basis)
    tail = traj.q[-1600:]
    assert np.mean(tail) == pytest.approx(q_star, rel=1e-6)
    assert 0.5 * (tail.max() - tail.min()) < 1e-3 * q_star


def test_overclosure_reports_time_and_deflection(dev, basis):
    f1 = basis.frequency_hz
    drive = DriveSignal(mode="doubler", v_dc=10.0, v_amp=200.0, f_in=0.5 * f1)
    with pytest.raises(OverclosureError) as excinfo:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UnsettledWarning)
            doubler_run(dev, drive, cycles=4, basis=basis, settle_cap_cycles=60)
    assert excinfo.value.time is not None and excinfo.value.time > 0.0
    assert excinfo.value.q is not None and excinfo.value.q > 1e-6


def test_unsettled_flag_and_warning(dev, basis):
    f1 = basis.frequency_hz
    drive = DriveSignal(mode="resonator", v_dc=1.0, v_amp=0.1, f_in=f1)
    with pytest.warns(UnsettledWarning):
        traj = simulate(dev, drive, duration=20.0 / f1, dt=1.0 / (400.0 * f1), basis=basis)
    assert not traj.settled
    assert traj.settling_index is None


def test_chirp_drive_runs(dev, basis):
    f1 = basis.frequency_hz
    drive = DriveSignal(
        mode="resonator", v_dc=1.0, v_amp=0.05, f_in=f1,
        waveform=SweptSine(f_lo=0.9 * f1, f_hi=1.1 * f1, duration=50.0 / f1),
    )
    traj = simulate(dev, drive, duration=60.0 / f1, dt=1.0 / (440.0 * f1), basis=basis)
    assert not traj.settled  # no periodic steady state under a chirp
    assert np.max(np.abs(traj.q)) > 0.0
    with pytest.raises(ConfigError):
        steady_slice(traj)


# --- frequency sweep ----------------------------------------------------------


@pytest.fixture(scope="module")
def dev_fast(dev):
    # moderately damped variant settles quickly; keeps sweep tests snappy
    return with_damping(dev, zeta=0.0125)


def test_sweep_validation(dev, basis):
    drive = DriveSignal(mode="resonator", v_dc=1.0, v_amp=0.01, f_in=basis.frequency_hz)
    with pytest.raises(ConfigError):
        frequency_sweep(dev, drive, 2e5, 1e5, 11, basis=basis)
    with pytest.raises(ConfigError):
        frequency_sweep(dev, drive, 1e5, 2e5, 1, basis=basis)
    with pytest.raises(ConfigError):
        frequency_sweep(dev, drive, 1e5, 2e5, 11, spacing="cubic", basis=basis)


def test_sweep_peak_near_damped_resonance(dev_fast):
    basis = memsd.modal_basis(dev_fast)
    f1 = basis.frequency_hz
    zeta = dev_fast.damping.zeta_value
    drive = DriveSignal(mode="resonator", v_dc=1.0, v_amp=0.01, f_in=f1)
    resp = frequency_sweep(dev_fast, drive, 0.94 * f1, 1.06 * f1, 25, basis=basis)
    assert resp.settled.all()
    grid_step = resp.freq_hz[1] - resp.freq_hz[0]
    f_peak_theory = f1 * math.sqrt(1.0 - 2.0 * zeta**2)
    f_peak = resp.freq_hz[int(np.argmax(resp.amp_m))]
    assert abs(f_peak - f_peak_theory) <= grid_step


def test_sweep_matches_linear_transfer_function(dev_fast):
    # off-resonance points across [f1/2, 2 f1] follow F1 |H(j w)| closely
    basis = memsd.modal_basis(dev_fast)
    f1 = basis.frequency_hz
    zeta = dev_fast.damping.zeta_value
    drive = DriveSignal(mode="resonator", v_dc=1.0, v_amp=0.01, f_in=f1)
    resp = frequency_sweep(dev_fast, drive, 0.5 * f1, 2.0 * f1, 4, spacing="log", basis=basis)
    f_amp = force_harmonics(drive, dev_fast.input_electrode, dev_fast.beam,
                            dev_fast.material, basis.shape).at_drive
    r = resp.freq_hz / f1
    h_mag = 1.0 / (basis.k_eff * np.sqrt((1.0 - r**2) ** 2 + (2.0 * zeta * r) ** 2))
    np.testing.assert_allclose(resp.amp_m, f_amp * h_mag, rtol=2e-2)


def test_sweep_phase_crosses_quadrature(dev_fast):
    basis = memsd.modal_basis(dev_fast)
    f1 = basis.frequency_hz
    drive = DriveSignal(mode="resonator", v_dc=1.0, v_amp=0.01, f_in=f1)
    resp = frequency_sweep(dev_fast, drive, 0.9 * f1, 1.1 * f1, 5, basis=basis)
    # resonator wiring: the drive-frequency force is -2 V_dc v sin(wt), so the
    # displacement sits in anti-phase with the source below resonance and in
    # phase above it, passing through quadrature at the peak
    assert abs(resp.phase_rad[0]) > 3 * math.pi / 4
    assert abs(resp.phase_rad[-1]) < math.pi / 4
    assert abs(abs(resp.phase_rad[2]) - math.pi / 2) < math.pi / 4


def test_sweep_doubler_mode_peaks_at_half_resonance(dev_fast):
    # sweeping the doubler drive around f1/2: the 2 f_in response component
    # peaks when f_in = f1/2
    basis = memsd.modal_basis(dev_fast)
    f1 = basis.frequency_hz
    drive = DriveSignal(mode="doubler", v_dc=10.0, v_amp=5.0, f_in=0.5 * f1)
    resp = frequency_sweep(dev_fast, drive, 0.46 * f1, 0.54 * f1, 11, basis=basis)
    grid_step = resp.freq_hz[1] - resp.freq_hz[0]
    f_peak = resp.freq_hz[int(np.argmax(resp.amp_m))]
    assert abs(f_peak - 0.5 * f1) <= grid_step
    assert np.max(resp.amp_m) > 1e-10  # nm-scale resonant response


def test_sweep_unsettled_points_flagged(dev_fast):
    basis = memsd.modal_basis(dev_fast)
    f1 = basis.frequency_hz
    drive = DriveSignal(mode="resonator", v_dc=1.0, v_amp=0.01, f_in=f1)
    with pytest.warns(UnsettledWarning):
        resp = frequency_sweep(dev_fast, drive, 0.98 * f1, 1.02 * f1, 3,
                               basis=basis, settle_cap_cycles=15)
    assert not resp.settled.all()
