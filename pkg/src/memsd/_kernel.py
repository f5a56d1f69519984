"""JIT-compiled fixed-step RK4 core for the single-mode reduced-order model.

The electrode coupling integrals are evaluated inline on the same fixed
Simpson grids the public electrostatics operations use, so kernel forces are
bit-identical to the quadrature definitions.  fastmath stays off: runs must
be exactly reproducible.
"""

import numpy as np
from numba import njit


@njit(cache=True, fastmath=False, inline="always")
def _gradient_sum(q, gap, phi, grad_num):
    total = 0.0
    for j in range(phi.shape[0]):
        den = gap - q * phi[j]
        total += grad_num[j] / (den * den)
    return total


@njit(cache=True, fastmath=False, inline="always")
def _dv_input(t, v_dc, v_amp, mode_doubler, is_chirp, omega, c0, c1, t_end, omega_end, phase_end):
    if is_chirp:
        if t <= t_end:
            phase = c0 * t + c1 * t * t
        else:
            phase = phase_end + omega_end * (t - t_end)
    else:
        phase = omega * t
    vi = v_amp * np.sin(phase)
    if mode_doubler:
        return vi
    return v_dc - vi


@njit(cache=True, fastmath=False, inline="always")
def _accel(q, v, dv_in, v_dc, m, k, c,
           gap_in, phi_in, grad_num_in, gap_out, phi_out, grad_num_out):
    g_in = _gradient_sum(q, gap_in, phi_in, grad_num_in)
    g_out = _gradient_sum(q, gap_out, phi_out, grad_num_out)
    force = 0.5 * dv_in * dv_in * g_in + 0.5 * v_dc * v_dc * g_out
    return (force - k * q - c * v) / m


@njit(cache=True, fastmath=False)
def integrate_rom(
    q0, v0, dt, n_steps, step_offset,
    m, k, c,
    gap_in, phi_in, grad_num_in,
    gap_out, phi_out, grad_num_out,
    v_dc, v_amp, mode_doubler,
    is_chirp, omega, c0, c1, t_end, omega_end, phase_end,
    q_hi, q_lo,
    q_arr, v_arr,
):
    """Advance n_steps of classical RK4, filling q_arr/v_arr (length n_steps+1).

    Sample i is the state at time (step_offset + i) * dt; index 0 holds the
    initial state.  Returns -1 on success, or the sample index at which the
    deflection left (q_lo, q_hi) -- gap closure on one of the spans.
    """
    q = q0
    v = v0
    q_arr[0] = q
    v_arr[0] = v
    for i in range(n_steps):
        t = (step_offset + i) * dt

        a1 = _accel(q, v, _dv_input(t, v_dc, v_amp, mode_doubler, is_chirp, omega, c0, c1, t_end, omega_end, phase_end),
                    v_dc, m, k, c, gap_in, phi_in, grad_num_in, gap_out, phi_out, grad_num_out)
        q2 = q + 0.5 * dt * v
        v2 = v + 0.5 * dt * a1
        th = t + 0.5 * dt
        a2 = _accel(q2, v2, _dv_input(th, v_dc, v_amp, mode_doubler, is_chirp, omega, c0, c1, t_end, omega_end, phase_end),
                    v_dc, m, k, c, gap_in, phi_in, grad_num_in, gap_out, phi_out, grad_num_out)
        q3 = q + 0.5 * dt * v2
        v3 = v + 0.5 * dt * a2
        a3 = _accel(q3, v3, _dv_input(th, v_dc, v_amp, mode_doubler, is_chirp, omega, c0, c1, t_end, omega_end, phase_end),
                    v_dc, m, k, c, gap_in, phi_in, grad_num_in, gap_out, phi_out, grad_num_out)
        q4 = q + dt * v3
        v4 = v + dt * a3
        tf = t + dt
        a4 = _accel(q4, v4, _dv_input(tf, v_dc, v_amp, mode_doubler, is_chirp, omega, c0, c1, t_end, omega_end, phase_end),
                    v_dc, m, k, c, gap_in, phi_in, grad_num_in, gap_out, phi_out, grad_num_out)

        q = q + dt * (v + 2.0 * v2 + 2.0 * v3 + v4) / 6.0
        v = v + dt * (a1 + 2.0 * a2 + 2.0 * a3 + a4) / 6.0
        q_arr[i + 1] = q
        v_arr[i + 1] = v
        if q >= q_hi or q <= q_lo:
            return i + 1
    return -1
