"""Amplitude spectra, resonance fitting, and spectral-purity reporting.

The software counterpart of bench spectrum analysis: windowed radix-2 FFTs
scaled so a bin-centered sinusoid reads its true amplitude, peak location by
3-point parabolic interpolation on log amplitude, and Q extracted from the
half-power (1/sqrt(2)) bandwidth with the damping ratio recovered through
Q = 1/(2 zeta sqrt(1 - zeta^2)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .device import zeta_from_q
from .errors import ConfigError, SpectralFitError
from .transient import FrequencyResponse

_WINDOWS = ("rect", "hann")


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Spectrum:
    """One-sided amplitude spectrum of a uniformly sampled signal.

    complex_bins holds the raw FFT of the windowed, zero-padded signal;
    amplitude is scaled by 2/sum(window) (1/sum at DC and Nyquist) so that a
    full-scale bin-centered sinusoid reports its physical amplitude.
    """

    freq_hz: np.ndarray
    complex_bins: np.ndarray
    amplitude: np.ndarray
    window: str
    n_fft: int
    n_samples: int
    dt: float

    def __post_init__(self):
        if not _is_pow2(self.n_fft):
            raise ConfigError("FFT size must be a power of two")

    @property
    def bin_spacing(self) -> float:
        return 1.0 / (self.n_fft * self.dt)


def _window_values(name: str, n: int) -> np.ndarray:
    if name == "rect":
        return np.ones(n)
    if name == "hann":
        # periodic Hann; sums to exactly n/2, i.e. coherent gain 1/2
        return 0.5 - 0.5 * np.cos(2.0 * math.pi * np.arange(n) / n)
    raise ConfigError(f"window must be one of {_WINDOWS}, got {name!r}")


def amplitude_spectrum(samples, dt: float, window: str = "hann", pad_to: int | None = None) -> Spectrum:
    """Windowed, zero-padded, coherent-gain-corrected amplitude spectrum.

    pad_to must be a power of two >= len(samples); by default the next power
    of two is used.  Requires at least 16 finite samples.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1 or len(x) < 16:
        raise ConfigError("need a 1-D signal with at least 16 samples")
    if not np.all(np.isfinite(x)):
        raise ConfigError("signal contains non-finite samples")
    if dt <= 0.0:
        raise ConfigError("dt must be positive")
    n = len(x)
    if pad_to is None:
        pad_to = 1 << (n - 1).bit_length()
    if not _is_pow2(pad_to) or pad_to < n:
        raise ConfigError(f"pad_to must be a power of two >= {n}, got {pad_to}")

    w = _window_values(window, n)
    buf = np.zeros(pad_to)
    buf[:n] = x * w
    bins = np.fft.rfft(buf)
    coherent_sum = float(np.sum(w))

    amplitude = np.abs(bins) * (2.0 / coherent_sum)
    amplitude[0] *= 0.5
    if pad_to % 2 == 0:
        amplitude[-1] *= 0.5
    freq = np.fft.rfftfreq(pad_to, d=dt)
    return Spectrum(
        freq_hz=freq,
        complex_bins=bins,
        amplitude=amplitude,
        window=window,
        n_fft=pad_to,
        n_samples=n,
        dt=dt,
    )


def reconstruct_time_samples(spec: Spectrum) -> np.ndarray:
    """Invert the forward transform back to the original samples.

    Exact (to roundoff) for the rect window; the Hann window zeroes the end
    samples and cannot be undone there.
    """
    if spec.window != "rect":
        raise ConfigError("reconstruction is defined for the rect window only")
    buf = np.fft.irfft(spec.complex_bins, n=spec.n_fft)
    return buf[: spec.n_samples]


def interpolated_peak(freq_hz: np.ndarray, amplitude: np.ndarray, index: int) -> tuple[float, float]:
    """Refine a local maximum by a 3-point parabola on log amplitude."""
    if index <= 0 or index >= len(amplitude) - 1:
        return float(freq_hz[index]), float(amplitude[index])
    triple = amplitude[index - 1 : index + 2]
    if np.any(triple <= 0.0):
        return float(freq_hz[index]), float(amplitude[index])
    la, lb, lc = np.log(triple)
    denom = la - 2.0 * lb + lc
    if denom == 0.0:
        return float(freq_hz[index]), float(amplitude[index])
    shift = 0.5 * (la - lc) / denom
    shift = float(np.clip(shift, -0.5, 0.5))
    step = freq_hz[index + 1] - freq_hz[index] if shift >= 0 else freq_hz[index] - freq_hz[index - 1]
    f_peak = float(freq_hz[index] + shift * step)
    a_peak = float(math.exp(lb - 0.25 * (la - lc) * shift))
    return f_peak, a_peak


@dataclass(frozen=True)
class ResonanceFit:
    """Peak frequency/amplitude, half-power bandwidth, and Q/zeta."""

    peak_hz: float
    peak_amplitude: float
    bandwidth_hz: float
    q_factor: float
    zeta: float

    def __post_init__(self):
        if not self.bandwidth_hz > 0.0:
            raise SpectralFitError("half-power bandwidth must be positive")


def _crossing(freq, amp, level, start, direction) -> float:
    """Frequency where amp crosses `level`, scanning from `start`.

    Linear interpolation in amplitude between samples, matching the
    1/sqrt(2)-of-peak bandwidth definition literally.
    """
    i = start
    while 0 <= i + direction < len(amp):
        j = i + direction
        if amp[j] <= level:
            lo_f, hi_f = freq[i], freq[j]
            lo_a, hi_a = amp[i], amp[j]
            return float(lo_f + (level - lo_a) * (hi_f - lo_f) / (hi_a - lo_a))
        i = j
    raise SpectralFitError(
        "half-power crossing runs out of band; widen the sweep or lengthen the capture"
    )


def resonance_fit(source, amplitude=None) -> ResonanceFit:
    """Extract peak, -3 dB bandwidth, Q, and zeta from a resonance curve.

    Accepts a Spectrum, a FrequencyResponse, or a pair of arrays
    (frequencies, amplitudes).  The curve must contain one dominant interior
    peak with both half-power crossings inside the band.
    """
    if isinstance(source, Spectrum):
        freq, amp = source.freq_hz, source.amplitude
    elif isinstance(source, FrequencyResponse):
        freq, amp = source.freq_hz, source.amp_m
    else:
        freq = np.asarray(source, dtype=float)
        amp = np.asarray(amplitude, dtype=float)
    if len(freq) < 5:
        raise SpectralFitError("resonance fit needs at least 5 points")

    index = int(np.argmax(amp))
    if index == 0 or index == len(amp) - 1:
        raise SpectralFitError("no interior peak found in the analysis band")
    peak_hz, peak_amp = interpolated_peak(freq, amp, index)
    if peak_amp <= 0.0:
        raise SpectralFitError("peak amplitude is not positive")

    level = peak_amp / math.sqrt(2.0)
    f_lo = _crossing(freq, amp, level, index, -1)
    f_hi = _crossing(freq, amp, level, index, +1)
    bandwidth = f_hi - f_lo
    q = peak_hz / bandwidth
    if q < 1.0:
        raise SpectralFitError(f"extracted Q = {q:.3g} < 1; not a resonant peak")
    return ResonanceFit(
        peak_hz=peak_hz,
        peak_amplitude=peak_amp,
        bandwidth_hz=bandwidth,
        q_factor=q,
        zeta=zeta_from_q(q),
    )


@dataclass(frozen=True)
class HarmonicLevel:
    """One row of a purity report: harmonic order, location, amplitude, level."""

    order: int
    freq_hz: float
    amplitude: float
    db_rel_max: float


def purity_report(spec: Spectrum, fundamental_hz: float, n_harmonics: int) -> list[HarmonicLevel]:
    """Amplitudes at m * fundamental for m = 1..n_harmonics, in dB below the max.

    Each component is read at the interpolated local peak within +/-2 bins of
    the nominal frequency.  All requested harmonics must sit below Nyquist.
    """
    if fundamental_hz <= 0.0:
        raise ConfigError("fundamental frequency must be positive")
    if n_harmonics < 1:
        raise ConfigError("need at least one harmonic")
    nyquist = 0.5 / spec.dt
    if n_harmonics * fundamental_hz >= nyquist:
        raise ConfigError(
            f"harmonic {n_harmonics} * {fundamental_hz:.6g} Hz is beyond Nyquist ({nyquist:.6g} Hz)"
        )

    rows = []
    for m in range(1, n_harmonics + 1):
        target = m * fundamental_hz
        center = int(round(target / spec.bin_spacing))
        lo = max(center - 2, 0)
        hi = min(center + 2, len(spec.amplitude) - 1)
        local = lo + int(np.argmax(spec.amplitude[lo : hi + 1]))
        f_m, a_m = interpolated_peak(spec.freq_hz, spec.amplitude, local)
        rows.append((m, f_m, a_m))

    a_max = max(r[2] for r in rows)
    report = []
    for m, f_m, a_m in rows:
        if a_m > 0.0 and a_max > 0.0:
            db = 20.0 * math.log10(a_m / a_max)
        else:
            db = -math.inf
        report.append(HarmonicLevel(order=m, freq_hz=f_m, amplitude=a_m, db_rel_max=db))
    return report
