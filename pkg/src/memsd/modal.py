"""Clamped-free beam modal analysis: wavenumbers, mode shapes, frequencies.

The flexural eigenproblem of a uniform cantilever gives the characteristic
equation 1 + cos(b) cosh(b) = 0 for the dimensionless wavenumber b = k L.
Mode shapes are normalized to unit tip deflection, which makes the effective
modal mass exactly rho*A*L/4 for every mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .device import BeamGeometry, DeviceConfig, Material, section_properties
from .errors import ConfigError, ConvergenceError
from .quadrature import checked_simpson


def characteristic_residual(beta: float | np.ndarray):
    """Cosh-normalized residual of the clamped-free characteristic equation.

    Returns (1 + cos b cosh b)/cosh b = cos b + sech b, which stays
    well-conditioned at large b where the raw product overflows the few-ulp
    accuracy any double-precision root can deliver.
    """
    return np.cos(beta) + 1.0 / np.cosh(beta)


def _residual_slope(beta: float) -> float:
    return -math.sin(beta) - math.tanh(beta) / math.cosh(beta)


@lru_cache(maxsize=None)
def _wavenumbers_cached(count: int) -> tuple[float, ...]:
    roots = []
    for n in range(1, count + 1):
        if n == 1:
            lo, hi = 0.5 * math.pi, math.pi
        else:
            # roots alternate tightly around (n - 1/2) pi for n >= 2
            center = (n - 0.5) * math.pi
            lo, hi = center - 0.3, center + 0.3
        f_lo = float(characteristic_residual(lo))
        f_hi = float(characteristic_residual(hi))
        if f_lo * f_hi > 0.0:
            raise ConvergenceError(f"wavenumber bracket [{lo}, {hi}] does not change sign")
        # bisection guarantees the bracket, Newton polishes to machine precision
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            f_mid = float(characteristic_residual(mid))
            if f_lo * f_mid <= 0.0:
                hi, f_hi = mid, f_mid
            else:
                lo, f_lo = mid, f_mid
            if hi - lo < 1e-8:
                break
        beta = 0.5 * (lo + hi)
        for _ in range(8):
            step = float(characteristic_residual(beta)) / _residual_slope(beta)
            beta -= step
            if abs(step) < 1e-12 * beta:
                break
        roots.append(beta)
    return tuple(roots)


def cantilever_wavenumbers(count: int) -> np.ndarray:
    """First `count` dimensionless wavenumbers b_n of a clamped-free beam.

    b_1 = 1.87510...; for n >= 2 the roots hug (n - 1/2) pi.
    """
    if count < 1:
        raise ConfigError("wavenumber count must be >= 1")
    return np.array(_wavenumbers_cached(count))


class ModeShape:
    """Tip-normalized flexural mode shape of a clamped-free beam.

    Callable on positions x in [0, L] (scalar or array).  Evaluation uses the
    explicit-exponential rewrite of the cosh/sinh combination so large
    wavenumber-position products neither overflow nor cancel; the closed form
    phi = cosh - cos - sigma (sinh - sin), sigma = (cosh b + cos b)/(sinh b + sin b)
    is recovered identically.
    """

    def __init__(self, n: int, length: float):
        if n < 1:
            raise ConfigError("mode index must be >= 1")
        if length <= 0.0:
            raise ConfigError("beam length must be positive")
        self.n = n
        self.length = length
        self.beta = float(cantilever_wavenumbers(n)[-1])
        b = self.beta
        denom = math.sinh(b) + math.sin(b)
        self._sigma = (math.cosh(b) + math.cos(b)) / denom
        # 1 - sigma evaluated without cancellation: sinh - cosh = -exp(-b)
        self._one_minus_sigma = (math.sin(b) - math.cos(b) - math.exp(-b)) / denom
        self._tip = self._raw(1.0)  # equals 2 (-1)^(n+1); normalize to phi(L) = 1

    def _raw(self, xi):
        b = self.beta
        bx = b * np.asarray(xi, dtype=float)
        s = self._sigma
        return (
            0.5 * self._one_minus_sigma * np.exp(bx)
            + 0.5 * (1.0 + s) * np.exp(-bx)
            - np.cos(bx)
            + s * np.sin(bx)
        )

    def __call__(self, x):
        x_arr = np.asarray(x, dtype=float)
        if np.any(x_arr < 0.0) or np.any(x_arr > self.length):
            raise ConfigError("mode shape evaluated outside [0, L]")
        out = self._raw(x_arr / self.length) / self._tip
        return float(out) if np.isscalar(x) else out

    def derivative(self, x):
        """Slope d(phi)/dx; zero at the clamp by construction."""
        x_arr = np.asarray(x, dtype=float)
        if np.any(x_arr < 0.0) or np.any(x_arr > self.length):
            raise ConfigError("mode shape evaluated outside [0, L]")
        b = self.beta
        bx = b * x_arr / self.length
        s = self._sigma
        raw = (
            0.5 * self._one_minus_sigma * np.exp(bx)
            - 0.5 * (1.0 + s) * np.exp(-bx)
            + np.sin(bx)
            + s * np.cos(bx)
        ) * (b / self.length)
        out = raw / self._tip
        return float(out) if np.isscalar(x) else out

    def max_abs_on(self, x_start: float, x_end: float, samples: int = 513) -> float:
        """Largest |phi| over a span; used for gap-closure bookkeeping."""
        return float(np.max(np.abs(self(np.linspace(x_start, x_end, samples)))))


def mode_shape(n: int, x, beam: BeamGeometry):
    """Dimensionless deflection of mode n at position x (m from the clamp)."""
    return ModeShape(n, beam.length)(x)


def natural_frequency(n: int, beam: BeamGeometry, material: Material) -> float:
    """Natural frequency (Hz) of flexural mode n.

    f_n = (1/2pi) sqrt(b_n^4 / 12) (h / L^2) sqrt(E / rho) for the
    rectangular section; equivalent to (b_n^2/2pi) sqrt(E I / (rho A L^4)).
    """
    beta = float(cantilever_wavenumbers(n)[-1])
    return (
        (beta * beta / (2.0 * math.pi))
        * (beam.thickness / beam.length**2)
        * math.sqrt(material.youngs_modulus / (12.0 * material.density))
    )


class ModalScalars(NamedTuple):
    m_eff: float  # effective modal mass (kg)
    k_eff: float  # effective modal stiffness (N/m)


def modal_mass_stiffness(n: int, beam: BeamGeometry, material: Material) -> ModalScalars:
    """Galerkin mass and stiffness of mode n for the tip-normalized shape.

    m_eff = rho A int(phi^2 dx); the integral is L/4 exactly for these
    eigenfunctions, and the quadrature cross-check (1e-9 relative) guards the
    shape evaluation.  k_eff = (2 pi f_n)^2 m_eff.
    """
    shape = ModeShape(n, beam.length)
    _, area = section_properties(beam)
    integral = checked_simpson(lambda x: shape(x) ** 2, 0.0, beam.length, n=257, rel_tol=1e-9)
    m_eff = material.density * area * integral
    f_n = natural_frequency(n, beam, material)
    omega = 2.0 * math.pi * f_n
    return ModalScalars(m_eff=m_eff, k_eff=omega * omega * m_eff)


@dataclass(frozen=True)
class ModalBasis:
    """Retained mode: wavenumber, frequency, tip-normalized shape, Galerkin scalars."""

    n: int
    wavenumber: float
    frequency_hz: float
    shape: ModeShape
    m_eff: float
    k_eff: float

    def __post_init__(self):
        if abs(float(characteristic_residual(self.wavenumber))) > 1e-10:
            raise ConvergenceError("wavenumber fails the characteristic equation")
        if not self.m_eff > 0.0:
            raise ConfigError("effective modal mass must be positive")


def modal_basis(device: DeviceConfig, n: int = 1) -> ModalBasis:
    """Build the reduced-order basis for mode n of a device."""
    beam, material = device.beam, device.material
    scalars = modal_mass_stiffness(n, beam, material)
    return ModalBasis(
        n=n,
        wavenumber=float(cantilever_wavenumbers(n)[-1]),
        frequency_hz=natural_frequency(n, beam, material),
        shape=ModeShape(n, beam.length),
        m_eff=scalars.m_eff,
        k_eff=scalars.k_eff,
    )
