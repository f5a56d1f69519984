"""Finite-element modal analysis with two-node Hermite (cubic) beam elements.

Stands in for the commercial FEM runs used to verify the analytic design
frequencies.  Elements carry 4 DOF (deflection + rotation at each node) with
the consistent mass matrix; the clamp removes both DOFs of node 0.  Meshes
here are tiny (<= ~130 DOF), so dense assembly plus a LAPACK generalized
symmetric eigensolve is plenty.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .device import BeamGeometry, Material, section_properties
from .errors import ConfigError, ConvergenceError

# Local DOF order per element: [w_i, theta_i, w_j, theta_j]


def hermite_beam_matrices(ei: float, rho_a: float, le: float) -> tuple[np.ndarray, np.ndarray]:
    """4x4 stiffness and consistent mass matrices of one beam element.

    ei: flexural rigidity E*I (N m^2); rho_a: mass per length (kg/m);
    le: element length (m).
    """
    c = ei / le**3
    ke = c * np.array(
        [
            [12.0, 6.0 * le, -12.0, 6.0 * le],
            [6.0 * le, 4.0 * le**2, -6.0 * le, 2.0 * le**2],
            [-12.0, -6.0 * le, 12.0, -6.0 * le],
            [6.0 * le, 2.0 * le**2, -6.0 * le, 4.0 * le**2],
        ]
    )
    m = rho_a * le / 420.0
    me = m * np.array(
        [
            [156.0, 22.0 * le, 54.0, -13.0 * le],
            [22.0 * le, 4.0 * le**2, 13.0 * le, -3.0 * le**2],
            [54.0, 13.0 * le, 156.0, -22.0 * le],
            [-13.0 * le, -3.0 * le**2, -22.0 * le, 4.0 * le**2],
        ]
    )
    return ke, me


def assemble_cantilever(
    beam: BeamGeometry, material: Material, n_elements: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Assemble global K, M over a uniform mesh and apply the clamp.

    Returns (K, M, node_x) where K and M cover the 2*n_elements free DOFs
    (node 0 removed) and node_x holds all node positions including the clamp.
    """
    sec = section_properties(beam)
    ei = material.youngs_modulus * sec.second_moment
    rho_a = material.density * sec.area
    le = beam.length / n_elements
    ke, me = hermite_beam_matrices(ei, rho_a, le)

    n_dof = 2 * (n_elements + 1)
    k_full = np.zeros((n_dof, n_dof))
    m_full = np.zeros((n_dof, n_dof))
    for e in range(n_elements):
        sl = slice(2 * e, 2 * e + 4)
        k_full[sl, sl] += ke
        m_full[sl, sl] += me
    node_x = np.linspace(0.0, beam.length, n_elements + 1)
    return k_full[2:, 2:], m_full[2:, 2:], node_x


@dataclass(frozen=True)
class FemModalResult:
    """Eigensolution on a given mesh: ascending frequencies and nodal vectors.

    mode_vectors[i] has shape (n_nodes, 2): columns are deflection and
    rotation, clamped node included (zeros).
    """

    n_elements: int
    frequencies_hz: np.ndarray
    mode_vectors: list[np.ndarray]

    def __post_init__(self):
        f = self.frequencies_hz
        if np.any(f <= 0.0) or np.any(np.diff(f) <= 0.0):
            raise ConvergenceError("FE frequencies must be positive and strictly ascending")


def fem_modal(
    beam: BeamGeometry, material: Material, n_elements: int, n_modes: int
) -> FemModalResult:
    """Lowest n_modes flexural modes of the clamped-free beam on a uniform mesh.

    Solves K v = omega^2 M v via Cholesky reduction of M (inside LAPACK's
    sygvd driver), polishes each pair by shifted inverse iteration, and
    verifies the relative residual against 1e-10 or the float64
    certification floor of the pencil, whichever is larger.
    """
    if n_modes < 1:
        raise ConfigError("n_modes must be >= 1")
    if n_elements < n_modes + 2:
        raise ConfigError(f"need n_elements >= n_modes + 2, got {n_elements} for {n_modes} modes")

    k_mat, m_mat, node_x = assemble_cantilever(beam, material, n_elements)
    n_free = k_mat.shape[0]
    try:
        vals, vecs = scipy.linalg.eigh(k_mat, m_mat, subset_by_index=(0, n_modes - 1))
        lam_max = scipy.linalg.eigh(
            k_mat, m_mat, subset_by_index=(n_free - 1, n_free - 1), eigvals_only=True
        )[0]
    except scipy.linalg.LinAlgError as exc:
        raise ConvergenceError(f"generalized eigensolve failed (singular mass matrix?): {exc}") from exc

    # the block solve leaves low modes with residuals well above their floor;
    # two Rayleigh-quotient inverse-iteration steps polish each pair down to it
    for i in range(n_modes):
        lam, vec = vals[i], vecs[:, i]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # the shifted matrix is near-singular by design
            for _ in range(2):
                try:
                    step = scipy.linalg.solve(k_mat - lam * m_mat, m_mat @ vec)
                except scipy.linalg.LinAlgError:
                    break  # exactly singular shift: the pair is already converged
                vec = step / np.sqrt(step @ m_mat @ step)
                lam = (vec @ k_mat @ vec) / (vec @ m_mat @ vec)
        if abs(lam - vals[i]) > 1e-6 * vals[i]:
            raise ConvergenceError(f"eigenpair {i + 1} polish drifted off its estimate")
        vals[i] = lam
        vecs[:, i] = vec

    # a float64 eigenvector cannot certify a residual below ~eps*lam_max/lam
    # (storage rounding alone projects onto the stiff modes), so the 1e-10
    # target widens to that floor on fine meshes
    eps = np.finfo(float).eps
    for i in range(n_modes):
        residual = k_mat @ vecs[:, i] - vals[i] * (m_mat @ vecs[:, i])
        rel = np.linalg.norm(residual) / np.linalg.norm(k_mat @ vecs[:, i])
        tol = max(1e-10, 0.02 * eps * lam_max / vals[i])
        if not rel < tol:
            raise ConvergenceError(f"eigenpair {i + 1} residual {rel:.2e} exceeds {tol:.2e}")

    frequencies = np.sqrt(vals) / (2.0 * np.pi)
    vectors = []
    for i in range(n_modes):
        full = np.zeros((len(node_x), 2))
        full[1:, 0] = vecs[0::2, i]
        full[1:, 1] = vecs[1::2, i]
        vectors.append(full)
    return FemModalResult(n_elements=n_elements, frequencies_hz=frequencies, mode_vectors=vectors)


def tip_normalized_deflection(result: FemModalResult, mode: int = 1) -> np.ndarray:
    """Nodal deflections of a mode scaled to unit tip deflection."""
    vec = result.mode_vectors[mode - 1][:, 0]
    tip = vec[-1]
    if tip == 0.0:
        raise ConvergenceError("FE mode has zero tip deflection; cannot tip-normalize")
    return vec / tip
