"""CSV writers and readers for all exported artifacts.

Floats are written with repr (shortest round-trip form), so re-running a
scenario with identical inputs produces byte-identical files and every file
parses back to the exact arrays that were written.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .fem import FemModalResult
from .modal import ModeShape
from .spectral import Spectrum
from .transient import FrequencyResponse, Trajectory

TRAJECTORY_HEADER = ["t_s", "q_m", "qdot_mps", "C_out_F", "i_o_A", "v_load_V"]
RESPONSE_HEADER = ["f_Hz", "amp_m", "phase_rad", "i_amp_A"]
SPECTRUM_HEADER = ["f_Hz", "amplitude"]
MODE_SHAPE_HEADER = ["x_m", "phi"]
FEM_HEADER = ["node", "x_m", "deflection", "rotation"]


def _write_rows(path, header, columns):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in zip(*columns):
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])


def _read_columns(path, header, casts):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        found = next(reader)
        if found != header:
            raise ConfigError(f"{path}: expected header {header}, found {found}")
        rows = [[cast(cell) for cast, cell in zip(casts, row)] for row in reader]
    return [np.array(col) for col in zip(*rows)] if rows else [np.empty(0) for _ in header]


def write_mode_shape_csv(path, shape: ModeShape, n_points: int = 201):
    x = np.linspace(0.0, shape.length, n_points)
    _write_rows(path, MODE_SHAPE_HEADER, [[float(v) for v in x], [float(v) for v in shape(x)]])


def read_mode_shape_csv(path):
    x, phi = _read_columns(path, MODE_SHAPE_HEADER, [float, float])
    return x, phi


def write_fem_csv(path, result: FemModalResult, beam_length: float, mode: int = 1):
    vec = result.mode_vectors[mode - 1]
    n_nodes = vec.shape[0]
    x = np.linspace(0.0, beam_length, n_nodes)
    _write_rows(
        path,
        FEM_HEADER,
        [
            list(range(n_nodes)),
            [float(v) for v in x],
            [float(v) for v in vec[:, 0]],
            [float(v) for v in vec[:, 1]],
        ],
    )


def read_fem_csv(path):
    node, x, deflection, rotation = _read_columns(path, FEM_HEADER, [int, float, float, float])
    return node, x, deflection, rotation


def write_trajectory_csv(path, traj: Trajectory):
    t = traj.time
    _write_rows(
        path,
        TRAJECTORY_HEADER,
        [
            [float(v) for v in t],
            [float(v) for v in traj.q],
            [float(v) for v in traj.q_dot],
            [float(v) for v in traj.c_out],
            [float(v) for v in traj.i_o],
            [float(v) for v in traj.v_load],
        ],
    )


def read_trajectory_csv(path):
    return _read_columns(path, TRAJECTORY_HEADER, [float] * 6)


def write_frequency_response_csv(path, resp: FrequencyResponse):
    _write_rows(
        path,
        RESPONSE_HEADER,
        [
            [float(v) for v in resp.freq_hz],
            [float(v) for v in resp.amp_m],
            [float(v) for v in resp.phase_rad],
            [float(v) for v in resp.i_amp],
        ],
    )


def read_frequency_response_csv(path):
    return _read_columns(path, RESPONSE_HEADER, [float] * 4)


def write_spectrum_csv(path, spec: Spectrum):
    _write_rows(
        path,
        SPECTRUM_HEADER,
        [[float(v) for v in spec.freq_hz], [float(v) for v in spec.amplitude]],
    )


def read_spectrum_csv(path):
    f, a = _read_columns(path, SPECTRUM_HEADER, [float, float])
    return f, a
