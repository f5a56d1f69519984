import warnings

import numpy as np
import pytest

import memsd
from memsd.electrostatics import DriveSignal
from memsd.errors import UnsettledWarning
from memsd.transient import simulate


@pytest.fixture(scope="session")
def dev455():
    return memsd.preset("beam-455kHz")


@pytest.fixture(scope="session")
def dev1m():
    return memsd.preset("beam-1MHz")


@pytest.fixture(scope="session")
def basis455(dev455):
    return memsd.modal_basis(dev455)


@pytest.fixture(scope="session")
def basis1m(dev1m):
    return memsd.modal_basis(dev1m)


@pytest.fixture(scope="session", autouse=True)
def warm_integrator(dev455, basis455):
    # compile the JIT kernel once up front so timed tests measure physics,
    # not compilation
    f1 = basis455.frequency_hz
    drive = DriveSignal(mode="resonator", v_dc=0.0, v_amp=0.0, f_in=f1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UnsettledWarning)
        simulate(dev455, drive, duration=10.0 / f1, dt=1.0 / (400.0 * f1),
                 basis=basis455, q0=1e-12)


@pytest.fixture()
def rng():
    return np.random.default_rng(20260809)
