"""Session-wide fixtures for the expensive shared pipelines.

The protocol-prepared compression classes, the five-level sweep, and the
fully noisy preparation each take tens of seconds; session scope keeps
them at one evaluation no matter how many test modules assert on them.
"""

import warnings

import numpy as np
import pytest

from sqcat.dynamics import NoiseConfig
from sqcat.experiments import compression_class_schedule, compression_sweep
from sqcat.gates import DeviceParams
from sqcat.hilbert import SpaceSpec
from sqcat.protocol import create_compressed_cat

CLASS_LABELS = (-3.0, -6.7, -7.6)
SWEEP_LEVELS = (0, -3, -6, -9, -12)


@pytest.fixture(scope="session")
def class_states():
    space = SpaceSpec(60)
    out = {}
    for label in CLASS_LABELS:
        res = create_compressed_cat(compression_class_schedule(label), space,
                                    outcome="e")
        out[label] = res.cavity_state
    return out


@pytest.fixture(scope="session")
def sweep_record():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return compression_sweep(list(SWEEP_LEVELS), 1.8,
                                 np.linspace(0.0, 150e-6, 9),
                                 DeviceParams(), bootstrap=0)


@pytest.fixture(scope="session")
def noisy_odd_cat():
    """Full-noise protocol run for the measured-parity comparison."""
    device = DeviceParams()
    res = create_compressed_cat(compression_class_schedule(-6.7), SpaceSpec(60),
                                outcome="e", noise=NoiseConfig(device))
    return res
