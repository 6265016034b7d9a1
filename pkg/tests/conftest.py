import json

import numpy as np
import pytest

from fiberring.config import Drive, NetworkConfig


@pytest.fixture
def ring3():
    """Reference operating point: n=3 ring, atoms 1 and 3 driven on one slot."""
    return NetworkConfig(
        n=3,
        nu=1.0,
        delta2=18.5,
        drives=(
            Drive(atom=1, rabi=1.0, detuning=16.0),
            Drive(atom=3, rabi=1.0, detuning=16.0),
        ),
    )


@pytest.fixture
def ring3_decoherent(ring3):
    import dataclasses

    return dataclasses.replace(ring3, gamma=3e-3, kappa=3e-3)


@pytest.fixture
def rng():
    return np.random.default_rng(20260823)


@pytest.fixture
def config_file(tmp_path):
    """Write a config dict to a JSON file and return its path."""

    def write(data, name="config.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data))
        return str(path)

    return write


RING3_DICT = {
    "n": 3,
    "nu": 1.0,
    "delta2": 18.5,
    "photon_cutoff": 1,
    "drives": [
        {"atom": 1, "branch": "e-r", "d": 1, "rabi": 1.0, "detuning": 16.0},
        {"atom": 3, "branch": "e-r", "d": 1, "rabi": 1.0, "detuning": 16.0},
    ],
}


@pytest.fixture
def ring3_file(config_file):
    return config_file(RING3_DICT)
