import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
sys.path.append(str(ROOT))
from belavkin.components.ensemble import (  # noqa: E402
    PureStateEnsemble,
    binary_ensemble as make_binary_ensemble,
    counterexample_ensemble,
)

ENSEMBLE_DIR = ROOT / "data" / "ensembles"


@pytest.fixture
def counterexample() -> PureStateEnsemble:
    return counterexample_ensemble()


@pytest.fixture
def orthonormal3() -> PureStateEnsemble:
    return PureStateEnsemble.create(np.eye(3), [0.5, 0.3, 0.2])


@pytest.fixture
def trine() -> PureStateEnsemble:
    angles = 2 * np.pi * np.arange(3) / 3
    return PureStateEnsemble.create(np.vstack([np.cos(angles), np.sin(angles)]), np.full(3, 1 / 3))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def binary_ensemble():
    return make_binary_ensemble


@pytest.fixture
def ensemble_dir() -> Path:
    return ENSEMBLE_DIR
