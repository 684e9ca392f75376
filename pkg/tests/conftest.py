import sys
from pathlib import Path

import pytest

from fblv import GridSpec, ModelParams

sys.path.insert(0, str(Path(__file__).parent))  # make `oracles` importable


@pytest.fixture
def weak_params() -> ModelParams:
    return ModelParams(k=0.5, h=0.5, r=1.0, D=1.0, mu=1.0, rho=1.0, s0=2.0)


@pytest.fixture
def small_grid() -> GridSpec:
    return GridSpec(n_cells=64, dt=1e-3, t_max=1.0)
