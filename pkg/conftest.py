from pathlib import Path

import numpy as np
import pytest
import scanpy as sc

import garnet as gt

sc.settings.verbosity = 1

CONFIGS = Path(__file__).parent / 'configs'


@pytest.fixture
def configs_dir() -> Path:
    return CONFIGS


@pytest.fixture
def cryo_te101() -> gt.HybridSystem:
    return gt.datasets.measured_system('cryo', 'TE101')


@pytest.fixture
def cryo_te102() -> gt.HybridSystem:
    return gt.datasets.measured_system('cryo', 'TE102')


@pytest.fixture
def sweep_system() -> gt.HybridSystem:
    return gt.datasets.damping_sweep_system()


@pytest.fixture
def bare_te101() -> gt.HybridSystem:
    return gt.HybridSystem(cavity=gt.datasets.bare_cavity('cryo', 'TE101'))


@pytest.fixture
def te102_grid(cryo_te102) -> gt.SweepGrid:
    return gt.datasets.crossing_grid(cryo_te102, field_points=201, freq_points=201)


@pytest.fixture
def te102_map(cryo_te102, te102_grid):
    return gt.tl.spectrum_map(cryo_te102, te102_grid)


@pytest.fixture
def bare_trace(bare_te101):
    omega_c = bare_te101.cavity.omega_c
    grid = gt.SweepGrid([0.0], np.linspace(omega_c - 5e6, omega_c + 5e6, 401))
    return gt.tl.spectrum_map(bare_te101, grid)
