"""
Pytest configuration file for NehariLab tests.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add the project root to the path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from neharilab.core.grid import assemble_stiffness, build_grid
from neharilab.core.nehari import EnergyFunctional
from neharilab.core.spectrum import weighted_eigs
from neharilab.models import section5_model

# 3 pi^4 / (8 sqrt 2): 1 / int |e_1|^3 for the H^1-normalized e_1 of (0, 1)
T_E1_CONTINUUM = 3.0 * np.pi**4 / (8.0 * np.sqrt(2.0))


def unit_interval(n: int = 255):
    return build_grid(1, [(0.0, 1.0)], [n])


def near_boundary_field(spec, delta: float) -> np.ndarray:
    """
    Unit combination of e_1 and the first eigenfunction with lambda_j > 1.

    The eigenfunctions are H^1-normalized with int eta e_j^2 = 1/lambda_j, so
    the mix is chosen to give int eta v^2 - q(v, v) = delta.
    """
    lam = spec.eigenvalues
    j = int(np.flatnonzero(lam > 1.0)[0])
    weight = (1.0 + delta - 1.0 / lam[j]) / (1.0 / lam[0] - 1.0 / lam[j])
    return np.sqrt(weight) * spec.eigenvectors[:, 0] + np.sqrt(1.0 - weight) * spec.eigenvectors[:, j]


@pytest.fixture
def sample_config():
    """
    Return a sample run configuration for testing.
    """
    return {
        "grid": {"dim": 1, "extents": [[0.0, 1.0]], "counts": [127]},
        "model": {"kind": "section5", "theta": 12.0, "eta": 1000.0},
        "spectrum": {"m": 5},
        "solve": {"tol": 1e-8, "max_iter": 5000, "restarts": 1, "seed": 7},
        "verify": {"sobolev": 1.0, "beta_ladder": [1e3, 1e4, 1e5, 1e6]},
        "logging": {"level": "warning"},
    }


@pytest.fixture
def grid():
    """Unit interval, 255 interior nodes."""
    return unit_interval(255)


@pytest.fixture
def form(grid):
    return assemble_stiffness(grid)


@pytest.fixture
def small_form():
    """Unit interval, 127 interior nodes."""
    return assemble_stiffness(unit_interval(127))


@pytest.fixture
def section5():
    """The piecewise model with theta = 12, eta = 1000."""
    return section5_model(12.0, 1000.0)


@pytest.fixture
def functional(section5, form):
    return EnergyFunctional(section5, form)


@pytest.fixture
def eta_spectrum(form):
    """First eigenpairs of the constant weight 1000 on the unit interval."""
    return weighted_eigs(form, np.full(form.grid.size, 1000.0), 8)


@pytest.fixture
def unit_spectrum(form):
    """First eigenpairs of the unweighted Dirichlet Laplacian."""
    return weighted_eigs(form, np.ones(form.grid.size), 5)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running numerical checks")
