import numpy as np
import pytest

from btflow.energies import CouplingMatrix
from btflow.measures import DensityVector, Grid1D, normalize


def smooth_pair(n: int, x_min: float = 0.0, x_max: float = 1.0) -> DensityVector:
    """Smooth positive two-species benchmark data on n cells."""
    grid = Grid1D(n, x_min, x_max)
    xi = (grid.centers() - x_min) / grid.length
    u1 = normalize(1.0 + 0.25 * np.cos(np.pi * xi), grid)
    u2 = normalize(1.0 - 0.25 * np.cos(np.pi * xi), grid)
    return DensityVector.from_species([u1, u2])


@pytest.fixture
def pd_matrix():
    return CouplingMatrix(np.array([[2.0, 1.0], [1.0, 2.0]]))


@pytest.fixture
def unit_matrix():
    return CouplingMatrix(np.array([[1.0]]))
