"""Cross-diffusion solvers with Wasserstein gradient-flow structure.

Subpackages by capability:

- ``measures``: grids, cell-averaged densities, quantile transforms
- ``transport1d``: exact 1D optimal transport (distances, maps, potentials)
- ``energies``: interaction energy, Boltzmann entropy, pressures
- ``jko``: minimizing-movement stepping (Lagrangian and entropic solvers)
- ``hyperbolic``: rank-deficient system (splitting and plan transport)
- ``skt``: correlated 2D joint-density dynamics and decoupled variants
- ``fdref``: independent finite-difference references and closed forms
- ``diagnostics``: run records and estimate checks
- ``cli``: config-driven runner (``btflow run``, ``btflow list``)
"""

from .diagnostics import CheckResult, RunRecord
from .energies import (
    CouplingMatrix,
    EnergyReport,
    energy_dirichlet,
    energy_quadratic,
    energy_report,
    entropy_boltzmann,
    pressure,
)
from .measures import (
    Density,
    DensityVector,
    Grid1D,
    Grid2D,
    JointDensity,
    QuantileMap,
    mass,
    normalize,
    pushforward_1d,
    second_moment,
    to_density,
    to_quantiles,
)
from .transport1d import (
    PotentialField,
    kantorovich_potential_1d,
    optimal_map_1d,
    w2_exact,
    w2_product,
)

__all__ = [
    "CheckResult",
    "CouplingMatrix",
    "Density",
    "DensityVector",
    "EnergyReport",
    "Grid1D",
    "Grid2D",
    "JointDensity",
    "PotentialField",
    "QuantileMap",
    "RunRecord",
    "energy_dirichlet",
    "energy_quadratic",
    "energy_report",
    "entropy_boltzmann",
    "kantorovich_potential_1d",
    "mass",
    "normalize",
    "optimal_map_1d",
    "pressure",
    "pushforward_1d",
    "second_moment",
    "to_density",
    "to_quantiles",
    "w2_exact",
    "w2_product",
]

__version__ = "0.1.0"
