"""Phase-field laboratory: Allen-Cahn dynamics with sigma-parametrized
boundary laws, diffuse-measure diagnostics, first-variation checks and a
sharp-interface front-tracking oracle."""

from .errors import (
    ConfigurationError,
    ContactSingularityError,
    DivergenceError,
    ExtinctionError,
    PhaseLabError,
    ResolutionError,
    StabilityError,
    UsageError,
)
from .grid import Face, Grid2D, ScalarField2D, VectorField2D
from .solver import (
    CircleArc,
    DirichletFrozen,
    Dynamic,
    Halfspace,
    Line1D,
    NeumannZeroFlux,
    PhaseState,
    double_well,
    double_well_prime,
    init_profile,
    run,
    stable_dt,
    step,
)

__all__ = [
    "ConfigurationError",
    "ContactSingularityError",
    "DivergenceError",
    "ExtinctionError",
    "PhaseLabError",
    "ResolutionError",
    "StabilityError",
    "UsageError",
    "Face",
    "Grid2D",
    "ScalarField2D",
    "VectorField2D",
    "CircleArc",
    "DirichletFrozen",
    "Dynamic",
    "Halfspace",
    "Line1D",
    "NeumannZeroFlux",
    "PhaseState",
    "double_well",
    "double_well_prime",
    "init_profile",
    "run",
    "stable_dt",
    "step",
]

__version__ = "0.1.0"
