"""gapflow: a two-domain reaction-diffusion solver with Robin interface
coupling, its limit regimes, and a permeability laboratory."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    GapflowError,
    NumericalError,
    PreconditionError,
    StepFailure,
    UnsupportedRegimeError,
)
from .grid import CoupledField, GeometryCase, TwoDomainMesh, build_mesh
from .monotone import (
    AbsSubdiff,
    Cubic,
    IndicatorInterval,
    Linear,
    MonotoneGraph,
    OddPower,
    Zero,
    make_graph,
)
from .energy import EnergySpec, energy, gradient, prox
from .stepper import (
    PermeabilitySchedule,
    ProblemSpec,
    SolverConfig,
    Trajectory,
    solve_blowup_and_extend,
    solve_finite_alpha,
    solve_merged,
    solve_split,
    step,
)

__all__ = [
    "AbsSubdiff",
    "ConfigError",
    "CoupledField",
    "Cubic",
    "EnergySpec",
    "GapflowError",
    "GeometryCase",
    "IndicatorInterval",
    "Linear",
    "MonotoneGraph",
    "NumericalError",
    "OddPower",
    "PermeabilitySchedule",
    "PreconditionError",
    "ProblemSpec",
    "SolverConfig",
    "StepFailure",
    "Trajectory",
    "TwoDomainMesh",
    "UnsupportedRegimeError",
    "Zero",
    "build_mesh",
    "energy",
    "gradient",
    "make_graph",
    "prox",
    "solve_blowup_and_extend",
    "solve_finite_alpha",
    "solve_merged",
    "solve_split",
    "step",
]
