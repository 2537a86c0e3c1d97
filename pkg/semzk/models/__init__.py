"""
semzk data models

Pydantic models for grids and fields, solver configurations and trajectories,
Carleman parameters and test functions, and the reports written by the CLI.
"""

from .base import ErrorReport, ReportBase, Verdict
from .grid import Field, Grid2D, Multiplier, MultiplierKind, SpectralField
from .solver import CoefficientSet, InvariantRecord, ModelKind, ResidualSeries, SimulationReport, SolverConfig, Trajectory
from .riesz import ApEstimate, ApReport, Axis, BallFamily, NormEstimate, RieszReport, WeightedBoundReport
from .carleman import (
    CarlemanParams,
    CarlemanReport,
    CommutatorReport,
    CutoffSet,
    LowerOrderTerms,
    PersistenceReport,
    InterpolationReport,
    Representation,
    TestFunction,
    TimeProfile,
)
from .initial_data import GaussianData, InitialData, LineSolitonData, PerturbedData, SnapshotData
from .uniqueness import AnnulusReport, DecayFit, ExperimentConfig, UniquenessReport
from .run_config import RunConfig

__all__ = [
    # Base
    "ReportBase",
    "ErrorReport",
    "Verdict",

    # Spectral substrate
    "Grid2D",
    "Field",
    "SpectralField",
    "MultiplierKind",
    "Multiplier",

    # Solver
    "ModelKind",
    "SolverConfig",
    "Trajectory",
    "InvariantRecord",
    "CoefficientSet",
    "ResidualSeries",
    "SimulationReport",

    # Riesz and A_p
    "Axis",
    "BallFamily",
    "ApEstimate",
    "NormEstimate",
    "WeightedBoundReport",
    "RieszReport",
    "ApReport",

    # Carleman
    "CarlemanParams",
    "TimeProfile",
    "TestFunction",
    "CutoffSet",
    "LowerOrderTerms",
    "Representation",
    "CarlemanReport",
    "CommutatorReport",
    "PersistenceReport",
    "InterpolationReport",

    # Initial data
    "InitialData",
    "GaussianData",
    "LineSolitonData",
    "PerturbedData",
    "SnapshotData",

    # Uniqueness
    "AnnulusReport",
    "DecayFit",
    "ExperimentConfig",
    "UniquenessReport",

    # CLI
    "RunConfig",
]
