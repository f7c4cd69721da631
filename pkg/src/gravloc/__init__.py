"""Gravity-related localisation, Schroedinger-Newton ground states and gravitational decoherence."""

from . import density, master_evolution, potential, sn_solver, units
from .density import MassDensityProfile, ProfileKind, atomic_composite, point_mass, smeared_ball, smooth, uniform_ball
from .errors import (
    DivergentSelfEnergy,
    FitIllConditioned,
    GravlocError,
    GridTooSmall,
    InsufficientDecay,
    MismatchedBulk,
    NoBoundState,
    NoDecoherence,
    NonConvergence,
    NonPositiveWidth,
    OutOfModelDomain,
    PointMassUndefined,
    QuadratureError,
    StabilityViolation,
)
from .master_evolution import DecoherenceObservables, DensityMatrixGrid, evolve
from .potential import PairPotentialKernel, harmonic_expansion, pair_interaction
from .sn_solver import RadialGrid, RadialWavefunction, ground_state, superposition_persistence_check
from .units import UnitSystem

__version__ = "0.1.0"
