"""Spectral simulator and diagnostics for the bosonic Hartree-Fock-Bogoliubov system."""
from .conserved import ConservedReport, energy, particle_number
from .integrator import EvolutionAborted, SchemeConfig, evolve
from .lattice import Grid, make_grid
from .norms import NormConfig, NormReport, composite_norms
from .potentials import ConfigError, PotentialSpec
from .state import HFBState, build_initial_state, validate

__version__ = "0.1.0"

__all__ = [
    "ConservedReport",
    "energy",
    "particle_number",
    "EvolutionAborted",
    "SchemeConfig",
    "evolve",
    "Grid",
    "make_grid",
    "NormConfig",
    "NormReport",
    "composite_norms",
    "ConfigError",
    "PotentialSpec",
    "HFBState",
    "build_initial_state",
    "validate",
]
