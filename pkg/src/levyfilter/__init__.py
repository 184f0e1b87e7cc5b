"""Nonlocal Fokker-Planck solver, continuous-discrete and Zakai filters for scalar
SDEs driven by symmetric alpha-stable Levy noise."""
__version__ = "0.1.0"

from .levy import StableParams, JumpMeasure, levy_constant, sample_stable_increments
from .operator import (Grid1D, OperatorMatrix, StateFunction, assemble_nonlocal,
                       assemble_operator, apply_generator, double_well, identity_field,
                       polynomial_field, stability_limit, zero_field)
from .fokker_planck import (DensityEvolution, DensityField, InstabilityError, Propagator,
                            init_density, solve_fp, step_fp)
from .filter_cd import DegenerateEvidenceError, bayes_update, gaussian_likelihood, run_cd_filter
from .zakai import run_zakai, step_zakai
from .sde import (ContinuousObservationPath, DiscreteObservations, Trajectory,
                  bootstrap_particle_filter, generate_continuous_obs, generate_discrete_obs,
                  monte_carlo_density, simulate_state)
from .orbit import MostProbableOrbit, TransitionEvent, detect_transitions, most_probable_orbit
from .kernels import BACKEND

__all__ = [
    "BACKEND", "ContinuousObservationPath", "DegenerateEvidenceError", "DensityEvolution",
    "DensityField", "DiscreteObservations", "Grid1D", "InstabilityError", "JumpMeasure",
    "MostProbableOrbit", "OperatorMatrix", "Propagator", "StableParams", "StateFunction",
    "Trajectory", "TransitionEvent", "apply_generator", "assemble_nonlocal",
    "assemble_operator", "bayes_update", "bootstrap_particle_filter", "detect_transitions",
    "double_well", "gaussian_likelihood", "generate_continuous_obs", "generate_discrete_obs",
    "identity_field", "init_density", "levy_constant", "monte_carlo_density",
    "most_probable_orbit", "polynomial_field", "run_cd_filter", "run_zakai",
    "sample_stable_increments", "simulate_state", "solve_fp", "stability_limit", "step_fp",
    "step_zakai", "zero_field",
]
