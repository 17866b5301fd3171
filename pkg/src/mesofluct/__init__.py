"""Gaussian dynamics of collective fluctuations in two dissipative spin chains.

The package builds the mesoscopic generator of the fluctuation operators of
two open spin-1/2 chains, evolves squeezed Gaussian states under it and
measures the entanglement that the common environment creates between the
chains.
"""

__version__ = "0.1.0"

from .dynamics import (
    CovarianceState,
    Propagator,
    closed_form_propagator,
    evolve_covariance,
    generator_matrix,
    propagator,
    propagator_batch,
    reduce_modes_13,
    reduced_trajectory,
    squeezed_initial_covariance,
)
from .entanglement import (
    ClosedFormContext,
    EntanglementTrajectory,
    SqueezeVariant,
    closed_form_critical_temperature,
    closed_form_S,
    critical_temperature,
    detect_birth_death,
    entanglement_trajectory,
    max_entanglement,
    numeric_vs_closed_form,
    run_sweep,
    simon_invariants,
    time_grid,
)
from .exceptions import (
    ConfigError,
    InputError,
    MesofluctError,
    NumericContractError,
    ParameterError,
)
from .models import ModelSpec, build_site_operators, derive_L_matrix, mesoscopic_generator_matrices
from .thermal import (
    ThermalParams,
    build_structural_matrices,
    thermal_params,
    thermal_params_from_epsilon,
    thermal_params_from_temperature,
)
