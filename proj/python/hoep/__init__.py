from ._core import (
    ConfigError,
    SystemConfig,
    cubic_discriminant,
    dynamical_matrix,
    eigensolve,
    ep3_sensor,
    ep4_config,
    ep4_locus,
    evolve,
    irreducible,
    puiseux_slope,
    run_acceptance,
    run_scenario,
    sensitivity,
)

__all__ = [
    "ConfigError",
    "SystemConfig",
    "cubic_discriminant",
    "dynamical_matrix",
    "eigensolve",
    "ep3_sensor",
    "ep4_config",
    "ep4_locus",
    "evolve",
    "irreducible",
    "puiseux_slope",
    "run_acceptance",
    "run_scenario",
    "sensitivity",
]
