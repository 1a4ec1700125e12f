"""Lattice solver and verification lab for doubly reflected BSDEs."""

from ._rbsde import (
    ConfigError,
    Error,
    InfeasibleBarriers,
    config_hash,
    crr_american_put,
    envelope,
    exhaustive_stopping_value,
    quadratic_closed_form,
    run,
    run_suite,
    solve,
)

__all__ = [
    "ConfigError",
    "Error",
    "InfeasibleBarriers",
    "config_hash",
    "crr_american_put",
    "envelope",
    "exhaustive_stopping_value",
    "quadratic_closed_form",
    "run",
    "run_suite",
    "solve",
]
