"""Coverage of confidence intervals after a preliminary t test."""

from ._core import (
    QuadratureConfig,
    QuadratureError,
    Scenario,
    default_min_grid,
    deficits,
    min_coverage,
    simulate_reduced,
    sweep,
)

__all__ = [
    "QuadratureConfig",
    "QuadratureError",
    "Scenario",
    "default_min_grid",
    "deficits",
    "min_coverage",
    "simulate_reduced",
    "sweep",
]
