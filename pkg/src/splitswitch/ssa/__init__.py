"""Exact stochastic simulation and trajectory post-processing."""
from .analysis import SwitchStats, extract_switch_times, ks_exponential, occupation_density, quantile_data, switch_statistics
from .diffusion import DiffusionPath, simulate_diffusion
from .master import generator_matrix, transient_distribution
from .simulate import (
    EventLog,
    SwitchEvent,
    SwitchMode,
    Trajectory,
    endpoint_distribution,
    replicate_seeds,
    simulate,
    simulate_replicates,
)

__all__ = [
    "EventLog",
    "SwitchEvent",
    "SwitchMode",
    "SwitchStats",
    "Trajectory",
    "DiffusionPath",
    "endpoint_distribution",
    "extract_switch_times",
    "generator_matrix",
    "ks_exponential",
    "occupation_density",
    "quantile_data",
    "replicate_seeds",
    "simulate",
    "simulate_diffusion",
    "simulate_replicates",
    "switch_statistics",
    "transient_distribution",
]
