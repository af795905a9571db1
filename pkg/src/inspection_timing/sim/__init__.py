"""Monte Carlo simulation of project trajectories."""

from .engine import END_CAUSES, SimConfig, SimReport, default_horizon, estimate, simulate_run

__all__ = ["END_CAUSES", "SimConfig", "SimReport", "default_horizon", "estimate", "simulate_run"]
