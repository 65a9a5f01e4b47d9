"""Minimal Riesz s-energy configurations on spheres, cubes, balls, tori and chart-defined sets."""
from .constants import TheoreticalLimit, ball_volume, hexagonal_zeta, riemann_zeta, theoretical_limit
from .energy import DuplicatePointsError, EnergyReport, RieszParams, energy_report, riesz_energy, riesz_gradient
from .manifold import ManifoldSpec, PointConfiguration, parse_manifold
from .optimize import OptimizerOptions, OptimizeResult, best_of_restarts, optimize_config

__version__ = "0.1.0"

__all__ = [
    "TheoreticalLimit", "ball_volume", "hexagonal_zeta", "riemann_zeta", "theoretical_limit",
    "DuplicatePointsError", "EnergyReport", "RieszParams", "energy_report", "riesz_energy", "riesz_gradient",
    "ManifoldSpec", "PointConfiguration", "parse_manifold",
    "OptimizerOptions", "OptimizeResult", "best_of_restarts", "optimize_config",
]
