"""Torch placement on heightmaps via QUBO, ADMM and classical solvers."""
from __future__ import annotations

from .admm import AdmmConfig, AdmmResult, run_admm
from .baselines import exhaustive_min_cover, greedy_cover, to_setcover
from .geometry import LightParams, coverage_matrix, distance_field, light_levels
from .heightmap import Heightmap, generate_perlin_map, parse_heightmap, serialize_heightmap
from .qubo import LinearConstraintSystem, QuboInstance, build_admm_step_qubo, energy
from .solvers import SolverConfig, SolverKind, solve

__version__ = "0.1.0"

__all__ = [
    "AdmmConfig", "AdmmResult", "Heightmap", "LightParams", "LinearConstraintSystem",
    "QuboInstance", "SolverConfig", "SolverKind", "build_admm_step_qubo", "coverage_matrix",
    "distance_field", "energy", "exhaustive_min_cover", "generate_perlin_map", "greedy_cover",
    "light_levels", "parse_heightmap", "run_admm", "serialize_heightmap", "solve", "to_setcover",
]
