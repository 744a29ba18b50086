"""Discrete fractional p-Laplacian: minimizers, nonlocal tails and estimate checks."""
from .errors import (ConfigurationError, ContractViolation, DomainError, FraclabError, NonConvergenceError,
                     PreconditionError, UnsupportedError)
from .grid import DirichletProblem, Domain, Grid, ball_nodes, boundary_data, cutoff, level_truncate
from .kernel import KernelSpec, WeightMatrix, assemble_weights, evaluate_kernel
from .energy import EnergyWorkspace, energy, gradient, problem_workspace, weak_pairing
from .solver import Solution, SolveConfig, comparison_check, solve, verify_euler_lagrange
from .tail import tail, tail_of_truncation, tail_record

__version__ = "0.1.0"
