"""Asymptotic-preserving schemes for compressible Euler flow with a congestion
constraint ``rho < rho_star``, enforced through a singular pressure.

The package provides the split pressure law, one- and two-dimensional
semi-implicit schemes (Direct, Gauge 1, Gauge 2), exact Riemann solutions for
finite and vanishing stiffness, error measures and a run harness.
"""
from .errors import DomainError, InteractionError, NewtonError, SolverError
from .harness import RunConfig, RunResult, SweepSpec, build_case, p0_ablation, run, sweep
from .mesh import BoundaryRule, Grid1D, Grid2D, GridState, total_mass
from .pressure import PressureLaw
from .riemann import RiemannState, limit_riemann, solve_riemann_eps
from .schemes1d import SchemeConfig, SchemeKind, step
from .schemes2d import step_2d

__version__ = "0.1.0"

__all__ = [
    "BoundaryRule",
    "DomainError",
    "Grid1D",
    "Grid2D",
    "GridState",
    "InteractionError",
    "NewtonError",
    "PressureLaw",
    "RiemannState",
    "RunConfig",
    "RunResult",
    "SchemeConfig",
    "SchemeKind",
    "SolverError",
    "SweepSpec",
    "build_case",
    "limit_riemann",
    "p0_ablation",
    "run",
    "solve_riemann_eps",
    "step",
    "step_2d",
    "sweep",
    "total_mass",
]
