"""Initial data of the benchmark problems and their reference solutions."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from . import pressure as pr
from .mesh import BoundaryRule, Grid1D, Grid2D, GridState
from .riemann import (
    ComposedSolution,
    RiemannState,
    compose_riemann,
    limit_riemann,
    solve_riemann_eps,
)

# (x_start, rho, q); x_start of the first piece is ignored
Piece = Tuple[float, float, float]

PIECEWISE_CASES = {
    "P1": ((0.0, 0.7, 0.8), (0.5, 0.7, -0.8)),
    "P1prime": ((0.0, 0.7, 0.08), (0.5, 0.7, -0.08)),
    "P2": ((0.0, 0.7, -0.8), (0.5, 0.7, 0.8)),
    "P3": ((0.0, 0.7, 0.8), (0.25, 0.8, -0.3), (0.75, 0.7, -1.2)),
    "P4": ((0.0, 0.8, 0.3), (0.5, 0.5, 0.1)),
}
CASES = tuple(PIECEWISE_CASES) + ("cluster2d", "custom")

# colliding blocks on the unit square
CLUSTER_A = ((1 / 6, 5 / 12), (1 / 3, 7 / 12))
CLUSTER_B = ((7 / 12, 5 / 6), (5 / 12, 2 / 3))
CLUSTER_RHO, BACKGROUND_RHO = 0.8, 0.6


def sample_pieces(pieces: Sequence[Piece], x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Piecewise-constant data; a node sitting on a jump takes the left value."""
    jumps = np.array([p[0] for p in pieces[1:]], dtype=float)
    k = np.searchsorted(jumps, x, side="left")
    rho = np.array([p[1] for p in pieces])[k]
    q = np.array([p[2] for p in pieces])[k]
    return rho, q


def cluster_data(grid: Grid2D) -> Tuple[np.ndarray, np.ndarray]:
    X, Y = np.meshgrid(grid.gx.x, grid.gy.x, indexing="ij")

    def inside(box):
        (x0, x1), (y0, y1) = box
        tol = 1e-12
        return (X >= x0 - tol) & (X <= x1 + tol) & (Y >= y0 - tol) & (Y <= y1 + tol)

    A, B = inside(CLUSTER_A), inside(CLUSTER_B)
    rho = np.where(A | B, CLUSTER_RHO, BACKGROUND_RHO)
    q = np.zeros((2,) + grid.shape)
    q[0] = np.where(A, 1.0, np.where(B, -1.0, 0.0))
    return rho, q


@dataclass
class Reference:
    """Exact solution of a composition of Riemann problems (``None`` fields mean qualitative only)."""

    solution: Optional[ComposedSolution]
    kind: str

    @property
    def interaction_time(self) -> float:
        return self.solution.interaction_time if self.solution is not None else 0.0

    def available(self, t: float) -> bool:
        return self.solution is not None and t <= self.interaction_time

    def profile(self, x, t):
        return self.solution.profile(x, t)


def riemann_problems(pieces: Sequence[Piece]):
    states = [RiemannState(p[1], p[2]) for p in pieces]
    return [(pieces[k + 1][0], states[k], states[k + 1]) for k in range(len(pieces) - 1)]


def make_reference(pieces: Sequence[Piece], law: pr.PressureLaw, kind: str = "limit") -> Reference:
    """Reference for piecewise data: ``kind`` is ``"limit"`` (epsilon -> 0) or ``"eps"``."""
    if kind == "limit":
        solver: Callable = lambda l, r: limit_riemann(l, r, law.rho_star, law.gamma)  # noqa: E731
    elif kind == "eps":
        solver = lambda l, r: solve_riemann_eps(law, l, r)  # noqa: E731
    else:
        raise ValueError(f"unknown reference kind {kind!r}")
    return Reference(compose_riemann(riemann_problems(pieces), solver), kind)


def initial_state(case: str, grid, rule: BoundaryRule = BoundaryRule.COPY,
                  pieces: Optional[Sequence[Piece]] = None) -> GridState:
    if case == "cluster2d":
        if not isinstance(grid, Grid2D):
            raise ValueError("cluster2d needs a 2D grid")
        rho, q = cluster_data(grid)
        return GridState.from_interior(grid, rho, q, rule)
    if not isinstance(grid, Grid1D):
        raise ValueError(f"case {case} is one-dimensional")
    data = case_pieces(case, pieces)
    rho, q = sample_pieces(data, grid.x)
    return GridState.from_interior(grid, rho, q, rule)


def case_pieces(case: str, pieces: Optional[Sequence[Piece]] = None) -> Sequence[Piece]:
    if case == "custom":
        if not pieces:
            raise ValueError("the custom case needs pieces (x_start, rho, q)")
        return tuple(tuple(map(float, p)) for p in pieces)
    try:
        return PIECEWISE_CASES[case]
    except KeyError:
        raise ValueError(f"unknown case {case!r}; expected one of {', '.join(CASES)}") from None
