"""Semi-implicit 2D schemes on the unit square.

The Direct step solves the elliptic density equation with ``i +- 2`` and
``j +- 2`` differences of ``eps p1`` and an explicit right-hand side built
from centred momentum differences, second differences of the Rusanov
fluxes (including the mixed ``F``/``G`` combinations) and the ``C``-weighted
density diffusion. The momentum follows explicitly.

The Gauge step shares the density solve and then solves two linear
Poisson problems, for the potential ``phi`` (zero on the boundary) and for
``P`` (equal to ``eps p1`` on the boundary), before updating the
divergence-free part ``a`` and reconstructing ``q = a - grad phi``.
Gauge 1 uses the compact five-point Laplacian, Gauge 2 the wide one whose
stencil is the square of the centred gradient.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels
from . import pressure as pr
from .errors import DomainError, SolverError
from .mesh import GHOST, BoundaryRule, Grid2D, GridState, pad_field
from .numerics import BandedSystem, NewtonStats, bicgstab, pcg
from .schemes1d import (
    SchemeConfig,
    SchemeKind,
    dirichlet_second_difference_bands,
    newton_with_floor,
    second_difference_bands,
)

# relative residual of the Krylov solves
KRYLOV_RTOL = 1e-12


@dataclass
class FluxSet2D:
    """Interface quantities on the ghost-extended grid.

    ``F_half[:, h, j]`` sits between extended x-nodes ``h`` and ``h+1``;
    ``G_half[:, i, h]`` between extended y-nodes ``h`` and ``h+1``.
    """

    C_half_x: np.ndarray
    F_half: np.ndarray
    C_half_y: np.ndarray
    G_half: np.ndarray
    Q_half: Optional[np.ndarray] = None
    Qt_half: Optional[np.ndarray] = None


@dataclass
class GaugeState2D:
    a: np.ndarray
    phi: np.ndarray
    P_field: np.ndarray


def _sh(arr: np.ndarray, grid: Grid2D, di: int, dj: int) -> np.ndarray:
    """View of ``arr`` at interior nodes shifted by ``(di, dj)`` (extended indexing)."""
    m1, m2 = grid.shape
    return arr[GHOST + di:GHOST + m1 + di, GHOST + dj:GHOST + m2 + dj]


def explicit_fluxes_2d(law: pr.PressureLaw, state: GridState) -> FluxSet2D:
    if np.any(~np.isfinite(state.rho)) or np.any(state.rho <= 0):
        raise DomainError("density must be positive and finite")
    cx, fx, cy, gy = kernels.flux_2d(state.rho, state.q[0], state.q[1], law.epsilon, law.params)
    return FluxSet2D(cx, fx, cy, gy)


def flux_divergence(fl: FluxSet2D, grid: Grid2D) -> np.ndarray:
    """``(F_{i+1/2} - F_{i-1/2})/dx + (G_{j+1/2} - G_{j-1/2})/dy`` at interior nodes, shape ``(2, m1, m2)``."""
    out = np.empty((2,) + grid.shape)
    for c in range(2):
        F, G = fl.F_half[c], fl.G_half[c]
        out[c] = ((_sh(F, grid, 0, 0) - _sh(F, grid, -1, 0)) / grid.dx
                  + (_sh(G, grid, 0, 0) - _sh(G, grid, 0, -1)) / grid.dy)
    return out


def flux_second_differences(fl: FluxSet2D, grid: Grid2D) -> np.ndarray:
    """The braced flux combination of the elliptic right-hand side (without ``dt^2/2``)."""
    dx, dy = grid.dx, grid.dy
    F1, F2 = fl.F_half
    G1, G2 = fl.G_half
    s = lambda a, i, j: _sh(a, grid, i, j)  # noqa: E731
    xx = (s(F1, 1, 0) - s(F1, 0, 0) - s(F1, -1, 0) + s(F1, -2, 0)) / dx ** 2
    gx = (s(G1, 1, 0) - s(G1, 1, -1) - s(G1, -1, 0) + s(G1, -1, -1)) / (dx * dy)
    fy = (s(F2, 0, 1) - s(F2, -1, 1) - s(F2, 0, -1) + s(F2, -1, -1)) / (dx * dy)
    yy = (s(G2, 0, 1) - s(G2, 0, 0) - s(G2, 0, -1) + s(G2, 0, -2)) / dy ** 2
    return xx + gx + fy + yy


def density_diffusion(fl: FluxSet2D, state: GridState) -> np.ndarray:
    """``[C dRho]_x / (2 dx) + [C dRho]_y / (2 dy)`` at interior nodes."""
    g = state.grid
    r, cx, cy = state.rho, fl.C_half_x, fl.C_half_y
    s = lambda a, i, j: _sh(a, g, i, j)  # noqa: E731
    vx = s(cx, 0, 0) * (s(r, 1, 0) - s(r, 0, 0)) - s(cx, -1, 0) * (s(r, 0, 0) - s(r, -1, 0))
    vy = s(cy, 0, 0) * (s(r, 0, 1) - s(r, 0, 0)) - s(cy, 0, -1) * (s(r, 0, 0) - s(r, 0, -1))
    return vx / (2 * g.dx) + vy / (2 * g.dy)


def centred_divergence(q: np.ndarray, grid: Grid2D) -> np.ndarray:
    """``D^x q1 + D^y q2`` at interior nodes from extended components."""
    s = lambda a, i, j: _sh(a, grid, i, j)  # noqa: E731
    return ((s(q[0], 1, 0) - s(q[0], -1, 0)) / (2 * grid.dx)
            + (s(q[1], 0, 1) - s(q[1], 0, -1)) / (2 * grid.dy))


def centred_gradient(ext: np.ndarray, grid: Grid2D) -> np.ndarray:
    s = lambda a, i, j: _sh(a, grid, i, j)  # noqa: E731
    return np.stack([(s(ext, 1, 0) - s(ext, -1, 0)) / (2 * grid.dx),
                     (s(ext, 0, 1) - s(ext, 0, -1)) / (2 * grid.dy)])


def direct_rhs_2d(law: pr.PressureLaw, state: GridState, fl: FluxSet2D, dt: float) -> np.ndarray:
    return (state.rho_in - dt * centred_divergence(state.q, state.grid)
            + 0.5 * dt * dt * flux_second_differences(fl, state.grid)
            + dt * density_diffusion(fl, state))


def _axis_matrix(m: int, rule: BoundaryRule) -> sp.csr_matrix:
    return BandedSystem(m, second_difference_bands(m, 2, rule),
                        periodic=BoundaryRule(rule) is BoundaryRule.PERIODIC).matrix()


def wide_laplacian_2d(grid: Grid2D, rule: BoundaryRule, kx: float, ky: float) -> sp.csr_matrix:
    """``kx Lx + ky Ly`` on all nodes, unknowns ordered with y fastest."""
    Lx = _axis_matrix(grid.m1, rule)
    Ly = _axis_matrix(grid.m2, rule)
    return (kx * sp.kron(Lx, sp.identity(grid.m2)) + ky * sp.kron(sp.identity(grid.m1), Ly)).tocsr()


@dataclass
class DirectSystem2D:
    law: pr.PressureLaw
    rhs: np.ndarray
    K: sp.csr_matrix

    def pi(self, s):
        return self.law.epsilon * pr.p1_of_s(self.law, s)

    def residual(self, s):
        return pr.rho_of_s(self.law, s) - self.K @ self.pi(s) - self.rhs

    def residual_scale(self, s):
        return (np.abs(pr.rho_of_s(self.law, s)) + abs(self.K) @ np.abs(self.pi(s))
                + np.abs(self.rhs))

    def jacobian(self, s):
        dpi = self.law.epsilon * pr.dp1_ds(self.law, s)
        return (sp.diags(pr.drho_ds(self.law, s)) - self.K @ sp.diags(dpi)).tocsr()


def _krylov_or_direct(J, rhs):
    try:
        return bicgstab(J, rhs, rtol=KRYLOV_RTOL)
    except SolverError:
        return spla.spsolve(J.tocsc(), rhs)


@dataclass
class DensitySolve2D:
    rho: np.ndarray
    pi: np.ndarray
    fluxes: FluxSet2D
    stats: NewtonStats


def solve_density_2d(law: pr.PressureLaw, state: GridState, cfg: SchemeConfig) -> DensitySolve2D:
    g = state.grid
    fl = explicit_fluxes_2d(law, state)
    rhs = direct_rhs_2d(law, state, fl, cfg.dt).ravel()
    K = wide_laplacian_2d(g, cfg.boundary, cfg.dt ** 2 / (4 * g.dx ** 2), cfg.dt ** 2 / (4 * g.dy ** 2))
    system = DirectSystem2D(law, rhs, K)
    stats = NewtonStats()
    s = newton_with_floor(system, pr.s_of_rho(law, state.rho_in).ravel(), cfg.newton, stats,
                          linear_solve=_krylov_or_direct)
    rho = pr.rho_of_s(law, s).reshape(g.shape)
    if np.any(rho <= 0) or np.any(rho >= law.rho_star):
        raise DomainError(f"step {state.step}: density left (0, rho_star)")
    return DensitySolve2D(rho, system.pi(s).reshape(g.shape), fl, stats)


def direct_step_2d(law: pr.PressureLaw, state: GridState, cfg: SchemeConfig) -> GridState:
    """One Direct step in 2D."""
    g = state.grid
    sol = solve_density_2d(law, state, cfg)
    q_new = (state.q_in - cfg.dt * flux_divergence(sol.fluxes, g)
             - cfg.dt * centred_gradient(pad_field(sol.pi, cfg.boundary), g))
    return GridState.from_interior(g, sol.rho, q_new, cfg.boundary, state.time + cfg.dt, state.step + 1)


# ---------------------------------------------------------------------------
# Gauge method


def _reach(scheme: SchemeKind) -> int:
    return 1 if SchemeKind(scheme) is SchemeKind.GAUGE1 else 2


def odd_extension_2d(v: np.ndarray) -> np.ndarray:
    """Two ghost layers per side, odd reflection about the boundary values."""
    out = np.concatenate([2 * v[:1] - v[2:0:-1], v, 2 * v[-1:] - v[-2:-4:-1]], axis=0)
    return np.concatenate([2 * out[:, :1] - out[:, 2:0:-1], out, 2 * out[:, -1:] - out[:, -2:-4:-1]], axis=1)


def dirichlet_laplacian_2d(grid: Grid2D, reach: int) -> sp.csr_matrix:
    """Laplacian on the nodes strictly inside the square, odd reflection closure."""
    nx, ny = grid.m1 - 2, grid.m2 - 2
    scale_x = 1.0 / (reach * grid.dx) ** 2
    scale_y = 1.0 / (reach * grid.dy) ** 2
    Ax = BandedSystem(nx, dirichlet_second_difference_bands(nx, reach)).matrix() * scale_x
    Ay = BandedSystem(ny, dirichlet_second_difference_bands(ny, reach)).matrix() * scale_y
    return (sp.kron(Ax, sp.identity(ny)) + sp.kron(sp.identity(nx), Ay)).tocsr()


def laplacian_full(v: np.ndarray, grid: Grid2D, reach: int) -> np.ndarray:
    """Apply the same Laplacian to a full nodal field; values at strictly inner nodes."""
    e = odd_extension_2d(v)
    m1, m2 = grid.shape
    c = e[GHOST + 1:GHOST + m1 - 1, GHOST + 1:GHOST + m2 - 1]
    r = reach
    xx = (e[GHOST + 1 + r:GHOST + m1 - 1 + r, GHOST + 1:GHOST + m2 - 1] - 2 * c
          + e[GHOST + 1 - r:GHOST + m1 - 1 - r, GHOST + 1:GHOST + m2 - 1]) / (r * grid.dx) ** 2
    yy = (e[GHOST + 1:GHOST + m1 - 1, GHOST + 1 + r:GHOST + m2 - 1 + r] - 2 * c
          + e[GHOST + 1:GHOST + m1 - 1, GHOST + 1 - r:GHOST + m2 - 1 - r]) / (r * grid.dy) ** 2
    return xx + yy


def solve_dirichlet_2d(grid: Grid2D, reach: int, rhs_inner: np.ndarray,
                       boundary: Optional[np.ndarray] = None) -> np.ndarray:
    """Solve ``Lap u = rhs`` inside with ``u = boundary`` on the boundary nodes.

    Returns the full nodal field. The negated operator is symmetric positive
    definite and is handed to Jacobi-preconditioned CG.
    """
    full = np.zeros(grid.shape) if boundary is None else np.array(boundary, dtype=float)
    full[1:-1, 1:-1] = 0.0
    b = rhs_inner - laplacian_full(full, grid, reach)
    A = dirichlet_laplacian_2d(grid, reach)
    u = pcg(-A, -b.ravel(), rtol=KRYLOV_RTOL)
    full[1:-1, 1:-1] = u.reshape(grid.m1 - 2, grid.m2 - 2)
    return full


def init_gauge_2d(state: GridState, scheme: SchemeKind) -> GaugeState2D:
    """``a = q + grad phi`` with ``Lap phi = -div q`` (zero on the boundary), so that ``q = a - grad phi``."""
    g = state.grid
    reach = _reach(scheme)
    div = centred_divergence(state.q, g)[1:-1, 1:-1]
    phi = solve_dirichlet_2d(g, reach, -div)
    a = state.q_in + centred_gradient(odd_extension_2d(phi), g)
    return GaugeState2D(a=a, phi=phi, P_field=np.zeros(g.shape))


def gauge_step_2d(law: pr.PressureLaw, state: GridState, gauge: GaugeState2D,
                  cfg: SchemeConfig) -> Tuple[GridState, GaugeState2D]:
    """One Gauge step; stencil width chosen by ``cfg.scheme``."""
    if cfg.scheme is SchemeKind.DIRECT:
        raise ValueError("gauge_step_2d needs scheme gauge1 or gauge2")
    g = state.grid
    dt = cfg.dt
    reach = _reach(cfg.scheme)
    sol = solve_density_2d(law, state, cfg)
    fl = sol.fluxes
    # potential
    f_phi = (sol.rho - state.rho_in) / dt - density_diffusion(fl, state)
    phi = solve_dirichlet_2d(g, reach, f_phi[1:-1, 1:-1])
    # hydrostatic pressure; on the boundary P = eps p1 - (phi_new - phi_old)/dt
    p_bnd = sol.pi - (phi - gauge.phi) / dt
    f_P = -0.5 * flux_second_differences(fl, g)
    P = solve_dirichlet_2d(g, reach, f_P[1:-1, 1:-1], p_bnd)
    a = gauge.a - dt * flux_divergence(fl, g) - dt * centred_gradient(odd_extension_2d(P), g)
    q_new = a - centred_gradient(odd_extension_2d(phi), g)
    new = GridState.from_interior(g, sol.rho, q_new, cfg.boundary, state.time + dt, state.step + 1)
    return new, GaugeState2D(a=a, phi=phi, P_field=P)


def step_2d(law: pr.PressureLaw, state: GridState, cfg: SchemeConfig, gauge=None):
    """Advance one step with the configured scheme; returns ``(state, gauge)``."""
    if cfg.picard_iters:
        raise ValueError("Picard refinement is implemented in 1D only")
    if cfg.scheme is SchemeKind.DIRECT:
        return direct_step_2d(law, state, cfg), None
    if gauge is None:
        gauge = init_gauge_2d(state, cfg.scheme)
    return gauge_step_2d(law, state, gauge, cfg)
