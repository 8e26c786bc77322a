"""Semi-implicit 1D schemes: Direct, Gauge 1 / Gauge 2, and Picard refinement.

One Direct step:

1. Rusanov fluxes ``C``, ``F`` from the old state (explicit part, ``p0``).
2. Solve the nonlinear elliptic equation for ``p1`` at the new time,

       rho(p1_j) - dt^2/(4 dx^2) * (e p1_{j+2} - 2 e p1_j + e p1_{j-2}) = rhs_j,

   by damped Newton. ``rhs`` collects the centred ``q`` difference, the
   ``C``-weighted density diffusion and the second difference of ``F``.
3. ``rho`` follows from ``p1`` through the inverse of ``p1``.
4. ``q`` is updated explicitly in ``F`` and with the centred gradient of
   ``e p1`` at the new time.

The Newton unknown is ``s = rho rho_star / (rho_star - rho)``; ``p1`` and
``rho`` are both smooth monotone functions of ``s`` (``p(rho(s)) = s**gamma``),
which keeps the iteration well scaled near vacuum and near congestion. The
linearised systems are the same as for Newton in ``p1``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from . import kernels
from . import pressure as pr
from .errors import DomainError, NewtonError
from .mesh import GHOST, BoundaryRule, Grid1D, GridState, pad_field
from .numerics import (
    BandedSystem,
    NewtonOptions,
    NewtonStats,
    default_linear_solve,
    newton_solve,
    solve_banded,
)

log = logging.getLogger(__name__)


class SchemeKind(str, Enum):
    DIRECT = "direct"
    GAUGE1 = "gauge1"
    GAUGE2 = "gauge2"


# The elliptic solve is converged well below the default generic tolerance so
# that mass conservation is limited by round-off, not by the Newton residual.
SCHEME_NEWTON = NewtonOptions(residual_tol=1e-13)


@dataclass(frozen=True)
class SchemeConfig:
    scheme: SchemeKind = SchemeKind.DIRECT
    dt: float = 5e-4
    courant_sigma: Optional[float] = None
    picard_iters: int = 0
    newton: NewtonOptions = SCHEME_NEWTON
    boundary: BoundaryRule = BoundaryRule.COPY
    dt_max: float = float("inf")

    def __post_init__(self):
        object.__setattr__(self, "scheme", SchemeKind(self.scheme))
        object.__setattr__(self, "boundary", BoundaryRule(self.boundary))
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.picard_iters < 0:
            raise ValueError("picard_iters must be nonnegative")
        if self.courant_sigma is not None and not self.courant_sigma > 0:
            raise ValueError("courant_sigma must be positive")


@dataclass
class FluxSet1D:
    """Interface quantities on the ghost-extended range.

    Entry ``h`` belongs to the interface between extended nodes ``h`` and
    ``h+1``; interior node ``j`` sits at extended index ``j + 2``.
    """

    C_half: np.ndarray
    F_half: np.ndarray
    Q_half: Optional[np.ndarray] = None


@dataclass
class GaugeState1D:
    a: float
    phi: np.ndarray


def _check_density(law, rho, what="density"):
    if np.any(~np.isfinite(rho)) or np.any(rho <= 0):
        raise DomainError(f"{what} must be positive and finite")


def local_diffusion(law: pr.PressureLaw, rho_l, q_l, rho_r, q_r):
    """Rusanov coefficient ``max(|u| + sqrt(eps p0'))`` over two states."""
    rl, rr = np.asarray(rho_l, dtype=float), np.asarray(rho_r, dtype=float)
    _check_density(law, rl)
    _check_density(law, rr)
    lam_l = np.abs(np.asarray(q_l) / rl) + pr.explicit_sound_speed(law, rl)
    lam_r = np.abs(np.asarray(q_r) / rr) + pr.explicit_sound_speed(law, rr)
    out = np.maximum(lam_l, lam_r)
    return float(out) if np.ndim(out) == 0 else out


def explicit_fluxes(law: pr.PressureLaw, state: GridState, conv: Optional[GridState] = None) -> FluxSet1D:
    """Diffusion coefficients and momentum fluxes from the old state.

    With ``conv`` given, the convective term ``q^2/rho`` is taken from it
    while ``p0``, ``C`` and the diffusion of ``q`` stay at the old state.
    """
    _check_density(law, state.rho)
    if conv is None:
        c, f = kernels.flux_1d(state.rho, state.q, law.epsilon, law.params)
    else:
        _check_density(law, conv.rho, "iterate density")
        c, f = kernels.flux_1d_picard(state.rho, state.q, conv.rho, conv.q, law.epsilon, law.params)
    return FluxSet1D(C_half=c, F_half=f)


def momentum_flux_explicit(law: pr.PressureLaw, state: GridState) -> np.ndarray:
    """``F_{j+1/2}`` on every interface of the extended grid."""
    return explicit_fluxes(law, state).F_half


def mass_flux(state_old: GridState, q_new_ext: np.ndarray, C_half: np.ndarray) -> np.ndarray:
    """``Q_{j+1/2} = (q_j + q_{j+1})/2 (new) - C (rho_{j+1} - rho_j)/2 (old)``."""
    rho = state_old.rho
    return 0.5 * (q_new_ext[:-1] + q_new_ext[1:]) - 0.5 * C_half * (rho[1:] - rho[:-1])


def max_char_speed(law: pr.PressureLaw, state: GridState) -> float:
    """Largest explicit characteristic speed ``|q/rho| + sqrt(eps p0')`` over interior nodes."""
    r, q = state.rho_in, state.q_in
    _check_density(law, r)
    if state.is_2d:
        u = np.maximum(np.abs(q[0] / r), np.abs(q[1] / r))
    else:
        u = np.abs(q / r)
    return float(np.max(u + pr.explicit_sound_speed(law, r)))


def adaptive_dt(law: pr.PressureLaw, state: GridState, sigma: float, dx: float,
                dt_max: float = float("inf")) -> float:
    """Time step meeting the explicit-part CFL condition with Courant number ``sigma``."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    lam = max_char_speed(law, state)
    if lam == 0.0:
        if not np.isfinite(dt_max):
            raise ValueError("all characteristic speeds vanish and no dt_max is configured")
        return dt_max
    return min(sigma * dx / lam, dt_max)


def second_difference_bands(m: int, reach: int, rule: BoundaryRule) -> dict:
    """Bands of ``u_{j+r} - 2 u_j + u_{j-r}`` on ``m`` nodes with ghost closure.

    Copy closure sends out-of-range neighbours to the nearest end node;
    periodic closure wraps.
    """
    rule = BoundaryRule(rule)
    j = np.arange(m)
    bands = {}
    for off, coef in ((reach, 1.0), (0, -2.0), (-reach, 1.0)):
        if rule is BoundaryRule.PERIODIC:
            bands.setdefault(off, np.zeros(m))
            bands[off] += coef
            continue
        col = np.clip(j + off, 0, m - 1)
        for k in np.unique(col - j):
            sel = (col - j) == k
            bands.setdefault(int(k), np.zeros(m))
            bands[int(k)][sel] += coef
    return bands


def dirichlet_second_difference_bands(n: int, reach: int) -> dict:
    """Bands of the reach-``r`` second difference on the ``n`` unknowns strictly
    inside a Dirichlet interval (nodes ``1..n``, boundary nodes ``0`` and ``n+1``).

    Neighbours beyond the boundary node are odd reflections about it, so only
    the unknown-part coefficients appear here; see ``dirichlet_boundary_terms``.
    """
    t = np.arange(1, n + 1)
    bands = {0: np.full(n, -2.0)}
    for sgn in (1, -1):
        nb = t + sgn * reach
        inside = (nb >= 1) & (nb <= n)
        bands.setdefault(sgn * reach, np.zeros(n))
        bands[sgn * reach][inside] += 1.0
        # odd reflection: u_{-k} = 2 g - u_k, u_{n+1+k} = 2 g - u_{n+1-k}
        mir = np.where(nb < 0, -nb, np.where(nb > n + 1, 2 * (n + 1) - nb, -1))
        for ti, mi in zip(t[mir >= 0], mir[mir >= 0]):
            k = int(mi - ti)
            bands.setdefault(k, np.zeros(n))
            bands[k][ti - 1] -= 1.0
    return {k: v for k, v in bands.items() if np.any(v)}


def dirichlet_boundary_terms(n: int, reach: int, g_left: float, g_right: float) -> np.ndarray:
    """Contribution of boundary values to the same second difference."""
    t = np.arange(1, n + 1)
    out = np.zeros(n)
    for sgn in (1, -1):
        nb = t + sgn * reach
        out += np.where(nb == 0, g_left, 0.0) + np.where(nb == n + 1, g_right, 0.0)
        out += np.where(nb < 0, 2.0 * g_left, 0.0) + np.where(nb > n + 1, 2.0 * g_right, 0.0)
    return out


def odd_extension(values: np.ndarray) -> np.ndarray:
    """Pad nodes ``0..M`` with two ghosts reflected oddly about the end values."""
    v = np.asarray(values, dtype=float)
    left = 2.0 * v[0] - v[2:0:-1]
    right = 2.0 * v[-1] - v[-2:-4:-1]
    return np.concatenate([left, v, right])


@dataclass
class DirectSystem:
    """Residual and Jacobian of the elliptic density equation in the variable ``s``."""

    law: pr.PressureLaw
    rhs: np.ndarray
    k: float
    rule: BoundaryRule
    lap: dict = field(repr=False)

    @property
    def m(self) -> int:
        return self.rhs.size

    def pi(self, s):
        """``eps * p1`` as a function of ``s``."""
        return self.law.epsilon * pr.p1_of_s(self.law, s)

    def rho(self, s):
        return pr.rho_of_s(self.law, s)

    def apply_lap(self, u: np.ndarray) -> np.ndarray:
        return BandedSystem(self.m, self.lap, periodic=self.rule is BoundaryRule.PERIODIC).matvec(u)

    def residual(self, s: np.ndarray) -> np.ndarray:
        return self.rho(s) - self.k * self.apply_lap(self.pi(s)) - self.rhs

    def residual_scale(self, s: np.ndarray) -> np.ndarray:
        """Magnitude of the terms summed in the residual (round-off yardstick)."""
        abs_lap = BandedSystem(self.m, {k: np.abs(v) for k, v in self.lap.items()},
                               periodic=self.rule is BoundaryRule.PERIODIC)
        return np.abs(self.rho(s)) + self.k * abs_lap.matvec(np.abs(self.pi(s))) + np.abs(self.rhs)

    def jacobian(self, s: np.ndarray) -> BandedSystem:
        m = self.m
        dpi = self.law.epsilon * pr.dp1_ds(self.law, s)
        periodic = self.rule is BoundaryRule.PERIODIC
        j = np.arange(m)
        bands = {}
        for off, coef in self.lap.items():
            col = (j + off) % m if periodic else np.clip(j + off, 0, m - 1)
            bands[off] = -self.k * coef * dpi[col]
        bands[0] = bands.get(0, np.zeros(m)) + pr.drho_ds(self.law, s)
        return BandedSystem(m, bands, periodic=periodic)


def direct_rhs(law: pr.PressureLaw, state: GridState, fl: FluxSet1D, dt: float) -> np.ndarray:
    """Explicit right-hand side of the elliptic density equation at interior nodes."""
    g = state.grid
    m, dx = g.m, g.dx
    rho, q, C, F = state.rho, state.q, fl.C_half, fl.F_half
    e = slice(GHOST, GHOST + m)                    # node j
    ep, em = slice(GHOST + 1, GHOST + m + 1), slice(GHOST - 1, GHOST + m - 1)
    hp, hm = slice(GHOST, GHOST + m), slice(GHOST - 1, GHOST + m - 1)       # j+1/2, j-1/2
    hpp, hmm = slice(GHOST + 1, GHOST + m + 1), slice(GHOST - 2, GHOST + m - 2)  # j+3/2, j-3/2
    return (
        rho[e]
        - dt / (2 * dx) * (q[ep] - q[em])
        + dt / (2 * dx) * (C[hp] * (rho[ep] - rho[e]) - C[hm] * (rho[e] - rho[em]))
        + dt * dt / (2 * dx * dx) * (F[hpp] - F[hp] - F[hm] + F[hmm])
    )


def assemble_direct_system(law: pr.PressureLaw, state: GridState, dt: float,
                           rule: BoundaryRule = BoundaryRule.COPY,
                           conv: Optional[GridState] = None) -> Tuple[DirectSystem, FluxSet1D]:
    fl = explicit_fluxes(law, state, conv)
    rhs = direct_rhs(law, state, fl, dt)
    g = state.grid
    k = dt * dt / (4 * g.dx * g.dx)
    return DirectSystem(law, rhs, k, BoundaryRule(rule), second_difference_bands(g.m, 2, rule)), fl


# A stalled Newton iterate is accepted when its residual is this many
# machine epsilons of the residual's own term magnitudes.
ROUNDOFF_FACTOR = 64.0


def newton_with_floor(system, start, opts: NewtonOptions, stats: NewtonStats,
                      linear_solve=default_linear_solve) -> np.ndarray:
    """Newton on ``system`` in ``s``, tolerating stagnation at the round-off floor.

    Near congestion ``eps p1`` is large and the residual cannot be evaluated
    to ``opts.residual_tol``; such an iterate is accepted if its residual is
    within ``ROUNDOFF_FACTOR`` ulps of the summed term magnitudes.
    """
    try:
        return newton_solve(system.residual, system.jacobian, start, opts, linear_solve=linear_solve,
                            project=lambda v: np.maximum(v, 0.0), stats=stats)
    except NewtonError as exc:
        if exc.x is None or not np.all(np.isfinite(exc.x)):
            raise
        floor = ROUNDOFF_FACTOR * np.finfo(float).eps * float(np.max(system.residual_scale(exc.x)))
        if not exc.residual_norm <= floor:
            raise
        log.debug("accepting Newton iterate at round-off floor %.3e (<= %.3e)", exc.residual_norm, floor)
        return exc.x


@dataclass
class DensitySolve:
    rho: np.ndarray
    pi: np.ndarray
    s: np.ndarray
    fluxes: FluxSet1D
    stats: NewtonStats


def solve_density(law: pr.PressureLaw, state: GridState, cfg: SchemeConfig,
                  conv: Optional[GridState] = None, s0: Optional[np.ndarray] = None) -> DensitySolve:
    """Newton solve of the elliptic density equation; shared by all schemes."""
    system, fl = assemble_direct_system(law, state, cfg.dt, cfg.boundary, conv)
    start = pr.s_of_rho(law, state.rho_in) if s0 is None else s0
    stats = NewtonStats()
    s = newton_with_floor(system, start, cfg.newton, stats)
    rho_new = system.rho(s)
    if np.any(rho_new <= 0) or np.any(rho_new >= law.rho_star):
        raise DomainError(f"step {state.step}: density left (0, rho_star)")
    return DensitySolve(rho_new, system.pi(s), s, fl, stats)


def _momentum_update(state: GridState, sol: DensitySolve, cfg: SchemeConfig) -> np.ndarray:
    g = state.grid
    m, dx, dt = g.m, g.dx, cfg.dt
    F = sol.fluxes.F_half
    pie = pad_field(sol.pi, cfg.boundary)
    hp, hm = slice(GHOST, GHOST + m), slice(GHOST - 1, GHOST + m - 1)
    return (
        state.q_in
        - dt / dx * (F[hp] - F[hm])
        - dt / (2 * dx) * (pie[GHOST + 1:GHOST + m + 1] - pie[GHOST - 1:GHOST + m - 1])
    )


def _direct_core(law, state, cfg, conv=None, s0=None):
    sol = solve_density(law, state, cfg, conv, s0)
    q_new = _momentum_update(state, sol, cfg)
    new = GridState.from_interior(state.grid, sol.rho, q_new, cfg.boundary,
                                  state.time + cfg.dt, state.step + 1)
    return new, sol


def direct_step(law: pr.PressureLaw, state: GridState, cfg: SchemeConfig) -> GridState:
    """One step of the Direct method."""
    return _direct_core(law, state, cfg)[0]


def picard_step(law: pr.PressureLaw, state: GridState, cfg: SchemeConfig) -> GridState:
    """Direct step followed by ``cfg.picard_iters`` refreshes of ``q^2/rho``."""
    new, sol = _direct_core(law, state, cfg)
    for _ in range(cfg.picard_iters):
        new, sol = _direct_core(law, state, cfg, conv=new, s0=sol.s)
    return new


def init_gauge_1d(state: GridState) -> GaugeState1D:
    """``a`` is the mean momentum and ``phi`` starts at zero."""
    return GaugeState1D(a=float(np.mean(state.q_in)), phi=np.zeros(state.grid.m))


def gauge_viscosity_sum(C: np.ndarray, q: np.ndarray, m: int) -> float:
    """``sum_j [C_{j+1/2}(q_{j+1}-q_j) - C_{j-1/2}(q_j-q_{j-1})]`` over all ``m`` nodes.

    Summing over every node keeps the update of ``a`` mirror symmetric; the
    sum telescopes to the two ghost-interface terms.
    """
    j = np.arange(m)
    e = j + GHOST
    return float(np.sum(C[e] * (q[e + 1] - q[e]) - C[e - 1] * (q[e] - q[e - 1])))


def solve_phi_1d(rhs_interior: np.ndarray, dx: float, scheme: SchemeKind) -> np.ndarray:
    """Potential on nodes ``0..M`` with zero Dirichlet ends."""
    n = rhs_interior.size
    reach, scale = (1, 1.0 / dx ** 2) if SchemeKind(scheme) is SchemeKind.GAUGE1 else (2, 0.25 / dx ** 2)
    bands = {k: v * scale for k, v in dirichlet_second_difference_bands(n, reach).items()}
    inner = solve_banded(BandedSystem(n, bands, rhs_interior))
    return np.concatenate([[0.0], inner, [0.0]])


def gauge_step(law: pr.PressureLaw, state: GridState, gauge: GaugeState1D,
               cfg: SchemeConfig) -> Tuple[GridState, GaugeState1D]:
    """One Gauge step (stencil for ``phi`` chosen by ``cfg.scheme``)."""
    if cfg.scheme is SchemeKind.DIRECT:
        raise ValueError("gauge_step needs scheme gauge1 or gauge2")
    g = state.grid
    m, dx, dt = g.m, g.dx, cfg.dt
    sol = solve_density(law, state, cfg)
    rho, q, C = state.rho, state.q, sol.fluxes.C_half
    # potential equation at nodes 1..M-1
    j = np.arange(1, m - 1) + GHOST
    visc = (C[j] * (rho[j + 1] - rho[j]) - C[j - 1] * (rho[j] - rho[j - 1])) / (2 * dx)
    f = (sol.rho[1:-1] - state.rho_in[1:-1]) / dt - visc
    phi = solve_phi_1d(f, dx, cfg.scheme)
    # space-independent momentum
    r_in, q_in = state.rho_in, state.q_in
    flux_pt = q_in * q_in / r_in + law.epsilon * pr.p0(law, r_in) + sol.pi
    a_new = (gauge.a - dt / g.length * (flux_pt[-1] - flux_pt[0])
             + dt / (2 * g.length) * gauge_viscosity_sum(C, q, m))
    phie = odd_extension(phi)
    q_new = a_new - (phie[GHOST + 1:GHOST + m + 1] - phie[GHOST - 1:GHOST + m - 1]) / (2 * dx)
    new = GridState.from_interior(g, sol.rho, q_new, cfg.boundary, state.time + dt, state.step + 1)
    return new, GaugeState1D(a=float(a_new), phi=phi)


def step(law: pr.PressureLaw, state: GridState, cfg: SchemeConfig, gauge=None):
    """Advance one step with the configured scheme; returns ``(state, gauge)``."""
    if cfg.scheme is SchemeKind.DIRECT:
        if cfg.picard_iters:
            return picard_step(law, state, cfg), None
        return direct_step(law, state, cfg), None
    if gauge is None:
        gauge = init_gauge_1d(state)
    return gauge_step(law, state, gauge, cfg)
