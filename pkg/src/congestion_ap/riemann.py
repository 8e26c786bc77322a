"""Exact Riemann solutions for the congestion Euler system.

Two oracles are provided:

* ``solve_riemann_eps`` intersects the 1-wave curve of the left state with
  the 2-wave curve of the right state for a fixed ``epsilon`` (rarefaction
  branches follow integral curves, shock branches Hugoniot curves);
* ``limit_riemann`` returns the closed-form ``epsilon -> 0`` solutions:
  contacts around vacuum, double shocks into a congested state, declustering
  waves and infinite-speed shocks between congested states.

``compose_riemann`` juxtaposes several independent problems until their
waves meet, and ``cluster_collision`` gives the aggregation of two congested
blocks.

Conventions
-----------
Vacuum states are stored as ``rho = 0, q = 0``. Wave speeds are similarity
speeds ``xi = x / t``; declustering waves and the shocks of the congested
limit cases carry infinite speeds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from . import pressure as pr
from .errors import InteractionError
from .numerics import find_root_bracketed, integrate_adaptive

# Below this intermediate density the curves are taken to meet at vacuum.
VACUUM_FLOOR = 1e-12


class WaveKind(str, Enum):
    SHOCK = "shock"
    RAREFACTION = "rarefaction"
    CONTACT = "contact"
    DECLUSTERING = "declustering"
    VACUUM = "vacuum-span"


@dataclass(frozen=True)
class RiemannState:
    """Constant state; ``pbar`` is the limit pressure of a congested state."""

    rho: float
    q: float
    pbar: float = 0.0

    def __post_init__(self):
        if not self.rho >= 0:
            raise ValueError(f"density must be nonnegative, got {self.rho}")
        if not self.pbar >= 0:
            raise ValueError(f"pbar must be nonnegative, got {self.pbar}")

    @property
    def u(self) -> float:
        return self.q / self.rho if self.rho > 0 else 0.0


VACUUM = RiemannState(0.0, 0.0)


@dataclass(frozen=True)
class Wave:
    """One elementary wave.

    ``family`` is 1 or 2 for waves of the finite-epsilon system (fans are
    sampled along the integral curve of that family) and 0 otherwise.
    """

    kind: WaveKind
    speed_lo: float
    speed_hi: float
    left_state: RiemannState
    right_state: RiemannState
    family: int = 0

    @property
    def is_fan(self) -> bool:
        return self.kind in (WaveKind.RAREFACTION, WaveKind.VACUUM) and self.speed_hi > self.speed_lo


@dataclass
class WaveStructure:
    left: RiemannState
    right: RiemannState
    waves: List[Wave]
    intermediate: List[RiemannState] = field(default_factory=list)
    law: Optional[pr.PressureLaw] = None

    def __post_init__(self):
        lo = [w.speed_lo for w in self.waves]
        if any(b < a for a, b in zip(lo, lo[1:])):
            raise ValueError("waves must be ordered by speed")

    @property
    def min_speed(self) -> float:
        return self.waves[0].speed_lo if self.waves else 0.0

    @property
    def max_speed(self) -> float:
        return self.waves[-1].speed_hi if self.waves else 0.0

    def shocks(self) -> List[Wave]:
        return [w for w in self.waves if w.kind is WaveKind.SHOCK]


@dataclass(frozen=True)
class ClusterCollision:
    """Aggregation of two congested blocks touching at ``m``."""

    rho_star: float
    a: float
    m: float
    b: float
    u_l: float
    u_r: float
    u: float

    def pi(self, x):
        """Impulse pressure profile (zero outside ``[a, b]``)."""
        x = np.asarray(x, dtype=float)
        rs, u = self.rho_star, self.u
        left = rs * (u - self.u_l) * (self.m - x) + rs * (u - self.u_r) * (self.b - self.m)
        right = rs * (u - self.u_r) * (self.b - x)
        out = np.where(x <= self.m, left, right)
        out = np.where((x < self.a) | (x > self.b), 0.0, out)
        if self.m == self.a or self.m == self.b:
            out = np.zeros_like(out)
        return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# wave curves


def _integrand(law: pr.PressureLaw) -> Callable[[float], float]:
    def f(u):
        if u <= 0.0:
            return 0.0 if law.gamma > 3 else math.inf
        dp, _ = pr.pressure_derivatives(law, u)
        return math.sqrt(dp) / u
    return f


def P_difference(law: pr.PressureLaw, rho_a: float, rho_b: float, tol: float = 1e-12) -> float:
    """``P(rho_b) - P(rho_a)`` for ``P`` an antiderivative of ``sqrt(p'(u))/u``, by quadrature."""
    return integrate_adaptive(_integrand(law), rho_a, rho_b, tol=tol)


def P_closed(law: pr.PressureLaw, rho):
    """Closed-form antiderivative in the variable ``s = rho rho_star/(rho_star - rho)``.

    ``sqrt(p'(u))/u du = sqrt(gamma) s**((gamma-3)/2) ds``, which integrates to
    ``2 sqrt(gamma)/(gamma-1) s**((gamma-1)/2)`` (``sqrt(gamma) log s`` for ``gamma = 1``).
    """
    r = np.asarray(rho, dtype=float)
    g, rs = law.gamma, law.rho_star
    with np.errstate(divide="ignore"):
        s = r * rs / (rs - r)
        if g == 1.0:
            out = np.log(s)
        else:
            out = 2.0 * math.sqrt(g) / (g - 1.0) * s ** ((g - 1.0) / 2.0)
    return float(out) if out.ndim == 0 else out


def integral_curve(law: pr.PressureLaw, anchor: RiemannState, rho: float, branch: int) -> float:
    """``i(rho) = rho u_hat + branch * rho sqrt(eps) (P(rho) - P(rho_hat))``; ``branch`` is -1 or +1."""
    if branch not in (-1, 1):
        raise ValueError("branch must be -1 or +1")
    if rho == 0.0:
        return 0.0
    d = P_difference(law, anchor.rho, rho)
    return rho * anchor.u + branch * rho * math.sqrt(law.epsilon) * d


def hugoniot_curve(law: pr.PressureLaw, anchor: RiemannState, rho: float, branch: int) -> float:
    """``h(rho) = rho u_hat + branch * sqrt(rho/rho_hat) sqrt((rho - rho_hat)(eps p(rho) - eps p(rho_hat)))``."""
    if branch not in (-1, 1):
        raise ValueError("branch must be -1 or +1")
    jump = (rho - anchor.rho) * law.epsilon * (pr.pressure(law, rho) - pr.pressure(law, anchor.rho))
    return rho * anchor.u + branch * math.sqrt(rho / anchor.rho) * math.sqrt(max(jump, 0.0))


def shock_speed(anchor: RiemannState, rho: float, q: float) -> float:
    return (q - anchor.q) / (rho - anchor.rho)


def rankine_hugoniot_residuals(law: pr.PressureLaw, a: RiemannState, b: RiemannState,
                               sigma: float) -> Tuple[float, float]:
    """Relative residuals of the mass and momentum jump conditions."""
    def mflux(s):
        return s.q * s.q / s.rho + law.epsilon * pr.pressure(law, s.rho)
    r1 = (b.q - a.q) - sigma * (b.rho - a.rho)
    r2 = (mflux(b) - mflux(a)) - sigma * (b.q - a.q)
    s1 = max(abs(b.q), abs(a.q), abs(sigma * (b.rho - a.rho)), 1e-300)
    s2 = max(abs(mflux(b)), abs(mflux(a)), abs(sigma * (b.q - a.q)), 1e-300)
    return abs(r1) / s1, abs(r2) / s2


def _sound(law, rho):
    if rho <= 0.0:
        return 0.0
    return math.sqrt(law.epsilon * pr.pressure_derivatives(law, rho)[0])


def _u_left(law, st, rho):
    """Velocity on the 1-wave curve through the left state."""
    if rho <= st.rho:
        return st.u - math.sqrt(law.epsilon) * (P_closed(law, rho) - P_closed(law, st.rho))
    jump = (rho - st.rho) * law.epsilon * (pr.pressure(law, rho) - pr.pressure(law, st.rho))
    return st.u - math.sqrt(jump / (rho * st.rho))


def _u_right(law, st, rho):
    """Velocity on the 2-wave curve through the right state."""
    if rho <= st.rho:
        return st.u + math.sqrt(law.epsilon) * (P_closed(law, rho) - P_closed(law, st.rho))
    jump = (rho - st.rho) * law.epsilon * (pr.pressure(law, rho) - pr.pressure(law, st.rho))
    return st.u + math.sqrt(jump / (rho * st.rho))


def _upper_bracket(law, f):
    eta = 1e-2 * law.rho_star
    while eta > 1e-15 * law.rho_star:
        hi = law.rho_star - eta
        if f(hi) < 0:
            return hi
        eta *= 0.1
    raise ValueError("no upper bracket for the intermediate density below rho_star")


def solve_riemann_eps(law: pr.PressureLaw, left: RiemannState, right: RiemannState) -> WaveStructure:
    """Exact solution of the Riemann problem for the given ``epsilon``."""
    for st in (left, right):
        if not 0.0 < st.rho < law.rho_star:
            raise ValueError("finite-epsilon states need densities in (0, rho_star)")
    if left.rho == right.rho and left.q == right.q:
        return WaveStructure(left, right, [], [], law)

    def f(rho):
        return _u_left(law, left, rho) - _u_right(law, right, rho)

    f0 = f(0.0)
    waves: List[Wave] = []
    if not f0 > 0.0:
        # both rarefactions reach vacuum
        head1 = left.u - _sound(law, left.rho)
        tail1 = _u_left(law, left, 0.0)
        tail2 = _u_right(law, right, 0.0)
        head2 = right.u + _sound(law, right.rho)
        waves = [
            Wave(WaveKind.RAREFACTION, head1, tail1, left, VACUUM, 1),
            Wave(WaveKind.VACUUM, tail1, tail2, VACUUM, VACUUM),
            Wave(WaveKind.RAREFACTION, tail2, head2, VACUUM, right, 2),
        ]
        return WaveStructure(left, right, waves, [VACUUM], law)

    hi = _upper_bracket(law, f)
    rho_t = find_root_bracketed(f, 0.0, hi)
    if rho_t < VACUUM_FLOOR:
        rho_t = 0.0
    mid = RiemannState(rho_t, rho_t * _u_left(law, left, rho_t)) if rho_t > 0 else VACUUM
    if rho_t > left.rho:
        s = shock_speed(left, mid.rho, mid.q)
        waves.append(Wave(WaveKind.SHOCK, s, s, left, mid, 1))
    elif rho_t < left.rho:
        waves.append(Wave(WaveKind.RAREFACTION, left.u - _sound(law, left.rho),
                          mid.u - _sound(law, mid.rho), left, mid, 1))
    if rho_t > right.rho:
        s = shock_speed(right, mid.rho, mid.q)
        waves.append(Wave(WaveKind.SHOCK, s, s, mid, right, 2))
    elif rho_t < right.rho:
        waves.append(Wave(WaveKind.RAREFACTION, mid.u + _sound(law, mid.rho),
                          right.u + _sound(law, right.rho), mid, right, 2))
    return WaveStructure(left, right, waves, [mid], law)


def _fan_state(law: pr.PressureLaw, w: Wave, xi: float) -> RiemannState:
    if w.family == 1:
        anchor = w.left_state
        lo_rho, hi_rho = w.right_state.rho, anchor.rho

        def g(rho):
            return _u_left(law, anchor, rho) - _sound(law, rho) - xi

        rho = find_root_bracketed(g, lo_rho, hi_rho)
        return RiemannState(rho, rho * _u_left(law, anchor, rho)) if rho > 0 else VACUUM
    anchor = w.right_state
    lo_rho, hi_rho = w.left_state.rho, anchor.rho

    def g(rho):
        return _u_right(law, anchor, rho) + _sound(law, rho) - xi

    rho = find_root_bracketed(g, lo_rho, hi_rho)
    return RiemannState(rho, rho * _u_right(law, anchor, rho)) if rho > 0 else VACUUM


def sample_solution(ws: WaveStructure, xi: float) -> RiemannState:
    """State at similarity speed ``xi``; discontinuities take the right state at ``xi = speed``."""
    state = ws.left
    for w in ws.waves:
        if xi < w.speed_lo:
            return state
        if xi < w.speed_hi:
            if w.kind is WaveKind.VACUUM:
                return VACUUM
            if w.kind is WaveKind.RAREFACTION:
                return _fan_state(ws.law, w, xi)
        state = w.right_state
    return state


def sample_profile(ws: WaveStructure, x, t: float, x0: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
    """Density and momentum at positions ``x`` and time ``t`` for a jump at ``x0``."""
    x = np.asarray(x, dtype=float)
    rho, q = np.empty_like(x), np.empty_like(x)
    for k, xv in enumerate(x):
        if t == 0.0:
            st = ws.left if xv <= x0 else ws.right
        else:
            st = sample_solution(ws, (xv - x0) / t)
        rho[k], q[k] = st.rho, st.q
    return rho, q


# ---------------------------------------------------------------------------
# epsilon -> 0 limit


def _congested(st: RiemannState, rho_star: float) -> bool:
    return st.rho >= rho_star


def _mirror_state(st: RiemannState) -> RiemannState:
    return RiemannState(st.rho, -st.q, st.pbar)


def _mirror(ws: WaveStructure) -> WaveStructure:
    waves = [
        Wave(w.kind, -w.speed_hi, -w.speed_lo, _mirror_state(w.right_state), _mirror_state(w.left_state),
             {1: 2, 2: 1}.get(w.family, 0))
        for w in reversed(ws.waves)
    ]
    mids = [_mirror_state(s) for s in reversed(ws.intermediate)]
    return WaveStructure(_mirror_state(ws.right), _mirror_state(ws.left), waves, mids, ws.law)


def _vacuum_chain(left, right, left_c, right_c, rho_star):
    """Contact to vacuum and back; declustering waves for congested ends."""
    waves = []
    a = left
    if left_c:
        a = RiemannState(rho_star, left.q, 0.0)
        waves.append(Wave(WaveKind.DECLUSTERING, -math.inf, -math.inf, left, a))
    ul, ur = left.u, right.u
    waves.append(Wave(WaveKind.CONTACT, ul, ul, a, VACUUM))
    waves.append(Wave(WaveKind.VACUUM, ul, ur, VACUUM, VACUUM))
    b = RiemannState(rho_star, right.q, 0.0) if right_c else right
    waves.append(Wave(WaveKind.CONTACT, ur, ur, VACUUM, b))
    if right_c:
        waves.append(Wave(WaveKind.DECLUSTERING, math.inf, math.inf, b, right))
    mids = [s for s in (a, VACUUM, b) if s not in (left, right)]
    return waves, mids


def limit_riemann(left: RiemannState, right: RiemannState, rho_star: float = 1.0,
                  gamma: float = 2.0) -> WaveStructure:
    """Closed-form ``epsilon -> 0`` Riemann solution.

    A state is congested when ``rho == rho_star``; it may carry ``pbar > 0``.
    """
    for st in (left, right):
        if st.rho > rho_star or st.rho <= 0:
            raise ValueError("limit states need densities in (0, rho_star]")
        if st.pbar > 0 and st.rho < rho_star:
            raise ValueError("pbar > 0 requires a congested state")
    lc, rc = _congested(left, rho_star), _congested(right, rho_star)
    ul, ur = left.u, right.u
    rs = rho_star

    if rc and not lc:
        return _mirror(limit_riemann(_mirror_state(right), _mirror_state(left), rho_star, gamma))

    if not lc and not rc:
        if ul < ur:
            waves, mids = _vacuum_chain(left, right, False, False, rs)
            return WaveStructure(left, right, waves, mids)
        if ul == ur:
            if left == right:
                return WaveStructure(left, right, [])
            return WaveStructure(left, right, [Wave(WaveKind.CONTACT, ul, ul, left, right)])
        kl = math.sqrt((rs - left.rho) / (left.rho * rs))
        kr = math.sqrt((rs - right.rho) / (right.rho * rs))
        pbar = (ul - ur) ** 2 / (kl + kr) ** 2
        qt = ul * rs - math.sqrt(rs / left.rho) * math.sqrt((rs - left.rho) * pbar)
        sm = ul - math.sqrt(rs / (left.rho * (rs - left.rho))) * math.sqrt(pbar)
        sp = ur + math.sqrt(rs / (right.rho * (rs - right.rho))) * math.sqrt(pbar)
        mid = RiemannState(rs, qt, pbar)
        return WaveStructure(left, right, [Wave(WaveKind.SHOCK, sm, sm, left, mid),
                                           Wave(WaveKind.SHOCK, sp, sp, mid, right)], [mid])

    if lc and not rc:
        if ul < ur:
            waves, mids = _vacuum_chain(left, right, True, False, rs)
            return WaveStructure(left, right, waves, mids)
        if ul == ur:
            a = RiemannState(rs, left.q, 0.0)
            return WaveStructure(left, right, [Wave(WaveKind.DECLUSTERING, -math.inf, -math.inf, left, a),
                                               Wave(WaveKind.CONTACT, ul, ul, a, right)], [a])
        qt = rs * ul
        pbar = rs * right.rho / (rs - right.rho) * (ul - ur) ** 2
        sp = ur + math.sqrt(rs / right.rho) * math.sqrt(pbar / (rs - right.rho))
        mid = RiemannState(rs, qt, pbar)
        return WaveStructure(left, right, [Wave(WaveKind.SHOCK, -math.inf, -math.inf, left, mid),
                                           Wave(WaveKind.SHOCK, sp, sp, mid, right)], [mid])

    # both congested
    if ul < ur:
        waves, mids = _vacuum_chain(left, right, True, True, rs)
        return WaveStructure(left, right, waves, mids)
    if ul == ur:
        return WaveStructure(left, right, [Wave(WaveKind.DECLUSTERING, -math.inf, -math.inf, left, right)])
    qt = congested_collision_momentum(left.q, right.q, left.pbar, right.pbar, gamma)
    mid = RiemannState(rs, qt, math.inf)
    return WaveStructure(left, right, [Wave(WaveKind.SHOCK, -math.inf, -math.inf, left, mid),
                                       Wave(WaveKind.SHOCK, math.inf, math.inf, mid, right)], [mid])


def congested_collision_momentum(q_l: float, q_r: float, pbar_l: float, pbar_r: float,
                                 gamma: float) -> float:
    """Intermediate momentum of two colliding congested states (``q_l > q_r``).

    Solves ``|q - q_l| / |q - q_r| = (pbar_r / pbar_l)**(1/(2 gamma))`` for
    ``q`` in ``(q_r, q_l)`` by bracketed root finding.
    """
    if not q_l > q_r:
        raise ValueError("needs q_l > q_r")
    if pbar_l == 0.0 and pbar_r == 0.0:
        k = 1.0
    elif pbar_l == 0.0:
        return q_r
    elif pbar_r == 0.0:
        return q_l
    else:
        k = (pbar_r / pbar_l) ** (1.0 / (2.0 * gamma))

    def f(q):
        return (q_l - q) - k * (q - q_r)

    return find_root_bracketed(f, q_r, q_l)


def cluster_collision(rho_star: float, u_l: float, u_r: float, a: float, m: float,
                      b: float) -> ClusterCollision:
    """Speed and impulse pressure after two congested blocks aggregate."""
    if not (a <= m <= b and a < b):
        raise ValueError("cluster extents must satisfy a <= m <= b with a < b")
    if m == a:
        u = u_r
    elif m == b:
        u = u_l
    else:
        u = (u_l * (m - a) + u_r * (b - m)) / (b - a)
    return ClusterCollision(rho_star, a, m, b, u_l, u_r, u)


# ---------------------------------------------------------------------------
# composition


@dataclass
class ComposedSolution:
    positions: List[float]
    structures: List[WaveStructure]
    interaction_time: float

    def profile(self, x, t: float) -> Tuple[np.ndarray, np.ndarray]:
        if t > self.interaction_time:
            raise InteractionError(
                f"waves of neighbouring problems interact at t={self.interaction_time:.6g}",
                self.interaction_time,
            )
        x = np.asarray(x, dtype=float)
        splits = []
        for k in range(len(self.positions) - 1):
            lo = self.positions[k] + (self.structures[k].max_speed * t if t > 0 else 0.0)
            hi = self.positions[k + 1] + (self.structures[k + 1].min_speed * t if t > 0 else 0.0)
            splits.append(0.5 * (lo + hi))
        owner = np.searchsorted(np.asarray(splits), x, side="left")
        rho, q = np.empty_like(x), np.empty_like(x)
        for k, ws in enumerate(self.structures):
            sel = owner == k
            if np.any(sel):
                rho[sel], q[sel] = sample_profile(ws, x[sel], t, self.positions[k])
        return rho, q


def interaction_time(positions: Sequence[float], structures: Sequence[WaveStructure]) -> float:
    """First time at which waves of neighbouring problems meet."""
    t_int = math.inf
    for k in range(len(positions) - 1):
        fast = structures[k].max_speed
        slow = structures[k + 1].min_speed
        if fast > slow:
            t_int = min(t_int, (positions[k + 1] - positions[k]) / (fast - slow))
    return t_int


def compose_riemann(problems: Sequence[Tuple[float, RiemannState, RiemannState]],
                    solver: Callable[[RiemannState, RiemannState], WaveStructure]) -> ComposedSolution:
    """Juxtapose independent Riemann problems ``(position, left, right)``.

    ``solver`` maps a pair of states to a ``WaveStructure`` (for instance
    ``limit_riemann`` or ``solve_riemann_eps`` bound to a pressure law).
    """
    probs = sorted(problems, key=lambda p: p[0])
    for (_, _, r), (_, l2, _) in zip(probs, probs[1:]):
        if r != l2:
            raise ValueError("adjacent problems must share the middle state")
    pos = [p[0] for p in probs]
    ws = [solver(l, r) for _, l, r in probs]
    return ComposedSolution(pos, ws, interaction_time(pos, ws))
