import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
import scipy.integrate
import scipy.optimize
from hypothesis import given
from hypothesis import strategies as st

from congestion_ap import pressure as pr
from congestion_ap.cases import PIECEWISE_CASES, make_reference, riemann_problems
from congestion_ap.errors import InteractionError
from congestion_ap.riemann import (
    VACUUM,
    RiemannState,
    WaveKind,
    cluster_collision,
    compose_riemann,
    congested_collision_momentum,
    hugoniot_curve,
    integral_curve,
    limit_riemann,
    P_closed,
    P_difference,
    rankine_hugoniot_residuals,
    sample_profile,
    sample_solution,
    shock_speed,
    solve_riemann_eps,
)

P1L, P1R = RiemannState(0.7, 0.8), RiemannState(0.7, -0.8)


def limit_double_shock_oracle(left, right, rho_star=1.0):
    """Solve the four limit jump conditions for (q~, pbar, sigma-, sigma+).

    Mass and momentum across each shock with the congested middle state
    (rho_star, q~) carrying the pressure pbar.
    """
    def eqs(v):
        qt, pb, sm, sp = v
        return [
            qt - left.q - sm * (rho_star - left.rho),
            right.q - qt - sp * (right.rho - rho_star),
            qt * qt / rho_star + pb - left.q ** 2 / left.rho - sm * (qt - left.q),
            right.q ** 2 / right.rho - qt * qt / rho_star - pb - sp * (right.q - qt),
        ]
    guess = [0.5 * (left.q + right.q), 1.0, -1.0, 1.0]
    with warnings.catch_warnings():
        # fsolve reports stagnation at round-off; the residual check decides
        warnings.simplefilter("ignore", RuntimeWarning)
        sol = scipy.optimize.fsolve(eqs, guess, xtol=1e-14)
    assert np.max(np.abs(eqs(sol))) <= 1e-13
    return sol


# ---------------------------------------------------------------- curves

@pytest.mark.parametrize("branch", [-1, 1])
def test_curves_pass_through_anchor(law, branch):
    a = RiemannState(0.6, -0.3)
    assert integral_curve(law, a, 0.6, branch) == pytest.approx(-0.3, abs=1e-15)
    assert hugoniot_curve(law, a, 0.6, branch) == -0.3


@pytest.mark.parametrize("branch", [-1, 1])
def test_integral_curves_reach_origin(law, branch):
    a = RiemannState(0.5, 0.25)
    assert integral_curve(law, a, 0.0, branch) == 0.0
    assert abs(integral_curve(law, a, 1e-10, branch)) < 1e-9


def test_integral_curve_against_quadrature(law):
    # sqrt(p'(u))/u with p'(u) = 2u/(1-u)^3 for gamma = 2, rho_star = 1
    a = RiemannState(0.5, 0.25)
    for rho in (0.05, 0.2, 0.35, 0.49):
        P, _ = scipy.integrate.quad(lambda u: math.sqrt(2 * u / (1 - u) ** 3) / u, rho, 0.5,
                                    epsabs=1e-13, epsrel=1e-13)
        for branch in (-1, 1):
            i = integral_curve(law, a, rho, branch)
            assert abs(i / rho - 0.5) == pytest.approx(math.sqrt(1e-4) * P, rel=1e-9)


def test_P_quadrature_matches_closed_form(law):
    for lo, hi in [(0.1, 0.5), (0.3, 0.95), (1e-4, 0.2)]:
        assert P_difference(law, lo, hi) == pytest.approx(P_closed(law, hi) - P_closed(law, lo), rel=1e-10)


def test_integral_curve_convexity(law):
    a = RiemannState(0.5, 0.25)
    r = np.linspace(0.1, 0.9, 17)
    lo = np.array([integral_curve(law, a, x, -1) for x in r])
    hi = np.array([integral_curve(law, a, x, 1) for x in r])
    assert np.all(np.diff(lo, 2) < 0)
    assert np.all(np.diff(hi, 2) > 0)


def test_hugoniot_closed_form_value(law):
    # anchor (0.7, 0.8), branch -, rho = 0.9; p(0.9) = 81, p(0.7) = 49/9
    jump = Fraction(2, 10) * Fraction(1, 10000) * (81 - Fraction(49, 9))
    expected = 0.9 * 0.8 / 0.7 - math.sqrt(0.9 / 0.7) * math.sqrt(float(jump))
    assert hugoniot_curve(law, P1L, 0.9, -1) == pytest.approx(expected, rel=1e-12, abs=1e-12)


def test_hugoniot_states_satisfy_rankine_hugoniot(law):
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(100):
        ra, rb = rng.uniform(0.05, 0.98, 2)
        if abs(ra - rb) < 1e-6:
            continue
        a = RiemannState(ra, rng.uniform(-1, 1))
        for branch in (-1, 1):
            b = RiemannState(rb, hugoniot_curve(law, a, rb, branch))
            worst = max(worst, *rankine_hugoniot_residuals(law, a, b, shock_speed(a, b.rho, b.q)))
    assert worst <= 1e-10


@given(st.floats(0.05, 0.98), st.floats(0.05, 0.98), st.floats(-2, 2), st.sampled_from([-1, 1]),
       st.sampled_from([1e-2, 1e-4, 1e-8]))
def test_hugoniot_rh_property(ra, rb, qa, branch, eps):
    if abs(ra - rb) < 1e-4:
        return
    law = pr.PressureLaw(epsilon=eps)
    a = RiemannState(ra, qa)
    b = RiemannState(rb, hugoniot_curve(law, a, rb, branch))
    r1, r2 = rankine_hugoniot_residuals(law, a, b, shock_speed(a, b.rho, b.q))
    assert r1 <= 1e-10 and r2 <= 1e-10


def _distance_to_limit_lines(law, anchor, branch, curve):
    out = 0.0
    for rho in np.linspace(0.05, 0.99, 48):
        q = curve(law, anchor, rho, branch)
        d_line = abs(q - rho * anchor.u) / math.hypot(1.0, anchor.u)
        out = max(out, min(d_line, law.rho_star - rho))
    return out


@pytest.mark.parametrize("curve", [integral_curve, hugoniot_curve])
@pytest.mark.parametrize("branch", [-1, 1])
def test_curves_approach_limit_lines(curve, branch):
    anchor = RiemannState(0.5, 0.25)
    d = [_distance_to_limit_lines(pr.PressureLaw(epsilon=e), anchor, branch, curve)
         for e in (1e-1, 1e-2, 1e-3, 1e-4)]
    assert all(b < a for a, b in zip(d, d[1:]))


# ---------------------------------------------------------------- finite epsilon

def test_trivial_problem(law):
    ws = solve_riemann_eps(law, P1L, P1L)
    assert ws.waves == []
    assert sample_solution(ws, 3.0) == P1L


def test_p1_two_shocks(law):
    ws = solve_riemann_eps(law, P1L, P1R)
    assert [w.kind for w in ws.waves] == [WaveKind.SHOCK, WaveKind.SHOCK]
    mid = ws.intermediate[0]
    assert 0.99 < mid.rho < 1.0
    assert abs(mid.q) < 1e-12
    # within O(eps^(1/gamma)) of the limit pressure
    assert abs(law.epsilon * pr.pressure(law, mid.rho) - 64 / 21) <= 5 * math.sqrt(law.epsilon)
    assert ws.waves[0].left_state == P1L and ws.waves[-1].right_state == P1R


def test_p1_pressure_converges_to_limit():
    gaps = []
    for eps in (1e-2, 1e-4, 1e-6):
        law = pr.PressureLaw(epsilon=eps)
        mid = solve_riemann_eps(law, P1L, P1R).intermediate[0]
        gaps.append(abs(eps * pr.pressure(law, mid.rho) - 64 / 21))
    assert gaps[0] > gaps[1] > gaps[2]


def test_p2_vacuum(law):
    ws = solve_riemann_eps(law, P1R, P1L)
    kinds = [w.kind for w in ws.waves]
    assert kinds == [WaveKind.RAREFACTION, WaveKind.VACUUM, WaveKind.RAREFACTION]
    assert ws.intermediate == [VACUUM]
    assert sample_solution(ws, 0.0) == VACUUM


@pytest.mark.parametrize("eps", [1e-2, 1e-4, 1e-8])
@pytest.mark.parametrize("case", ["P1", "P3", "P4"])
def test_emitted_shocks_satisfy_rh(case, eps):
    law = pr.PressureLaw(epsilon=eps)
    for _, left, right in riemann_problems(PIECEWISE_CASES[case]):
        ws = solve_riemann_eps(law, left, right)
        speeds = [w.speed_lo for w in ws.waves]
        assert speeds == sorted(speeds)
        for w in ws.shocks():
            r1, r2 = rankine_hugoniot_residuals(law, w.left_state, w.right_state, w.speed_lo)
            assert r1 <= 1e-8 and r2 <= 1e-8


def test_sample_outside_all_waves(law):
    ws = solve_riemann_eps(law, RiemannState(0.8, 0.3), RiemannState(0.5, 0.1))
    assert sample_solution(ws, -1e3) == ws.left
    assert sample_solution(ws, 1e3) == ws.right


def test_p1_profile_jumps_at_shock_speeds(law):
    ws = solve_riemann_eps(law, P1L, P1R)
    t, x = 0.025, np.linspace(-0.2, 0.2, 4001)
    rho, _ = sample_profile(ws, x, t)
    jumps = np.flatnonzero(np.abs(np.diff(rho)) > 1e-6)
    assert jumps.size == 2
    h = x[1] - x[0]
    for j, w in zip(jumps, ws.waves):
        assert x[j] - 1e-12 <= w.speed_lo * t <= x[j + 1] + h * 1e-9


@given(st.floats(-3, 3), st.floats(0.01, 1.0), st.floats(0.1, 10.0))
def test_self_similarity(xi, t, scale):
    law = pr.PressureLaw(epsilon=1e-4)
    ws = solve_riemann_eps(law, P1R, P1L)      # fans and vacuum
    r1, q1 = sample_profile(ws, [xi * t], t)
    r2, q2 = sample_profile(ws, [xi * t * scale], t * scale)
    assert r1[0] == pytest.approx(r2[0], abs=1e-9)
    assert q1[0] == pytest.approx(q2[0], abs=1e-9)


def test_fan_interior_is_on_integral_curve(law):
    ws = solve_riemann_eps(law, RiemannState(0.6, 0.0), RiemannState(0.3, 0.0))
    fan = ws.waves[0]
    assert fan.kind is WaveKind.RAREFACTION
    xi = 0.5 * (fan.speed_lo + fan.speed_hi)
    s = sample_solution(ws, xi)
    assert s.q == pytest.approx(integral_curve(law, ws.left, s.rho, -1), abs=1e-10)
    c = math.sqrt(law.epsilon * pr.pressure_derivatives(law, s.rho)[0])
    assert s.u - c == pytest.approx(xi, abs=1e-10)


def test_eps_solver_rejects_congested_data(law):
    with pytest.raises(ValueError):
        solve_riemann_eps(law, RiemannState(1.0, 0.0), P1R)


# ---------------------------------------------------------------- limit

def test_limit_p1_closed_form():
    ws = limit_riemann(P1L, P1R)
    mid = ws.intermediate[0]
    assert mid.rho == 1.0
    assert abs(mid.q) <= 1e-12
    assert mid.pbar == pytest.approx(64 / 21, abs=1e-12)
    assert ws.waves[0].speed_lo == pytest.approx(-8 / 3, abs=1e-12)
    assert ws.waves[1].speed_lo == pytest.approx(8 / 3, abs=1e-12)


@pytest.mark.parametrize("left,right", [
    ((0.7, 0.8), (0.7, -0.8)),
    ((0.8, 0.3), (0.5, 0.1)),
    ((0.3, 0.9), (0.6, -0.1)),
    ((0.2, 0.1), (0.95, -0.4)),
])
def test_limit_double_shock_matches_jump_conditions(left, right):
    l, r = RiemannState(*left), RiemannState(*right)
    qt, pb, sm, sp = limit_double_shock_oracle(l, r)
    ws = limit_riemann(l, r)
    mid = ws.intermediate[0]
    assert mid.q == pytest.approx(qt, abs=1e-10)
    assert mid.pbar == pytest.approx(pb, rel=1e-10)
    assert ws.waves[0].speed_lo == pytest.approx(sm, rel=1e-10)
    assert ws.waves[1].speed_lo == pytest.approx(sp, rel=1e-10)


def test_limit_p4_pressure():
    ws = limit_riemann(RiemannState(0.8, 0.3), RiemannState(0.5, 0.1))
    assert ws.intermediate[0].pbar == pytest.approx(0.175 ** 2 / 2.25, rel=1e-12)
    assert ws.intermediate[0].pbar == pytest.approx(0.0136, abs=1e-4)


def test_limit_p2_contacts_and_vacuum():
    ws = limit_riemann(P1R, P1L)
    kinds = [w.kind for w in ws.waves]
    assert kinds == [WaveKind.CONTACT, WaveKind.VACUUM, WaveKind.CONTACT]
    assert ws.waves[0].speed_lo == pytest.approx(-0.8 / 0.7)
    assert ws.waves[2].speed_lo == pytest.approx(0.8 / 0.7)


def test_limit_equal_velocities_single_contact():
    ws = limit_riemann(RiemannState(0.4, 0.2), RiemannState(0.8, 0.4))
    assert [w.kind for w in ws.waves] == [WaveKind.CONTACT]
    assert ws.waves[0].speed_lo == pytest.approx(0.5)


def test_limit_declustering_and_infinite_shocks():
    cong = RiemannState(1.0, 0.5, 0.3)
    ws = limit_riemann(cong, RiemannState(0.5, 0.5))          # u_l = u_r
    assert ws.waves[0].kind is WaveKind.DECLUSTERING and ws.waves[0].speed_lo == -math.inf
    assert ws.waves[0].right_state.pbar == 0.0
    ws = limit_riemann(cong, RiemannState(0.5, 0.0))          # u_l > u_r
    assert ws.waves[0].speed_lo == -math.inf
    assert ws.intermediate[0].q == pytest.approx(0.5)
    ws = limit_riemann(cong, RiemannState(1.0, -0.5, 0.3))    # congested collision
    assert [w.speed_lo for w in ws.waves] == [-math.inf, math.inf]
    assert ws.intermediate[0].q == pytest.approx(0.0, abs=1e-14)


def test_limit_mirror_consistency():
    a, b = RiemannState(0.5, 0.0), RiemannState(1.0, -0.5, 0.2)
    ws = limit_riemann(a, b)
    wm = limit_riemann(RiemannState(1.0, 0.5, 0.2), RiemannState(0.5, 0.0))
    assert ws.intermediate[0].pbar == pytest.approx(wm.intermediate[0].pbar)
    assert ws.intermediate[0].q == pytest.approx(-wm.intermediate[0].q)


def test_congested_collision_momentum_ratio():
    ql, qr, pl, pr_, g = 0.6, -0.2, 0.5, 2.0, 2.0
    qt = congested_collision_momentum(ql, qr, pl, pr_, g)
    assert abs(qt - ql) / abs(qt - qr) == pytest.approx((pr_ / pl) ** (1 / (2 * g)), rel=1e-12)
    assert qr < qt < ql
    with pytest.raises(ValueError):
        congested_collision_momentum(-1.0, 1.0, 1.0, 1.0, 2.0)


def test_limit_state_validation():
    with pytest.raises(ValueError):
        limit_riemann(RiemannState(0.5, 0.0, 0.1), P1R)
    with pytest.raises(ValueError):
        RiemannState(-0.1, 0.0)


# ---------------------------------------------------------------- clusters

def test_cluster_collision_examples():
    c = cluster_collision(1.0, 1.0, 0.0, 0.0, 0.5, 1.0)
    assert c.u == pytest.approx(0.5)
    assert c.pi(0.5) == pytest.approx(0.25)
    assert cluster_collision(1.0, 0.7, -0.7, 0.2, 0.5, 0.8).u == pytest.approx(0.0, abs=1e-15)


@given(st.floats(0.5, 2.0), st.floats(-2, 2), st.floats(-2, 2), st.floats(0, 1), st.floats(0.01, 0.99),
       st.floats(1.01, 3))
def test_cluster_pressure_properties(rs, ul, ur, a, frac, b):
    m = a + frac * (b - a)
    c = cluster_collision(rs, ul, ur, a, m, b)
    assert c.pi(a) == pytest.approx(0.0, abs=1e-12)
    assert c.pi(b) == pytest.approx(0.0, abs=1e-12)
    h = 1e-9 * (b - a)
    assert c.pi(m - h) == pytest.approx(c.pi(m + h), abs=1e-6)
    if ul > ur:
        xs = np.linspace(a, b, 33)
        assert np.all(c.pi(xs) >= -1e-12)


def test_cluster_degenerate():
    c = cluster_collision(1.0, 1.0, -1.0, 0.0, 0.0, 1.0)
    assert c.u == -1.0 and np.all(c.pi(np.linspace(0, 1, 5)) == 0)
    with pytest.raises(ValueError):
        cluster_collision(1.0, 1.0, -1.0, 0.5, 0.2, 1.0)


# ---------------------------------------------------------------- composition

def test_single_problem_composition(law):
    ws = solve_riemann_eps(law, P1L, P1R)
    comp = compose_riemann([(0.5, P1L, P1R)], lambda l, r: solve_riemann_eps(law, l, r))
    assert comp.interaction_time == math.inf
    x = np.linspace(0, 1, 41)
    r1, q1 = comp.profile(x, 0.05)
    r2, q2 = sample_profile(ws, x, 0.05, 0.5)
    np.testing.assert_array_equal(r1, r2)
    np.testing.assert_array_equal(q1, q2)


def test_p3_interaction_time(law):
    ref = make_reference(PIECEWISE_CASES["P3"], law, "limit")
    (_, l1, r1), (_, l2, r2) = riemann_problems(PIECEWISE_CASES["P3"])
    sp_left = limit_double_shock_oracle(l1, r1)[3]
    sm_right = limit_double_shock_oracle(l2, r2)[2]
    assert ref.interaction_time == pytest.approx(0.5 / (sp_left - sm_right), rel=1e-10)
    assert ref.available(0.9 * ref.interaction_time)
    assert not ref.available(1.1 * ref.interaction_time)
    with pytest.raises(InteractionError) as err:
        ref.profile(np.linspace(0, 1, 11), 1.1 * ref.interaction_time)
    assert err.value.interaction_time == ref.interaction_time


def test_composition_requires_shared_states(law):
    with pytest.raises(ValueError):
        compose_riemann([(0.2, P1L, P1R), (0.6, P1L, P1R)], lambda l, r: limit_riemann(l, r))
