import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from congestion_ap import pressure as pr
from congestion_ap.cases import PIECEWISE_CASES, sample_pieces
from congestion_ap.errors import DomainError
from congestion_ap.mesh import GHOST, BoundaryRule, Grid1D, GridState, total_mass
from congestion_ap.numerics import newton_solve
from congestion_ap.schemes1d import (
    SCHEME_NEWTON,
    GaugeState1D,
    SchemeConfig,
    adaptive_dt,
    assemble_direct_system,
    direct_step,
    explicit_fluxes,
    gauge_step,
    gauge_viscosity_sum,
    init_gauge_1d,
    local_diffusion,
    momentum_flux_explicit,
    picard_step,
    step,
)

SCHEMES = ("direct", "gauge1", "gauge2")


def uniform(m, rho, q, rule=BoundaryRule.COPY):
    g = Grid1D(m)
    return GridState.from_interior(g, np.full(g.m, rho), np.full(g.m, q), rule)


def case_state(name, M=200, rule=BoundaryRule.COPY):
    g = Grid1D(M)
    rho, q = sample_pieces(PIECEWISE_CASES[name], g.x)
    return GridState.from_interior(g, rho, q, rule)


def advance(law, state, cfg, n):
    gauge = None
    for _ in range(n):
        state, gauge = step(law, state, cfg, gauge)
    return state, gauge


# ---------------------------------------------------------------- fluxes

def test_local_diffusion_uniform_at_rest(law):
    # sqrt(1e-4 * p0'(0.5)) with p0'(0.5) = p'(0.5)/2 = 8/2
    assert local_diffusion(law, 0.5, 0.0, 0.5, 0.0) == pytest.approx(0.02, rel=1e-14)


def test_local_diffusion_p1_interface(law):
    expected = 0.8 / 0.7 + math.sqrt(1e-4 * (2 * 0.7 / 0.3 ** 3) / 2)
    assert local_diffusion(law, 0.7, 0.8, 0.7, -0.8) == pytest.approx(expected, rel=1e-13)
    assert expected == pytest.approx(1.1938, abs=1e-4)


@given(st.floats(0.01, 0.99), st.floats(-2, 2), st.floats(0.01, 0.99), st.floats(-2, 2))
def test_local_diffusion_symmetric_and_dominating(rl, ql, rr, qr):
    law = pr.PressureLaw(epsilon=1e-4)
    c = local_diffusion(law, rl, ql, rr, qr)
    assert c == local_diffusion(law, rr, qr, rl, ql)
    assert c >= abs(ql / rl) and c >= abs(qr / rr)


def test_local_diffusion_rejects_vacuum(law):
    with pytest.raises(DomainError):
        local_diffusion(law, 0.0, 0.0, 0.5, 0.0)


def test_momentum_flux_uniform_consistency(law):
    F = momentum_flux_explicit(law, uniform(21, 0.5, 0.2))
    np.testing.assert_allclose(F, 0.04 / 0.5 + 1e-4 * 0.5, rtol=1e-14)
    assert F[0] == pytest.approx(0.08005, rel=1e-14)


def test_momentum_flux_at_rest_is_pressure(law):
    F = momentum_flux_explicit(law, uniform(11, 0.93, 0.0))
    np.testing.assert_allclose(F, law.epsilon * pr.p0(law, 0.93), rtol=1e-14)


def test_momentum_flux_mirror_symmetric_for_p1(law):
    s = case_state("P1", M=201)       # no node on the jump
    F = momentum_flux_explicit(law, s)
    np.testing.assert_allclose(F, F[::-1], rtol=0, atol=1e-15)
    assert np.all(explicit_fluxes(law, s).C_half >= 0)


# ---------------------------------------------------------------- elliptic system

def wide_laplacian_copy(u):
    e = np.pad(u, 2, mode="edge")
    return e[4:] - 2 * e[2:-2] + e[:-4]


def test_direct_system_uniform_fixed_point(law):
    s = uniform(31, 0.7, 0.3)
    system, _ = assemble_direct_system(law, s, 4e-3)
    np.testing.assert_allclose(system.rhs, 0.7, rtol=0, atol=1e-15)
    s0 = np.full(s.grid.m, pr.s_of_rho(law, 0.7))
    assert np.max(np.abs(system.residual(s0))) < 1e-15


def test_direct_rhs_locality(law):
    g = Grid1D(40)
    base = GridState.from_interior(g, np.full(g.m, 0.6), np.zeros(g.m))
    rho = np.full(g.m, 0.6)
    rho[20] = 0.65
    bump = GridState.from_interior(g, rho, np.zeros(g.m))
    r0 = assemble_direct_system(law, base, 4e-3)[0].rhs
    r1 = assemble_direct_system(law, bump, 4e-3)[0].rhs
    changed = np.flatnonzero(r0 != r1)
    assert changed.size and changed.min() >= 18 and changed.max() <= 22


def test_direct_system_jacobian_matches_finite_differences(law):
    s = case_state("P1", M=20)
    system, _ = assemble_direct_system(law, s, 0.02)
    x = pr.s_of_rho(law, np.linspace(0.5, 0.9, 21))
    J = system.jacobian(x).matrix().toarray()
    fd = np.empty_like(J)
    for k in range(x.size):
        h = 1e-6 * x[k]
        e = np.zeros_like(x)
        e[k] = h
        fd[:, k] = (system.residual(x + e) - system.residual(x - e)) / (2 * h)
    np.testing.assert_allclose(J, fd, rtol=1e-6, atol=1e-8)


def test_direct_system_matches_fixed_point_oracle(law):
    # chord (frozen-slope Picard) iteration on pi = eps p1, independent of the
    # Newton solver, the s variable and the package's banded assembly
    s = case_state("P1", M=200)
    dt, m = 1e-3, s.grid.m
    system, _ = assemble_direct_system(law, s, dt)
    k = dt * dt / (4 * s.grid.dx ** 2)
    D = 1.2 / (law.epsilon * pr.p1_derivative(law, s.rho_in.min()))
    A = D * np.eye(m) - k * np.array([wide_laplacian_copy(e) for e in np.eye(m)]).T
    lu = scipy.linalg.lu_factor(A)

    def rho_of(pi):
        return pr.invert_p1(law, pi / law.epsilon)

    pi = law.epsilon * pr.p1(law, s.rho_in)
    for _ in range(5000):
        d = scipy.linalg.lu_solve(lu, system.rhs + k * wide_laplacian_copy(pi) - rho_of(pi))
        pi = pi + d
        if np.max(np.abs(d)) < 1e-16:
            break
    assert np.max(np.abs(rho_of(pi) - k * wide_laplacian_copy(pi) - system.rhs)) < 1e-12
    sol = newton_solve(system.residual, system.jacobian, pr.s_of_rho(law, s.rho_in), SCHEME_NEWTON,
                       project=lambda v: np.maximum(v, 0.0))
    np.testing.assert_allclose(system.rho(sol), rho_of(pi), rtol=0, atol=1e-8)


def test_direct_step_equals_manual_composition(law):
    s = case_state("P1", M=100)
    cfg = SchemeConfig(dt=2e-3)
    new = direct_step(law, s, cfg)
    system, fl = assemble_direct_system(law, s, cfg.dt)
    sv = newton_solve(system.residual, system.jacobian, pr.s_of_rho(law, s.rho_in), cfg.newton,
                      project=lambda v: np.maximum(v, 0.0))
    rho = pr.rho_of_s(law, sv)
    pi = np.pad(law.epsilon * pr.p1_of_s(law, sv), 2, mode="edge")
    F, dx, m = fl.F_half, s.grid.dx, s.grid.m
    j = np.arange(m) + GHOST
    q = s.q_in - cfg.dt / dx * (F[j] - F[j - 1]) - cfg.dt / (2 * dx) * (pi[j + 1] - pi[j - 1])
    np.testing.assert_array_equal(new.rho_in, rho)
    np.testing.assert_allclose(new.q_in, q, rtol=0, atol=1e-14)
    assert new.step == 1 and new.time == pytest.approx(cfg.dt)


# ---------------------------------------------------------------- invariants

@pytest.mark.parametrize("scheme", SCHEMES)
@pytest.mark.parametrize("rho,q", [(0.7, 0.3), (0.3, -0.5), (0.95, 0.1)])
def test_constant_state_preserved(law, scheme, rho, q):
    s0 = uniform(41, rho, q)
    s, _ = advance(law, s0, SchemeConfig(scheme=scheme, dt=2e-3), 10)
    assert np.max(np.abs(s.rho_in - rho)) <= 1e-13
    assert np.max(np.abs(s.q_in - q)) <= 1e-13


@settings(max_examples=20)
@given(st.sampled_from(SCHEMES), st.floats(0.05, 0.98), st.floats(-1, 1),
       st.sampled_from([1e-2, 1e-4, 1e-8]))
def test_constant_state_property(scheme, rho, q, eps):
    law = pr.PressureLaw(epsilon=eps)
    s, _ = advance(law, uniform(17, rho, q), SchemeConfig(scheme=scheme, dt=1e-3), 3)
    assert np.max(np.abs(s.rho_in - rho)) <= 1e-12
    assert np.max(np.abs(s.q_in - q)) <= 1e-12


@pytest.mark.parametrize("scheme", SCHEMES)
@pytest.mark.parametrize("case", ["P1", "P2"])
def test_mirror_symmetry(law, scheme, case):
    s = case_state(case, M=201)
    cfg = SchemeConfig(scheme=scheme, dt=5e-4)
    gauge = None
    for _ in range(20):
        s, gauge = step(law, s, cfg, gauge)
        assert np.max(np.abs(s.rho_in - s.rho_in[::-1])) <= 1e-10
        assert np.max(np.abs(s.q_in + s.q_in[::-1])) <= 1e-10


def test_periodic_mass_conservation(law):
    s = case_state("P1", M=200, rule=BoundaryRule.PERIODIC)
    cfg = SchemeConfig(dt=5e-4, boundary="periodic")
    m0 = total_mass(s)
    prev = m0
    for _ in range(50):
        s = direct_step(law, s, cfg)
        m = total_mass(s)
        assert abs(m - prev) <= 1e-12 * m0
        prev = m
    assert np.all((s.rho_in > 0) & (s.rho_in < 1))


def test_p1_stays_admissible_beyond_acoustic_cfl(law):
    s = case_state("P1", M=100)
    s, _ = advance(law, s, SchemeConfig(dt=1e-2), 5)
    assert np.all(np.isfinite(s.q_in))
    assert 0 < s.rho_in.min() and s.rho_in.max() < law.rho_star


# ---------------------------------------------------------------- Picard

def test_picard_zero_iterations_is_direct(law):
    s = case_state("P1")
    a = picard_step(law, s, SchemeConfig(dt=5e-4, picard_iters=0))
    b = direct_step(law, s, SchemeConfig(dt=5e-4))
    np.testing.assert_array_equal(a.rho, b.rho)
    np.testing.assert_array_equal(a.q, b.q)


def test_picard_self_convergence(law):
    # contraction factor grows with lambda dt / dx; dt = 1e-4 on dx = 1/200
    s = case_state("P1")
    a = picard_step(law, s, SchemeConfig(dt=1e-4, picard_iters=5))
    b = picard_step(law, s, SchemeConfig(dt=1e-4, picard_iters=20))
    assert np.max(np.abs(a.rho - b.rho)) <= 1e-8
    assert np.max(np.abs(a.q - b.q)) <= 1e-8


def test_picard_iterates_contract(law):
    s = case_state("P1")
    prev, gaps = None, []
    for k in range(1, 8):
        cur = picard_step(law, s, SchemeConfig(dt=5e-4, picard_iters=k))
        if prev is not None:
            gaps.append(np.max(np.abs(cur.q - prev.q)))
        prev = cur
    assert all(b < a for a, b in zip(gaps, gaps[1:]))


def test_picard_preserves_uniform_state(law):
    s = uniform(21, 0.6, -0.2)
    new = picard_step(law, s, SchemeConfig(dt=1e-3, picard_iters=4))
    assert np.max(np.abs(new.rho_in - 0.6)) <= 1e-13
    assert np.max(np.abs(new.q_in + 0.2)) <= 1e-13


# ---------------------------------------------------------------- time step

def test_adaptive_dt_single_state(law):
    s = uniform(101, 0.5, 0.0)
    assert adaptive_dt(law, s, 1.0, 0.01) == pytest.approx(0.5, rel=1e-13)
    assert adaptive_dt(law, s, 2.0, 0.01) == pytest.approx(2 * adaptive_dt(law, s, 1.0, 0.01), rel=1e-15)


def test_adaptive_dt_degenerate_speeds():
    law = pr.PressureLaw(epsilon=1e-4, split=False)    # p0 = 0, so no sound speed
    s = uniform(11, 0.5, 0.0)
    assert adaptive_dt(law, s, 1.0, 0.01, dt_max=0.3) == 0.3
    with pytest.raises(ValueError):
        adaptive_dt(law, s, 1.0, 0.01)


def test_adaptive_dt_bounded_below_as_eps_vanishes():
    s = case_state("P1")
    dts = [adaptive_dt(pr.PressureLaw(epsilon=e), s, 1.0, s.grid.dx) for e in (1e-2, 1e-4, 1e-8, 1e-12)]
    assert min(dts) >= 0.5 * s.grid.dx / (0.8 / 0.7)


# ---------------------------------------------------------------- gauge

def test_gauge_viscosity_sum_telescopes(law):
    rng = np.random.default_rng(3)
    g = Grid1D(30)
    s = GridState.from_interior(g, rng.uniform(0.3, 0.9, g.m), rng.uniform(-1, 1, g.m))
    s.q[:GHOST] = rng.uniform(-1, 1, GHOST)         # nonzero ghost jumps
    s.q[-GHOST:] = rng.uniform(-1, 1, GHOST)
    C = explicit_fluxes(law, s).C_half
    q, M, e = s.q, g.M, GHOST
    telescoped = C[M + e] * (q[M + e + 1] - q[M + e]) - C[e - 1] * (q[e] - q[e - 1])
    assert gauge_viscosity_sum(C, q, g.m) == pytest.approx(telescoped, rel=1e-12, abs=1e-14)


@pytest.mark.parametrize("scheme", ["gauge1", "gauge2"])
def test_gauge_uniform_state(law, scheme):
    s = uniform(31, 0.7, 0.3)
    gauge = init_gauge_1d(s)
    assert gauge.a == pytest.approx(0.3, rel=1e-15)
    new, g1 = gauge_step(law, s, gauge, SchemeConfig(scheme=scheme, dt=2e-3))
    assert np.max(np.abs(g1.phi)) <= 1e-14
    assert g1.phi[0] == 0.0 and g1.phi[-1] == 0.0
    assert g1.a == pytest.approx(0.3, abs=1e-14)
    assert np.max(np.abs(new.rho_in - 0.7)) <= 1e-13
    assert np.max(np.abs(new.q_in - 0.3)) <= 1e-13


def test_gauge_step_rejects_direct(law):
    s = uniform(11, 0.5, 0.0)
    with pytest.raises(ValueError):
        gauge_step(law, s, GaugeState1D(0.0, np.zeros(s.grid.m)), SchemeConfig(dt=1e-3))


def test_gauge_schemes_share_density_with_direct(law):
    s = case_state("P1")
    d = direct_step(law, s, SchemeConfig(dt=5e-4))
    for scheme in ("gauge1", "gauge2"):
        g, _ = gauge_step(law, s, init_gauge_1d(s), SchemeConfig(scheme=scheme, dt=5e-4))
        np.testing.assert_array_equal(g.rho_in, d.rho_in)


def test_scheme_config_validation():
    with pytest.raises(ValueError):
        SchemeConfig(dt=0.0)
    with pytest.raises(ValueError):
        SchemeConfig(picard_iters=-1)
    with pytest.raises(ValueError):
        SchemeConfig(scheme="nope")
