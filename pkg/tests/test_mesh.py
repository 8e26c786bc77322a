import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from congestion_ap.mesh import (
    GHOST,
    BoundaryRule,
    Grid1D,
    Grid2D,
    GridState,
    fill_ghosts,
    read_csv,
    total_mass,
    write_csv,
    write_profile_csv,
)


def test_grid1d_geometry():
    g = Grid1D.from_dx(0.25)
    assert g.M == 4 and g.m == 5
    assert g.dx == 0.25
    np.testing.assert_array_equal(g.x, [0.0, 0.25, 0.5, 0.75, 1.0])
    assert g.n_ext == 5 + 2 * GHOST
    with pytest.raises(ValueError):
        Grid1D.from_dx(0.3)
    with pytest.raises(ValueError):
        Grid1D(4, 1.0, 0.0)


def test_grid2d_geometry():
    g = Grid2D.unit_square(0.1, 0.25)
    assert g.shape == (11, 5)
    assert g.shape_ext == (15, 9)
    assert g.dx == pytest.approx(0.1) and g.dy == 0.25


def test_fill_copy():
    s = GridState.from_interior(Grid1D(2), [1.0, 2.0, 3.0], [0.0, 0.0, 0.0], BoundaryRule.COPY)
    np.testing.assert_array_equal(s.rho, [1, 1, 1, 2, 3, 3, 3])


def test_fill_periodic():
    s = GridState.from_interior(Grid1D(2), [1.0, 2.0, 3.0], [0.0, 0.0, 0.0], BoundaryRule.PERIODIC)
    np.testing.assert_array_equal(s.rho, [2, 3, 1, 2, 3, 1, 2])


@pytest.mark.parametrize("rule", list(BoundaryRule))
def test_constant_field_stays_constant(rule):
    s = GridState.from_interior(Grid1D(7), np.full(8, 0.4), np.full(8, -0.2), rule)
    assert np.all(s.rho == 0.4) and np.all(s.q == -0.2)
    g = Grid2D.unit_square(0.25)
    s2 = GridState.from_interior(g, np.full(g.shape, 0.4), np.zeros((2,) + g.shape), rule)
    assert np.all(s2.rho == 0.4)


def test_shape_validation():
    with pytest.raises(ValueError):
        GridState(Grid1D(4), np.zeros(5), np.zeros(9))
    with pytest.raises(ValueError):
        GridState.from_interior(Grid1D(4), np.zeros(4), np.zeros(5))


def test_total_mass_examples():
    for M in (1, 10, 137):
        s = GridState.from_interior(Grid1D(M), np.full(M + 1, 0.7), np.zeros(M + 1))
        assert total_mass(s) == pytest.approx(0.7, rel=1e-14)
    s = GridState.from_interior(Grid1D(5), np.zeros(6), np.zeros(6))
    assert total_mass(s) == 0.0
    g = Grid2D.unit_square(0.1)
    s2 = GridState.from_interior(g, np.full(g.shape, 0.6), np.zeros((2,) + g.shape))
    assert total_mass(s2) == pytest.approx(0.6, rel=1e-14)


fields = arrays(np.float64, 9, elements=st.floats(0.0, 1.0))


@given(fields, st.sampled_from(list(BoundaryRule)))
def test_fill_ghosts_idempotent(rho, rule):
    s = GridState.from_interior(Grid1D(8), rho, rho, rule)
    once = fill_ghosts(s, rule)
    twice = fill_ghosts(once, rule)
    np.testing.assert_array_equal(once.rho, twice.rho)
    np.testing.assert_array_equal(once.q, twice.q)


@given(fields, st.floats(0.0, 10.0))
def test_total_mass_linear(rho, c):
    s = GridState.from_interior(Grid1D(8), rho, rho)
    sc = GridState.from_interior(Grid1D(8), c * rho, rho)
    assert total_mass(sc) == pytest.approx(c * total_mass(s), rel=1e-12, abs=1e-300)


def test_csv_round_trip(tmp_path):
    g = Grid1D(10)
    rho = np.linspace(0.1, 0.9, 11) + 1e-13
    s = GridState.from_interior(g, rho, -rho)
    write_csv(s, tmp_path / "f.csv")
    back = read_csv(tmp_path / "f.csv")
    assert list(back) == ["x", "rho", "q"]
    np.testing.assert_array_equal(back["rho"], rho)
    np.testing.assert_array_equal(back["q"], -rho)

    g2 = Grid2D.unit_square(0.5, 0.25)
    r2 = np.arange(15, dtype=float).reshape(3, 5) / 20
    q2 = np.stack([r2, -r2])
    write_csv(GridState.from_interior(g2, r2, q2), tmp_path / "g.csv")
    back = read_csv(tmp_path / "g.csv")
    assert list(back) == ["x", "y", "rho", "q1", "q2"]
    assert len(back["rho"]) == 15
    # x runs fastest
    np.testing.assert_array_equal(back["x"][:3], [0.0, 0.5, 1.0])
    np.testing.assert_array_equal(back["rho"], r2.T.ravel())

    write_profile_csv([0.0, 1.0], [0.5, 0.6], [0.1, 0.2], tmp_path / "p.csv")
    np.testing.assert_array_equal(read_csv(tmp_path / "p.csv")["q"], [0.1, 0.2])
