"""Node-centred structured grids, field state with ghost layers, and CSV dumps."""
from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from enum import Enum
from typing import Union

import numpy as np

GHOST = 2


class BoundaryRule(str, Enum):
    COPY = "copy"
    PERIODIC = "periodic"


@dataclass(frozen=True)
class Grid1D:
    """Nodes ``x_j = b + j*dx``, ``j = 0..M`` on ``[b, c]``."""

    M: int
    b: float = 0.0
    c: float = 1.0
    ghost: int = GHOST

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("a grid needs at least two nodes")
        if not self.c > self.b:
            raise ValueError("domain must satisfy c > b")
        if self.ghost != GHOST:
            raise ValueError("ghost width is fixed at 2")

    @classmethod
    def from_dx(cls, dx: float, b: float = 0.0, c: float = 1.0) -> "Grid1D":
        M = int(round((c - b) / dx))
        if M < 1 or abs(M * dx - (c - b)) > 1e-9 * (c - b):
            raise ValueError(f"dx={dx} does not divide [{b}, {c}]")
        return cls(M, b, c)

    @property
    def m(self) -> int:
        return self.M + 1

    @property
    def dx(self) -> float:
        return (self.c - self.b) / self.M

    @property
    def length(self) -> float:
        return self.c - self.b

    @property
    def x(self) -> np.ndarray:
        return self.b + self.dx * np.arange(self.m)

    @property
    def n_ext(self) -> int:
        return self.m + 2 * self.ghost

    @property
    def inner(self) -> slice:
        return slice(self.ghost, self.ghost + self.m)


@dataclass(frozen=True)
class Grid2D:
    gx: Grid1D
    gy: Grid1D

    @classmethod
    def unit_square(cls, dx: float, dy: float | None = None) -> "Grid2D":
        return cls(Grid1D.from_dx(dx), Grid1D.from_dx(dx if dy is None else dy))

    @property
    def m1(self) -> int:
        return self.gx.m

    @property
    def m2(self) -> int:
        return self.gy.m

    @property
    def dx(self) -> float:
        return self.gx.dx

    @property
    def dy(self) -> float:
        return self.gy.dx

    @property
    def ghost(self) -> int:
        return GHOST

    @property
    def shape(self) -> tuple:
        return (self.m1, self.m2)

    @property
    def shape_ext(self) -> tuple:
        return (self.gx.n_ext, self.gy.n_ext)

    @property
    def inner(self) -> tuple:
        return (self.gx.inner, self.gy.inner)


Grid = Union[Grid1D, Grid2D]


@dataclass
class GridState:
    """Density and momentum on the ghost-extended grid.

    In 1D ``rho`` and ``q`` have shape ``(m + 4,)``. In 2D ``rho`` has shape
    ``(m1 + 4, m2 + 4)`` indexed ``[i, j]`` with ``i`` along x, and ``q`` has
    a leading component axis of length 2.
    """

    grid: Grid
    rho: np.ndarray
    q: np.ndarray
    time: float = 0.0
    step: int = 0

    def __post_init__(self):
        ext = self.grid.shape_ext if isinstance(self.grid, Grid2D) else (self.grid.n_ext,)
        if self.rho.shape != ext:
            raise ValueError(f"rho has shape {self.rho.shape}, expected {ext}")
        qshape = (2,) + ext if isinstance(self.grid, Grid2D) else ext
        if self.q.shape != qshape:
            raise ValueError(f"q has shape {self.q.shape}, expected {qshape}")

    @property
    def is_2d(self) -> bool:
        return isinstance(self.grid, Grid2D)

    @property
    def rho_in(self) -> np.ndarray:
        return self.rho[self.grid.inner]

    @property
    def q_in(self) -> np.ndarray:
        if self.is_2d:
            return self.q[(slice(None),) + self.grid.inner]
        return self.q[self.grid.inner]

    def copy(self) -> "GridState":
        return replace(self, rho=self.rho.copy(), q=self.q.copy())

    @classmethod
    def from_interior(cls, grid: Grid, rho, q, rule: BoundaryRule = BoundaryRule.COPY,
                      time: float = 0.0, step: int = 0) -> "GridState":
        rho = np.asarray(rho, dtype=float)
        q = np.asarray(q, dtype=float)
        if isinstance(grid, Grid2D):
            if rho.shape != grid.shape or q.shape != (2,) + grid.shape:
                raise ValueError("interior field shapes do not match the grid")
            r = pad_field(rho, rule)
            m = np.stack([pad_field(q[0], rule), pad_field(q[1], rule)])
        else:
            if rho.shape != (grid.m,) or q.shape != (grid.m,):
                raise ValueError("interior field shapes do not match the grid")
            r, m = pad_field(rho, rule), pad_field(q, rule)
        return cls(grid, r, m, time, step)


def pad_field(interior: np.ndarray, rule: BoundaryRule) -> np.ndarray:
    """Extend an interior array by two ghost layers on every axis."""
    mode = "wrap" if BoundaryRule(rule) is BoundaryRule.PERIODIC else "edge"
    return np.pad(interior, GHOST, mode=mode)


def fill_ghosts(state: GridState, rule: BoundaryRule = BoundaryRule.COPY) -> GridState:
    """Return a new state whose ghost layers follow ``rule``."""
    rule = BoundaryRule(rule)
    if state.is_2d:
        rho = pad_field(state.rho_in, rule)
        q = np.stack([pad_field(c, rule) for c in state.q_in])
    else:
        rho = pad_field(state.rho_in, rule)
        q = pad_field(state.q_in, rule)
    return replace(state, rho=rho, q=q)


def total_mass(state: GridState) -> float:
    """Length (area) times the mean interior density.

    Every interior node carries the weight ``(c-b)/(M+1)``, so a uniform
    field returns its value times the domain size.
    """
    g = state.grid
    if state.is_2d:
        w = (g.gx.length / g.m1) * (g.gy.length / g.m2)
    else:
        w = g.length / g.m
    return float(w * np.sum(state.rho_in))


def write_csv(state: GridState, path) -> None:
    """Dump interior nodes with 17 significant digits (x fastest in 2D)."""
    fmt = "{:.17g}".format
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if state.is_2d:
            g = state.grid
            w.writerow(["x", "y", "rho", "q1", "q2"])
            x, y = g.gx.x, g.gy.x
            r, q = state.rho_in, state.q_in
            for j in range(g.m2):
                for i in range(g.m1):
                    w.writerow([fmt(x[i]), fmt(y[j]), fmt(r[i, j]), fmt(q[0, i, j]), fmt(q[1, i, j])])
        else:
            w.writerow(["x", "rho", "q"])
            for xv, rv, qv in zip(state.grid.x, state.rho_in, state.q_in):
                w.writerow([fmt(xv), fmt(rv), fmt(qv)])


def write_profile_csv(x, rho, q, path) -> None:
    """Dump a 1D profile (e.g. an exact solution) in the field format."""
    fmt = "{:.17g}".format
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "rho", "q"])
        for xv, rv, qv in zip(x, rho, q):
            w.writerow([fmt(xv), fmt(rv), fmt(qv)])


def read_csv(path) -> dict:
    """Read a field dump back into column arrays."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], np.array(rows[1:], dtype=float)
    return {name: body[:, k] for k, name in enumerate(header)}
