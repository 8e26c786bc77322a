"""Congestion pressure law and its explicit/implicit splitting.

The pressure is ``p(rho) = (1/rho - 1/rho_star)**(-gamma)``, scaled by
``epsilon`` in the momentum equation. It is split as ``p = p0 + p1`` where
``p0`` equals ``p/2`` up to ``rho_star - delta`` and continues as the
second-order Taylor polynomial of ``p/2`` beyond, so ``epsilon * p0'``
stays bounded. ``p1`` carries the singularity and is treated implicitly.

All functions accept scalars or arrays. A scalar in gives a float out.
"""
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DomainError

# Densities closer than this to rho_star are rejected by pressure evaluations.
CONGESTION_GUARD = 1e-14


@dataclass(frozen=True)
class PressureLaw:
    """Pressure parameters.

    Parameters
    ----------
    gamma : float
        Exponent of the singular pressure, ``gamma > 0``.
    rho_star : float
        Maximal density.
    epsilon : float
        Stiffness parameter in ``(0, 1]``.
    split : bool
        If False, ``p0 = 0`` and ``p1 = p`` (used by the splitting ablation).
    """

    gamma: float = 2.0
    rho_star: float = 1.0
    epsilon: float = 1e-4
    split: bool = True
    delta: float = field(init=False)
    params: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not self.rho_star > 0:
            raise ValueError(f"rho_star must be positive, got {self.rho_star}")
        if not 0 < self.epsilon <= 1:
            raise ValueError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        delta = self.epsilon ** (1.0 / (self.gamma + 2.0))
        if not delta < self.rho_star:
            raise ValueError(f"threshold delta={delta} must be below rho_star={self.rho_star}")
        object.__setattr__(self, "delta", delta)
        r0 = self.rho_star - delta
        base = np.array([self.gamma, self.rho_star, r0, 0, 0, 0, 0], dtype=float)
        prm = np.array(
            [
                self.gamma,
                self.rho_star,
                r0,
                kernels.numpy_kernels.p(r0, base),
                kernels.numpy_kernels.dp(r0, base),
                kernels.numpy_kernels.d2p(r0, base),
                1.0 if self.split else 0.0,
            ]
        )
        prm.setflags(write=False)
        object.__setattr__(self, "params", prm)

    @property
    def threshold(self) -> float:
        """Junction density ``rho_star - delta``."""
        return self.rho_star - self.delta

    def with_split(self, split: bool) -> "PressureLaw":
        return PressureLaw(self.gamma, self.rho_star, self.epsilon, split)


def _as_density(rho, law, upper=True):
    r = np.asarray(rho, dtype=float)
    if np.any(np.isnan(r)):
        raise DomainError("density is NaN")
    if np.any(r < 0):
        raise DomainError(f"negative density (min {r.min()!r})")
    if upper and np.any(r >= law.rho_star - CONGESTION_GUARD):
        raise DomainError(
            f"density {r.max()!r} reaches the maximal density {law.rho_star!r}"
        )
    return r


def _out(value, like):
    return float(np.asarray(value).reshape(-1)[0]) if np.ndim(like) == 0 else value


def _below_star(rho, law: PressureLaw):
    # s / (rho_star + s) rounds to rho_star once s exceeds ~1e16 rho_star
    return np.minimum(rho, np.nextafter(law.rho_star, 0.0))


def pressure(law: PressureLaw, rho):
    """Singular pressure ``p(rho)`` (not scaled by epsilon)."""
    r = _as_density(rho, law)
    return _out(kernels.p(r, law.params), rho)


def pressure_derivatives(law: PressureLaw, rho):
    """Return ``(p'(rho), p''(rho))``."""
    r = _as_density(rho, law)
    return _out(kernels.dp(r, law.params), rho), _out(kernels.d2p(r, law.params), rho)


def p0(law: PressureLaw, rho):
    """Explicit part of the pressure; defined for every ``rho >= 0``."""
    r = _as_density(rho, law, upper=False)
    return _out(kernels.p0(r, law.params), rho)


def p0_derivative(law: PressureLaw, rho):
    r = _as_density(rho, law, upper=False)
    return _out(kernels.dp0(r, law.params), rho)


def p0_second_derivative(law: PressureLaw, rho):
    r = _as_density(rho, law, upper=False)
    return _out(kernels.d2p0(r, law.params), rho)


def p1(law: PressureLaw, rho):
    """Implicit part ``p - p0``."""
    r = _as_density(rho, law)
    return _out(kernels.p(r, law.params) - kernels.p0(r, law.params), rho)


def p1_derivative(law: PressureLaw, rho):
    r = _as_density(rho, law)
    return _out(kernels.dp(r, law.params) - kernels.dp0(r, law.params), rho)


def invert_p1(law: PressureLaw, y):
    """Density ``rho`` in ``[0, rho_star)`` with ``p1(rho) = y``."""
    v = np.asarray(y, dtype=float)
    if np.any(np.isnan(v)) or np.any(v < 0):
        raise DomainError("invert_p1 needs a nonnegative pressure value")
    s = kernels.s_of_p1(v, law.params)
    return _out(_below_star(kernels.rho_of_s(s, law.params), law), y)


def explicit_sound_speed(law: PressureLaw, rho):
    """``sqrt(epsilon * p0'(rho))``, the sound speed of the explicit part."""
    r = _as_density(rho, law, upper=False)
    return _out(np.sqrt(law.epsilon * kernels.dp0(r, law.params)), rho)


# Newton for the elliptic density equation works in s = rho*rho_star/(rho_star - rho),
# for which p(rho(s)) = s**gamma exactly and rho(s) stays smooth at both ends.

def s_of_rho(law: PressureLaw, rho):
    r = _as_density(rho, law)
    return _out(r * law.rho_star / (law.rho_star - r), rho)


def rho_of_s(law: PressureLaw, s):
    return _below_star(kernels.rho_of_s(np.asarray(s, dtype=float), law.params), law)


def drho_ds(law: PressureLaw, s):
    return kernels.drho_ds(np.asarray(s, dtype=float), law.params)


def p1_of_s(law: PressureLaw, s):
    return kernels.p1_of_s(np.asarray(s, dtype=float), law.params)


def dp1_ds(law: PressureLaw, s):
    return kernels.dp1_ds(np.asarray(s, dtype=float), law.params)


def s_of_p1(law: PressureLaw, y):
    v = np.asarray(y, dtype=float)
    if np.any(np.isnan(v)) or np.any(v < 0):
        raise DomainError("s_of_p1 needs a nonnegative pressure value")
    return kernels.s_of_p1(v, law.params)
