"""Linear solves, damped Newton, bracketed roots and adaptive quadrature.

Factorisations and quadrature are delegated to LAPACK/SuperLU/QUADPACK via
scipy; the wrappers add the residual checks and calling conventions the
schemes rely on.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np
import scipy.integrate
import scipy.linalg
import scipy.optimize
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NewtonError, SolverError


@dataclass
class BandedSystem:
    """Square system ``A x = rhs`` stored by diagonals.

    ``bands[k][i]`` is ``A[i, i + k]``. Entries whose column falls outside
    ``[0, n)`` must be zero unless ``periodic`` is set, in which case the
    column index wraps modulo ``n``.
    """

    n: int
    bands: Dict[int, np.ndarray]
    rhs: Optional[np.ndarray] = None
    periodic: bool = False

    def __post_init__(self):
        for k, v in self.bands.items():
            if np.shape(v) != (self.n,):
                raise ValueError(f"band {k} has shape {np.shape(v)}, expected ({self.n},)")

    def matrix(self) -> sp.csr_matrix:
        rows, cols, vals = [], [], []
        i = np.arange(self.n)
        for k, v in self.bands.items():
            j = i + k
            if self.periodic:
                j = j % self.n
                keep = np.ones(self.n, dtype=bool)
            else:
                keep = (j >= 0) & (j < self.n)
                if np.any(v[~keep] != 0):
                    raise ValueError(f"band {k} has nonzero entries outside the matrix")
            rows.append(i[keep])
            cols.append(j[keep])
            vals.append(np.asarray(v, dtype=float)[keep])
        return sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.n, self.n),
        )

    def matvec(self, x: np.ndarray) -> np.ndarray:
        out = np.zeros(self.n)
        for k, v in self.bands.items():
            if self.periodic:
                out += v * np.roll(x, -k)
            elif k >= 0:
                out[: self.n - k] += v[: self.n - k] * x[k:]
            else:
                out[-k:] += v[-k:] * x[: self.n + k]
        return out

    def with_rhs(self, rhs: np.ndarray) -> "BandedSystem":
        return BandedSystem(self.n, self.bands, np.asarray(rhs, dtype=float), self.periodic)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return solve_banded(self.with_rhs(rhs))


def solve_banded(sys: BandedSystem) -> np.ndarray:
    """Direct solve of a banded (or cyclically banded) system.

    Raises ``SolverError`` if the result is not finite or its residual
    exceeds ``1e-12 * (1 + |rhs|)`` after one step of iterative refinement,
    measured against the backward-error scale ``|A| |x|`` when larger.
    """
    if sys.rhs is None:
        raise ValueError("BandedSystem has no right-hand side")
    b = np.asarray(sys.rhs, dtype=float)
    n = sys.n
    if sys.periodic:
        lu = spla.splu(sys.matrix().tocsc())
        solve = lu.solve
    else:
        lower = max([-k for k in sys.bands if k < 0] + [0])
        upper = max([k for k in sys.bands if k > 0] + [0])
        ab = np.zeros((lower + upper + 1, n))
        for k, v in sys.bands.items():
            # ab[upper + i - j, j] = A[i, j] with j = i + k
            if k >= 0:
                ab[upper - k, k:] = v[: n - k]
            else:
                ab[upper - k, : n + k] = v[-k:]

        def solve(rhs):
            return scipy.linalg.solve_banded((lower, upper), ab, rhs, check_finite=False)

    try:
        x = solve(b)
    except (np.linalg.LinAlgError, ValueError, RuntimeError) as exc:
        raise SolverError(f"banded solve failed: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise SolverError("banded solve produced non-finite values (singular system?)")
    r = b - sys.matvec(x)
    x = x + solve(r)
    rn = float(np.max(np.abs(b - sys.matvec(x)))) if n else 0.0
    bn = float(np.max(np.abs(b))) if n else 0.0
    anorm = max(float(np.sum(np.abs(np.stack(list(sys.bands.values()))), axis=0).max()), 1.0)
    scale = max(1.0 + bn, anorm * float(np.max(np.abs(x))) if n else 0.0)
    if not rn <= 1e-12 * scale:
        raise SolverError(f"banded solve residual {rn:.3e} exceeds tolerance (scale {scale:.3e})")
    return x


def pcg(A, b: np.ndarray, x0: Optional[np.ndarray] = None, rtol: float = 1e-10,
        maxiter: Optional[int] = None) -> np.ndarray:
    """Jacobi-preconditioned conjugate gradients for an SPD sparse matrix.

    Stops when ``|b - A x|_2 <= rtol * |b|_2``; ``b = 0`` returns zeros.
    """
    A = sp.csr_matrix(A)
    b = np.asarray(b, dtype=float)
    n = b.size
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros(n)
    dinv = 1.0 / A.diagonal()
    r = b - A @ x
    z = dinv * r
    p = z.copy()
    rz = float(r @ z)
    maxiter = 10 * n if maxiter is None else maxiter
    for _ in range(maxiter):
        if np.linalg.norm(r) <= rtol * bnorm:
            return x
        Ap = A @ p
        pAp = float(p @ Ap)
        if pAp <= 0:
            raise SolverError("pcg: matrix is not positive definite")
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        z = dinv * r
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    if np.linalg.norm(r) <= rtol * bnorm:
        return x
    raise SolverError(f"pcg did not reach rtol={rtol} in {maxiter} iterations")


def bicgstab(A, b: np.ndarray, x0: Optional[np.ndarray] = None, rtol: float = 1e-10,
             maxiter: Optional[int] = None) -> np.ndarray:
    """Jacobi-preconditioned BiCGSTAB for nonsymmetric sparse systems."""
    A = sp.csr_matrix(A)
    b = np.asarray(b, dtype=float)
    if not np.any(b):
        return np.zeros(b.size)
    dinv = 1.0 / A.diagonal()
    M = spla.LinearOperator(A.shape, matvec=lambda v: dinv * v)
    x, info = spla.bicgstab(A, b, x0=x0, rtol=rtol, atol=0.0, M=M,
                            maxiter=maxiter or 10 * b.size)
    if info != 0:
        raise SolverError(f"bicgstab did not converge (info={info})")
    return x


@dataclass(frozen=True)
class NewtonOptions:
    residual_tol: float = 1e-10
    max_iter: int = 100
    damping: float = 0.5
    max_halvings: int = 30

    def __post_init__(self):
        if not self.residual_tol > 0:
            raise ValueError("residual_tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not 0 < self.damping < 1:
            raise ValueError("damping must lie in (0, 1)")


@dataclass
class NewtonStats:
    iterations: int = 0
    residual_norm: float = float("nan")
    halvings: int = 0


def default_linear_solve(J, rhs):
    if hasattr(J, "solve"):
        return J.solve(rhs)
    if sp.issparse(J):
        return spla.spsolve(sp.csc_matrix(J), rhs)
    if callable(J):
        return J(rhs)
    J = np.atleast_2d(np.asarray(J, dtype=float))
    return np.linalg.solve(J, np.atleast_1d(rhs))


def newton_solve(residual: Callable, jacobian: Callable, x0, opts: NewtonOptions = NewtonOptions(),
                 *, linear_solve: Callable = default_linear_solve,
                 project: Optional[Callable] = None,
                 stats: Optional[NewtonStats] = None) -> np.ndarray:
    """Damped Newton iteration on ``residual(x) = 0``.

    The step is multiplied by ``opts.damping`` while the max-norm residual
    fails to decrease (at most ``opts.max_halvings`` times). ``project``
    maps trial iterates back into the admissible set. Raises
    ``NewtonError`` carrying the last iterate when the tolerance is not met.
    """
    scalar = np.ndim(x0) == 0
    proj = project if project is not None else (lambda v: v)
    x = proj(np.atleast_1d(np.array(x0, dtype=float)))

    def res(v):
        return np.atleast_1d(np.asarray(residual(v[0] if scalar else v), dtype=float))

    def norm(r):
        return float(np.max(np.abs(r))) if r.size else 0.0

    r = res(x)
    rn = norm(r)
    st = stats if stats is not None else NewtonStats()
    for it in range(opts.max_iter + 1):
        st.iterations, st.residual_norm = it, rn
        if not math.isfinite(rn):
            raise NewtonError("residual is not finite", x, rn)
        if rn <= opts.residual_tol:
            return x[0] if scalar else x
        if it == opts.max_iter:
            break
        J = jacobian(x[0] if scalar else x)
        dx = np.atleast_1d(np.asarray(linear_solve(J, -r), dtype=float))
        step = 1.0
        for _ in range(opts.max_halvings + 1):
            xt = proj(x + step * dx)
            rt = res(xt)
            nt = norm(rt)
            if nt < rn:
                break
            step *= opts.damping
            st.halvings += 1
        else:
            raise NewtonError(
                f"line search failed to reduce the residual {rn:.3e}", x[0] if scalar else x, rn
            )
        x, r, rn = xt, rt, nt
    raise NewtonError(
        f"Newton did not converge in {opts.max_iter} iterations (residual {rn:.3e})",
        x[0] if scalar else x,
        rn,
    )


def find_root_bracketed(f: Callable[[float], float], lo: float, hi: float,
                        xtol: float = 1e-14) -> float:
    """Root of ``f`` in ``[lo, hi]`` by Brent's method; needs a sign change."""
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if not (np.isfinite(flo) and np.isfinite(fhi)) or flo * fhi > 0:
        raise ValueError(f"invalid bracket [{lo!r}, {hi!r}]: f = ({flo!r}, {fhi!r})")
    tol = xtol * (abs(lo) + abs(hi)) / 2.0 if (lo or hi) else xtol
    return scipy.optimize.brentq(f, lo, hi, xtol=max(tol, 1e-300), rtol=4 * np.finfo(float).eps,
                                 maxiter=500)


def integrate_adaptive(f: Callable[[float], float], a: float, b: float, tol: float = 1e-10,
                       limit: int = 200) -> float:
    """Adaptive Gauss-Kronrod quadrature tolerant of endpoint singularities.

    The interval is split at its midpoint and each half is mapped by
    ``x = end + h*t**2``, which turns integrable ``|x - end|**(-1/2)`` type
    singularities into bounded integrands.
    """
    if a == b:
        return 0.0
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    h = 0.5 * (b - a)

    def left(t):
        return f(a + h * t * t) * 2.0 * h * t

    def right(t):
        return f(b - h * t * t) * 2.0 * h * t

    total = 0.0
    for g in (left, right):
        val, err = scipy.integrate.quad(g, 0.0, 1.0, epsabs=tol / 2, epsrel=0.0, limit=limit)
        if not err <= tol:
            raise SolverError(f"quadrature error estimate {err:.3e} above tolerance {tol:.1e} "
                              f"(best estimate {sign * (total + val)!r})")
        total += val
    return sign * total
