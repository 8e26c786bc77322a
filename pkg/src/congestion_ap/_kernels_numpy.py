"""Vectorised numpy kernels.

Every function here has a twin with the same signature in
``_kernels_numba``. ``params`` is the packed pressure-law vector built by
``PressureLaw.params``: ``[gamma, rho_star, r0, p(r0), p'(r0), p''(r0), split]``
where ``r0 = rho_star - delta``.
"""
import numpy as np

G, RS, R0, PR0, DPR0, D2PR0, SPLIT = range(7)


def p(rho, params):
    g, rs = params[G], params[RS]
    s = rho * rs / (rs - rho)
    return s ** g


def dp(rho, params):
    g, rs = params[G], params[RS]
    w = rs / (rs - rho)
    s = rho * w
    return g * s ** (g - 1.0) * w * w


def d2p(rho, params):
    g, rs = params[G], params[RS]
    w = rs / (rs - rho)
    s = rho * w
    return g * (g - 1.0) * s ** (g - 2.0) * w ** 4 + 2.0 * g * s ** (g - 1.0) * w ** 3 / rs


def _upper(rho, params):
    return rho > params[R0]


def p0(rho, params):
    rho = np.asarray(rho, dtype=float)
    if params[SPLIT] == 0.0:
        return np.zeros_like(rho)
    up = _upper(rho, params)
    low = np.where(up, 0.0, rho)
    h = rho - params[R0]
    quad = 0.5 * (params[PR0] + params[DPR0] * h + 0.5 * params[D2PR0] * h * h)
    return np.where(up, quad, 0.5 * p(low, params))


def dp0(rho, params):
    rho = np.asarray(rho, dtype=float)
    if params[SPLIT] == 0.0:
        return np.zeros_like(rho)
    up = _upper(rho, params)
    low = np.where(up, 0.0, rho)
    lin = 0.5 * (params[DPR0] + params[D2PR0] * (rho - params[R0]))
    return np.where(up, lin, 0.5 * dp(low, params))


def d2p0(rho, params):
    rho = np.asarray(rho, dtype=float)
    if params[SPLIT] == 0.0:
        return np.zeros_like(rho)
    up = _upper(rho, params)
    low = np.where(up, 0.0, rho)
    return np.where(up, 0.5 * params[D2PR0], 0.5 * d2p(low, params))


def rho_of_s(s, params):
    rs = params[RS]
    return s * rs / (rs + s)


def drho_ds(s, params):
    rs = params[RS]
    w = rs / (rs + s)
    return w * w


def p1_of_s(s, params):
    return s ** params[G] - p0(rho_of_s(s, params), params)


def dp1_ds(s, params):
    g = params[G]
    return g * s ** (g - 1.0) - dp0(rho_of_s(s, params), params) * drho_ds(s, params)


def s_of_p1(y, params, max_iter=100):
    """Solve ``p1(rho(s)) = y`` for ``s`` elementwise (``y >= 0``).

    Works in ``z = p = s**gamma`` where ``z - p0(rho(z)) - y`` has slope in
    [1/2, 1], bracketed by ``[y, 2y]``.
    """
    y = np.asarray(y, dtype=float)
    g, rs, r0 = params[G], params[RS], params[R0]
    if params[SPLIT] == 0.0:
        return np.where(y > 0.0, np.maximum(y, 0.0) ** (1.0 / g), 0.0)
    y_junction = 0.5 * params[PR0]
    z = 2.0 * np.maximum(y, 0.0)
    todo = y > y_junction
    if np.any(todo):
        yy = y[todo]
        lo, hi = yy.copy(), 2.0 * yy
        zz = hi.copy()
        active = np.ones(yy.shape, dtype=bool)
        for _ in range(max_iter):
            s = zz ** (1.0 / g)
            rho = s * rs / (rs + s)
            h = rho - r0
            gv = zz - 0.5 * (params[PR0] + params[DPR0] * h + 0.5 * params[D2PR0] * h * h) - yy
            hi = np.where(gv > 0.0, zz, hi)
            lo = np.where(gv > 0.0, lo, zz)
            w = rs / (rs + s)
            drho_dz = w * w * s / (g * zz)
            slope = 1.0 - 0.5 * (params[DPR0] + params[D2PR0] * h) * drho_dz
            zn = zz - gv / slope
            bad = ~((zn > lo) & (zn < hi))
            zn = np.where(bad, 0.5 * (lo + hi), zn)
            done = np.abs(zn - zz) <= 4e-16 * zz
            zz = np.where(active, zn, zz)
            active &= ~done
            if not np.any(active):
                break
        z[todo] = zz
    return np.where(z > 0.0, z ** (1.0 / g), 0.0)


def _node_speed(rho, q, eps, params):
    return np.abs(q / rho) + np.sqrt(eps * dp0(rho, params))


def flux_1d(rho, q, eps, params):
    """Interface diffusion coefficients and explicit momentum fluxes.

    Returns ``(C, F)`` with ``C[h], F[h]`` at the interface between nodes
    ``h`` and ``h+1`` of the given (ghost-extended) arrays.
    """
    lam = _node_speed(rho, q, eps, params)
    f = q * q / rho + eps * p0(rho, params)
    c = np.maximum(lam[:-1], lam[1:])
    flux = 0.5 * (f[:-1] + f[1:]) - 0.5 * c * (q[1:] - q[:-1])
    return c, flux


def flux_1d_picard(rho, q, rho_k, q_k, eps, params):
    """As ``flux_1d`` but with the convective part taken from ``(rho_k, q_k)``."""
    lam = _node_speed(rho, q, eps, params)
    f = q_k * q_k / rho_k + eps * p0(rho, params)
    c = np.maximum(lam[:-1], lam[1:])
    flux = 0.5 * (f[:-1] + f[1:]) - 0.5 * c * (q[1:] - q[:-1])
    return c, flux


def flux_2d(rho, q1, q2, eps, params):
    """Interface coefficients and fluxes on a ghost-extended 2D grid.

    Returns ``(cx, fx, cy, gy)``; ``cx`` has shape ``(nx-1, ny)`` and
    ``fx`` shape ``(2, nx-1, ny)``, likewise in y.
    """
    c = np.sqrt(eps * dp0(rho, params))
    u1 = q1 / rho
    u2 = q2 / rho
    lam = np.maximum(np.abs(u1), np.abs(u2)) + c
    e0 = eps * p0(rho, params)
    cross = q1 * u2
    f1 = q1 * u1 + e0
    g2 = q2 * u2 + e0
    cx = np.maximum(lam[:-1, :], lam[1:, :])
    cy = np.maximum(lam[:, :-1], lam[:, 1:])
    fx = np.empty((2,) + cx.shape)
    fx[0] = 0.5 * (f1[:-1, :] + f1[1:, :]) - 0.5 * cx * (q1[1:, :] - q1[:-1, :])
    fx[1] = 0.5 * (cross[:-1, :] + cross[1:, :]) - 0.5 * cx * (q2[1:, :] - q2[:-1, :])
    gy = np.empty((2,) + cy.shape)
    gy[0] = 0.5 * (cross[:, :-1] + cross[:, 1:]) - 0.5 * cy * (q1[:, 1:] - q1[:, :-1])
    gy[1] = 0.5 * (g2[:, :-1] + g2[:, 1:]) - 0.5 * cy * (q2[:, 1:] - q2[:, :-1])
    return cx, fx, cy, gy
