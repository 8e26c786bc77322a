"""Loop kernels compiled with numba; twins of ``_kernels_numpy``.

Array functions accept float64 arrays of any shape (they work on a flat
view) and return new arrays.
"""
import math

import numpy as np

from ._backend import njit

G, RS, R0, PR0, DPR0, D2PR0, SPLIT = range(7)


@njit
def _p(r, g, rs):
    s = r * rs / (rs - r)
    return s ** g


@njit
def _dp(r, g, rs):
    w = rs / (rs - r)
    s = r * w
    return g * s ** (g - 1.0) * w * w


@njit
def _d2p(r, g, rs):
    w = rs / (rs - r)
    s = r * w
    return g * (g - 1.0) * s ** (g - 2.0) * w ** 4 + 2.0 * g * s ** (g - 1.0) * w ** 3 / rs


@njit
def _p0(r, prm):
    if prm[SPLIT] == 0.0:
        return 0.0
    if r > prm[R0]:
        h = r - prm[R0]
        return 0.5 * (prm[PR0] + prm[DPR0] * h + 0.5 * prm[D2PR0] * h * h)
    return 0.5 * _p(r, prm[G], prm[RS])


@njit
def _dp0(r, prm):
    if prm[SPLIT] == 0.0:
        return 0.0
    if r > prm[R0]:
        return 0.5 * (prm[DPR0] + prm[D2PR0] * (r - prm[R0]))
    return 0.5 * _dp(r, prm[G], prm[RS])


@njit
def _d2p0(r, prm):
    if prm[SPLIT] == 0.0:
        return 0.0
    if r > prm[R0]:
        return 0.5 * prm[D2PR0]
    return 0.5 * _d2p(r, prm[G], prm[RS])


@njit
def _s_of_p1(y, prm, max_iter):
    g, rs, r0 = prm[G], prm[RS], prm[R0]
    if y <= 0.0:
        return 0.0
    if prm[SPLIT] == 0.0:
        return y ** (1.0 / g)
    if y <= 0.5 * prm[PR0]:
        return (2.0 * y) ** (1.0 / g)
    lo = y
    hi = 2.0 * y
    z = hi
    for _ in range(max_iter):
        s = z ** (1.0 / g)
        rho = s * rs / (rs + s)
        h = rho - r0
        gv = z - 0.5 * (prm[PR0] + prm[DPR0] * h + 0.5 * prm[D2PR0] * h * h) - y
        if gv > 0.0:
            hi = z
        else:
            lo = z
        w = rs / (rs + s)
        drho_dz = w * w * s / (g * z)
        slope = 1.0 - 0.5 * (prm[DPR0] + prm[D2PR0] * h) * drho_dz
        zn = z - gv / slope
        if not (zn > lo and zn < hi):
            zn = 0.5 * (lo + hi)
        if abs(zn - z) <= 4e-16 * z:
            z = zn
            break
        z = zn
    return z ** (1.0 / g)


@njit
def _map_p(rho, prm):
    flat = rho.ravel()
    out = np.empty(flat.size)
    for i in range(flat.size):
        out[i] = _p(flat[i], prm[G], prm[RS])
    return out.reshape(rho.shape)


@njit
def _map_dp(rho, prm):
    flat = rho.ravel()
    out = np.empty(flat.size)
    for i in range(flat.size):
        out[i] = _dp(flat[i], prm[G], prm[RS])
    return out.reshape(rho.shape)


@njit
def _map_d2p(rho, prm):
    flat = rho.ravel()
    out = np.empty(flat.size)
    for i in range(flat.size):
        out[i] = _d2p(flat[i], prm[G], prm[RS])
    return out.reshape(rho.shape)


@njit
def _map_p0(rho, prm):
    flat = rho.ravel()
    out = np.empty(flat.size)
    for i in range(flat.size):
        out[i] = _p0(flat[i], prm)
    return out.reshape(rho.shape)


@njit
def _map_dp0(rho, prm):
    flat = rho.ravel()
    out = np.empty(flat.size)
    for i in range(flat.size):
        out[i] = _dp0(flat[i], prm)
    return out.reshape(rho.shape)


@njit
def _map_d2p0(rho, prm):
    flat = rho.ravel()
    out = np.empty(flat.size)
    for i in range(flat.size):
        out[i] = _d2p0(flat[i], prm)
    return out.reshape(rho.shape)


@njit
def _map_s_of_p1(y, prm, max_iter):
    flat = y.ravel()
    out = np.empty(flat.size)
    for i in range(flat.size):
        out[i] = _s_of_p1(flat[i], prm, max_iter)
    return out.reshape(y.shape)


@njit
def _map_p1_of_s(s, prm):
    flat = s.ravel()
    out = np.empty(flat.size)
    rs = prm[RS]
    for i in range(flat.size):
        si = flat[i]
        out[i] = si ** prm[G] - _p0(si * rs / (rs + si), prm)
    return out.reshape(s.shape)


@njit
def _map_dp1_ds(s, prm):
    flat = s.ravel()
    out = np.empty(flat.size)
    g, rs = prm[G], prm[RS]
    for i in range(flat.size):
        si = flat[i]
        w = rs / (rs + si)
        out[i] = g * si ** (g - 1.0) - _dp0(si * w, prm) * w * w
    return out.reshape(s.shape)


@njit
def _flux_1d(rho, q, rho_k, q_k, eps, prm):
    n = rho.size
    lam = np.empty(n)
    f = np.empty(n)
    for i in range(n):
        lam[i] = abs(q[i] / rho[i]) + math.sqrt(eps * _dp0(rho[i], prm))
        f[i] = q_k[i] * q_k[i] / rho_k[i] + eps * _p0(rho[i], prm)
    c = np.empty(n - 1)
    flux = np.empty(n - 1)
    for h in range(n - 1):
        ch = max(lam[h], lam[h + 1])
        c[h] = ch
        flux[h] = 0.5 * (f[h] + f[h + 1]) - 0.5 * ch * (q[h + 1] - q[h])
    return c, flux


@njit
def _flux_2d(rho, q1, q2, eps, prm):
    nx, ny = rho.shape
    lam = np.empty((nx, ny))
    f1 = np.empty((nx, ny))
    g2 = np.empty((nx, ny))
    cross = np.empty((nx, ny))
    for i in range(nx):
        for j in range(ny):
            r = rho[i, j]
            u1 = q1[i, j] / r
            u2 = q2[i, j] / r
            lam[i, j] = max(abs(u1), abs(u2)) + math.sqrt(eps * _dp0(r, prm))
            e0 = eps * _p0(r, prm)
            f1[i, j] = q1[i, j] * u1 + e0
            g2[i, j] = q2[i, j] * u2 + e0
            cross[i, j] = q1[i, j] * u2
    cx = np.empty((nx - 1, ny))
    fx = np.empty((2, nx - 1, ny))
    for i in range(nx - 1):
        for j in range(ny):
            ch = max(lam[i, j], lam[i + 1, j])
            cx[i, j] = ch
            fx[0, i, j] = 0.5 * (f1[i, j] + f1[i + 1, j]) - 0.5 * ch * (q1[i + 1, j] - q1[i, j])
            fx[1, i, j] = 0.5 * (cross[i, j] + cross[i + 1, j]) - 0.5 * ch * (q2[i + 1, j] - q2[i, j])
    cy = np.empty((nx, ny - 1))
    gy = np.empty((2, nx, ny - 1))
    for i in range(nx):
        for j in range(ny - 1):
            ch = max(lam[i, j], lam[i, j + 1])
            cy[i, j] = ch
            gy[0, i, j] = 0.5 * (cross[i, j] + cross[i, j + 1]) - 0.5 * ch * (q1[i, j + 1] - q1[i, j])
            gy[1, i, j] = 0.5 * (g2[i, j] + g2[i, j + 1]) - 0.5 * ch * (q2[i, j + 1] - q2[i, j])
    return cx, fx, cy, gy


def _arr(x):
    return np.ascontiguousarray(x, dtype=np.float64)


def _wrap(fn):
    def call(x, params):
        a = _arr(x)
        out = fn(a.reshape(-1), _arr(params)).reshape(a.shape)
        return out if np.ndim(x) else float(out[0])
    call.__name__ = fn.__name__.replace("_map_", "")
    return call


p = _wrap(_map_p)
dp = _wrap(_map_dp)
d2p = _wrap(_map_d2p)
p0 = _wrap(_map_p0)
dp0 = _wrap(_map_dp0)
d2p0 = _wrap(_map_d2p0)
p1_of_s = _wrap(_map_p1_of_s)
dp1_ds = _wrap(_map_dp1_ds)


def rho_of_s(s, params):
    rs = params[RS]
    return s * rs / (rs + s)


def drho_ds(s, params):
    rs = params[RS]
    w = rs / (rs + s)
    return w * w


def s_of_p1(y, params, max_iter=100):
    a = _arr(y)
    out = _map_s_of_p1(a.reshape(-1), _arr(params), max_iter).reshape(a.shape)
    return out if np.ndim(y) else float(out[0])


def flux_1d(rho, q, eps, params):
    r, m = _arr(rho), _arr(q)
    return _flux_1d(r, m, r, m, float(eps), _arr(params))


def flux_1d_picard(rho, q, rho_k, q_k, eps, params):
    return _flux_1d(_arr(rho), _arr(q), _arr(rho_k), _arr(q_k), float(eps), _arr(params))


def flux_2d(rho, q1, q2, eps, params):
    return _flux_2d(_arr(rho), _arr(q1), _arr(q2), float(eps), _arr(params))
