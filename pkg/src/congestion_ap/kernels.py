"""Kernel dispatch: numba loops by default, numpy when disabled by env flag."""
from . import _kernels_numpy as numpy_kernels
from ._backend import USE_NUMBA, backend_name

if USE_NUMBA:
    from . import _kernels_numba as active
else:
    active = numpy_kernels

p = active.p
dp = active.dp
d2p = active.d2p
p0 = active.p0
dp0 = active.dp0
d2p0 = active.d2p0
rho_of_s = active.rho_of_s
drho_ds = active.drho_ds
p1_of_s = active.p1_of_s
dp1_ds = active.dp1_ds
s_of_p1 = active.s_of_p1
flux_1d = active.flux_1d
flux_1d_picard = active.flux_1d_picard
flux_2d = active.flux_2d

__all__ = [
    "backend_name", "numpy_kernels", "p", "dp", "d2p", "p0", "dp0", "d2p0",
    "rho_of_s", "drho_ds", "p1_of_s", "dp1_ds", "s_of_p1",
    "flux_1d", "flux_1d_picard", "flux_2d",
]
