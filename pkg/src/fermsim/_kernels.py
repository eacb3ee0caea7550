"""Hot numeric kernels with a numba path and a pure-numpy twin.

The numba kernels are used when numba imports cleanly and the environment
variable ``FERMSIM_DISABLE_NUMBA`` is unset (or ``0``). Both twins are always
importable under their explicit names so that tests and the benchmark can
compare them directly.
"""
from __future__ import annotations

import os
from functools import reduce

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_DISABLED = os.environ.get("FERMSIM_DISABLE_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")

USE_NUMBA = numba is not None and not _DISABLED
BACKEND = "numba" if USE_NUMBA else "numpy"


def _njit(fn):
    if numba is None:
        return fn
    return numba.njit(cache=True)(fn)


# ---------------------------------------------------------------------------
# Kronecker chain of 2x2 factors
# ---------------------------------------------------------------------------

def kron2_chain_numpy(factors: np.ndarray) -> np.ndarray:
    return reduce(np.kron, factors)


@_njit
def kron2_chain_numba(factors):
    k = factors.shape[0]
    n = 1 << k
    out = np.zeros((n, n), dtype=np.complex128)
    for r in range(n):
        for c in range(n):
            p = 1.0 + 0.0j
            for s in range(k):
                shift = k - 1 - s
                p *= factors[s, (r >> shift) & 1, (c >> shift) & 1]
                if p == 0.0:
                    break
            out[r, c] = p
    return out


# ---------------------------------------------------------------------------
# Fixed-step classical RK4 for dv/dt = L v
# ---------------------------------------------------------------------------

def rk4_steps_numpy(L: np.ndarray, v: np.ndarray, h: float, nsteps: int) -> np.ndarray:
    v = v.copy()
    for _ in range(nsteps):
        k1 = L @ v
        k2 = L @ (v + 0.5 * h * k1)
        k3 = L @ (v + 0.5 * h * k2)
        k4 = L @ (v + h * k3)
        v += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return v


@_njit
def rk4_steps_numba(L, v, h, nsteps):
    v = v.copy()
    half = 0.5 * h
    for _ in range(nsteps):
        k1 = np.dot(L, v)
        k2 = np.dot(L, v + half * k1)
        k3 = np.dot(L, v + half * k2)
        k4 = np.dot(L, v + h * k3)
        v += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return v


# ---------------------------------------------------------------------------
# Partial trace through a precomputed index table
# ---------------------------------------------------------------------------
# index[a, e] is the full basis index of kept configuration a combined with
# traced configuration e.

def reduce_density_numpy(rho: np.ndarray, index: np.ndarray) -> np.ndarray:
    return rho[index[:, None, :], index[None, :, :]].sum(axis=-1)


@_njit
def reduce_density_numba(rho, index):
    dk, de = index.shape
    out = np.zeros((dk, dk), dtype=np.complex128)
    for a in range(dk):
        for b in range(dk):
            acc = 0.0 + 0.0j
            for e in range(de):
                acc += rho[index[a, e], index[b, e]]
            out[a, b] = acc
    return out


if USE_NUMBA:
    kron2_chain = kron2_chain_numba
    rk4_steps = rk4_steps_numba
    reduce_density = reduce_density_numba
else:
    kron2_chain = kron2_chain_numpy
    rk4_steps = rk4_steps_numpy
    reduce_density = reduce_density_numpy
