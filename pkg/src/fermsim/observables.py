"""Occupations, cross-populations, two-qubit extraction, concurrence and purity."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .operators import check_hermitian, fock_index, herm_eig, pauli

LEAKAGE_TOL = 1e-6
DEAD_TOL = 1e-6
REBIRTH_TOL = 1e-4

# order of the cross-population outputs
CROSS_LABELS = ("1001", "0110", "1010", "0101")

# two-qubit basis |00>,|01>,|10>,|11>; qubit A: 0 = dot 1 occupied, 1 = dot 2;
# qubit B: 0 = dot 3 occupied, 1 = dot 4
TWO_QUBIT_LABELS = ("1010", "1001", "0110", "0101")

_YY = np.kron(pauli("y"), pauli("y"))


class SubspaceLeakageError(ValueError):
    pass


def n_sites_of(rho: np.ndarray) -> int:
    d = rho.shape[0]
    n = d.bit_length() - 1
    if rho.ndim != 2 or d != rho.shape[1] or d != 1 << n or n < 1:
        raise ValueError(f"expected a 2^N x 2^N matrix, got shape {rho.shape}")
    return n


@lru_cache(maxsize=64)
def _trace_index(n_sites: int, keep: tuple[int, ...]) -> np.ndarray:
    traced = [s for s in range(1, n_sites + 1) if s not in keep]
    k, m = len(keep), len(traced)
    index = np.zeros((1 << k, 1 << m), dtype=np.int64)
    for a in range(1 << k):
        base = 0
        for pos, site in enumerate(keep):
            if (a >> (k - 1 - pos)) & 1:
                base |= 1 << (n_sites - site)
        for e in range(1 << m):
            full = base
            for pos, site in enumerate(traced):
                if (e >> (m - 1 - pos)) & 1:
                    full |= 1 << (n_sites - site)
            index[a, e] = full
    index.setflags(write=False)
    return index


def partial_trace(rho: np.ndarray, keep: Iterable[int]) -> np.ndarray:
    """Reduced density matrix on the sites in ``keep`` (1-based; kept in ascending order)."""
    rho = np.asarray(rho, dtype=np.complex128)
    n = n_sites_of(rho)
    keep = tuple(sorted(set(keep)))
    if not keep:
        raise ValueError("keep must name at least one site")
    if keep[0] < 1 or keep[-1] > n:
        raise IndexError(f"keep sites {keep} out of range 1..{n}")
    if len(keep) == n:
        return rho.copy()
    return _kernels.reduce_density(np.ascontiguousarray(rho), _trace_index(n, keep))


def molecule_state(rho: np.ndarray) -> np.ndarray:
    """State of dots 1-4 with every further site traced out."""
    n = n_sites_of(rho)
    if n < 4:
        raise ValueError(f"molecule observables need at least 4 sites, got {n}")
    return partial_trace(rho, range(1, 5)) if n > 4 else np.asarray(rho, dtype=np.complex128)


def occupation(rho: np.ndarray, i: int) -> float:
    """``<N_i> = Tr(N_i rho)`` from the diagonal (site ``i`` occupied <=> its index bit is 0)."""
    n = n_sites_of(rho)
    if not 1 <= i <= n:
        raise IndexError(f"site index {i} out of range 1..{n}")
    idx = np.arange(1 << n)
    mask = ((idx >> (n - i)) & 1) == 0
    return float(np.real(np.diagonal(rho)[mask].sum()))


def occupations(rho: np.ndarray) -> np.ndarray:
    n = n_sites_of(rho)
    return np.array([occupation(rho, i) for i in range(1, n + 1)])


def cross_populations(rho: np.ndarray) -> np.ndarray:
    """``(P_1001, P_0110, P_1010, P_0101)`` of a 16-dimensional molecule state."""
    if rho.shape != (16, 16):
        raise ValueError(f"cross populations need a 16x16 state, got {rho.shape}")
    d = np.real(np.diagonal(rho))
    return np.array([d[fock_index(b)] for b in CROSS_LABELS])


@dataclass(frozen=True)
class TwoQubitState:
    matrix: np.ndarray
    discarded_weight: float = 0.0


def extract_two_qubit(rho: np.ndarray, leak_tol: float = LEAKAGE_TOL) -> TwoQubitState:
    """Renormalized 4x4 block of a molecule state on the one-electron-per-molecule subspace."""
    if rho.shape != (16, 16):
        raise ValueError(f"two-qubit extraction needs a 16x16 state, got {rho.shape}")
    idx = [fock_index(b) for b in TWO_QUBIT_LABELS]
    block = np.asarray(rho, dtype=np.complex128)[np.ix_(idx, idx)]
    weight = float(np.real(np.trace(block)))
    discarded = float(np.real(np.trace(rho))) - weight
    if discarded > leak_tol or weight <= 0.0:
        raise SubspaceLeakageError(f"weight outside the two-qubit subspace is {discarded:.3e} > {leak_tol:g}")
    return TwoQubitState(block / weight, discarded)


def _as_matrix(rho2) -> np.ndarray:
    m = rho2.matrix if isinstance(rho2, TwoQubitState) else np.asarray(rho2, dtype=np.complex128)
    if m.shape != (4, 4):
        raise ValueError(f"concurrence needs a 4x4 state, got {m.shape}")
    return m


def spin_flip(rho2) -> np.ndarray:
    m = _as_matrix(rho2)
    return _YY @ m.conj() @ _YY


def _psd_eig(m: np.ndarray, clip: float) -> tuple[np.ndarray, np.ndarray]:
    # eigenvalues in [-clip, 0) are round-off and clipped to zero
    check_hermitian(m, 1e-8)
    w, U = herm_eig(0.5 * (m + m.conj().T))
    if w.min() < -clip:
        raise ValueError(f"state has eigenvalue {w.min():.3e} < -{clip:g}")
    return np.clip(w, 0.0, None), U


def _psd_factor(m: np.ndarray, clip: float) -> np.ndarray:
    """``A`` with ``A A^+ = m``."""
    w, U = _psd_eig(m, clip)
    return U * np.sqrt(w)


def _clipped_concurrence(lam: np.ndarray) -> float:
    lam = np.sort(lam)[::-1]
    return float(min(1.0, max(0.0, lam[0] - lam[1:].sum())))


def concurrence(rho2, clip: float = 1e-7) -> float:
    """Wootters concurrence from the square roots of the eigenvalues of ``rho rho~``.

    With ``rho = A A^+`` the square roots are the singular values of
    ``A^T (Y x Y) A``, which avoids amplifying round-off in the near-zero
    eigenvalues of rank-deficient states.
    """
    A = _psd_factor(_as_matrix(rho2), clip)
    lam = np.linalg.svd(A.T @ _YY @ A, compute_uv=False)
    return _clipped_concurrence(lam)


def concurrence_r_operator(rho2, clip: float = 1e-7) -> float:
    """Same quantity through ``R = sqrt(sqrt(rho) rho~ sqrt(rho))`` explicitly.

    ``R^2 = B B^+`` with ``B = sqrt(rho) (Y x Y) A*``, so ``R`` is built from
    the SVD of ``B`` and its eigenvalues are taken directly.
    """
    w, U = _psd_eig(_as_matrix(rho2), clip)
    A = U * np.sqrt(w)
    root = A @ U.conj().T
    B = root @ _YY @ A.conj()
    V, sv, _ = np.linalg.svd(B)
    R = (V * sv) @ V.conj().T
    lam, _ = herm_eig(0.5 * (R + R.conj().T))
    return _clipped_concurrence(lam)


def purity(rho: np.ndarray) -> float:
    rho = np.asarray(rho)
    return float(np.real(np.vdot(rho.conj().T, rho)))


def linear_entropy(rho: np.ndarray) -> float:
    """``1 - Tr(rho^2)``; between 0 (pure) and ``1 - 1/d``."""
    return 1.0 - purity(rho)


@dataclass(frozen=True)
class SuddenDeath:
    onset: float
    rebirth: float | None  # None: no revival within the series

    @property
    def open(self) -> bool:
        return self.rebirth is None


def detect_sudden_death(
    times: Sequence[float],
    series: Sequence[float],
    dead: float = DEAD_TOL,
    alive: float = REBIRTH_TOL,
    min_steps: int = 2,
) -> list[SuddenDeath]:
    """Find finite stretches where an entanglement series sits at zero.

    A death starts at the first sample of a run with ``C < dead`` spanning at
    least ``min_steps`` grid steps, after the series has exceeded ``alive`` at
    least once. It lasts until the next sample with ``C > alive`` (the
    rebirth). Isolated zero crossings are not deaths.
    """
    t = np.asarray(times, dtype=float)
    c = np.asarray(series, dtype=float)
    if t.shape != c.shape or t.ndim != 1:
        raise ValueError("times and series must be 1-D arrays of equal length")
    if len(t) < 2:
        return []
    steps = np.diff(t)
    if np.any(steps <= 0) or np.ptp(steps) > 1e-6 * steps.mean():
        raise ValueError("detect_sudden_death needs a uniform, increasing time grid")
    if np.any(c < -1e-12):
        raise ValueError("entanglement series must be nonnegative")

    out = []
    n = len(c)
    seen_alive = False
    k = 0
    while k < n:
        if c[k] > alive:
            seen_alive = True
            k += 1
            continue
        if c[k] < dead and seen_alive:
            j = k
            while j < n and c[j] < dead:
                j += 1
            if j - 1 - k >= min_steps:
                r = j
                while r < n and c[r] <= alive:
                    r += 1
                out.append(SuddenDeath(float(t[k]), float(t[r]) if r < n else None))
                k = r
                continue
            k = j
            continue
        k += 1
    return out


def first_crossing(times: Sequence[float], series: Sequence[float], level: float) -> float | None:
    """First grid time with ``series > level``."""
    s = np.asarray(series)
    hit = np.flatnonzero(s > level)
    return float(np.asarray(times)[hit[0]]) if hit.size else None
