"""Pauli primitives, Kronecker chains and Jordan-Wigner operators.

Operators are plain dense ``complex128`` numpy arrays of shape ``(2**L, 2**L)``.

Conventions
-----------
- Per-site basis: index 0 is the *occupied* state, index 1 the *empty* state,
  so ``sigma_plus @ sigma_minus = diag(1, 0)`` projects on occupation.
- Site 1 is the leftmost (slowest varying) tensor factor. A Fock label such as
  ``"1001"`` reads left to right from site 1, and its first bit is the most
  significant bit of the basis index (with occupied -> 0).
"""
from __future__ import annotations

from typing import Sequence

import numpy as np
import scipy.linalg

from . import _kernels

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-9


class NotHermitianError(ValueError):
    pass


_PAULI = {
    "identity": np.eye(2, dtype=np.complex128),
    "x": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
    "plus": np.array([[0, 1], [0, 0]], dtype=np.complex128),
    "minus": np.array([[0, 0], [1, 0]], dtype=np.complex128),
    "p_plus": np.array([[1, 0], [0, 0]], dtype=np.complex128),
}


def pauli(which: str) -> np.ndarray:
    """Return a fresh 2x2 single-site operator.

    ``which`` is one of ``x, y, z, plus, minus, identity, p_plus``. The ladder
    operators are ``(sigma_x +/- i sigma_y) / 2``; ``minus`` maps the occupied
    state ``(1, 0)`` to the empty state ``(0, 1)``.
    """
    try:
        return _PAULI[which].copy()
    except KeyError:
        raise ValueError(f"unknown single-site operator {which!r}; expected one of {sorted(_PAULI)}") from None


I2 = _PAULI["identity"]
SZ = _PAULI["z"]
SPLUS = _PAULI["plus"]
SMINUS = _PAULI["minus"]
PPLUS = _PAULI["p_plus"]


def kron_chain(factors: Sequence[np.ndarray]) -> np.ndarray:
    """Kronecker product of ``factors`` with the first factor leftmost."""
    if len(factors) == 0:
        raise ValueError("kron_chain needs at least one factor")
    mats = [np.asarray(f, dtype=np.complex128) for f in factors]
    if len(mats) == 1:
        return mats[0].copy()
    if all(m.shape == (2, 2) for m in mats):
        return _kernels.kron2_chain(np.ascontiguousarray(np.stack(mats)))
    return _kernels.kron2_chain_numpy(mats)


def _check_site(m: int, total: int, label: str = "site") -> None:
    if total < 1:
        raise ValueError(f"system size must be >= 1, got {total}")
    if not 1 <= m <= total:
        raise IndexError(f"{label} index {m} out of range 1..{total}")


def annihilator(m: int, total: int) -> np.ndarray:
    """Jordan-Wigner annihilator d_m with the sigma_z string on sites ``1..m-1``."""
    _check_site(m, total)
    return kron_chain([SZ] * (m - 1) + [SMINUS] + [I2] * (total - m))


def creator(m: int, total: int) -> np.ndarray:
    return annihilator(m, total).conj().T


def system_jump(i: int, n_sites: int) -> np.ndarray:
    """System-side jump operator S_i.

    Unlike :func:`annihilator`, the parity string sits on the sites *after* ``i``.
    The S_i still obey canonical anticommutation relations.
    """
    _check_site(i, n_sites)
    return kron_chain([I2] * (i - 1) + [SMINUS] + [SZ] * (n_sites - i))


def number_op(i: int, n_sites: int) -> np.ndarray:
    """Occupation projector of site ``i``."""
    _check_site(i, n_sites)
    return kron_chain([I2] * (i - 1) + [PPLUS] + [I2] * (n_sites - i))


def fock_index(bits: str | Sequence[int]) -> int:
    """Basis index of a Fock label (``"1001"`` or ``[1, 0, 0, 1]``)."""
    flags = [int(b) for b in bits]
    if not flags or any(b not in (0, 1) for b in flags):
        raise ValueError(f"invalid Fock label {bits!r}")
    idx = 0
    for b in flags:
        idx = (idx << 1) | (1 - b)
    return idx


def fock_bits(index: int, n_sites: int) -> str:
    if not 0 <= index < 2**n_sites:
        raise IndexError(f"basis index {index} out of range for {n_sites} sites")
    return "".join("0" if (index >> (n_sites - 1 - s)) & 1 else "1" for s in range(n_sites))


def fock_state(bits: str | Sequence[int]) -> np.ndarray:
    """Column basis vector of a Fock label."""
    n = len(bits)
    v = np.zeros(2**n, dtype=np.complex128)
    v[fock_index(bits)] = 1.0
    return v


def fock_density(bits: str | Sequence[int]) -> np.ndarray:
    v = fock_state(bits)
    return np.outer(v, v.conj())


def hermiticity_defect(A: np.ndarray) -> float:
    A = np.asarray(A)
    return float(np.max(np.abs(A - A.conj().T))) if A.size else 0.0


def check_hermitian(A: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    defect = hermiticity_defect(A)
    if defect >= tol:
        raise NotHermitianError(f"matrix is not Hermitian: max|A - A^dagger| = {defect:.3e} >= {tol:g}")
    return A


def anticommutator(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return A @ B + B @ A


def commutator(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return A @ B - B @ A


def herm_eig(A: np.ndarray, tol: float = HERMITIAN_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix, eigenvalues in descending order.

    Returns ``(w, U)`` with ``A = U @ diag(w) @ U^dagger``.
    """
    A = check_hermitian(A, tol)
    w, U = np.linalg.eigh(A)
    return w[::-1].copy(), U[:, ::-1].copy()


def matrix_sqrt_psd(A: np.ndarray, tol: float = PSD_TOL, herm_tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Principal square root of a positive semidefinite matrix.

    Eigenvalues in ``[-tol, 0)`` are clipped to zero; anything more negative
    raises ``ValueError``.
    """
    w, U = herm_eig(A, herm_tol)
    if w.size and w[-1] < -tol:
        raise ValueError(f"matrix is not positive semidefinite: min eigenvalue {w[-1]:.3e} < -{tol:g}")
    root = np.sqrt(np.clip(w, 0.0, None))
    return (U * root) @ U.conj().T


def matrix_exp(A: np.ndarray, scale: complex = 1.0) -> np.ndarray:
    """``exp(scale * A)`` by scaling and squaring (Pade)."""
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    return scipy.linalg.expm(scale * A)
