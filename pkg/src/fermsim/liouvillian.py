"""Liouvillian supermatrices acting on column-stacked density matrices.

With ``vec`` stacking columns, ``vec(A X B) = (B^T kron A) vec(X)``. A
supermatrix therefore lives on ``2N`` qubit factors: the first ``N`` act from
the right (transposed), the last ``N`` from the left.

The full generator is::

    L(t) = L0 - 1/2 sum_att gamma(t) [ f L+_ij + (1 - f) L-_ij ]

where ``L0 = -i (I kron H - H^T kron I)``. The ``L+/-`` dissipators are built
from explicit Pauli strings (:func:`build_dissipator`). :func:`oracle_dissipator`
rebuilds the same objects by applying the master-equation terms to every
basis matrix, so the two can be checked against each other.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ModelSpec, build_hamiltonian, rate_at
from .operators import (
    HERMITIAN_TOL,
    I2,
    SMINUS,
    SPLUS,
    SZ,
    check_hermitian,
    kron_chain,
    system_jump,
)

SIGNS = ("plus", "minus")


def _ladders(sign: str) -> tuple[np.ndarray, np.ndarray, float]:
    # returns (sigma_pm, sigma_mp, +/-1) for the requested sign
    if sign == "plus":
        return SPLUS, SMINUS, 1.0
    if sign == "minus":
        return SMINUS, SPLUS, -1.0
    raise ValueError(f"sign must be 'plus' or 'minus', got {sign!r}")


def _check_pair(i: int, j: int, n: int) -> None:
    if n < 1:
        raise ValueError(f"system size must be >= 1, got {n}")
    for s in (i, j):
        if not 1 <= s <= n:
            raise IndexError(f"site index {s} out of range 1..{n}")


def build_coherent(H: np.ndarray) -> np.ndarray:
    """Supermatrix of ``rho -> -i [H, rho]``."""
    H = check_hermitian(H)
    eye = np.eye(H.shape[0], dtype=np.complex128)
    return -1j * (np.kron(eye, H) - np.kron(H.T, eye))


def build_dissipator(i: int, j: int, sign: str, n_sites: int) -> np.ndarray:
    """Pauli-string dissipator ``L+_ij`` (``sign='plus'``) or ``L-_ij``.

    Three cases (``i == j``, ``i < j``, ``i > j``) are tensor products over
    ``2 * n_sites`` qubit factors.
    """
    _check_pair(i, j, n_sites)
    N = n_sites
    s_pm, s_mp, pm = _ladders(sign)
    I, Z = I2, SZ

    if i == j:
        pair = s_mp @ s_pm
        left = kron_chain([I] * (N + i - 1) + [pair] + [I] * (N - i))
        right = kron_chain([I] * (i - 1) + [pair] + [I] * (2 * N - i))
        string = [I] * (i - 1) + [s_pm] + [Z] * (N - i)
        return left + right - 2.0 * kron_chain(string + string)

    if i < j:
        core = [s_mp] + [Z] * (j - i - 1) + [s_pm]
        left = kron_chain([I] * (N + i - 1) + core + [I] * (N - j))
        right = kron_chain([I] * (i - 1) + core + [I] * (2 * N - j))
    else:
        core = [s_pm] + [Z] * (i - j - 1) + [s_mp]
        left = kron_chain([I] * (N + j - 1) + core + [I] * (N - i))
        right = kron_chain([I] * (j - 1) + core + [I] * (2 * N - i))

    str_i = [I] * (i - 1) + [s_pm] + [Z] * (N - i)
    str_j = [I] * (j - 1) + [s_pm] + [Z] * (N - j)
    return pm * (left + right) - kron_chain(str_i + str_j) - kron_chain(str_j + str_i)


def _superop_from_map(fn, dim: int) -> np.ndarray:
    # column k of the supermatrix is vec(fn(E)) for the k-th column-stacked basis matrix E
    out = np.empty((dim * dim, dim * dim), dtype=np.complex128)
    E = np.zeros((dim, dim), dtype=np.complex128)
    for col in range(dim):
        for row in range(dim):
            E[row, col] = 1.0
            out[:, col * dim + row] = fn(E).reshape(-1, order="F")
            E[row, col] = 0.0
    return out


def oracle_dissipator(i: int, j: int, sign: str, n_sites: int) -> np.ndarray:
    """Independent dissipator built from the Schrodinger-picture master-equation terms.

    ``plus``::  S_i S_j^+ r - S_i^+ r S_j + r S_j S_i^+ - S_j^+ r S_i
    ``minus``:: S_i^+ S_j r - S_i r S_j^+ + r S_j^+ S_i - S_j r S_i^+

    (``^+`` is the adjoint), applied to each basis matrix and stacked.
    """
    _check_pair(i, j, n_sites)
    Si, Sj = system_jump(i, n_sites), system_jump(j, n_sites)
    Sid, Sjd = Si.conj().T, Sj.conj().T
    if sign == "plus":
        a, b = Si @ Sjd, Sj @ Sid

        def fn(r):
            return a @ r - Sid @ r @ Sj + r @ b - Sjd @ r @ Si

    elif sign == "minus":
        a, b = Sid @ Sj, Sjd @ Si

        def fn(r):
            return a @ r - Si @ r @ Sjd + r @ b - Sj @ r @ Sid

    else:
        raise ValueError(f"sign must be 'plus' or 'minus', got {sign!r}")
    return _superop_from_map(fn, 2**n_sites)


def gksl_dissipator(J: np.ndarray) -> np.ndarray:
    """Supermatrix of ``D[J] rho = J rho J^+ - 1/2 {J^+ J, rho}``."""
    JdJ = J.conj().T @ J
    eye = np.eye(J.shape[0], dtype=np.complex128)
    return np.kron(J.conj(), J) - 0.5 * np.kron(eye, JdJ) - 0.5 * np.kron(JdJ.T, eye)


def trace_functional_defect(L: np.ndarray) -> float:
    """``max |vec(I)^+ L|``; zero for trace-preserving generators."""
    dim = math.isqrt(L.shape[0])
    diag_rows = np.arange(dim) * (dim + 1)
    return float(np.max(np.abs(L[diag_rows].sum(axis=0))))


@dataclass(frozen=True)
class Segment:
    t_start: float
    t_end: float  # math.inf for the last segment
    matrix: np.ndarray

    def contains(self, t: float) -> bool:
        return self.t_start <= t < self.t_end


@dataclass(frozen=True)
class Liouvillian:
    """Piecewise-constant generator; segments tile ``[t_start, inf)``."""

    n_sites: int
    segments: tuple[Segment, ...]

    @classmethod
    def constant(cls, matrix: np.ndarray, n_sites: int | None = None) -> "Liouvillian":
        matrix = np.asarray(matrix, dtype=np.complex128)
        dim = math.isqrt(matrix.shape[0])
        if n_sites is None:
            n_sites = max(1, dim.bit_length() - 1)
        return cls(n_sites, (Segment(0.0, math.inf, matrix),))

    @property
    def dim(self) -> int:
        return self.segments[0].matrix.shape[0]

    @property
    def is_constant(self) -> bool:
        return len(self.segments) == 1

    @property
    def matrix(self) -> np.ndarray:
        if not self.is_constant:
            raise ValueError("Liouvillian is time dependent; use .at(t) or .segments")
        return self.segments[0].matrix

    def segment_at(self, t: float) -> Segment:
        for seg in self.segments:
            if seg.contains(t):
                return seg
        raise ValueError(f"time {t} is outside the Liouvillian's coverage [{self.segments[0].t_start}, inf)")

    def at(self, t: float) -> np.ndarray:
        return self.segment_at(t).matrix


def dissipator_sum(spec: ModelSpec, t: float, cache: dict | None = None) -> np.ndarray:
    """``sum_att gamma(t) [f L+ + (1 - f) L-]`` at time ``t``."""
    dim = 4**spec.n_sites
    cache = {} if cache is None else cache
    total = np.zeros((dim, dim), dtype=np.complex128)
    for att in spec.reservoirs:
        g = rate_at(att, t)
        if g == 0.0:
            continue
        i, j = att.jump_sites
        for sign, w in (("plus", att.fermi), ("minus", 1.0 - att.fermi)):
            if w == 0.0:
                continue
            key = (i, j, sign)
            if key not in cache:
                cache[key] = build_dissipator(i, j, sign, spec.n_sites)
            total += (g * w) * cache[key]
    return total


def assemble(spec: ModelSpec) -> Liouvillian:
    """Generator for ``spec``, one supermatrix per constant-rate time segment."""
    L0 = build_coherent(build_hamiltonian(spec))
    cuts = sorted({b for att in spec.reservoirs for b in att.breakpoints()})
    bounds = [0.0, *cuts, math.inf]
    cache: dict = {}
    segments = []
    for a, b in zip(bounds, bounds[1:]):
        segments.append(Segment(a, b, L0 - 0.5 * dissipator_sum(spec, a, cache)))
    return Liouvillian(spec.n_sites, tuple(segments))


def assemble_at(spec: ModelSpec, t: float) -> np.ndarray:
    """``L(t)`` for a single time."""
    return build_coherent(build_hamiltonian(spec)) - 0.5 * dissipator_sum(spec, t)


__all__ = [
    "HERMITIAN_TOL",
    "Liouvillian",
    "Segment",
    "assemble",
    "assemble_at",
    "build_coherent",
    "build_dissipator",
    "dissipator_sum",
    "gksl_dissipator",
    "oracle_dissipator",
    "trace_functional_defect",
]
