"""Integrate ``d vec(rho)/dt = L(t) vec(rho)`` for piecewise-constant generators."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from . import _kernels
from .liouvillian import Liouvillian

RK4_SAFETY = 0.4
STATE_TOL = 1e-9

# trajectory health bounds
TRACE_TOL = 1e-8
MIN_EIG_TOL = -1e-7
HERM_TOL = 1e-8


class EvolutionError(ValueError):
    pass


class StepSizeError(EvolutionError):
    pass


class DegenerateSteadyStateError(EvolutionError):
    def __init__(self, null_dim: int):
        self.null_dim = null_dim
        super().__init__(
            f"steady state is not unique: null space of L has dimension {null_dim}; pass rho0 to select the one reached from it"
        )


def vec(rho: np.ndarray) -> np.ndarray:
    """Column-stack a square matrix."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"vec needs a square matrix, got shape {rho.shape}")
    return rho.reshape(-1, order="F")


def unvec(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v)
    d = math.isqrt(v.shape[-1])
    if v.ndim != 1 or d * d != v.shape[0]:
        raise ValueError(f"unvec needs a vector of square length, got shape {v.shape}")
    return v.reshape(d, d, order="F")


def validate_state(rho: np.ndarray, tol: float = STATE_TOL) -> np.ndarray:
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise EvolutionError(f"initial state must be a square matrix, got shape {rho.shape}")
    defect = float(np.max(np.abs(rho - rho.conj().T)))
    if defect > tol:
        raise EvolutionError(f"initial state is not Hermitian (defect {defect:.3e})")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > tol:
        raise EvolutionError(f"initial state has trace {tr:.12g}")
    w = np.linalg.eigvalsh(rho)
    if w[0] < -tol:
        raise EvolutionError(f"initial state is not positive semidefinite (min eigenvalue {w[0]:.3e})")
    return rho


def state_diagnostics(rho: np.ndarray) -> tuple[float, float, float]:
    """(|Tr rho - 1|, min eigenvalue of the Hermitian part, max|rho - rho^+|)."""
    herm = float(np.max(np.abs(rho - rho.conj().T)))
    trace_dev = abs(np.trace(rho) - 1.0)
    min_eig = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
    return float(trace_dev), min_eig, herm


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (n_times, dim**2) column-stacked density matrices
    n_sites: int
    method: str
    trace_dev: np.ndarray = field(init=False)
    min_eig: np.ndarray = field(init=False)
    herm_defect: np.ndarray = field(init=False)

    def __post_init__(self):
        diag = np.array([state_diagnostics(self.rho(k)) for k in range(len(self.times))]).reshape(-1, 3)
        self.trace_dev, self.min_eig, self.herm_defect = diag.T.copy()

    def __len__(self):
        return len(self.times)

    def rho(self, k: int) -> np.ndarray:
        return unvec(self.states[k])

    def density_matrices(self):
        for k in range(len(self.times)):
            yield self.rho(k)

    def health_violations(self, trace_tol=TRACE_TOL, min_eig_tol=MIN_EIG_TOL, herm_tol=HERM_TOL) -> list[str]:
        out = []
        if np.max(self.trace_dev, initial=0.0) >= trace_tol:
            out.append(f"trace deviation {self.trace_dev.max():.3e} >= {trace_tol:g}")
        if np.min(self.min_eig, initial=0.0) <= min_eig_tol:
            out.append(f"min eigenvalue {self.min_eig.min():.3e} <= {min_eig_tol:g}")
        if np.max(self.herm_defect, initial=0.0) >= herm_tol:
            out.append(f"hermiticity defect {self.herm_defect.max():.3e} >= {herm_tol:g}")
        return out


def uniform_grid(t_max: float, dt: float, t0: float = 0.0) -> np.ndarray:
    """``t0, t0 + dt, ...`` up to ``t_max`` inclusive (snapped when within 1e-9 dt)."""
    if dt <= 0 or t_max <= t0:
        raise ValueError(f"need dt > 0 and t_max > t0, got dt={dt}, t_max={t_max}")
    n = int(math.floor((t_max - t0) / dt + 1e-9))
    return t0 + dt * np.arange(n + 1)


def rk4_step_bound(L: np.ndarray) -> float:
    """Largest rk4 step allowed for ``L``: ``0.4 / ||L||_1``."""
    norm = float(np.abs(L).sum(axis=0).max())
    return math.inf if norm == 0.0 else RK4_SAFETY / norm


def _pieces(gen: Liouvillian, a: float, b: float):
    # split [a, b] at segment boundaries -> (segment index, duration)
    t = a
    for k, seg in enumerate(gen.segments):
        if seg.t_end <= t:
            continue
        end = min(b, seg.t_end)
        if end > t:
            yield k, end - t
            t = end
        if t >= b:
            break


def evolve(
    gen: Liouvillian | np.ndarray,
    rho0: np.ndarray,
    times: Sequence[float],
    method: str = "expm",
    h: float | None = None,
) -> Trajectory:
    """Propagate ``rho0`` (given at ``times[0]``) and record it at every grid time.

    ``expm`` applies exact segment exponentials in chronological order.
    ``rk4`` takes classical fixed RK4 steps of at most
    ``min(h, grid spacing, 0.4/||L||_1)``; an explicit ``h`` above the bound
    raises :class:`StepSizeError`.
    """
    if not isinstance(gen, Liouvillian):
        gen = Liouvillian.constant(gen)
    if method not in ("expm", "rk4"):
        raise ValueError(f"method must be 'expm' or 'rk4', got {method!r}")
    rho0 = validate_state(rho0)
    if rho0.shape[0] ** 2 != gen.dim:
        raise EvolutionError(f"state dimension {rho0.shape[0]} does not match Liouvillian dimension {gen.dim}")
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) == 0:
        raise EvolutionError("time grid must be a non-empty 1-D sequence")
    if np.any(np.diff(times) <= 0):
        raise EvolutionError("time grid must be strictly increasing")
    if times[0] < gen.segments[0].t_start:
        raise EvolutionError(f"time grid starts at {times[0]}, before the generator coverage {gen.segments[0].t_start}")

    if method == "rk4":
        bounds = [rk4_step_bound(seg.matrix) for seg in gen.segments]
        if h is not None:
            if h <= 0:
                raise StepSizeError(f"rk4 step must be positive, got {h}")
            for seg, bound in zip(gen.segments, bounds):
                if h > bound * (1 + 1e-12):
                    raise StepSizeError(
                        f"rk4 step {h} exceeds 0.4/||L||_1 = {bound:.4g} on segment starting at t={seg.t_start}"
                    )

    states = np.empty((len(times), gen.dim), dtype=np.complex128)
    v = vec(rho0).copy()
    states[0] = v
    cache: dict = {}
    for n in range(1, len(times)):
        for k, dt in _pieces(gen, times[n - 1], times[n]):
            L = gen.segments[k].matrix
            if method == "expm":
                key = (k, round(dt, 12))
                U = cache.get(key)
                if U is None:
                    U = cache[key] = scipy.linalg.expm(dt * L)
                v = U @ v
            else:
                hmax = min(bounds[k], dt if h is None else h)
                nsteps = max(1, math.ceil(dt / hmax - 1e-9))
                v = _kernels.rk4_steps(L, v, dt / nsteps, nsteps)
        states[n] = v
    return Trajectory(times, states, gen.n_sites, method)


def steady_state(gen: Liouvillian | np.ndarray, rho0: np.ndarray | None = None, rcond: float = 1e-10) -> np.ndarray:
    """Stationary density matrix of a time-independent generator.

    When the null space of ``L`` is one-dimensional the answer is unique.
    Otherwise ``rho0`` selects the stationary state it relaxes to, found by
    projecting ``vec(rho0)`` with biorthogonal left/right null vectors; this
    assumes no purely oscillating (imaginary) modes survive.
    """
    if isinstance(gen, Liouvillian):
        L = gen.matrix
    else:
        L = np.asarray(gen, dtype=np.complex128)
    dim = math.isqrt(L.shape[0])
    right = scipy.linalg.null_space(L, rcond=rcond)
    k = right.shape[1]
    if k == 0:
        raise EvolutionError("L has no null vector; it is not a valid generator")
    if k == 1:
        v = right[:, 0]
    else:
        if rho0 is None:
            raise DegenerateSteadyStateError(k)
        left = scipy.linalg.null_space(L.conj().T, rcond=rcond)
        if left.shape[1] != k:
            raise EvolutionError(f"left and right null spaces differ in dimension ({left.shape[1]} vs {k})")
        v0 = vec(validate_state(rho0))
        v = right @ np.linalg.solve(left.conj().T @ right, left.conj().T @ v0)
    rho = unvec(v)
    tr = np.trace(rho)
    if abs(tr) < 1e-14:
        raise EvolutionError("null vector has zero trace and cannot be normalized")
    rho = rho / tr
    rho = 0.5 * (rho + rho.conj().T)
    residual = float(np.linalg.norm(L @ vec(rho)))
    if residual > 1e-9:
        raise EvolutionError(f"steady-state residual {residual:.3e} exceeds 1e-9")
    w = np.linalg.eigvalsh(rho)
    if w[0] < -STATE_TOL:
        raise EvolutionError(f"steady state is not positive semidefinite (min eigenvalue {w[0]:.3e})")
    return rho
