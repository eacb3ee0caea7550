"""Cross-module invariant suite behind ``fermsim check``."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .evolver import evolve, steady_state, uniform_grid
from .liouvillian import (
    assemble,
    build_dissipator,
    oracle_dissipator,
    trace_functional_defect,
)
from .model import parse_model
from .observables import occupation
from .operators import (
    I2,
    SMINUS,
    SPLUS,
    anticommutator,
    annihilator,
    creator,
    kron_chain,
    system_jump,
)
from .presets import preset


@dataclass(frozen=True)
class CheckResult:
    name: str
    deviation: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.deviation < self.tol

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.name:<28} max deviation {self.deviation:.3e}  (tol {self.tol:g})"


def anticommutation_deviation(max_sites: int = 6) -> float:
    worst = 0.0
    for D in range(1, max_sites + 1):
        eye = np.eye(2**D)
        ds = [annihilator(m, D) for m in range(1, D + 1)]
        dds = [creator(m, D) for m in range(1, D + 1)]
        for m in range(D):
            for l in range(D):
                worst = max(worst, np.abs(anticommutator(ds[m], dds[l]) - (m == l) * eye).max())
                worst = max(worst, np.abs(anticommutator(ds[m], ds[l])).max())
    return float(worst)


def system_jump_anticommutation_deviation(max_sites: int = 5) -> float:
    worst = 0.0
    for N in range(1, max_sites + 1):
        eye = np.eye(2**N)
        ss = [system_jump(i, N) for i in range(1, N + 1)]
        for a in range(N):
            for b in range(N):
                worst = max(worst, np.abs(anticommutator(ss[a], ss[b].conj().T) - (a == b) * eye).max())
                worst = max(worst, np.abs(anticommutator(ss[a], ss[b])).max())
    return float(worst)


def oracle_deviation(max_sites: int = 4) -> float:
    worst = 0.0
    for N in range(1, max_sites + 1):
        for i in range(1, N + 1):
            for j in range(1, N + 1):
                for sign in ("plus", "minus"):
                    diff = build_dissipator(i, j, sign, N) - oracle_dissipator(i, j, sign, N)
                    worst = max(worst, float(np.abs(diff).max()))
    return worst


def probe_dissipator_by_hand(sign: str) -> np.ndarray:
    """The dot-5 dissipator for five sites, written out factor by factor."""
    up, down = (SPLUS, SMINUS) if sign == "plus" else (SMINUS, SPLUS)
    pair = down @ up
    return (
        kron_chain([I2] * 9 + [pair])
        + kron_chain([I2] * 4 + [pair] + [I2] * 5)
        - 2.0 * kron_chain([I2] * 4 + [up] + [I2] * 4 + [up])
    )


def probe_dissipator_deviation() -> float:
    return max(
        float(np.abs(build_dissipator(5, 5, s, 5) - probe_dissipator_by_hand(s)).max()) for s in ("plus", "minus")
    )


_CROSS_MODEL = """\
sites 3
onsite 1 0.3
onsite 2 -0.2
hop 1 2 0.5
hop 2 3 0.4
density 1 3 0.7
reservoir a 1 1 0.8 1.0
reservoir b 1 3 0.6 0.3
reservoir c 3 2 0.5 0.0
"""


def trace_preservation_deviation() -> float:
    worst = 0.0
    for spec in (preset("fig3"), parse_model(_CROSS_MODEL)):
        for seg in assemble(spec).segments:
            worst = max(worst, trace_functional_defect(seg.matrix))
    return worst


FILLING_MODEL = "sites 1\nonsite 1 0.0\nreservoir src 1 1 1.0 1.0\ninit fock 0\n"


def filling_curve_deviation(t_max: float = 10.0, dt: float = 0.01) -> float:
    spec = parse_model(FILLING_MODEL)
    grid = uniform_grid(t_max, dt)
    traj = evolve(assemble(spec), spec.initial_state(), grid, method="expm")
    n = np.array([occupation(r, 1) for r in traj.density_matrices()])
    return float(np.abs(n - (1.0 - np.exp(-grid))).max())


SOURCE_DRAIN_MODEL = "sites 1\nonsite 1 0.0\nreservoir src 1 1 1.0 1.0\nreservoir drn 1 1 1.0 0.0\n"


def source_drain_deviation() -> float:
    rho = steady_state(assemble(parse_model(SOURCE_DRAIN_MODEL)))
    return abs(occupation(rho, 1) - 0.5)


CHECKS: tuple[tuple[str, Callable[[], float], float], ...] = (
    ("anticommutation (D<=6)", anticommutation_deviation, 1e-12),
    ("jump anticommutation (N<=5)", system_jump_anticommutation_deviation, 1e-12),
    ("oracle vs recipe (N<=4)", oracle_deviation, 1e-12),
    ("probe dissipator (N=5)", probe_dissipator_deviation, 1e-15),
    ("trace preservation", trace_preservation_deviation, 1e-10),
    ("single-site filling curve", filling_curve_deviation, 1e-8),
    ("source+drain steady state", source_drain_deviation, 1e-9),
)


def run_checks() -> list[CheckResult]:
    return [CheckResult(name, fn(), tol) for name, fn, tol in CHECKS]
