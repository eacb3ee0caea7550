"""Run a model and tabulate its observables."""
from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .evolver import Trajectory, evolve, uniform_grid
from .liouvillian import assemble
from .model import ModelSpec
from .observables import (
    SubspaceLeakageError,
    concurrence,
    cross_populations,
    extract_two_qubit,
    linear_entropy,
    molecule_state,
    occupations,
)

OBSERVABLES = ("occupations", "cross_populations", "concurrence", "linear_entropy", "diagnostics")


def simulate(spec: ModelSpec, t_max: float, dt_out: float, method: str = "expm", h: float | None = None) -> Trajectory:
    return evolve(assemble(spec), spec.initial_state(), uniform_grid(t_max, dt_out), method=method, h=h)


@dataclass
class ObservableTable:
    columns: list[str]
    data: np.ndarray  # (n_times, n_columns)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.data[:, self.columns.index(name)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.data:
            w.writerow([_fmt(x) for x in row])
        return buf.getvalue()

    def write_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv(), encoding="utf-8", newline="")


def _fmt(x: float) -> str:
    if math.isnan(x):
        return "nan"
    s = f"{x:.12g}"
    return "0" if s == "-0" else s


def normalize_observables(names: Sequence[str] | None) -> tuple[str, ...]:
    if names is None:
        return OBSERVABLES
    bad = [n for n in names if n not in OBSERVABLES]
    if bad:
        raise ValueError(f"unknown observable(s) {', '.join(bad)}; choose from {', '.join(OBSERVABLES)}")
    return tuple(n for n in OBSERVABLES if n in names)


def observable_table(traj: Trajectory, observables: Sequence[str] | None = None) -> ObservableTable:
    """Column table in the fixed CSV order.

    Cross-populations and concurrence refer to dots 1-4 and are skipped for
    models with fewer than four sites. Linear entropy is taken on dots 1-4
    when they exist, otherwise on the whole system. Concurrence is ``nan`` at
    times where the state leaks out of the two-qubit subspace.
    """
    wanted = normalize_observables(observables)
    n = traj.n_sites
    molecules = n >= 4
    cols = ["t"]
    if "occupations" in wanted:
        cols += [f"n{i}" for i in range(1, n + 1)]
    if "cross_populations" in wanted and molecules:
        cols += ["p_1001", "p_0110", "p_1010", "p_0101"]
    if "concurrence" in wanted and molecules:
        cols.append("concurrence")
    if "linear_entropy" in wanted:
        cols.append("linear_entropy")
    if "diagnostics" in wanted:
        cols += ["trace_dev", "min_eig"]

    rows = []
    leaked = 0
    for k, rho in enumerate(traj.density_matrices()):
        row = [traj.times[k]]
        mol = molecule_state(rho) if molecules else rho
        if "occupations" in wanted:
            row.extend(occupations(rho))
        if "cross_populations" in wanted and molecules:
            row.extend(cross_populations(mol))
        if "concurrence" in wanted and molecules:
            try:
                row.append(concurrence(extract_two_qubit(mol)))
            except SubspaceLeakageError:
                leaked += 1
                row.append(math.nan)
        if "linear_entropy" in wanted:
            row.append(linear_entropy(mol))
        if "diagnostics" in wanted:
            row += [traj.trace_dev[k], traj.min_eig[k]]
        rows.append(row)
    if leaked:
        warnings.warn(f"concurrence undefined at {leaked} time(s): state leaves the two-qubit subspace", stacklevel=2)
    return ObservableTable(cols, np.array(rows, dtype=float).reshape(len(rows), len(cols)))
