"""Lindblad dynamics of fermionic open systems through the Jordan-Wigner mapping."""
from ._kernels import BACKEND
from .evolver import Trajectory, evolve, steady_state, uniform_grid, unvec, vec
from .liouvillian import Liouvillian, assemble, build_coherent, build_dissipator, oracle_dissipator
from .model import (
    HamiltonianTerm,
    ModelError,
    ModelSpec,
    ReservoirAttachment,
    build_hamiltonian,
    fermi_factor,
    load_model,
    parse_model,
    rate_at,
    serialize_model,
)
from .observables import (
    TwoQubitState,
    concurrence,
    cross_populations,
    detect_sudden_death,
    extract_two_qubit,
    linear_entropy,
    occupation,
    partial_trace,
)
from .operators import annihilator, creator, kron_chain, number_op, pauli, system_jump
from .presets import preset
from .simulate import ObservableTable, observable_table, simulate

__version__ = "0.1.0"
