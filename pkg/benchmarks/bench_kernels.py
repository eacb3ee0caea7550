"""Time the numba kernels against their pure-numpy twins.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5]

Both twins are importable regardless of ``FERMSIM_DISABLE_NUMBA``; the flag
only decides which one the package uses (printed as ``backend``). The first
call of each numba kernel compiles it (or loads it from the on-disk cache),
so every kernel is warmed up before timing.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from fermsim import _kernels
from fermsim.evolver import rk4_step_bound, vec
from fermsim.liouvillian import assemble
from fermsim.observables import _trace_index
from fermsim.presets import preset


def cases(rng):
    z = np.diag([1.0, -1.0]).astype(complex)
    m = np.array([[0, 0], [1, 0]], dtype=complex)
    factors = np.array([np.eye(2, dtype=complex)] * 3 + [m] + [z] * 6)  # 10 sites, 1024x1024

    spec = preset("fig3")
    L = np.ascontiguousarray(assemble(spec).matrix)
    v = vec(spec.initial_state()).astype(np.complex128)
    h = rk4_step_bound(L)

    G = rng.normal(size=(32, 32)) + 1j * rng.normal(size=(32, 32))
    rho = G @ G.conj().T
    rho /= np.trace(rho)
    index = _trace_index(5, (1, 2, 3, 4))

    return {
        "kron2_chain (10 factors)": (_kernels.kron2_chain_numba, _kernels.kron2_chain_numpy, (factors,)),
        "rk4_steps (fig3, 100 steps)": (_kernels.rk4_steps_numba, _kernels.rk4_steps_numpy, (L, v, h, 100)),
        "reduce_density (32 -> 16)": (_kernels.reduce_density_numba, _kernels.reduce_density_numpy, (rho, index)),
    }


def main(argv=None) -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)

    print(f"backend: {_kernels.BACKEND}")
    print(f"{'kernel':<30}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}{'max |diff|':>12}")
    for name, (fast, slow, call_args) in cases(np.random.default_rng(0)).items():
        a, b = fast(*call_args), slow(*call_args)  # warm-up and agreement
        diff = float(np.abs(a - b).max())
        number = 1 if "rk4" in name else 20
        t_fast = min(timeit.repeat(lambda: fast(*call_args), number=number, repeat=args.repeat)) / number
        t_slow = min(timeit.repeat(lambda: slow(*call_args), number=number, repeat=args.repeat)) / number
        print(f"{name:<30}{1e3 * t_fast:>12.3f}{1e3 * t_slow:>12.3f}{t_slow / t_fast:>9.1f}x{diff:>12.1e}")


if __name__ == "__main__":
    main()
