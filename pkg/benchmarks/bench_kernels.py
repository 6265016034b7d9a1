"""Benchmark the compiled RK4 kernel against the pure-numpy fallback.

Runs the two-atom-driven n=3 ring at photon cutoff 1 (composite dimension
1728) for a fixed number of steps with each backend and reports steps/s
plus the max amplitude deviation between the two results.

Usage: python benchmarks/bench_kernels.py [--steps N] [--cutoff N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from fiberring import Drive, NetworkConfig, full_hamiltonian
from fiberring.operators import BasisLayout, QubitLayout, embed_qubit_state, qubit_basis_state
from fiberring._kernels import BACKEND, pack_hamiltonian
from fiberring._kernels._rk4_np import rk4_propagate as rk4_python


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--cutoff", type=int, default=1)
    args = ap.parse_args()

    config = NetworkConfig(
        n=3,
        nu=1.0,
        delta2=18.5,
        photon_cutoff=args.cutoff,
        drives=(
            Drive(atom=1, rabi=1.0, detuning=16.0),
            Drive(atom=3, rabi=1.0, detuning=16.0),
        ),
    )
    layout = BasisLayout(config.n, config.photon_cutoff)
    h = full_hamiltonian(config, layout)
    packed = pack_hamiltonian(h)
    qubits = qubit_basis_state(QubitLayout(config.n), "egg")
    psi0 = embed_qubit_state(qubits, layout)
    dt = 1e-3

    print(f"dimension {layout.dim}, {args.steps} RK4 steps, dt = {dt:g}")

    results = {}
    t0 = time.perf_counter()
    results["python"] = rk4_python(packed, psi0, 0.0, dt, args.steps)
    t_py = time.perf_counter() - t0
    print(f"python  backend: {t_py:8.3f} s  ({args.steps / t_py:9.1f} steps/s)")

    if BACKEND == "cython":
        from fiberring._kernels import rk4_propagate as rk4_compiled

        t0 = time.perf_counter()
        results["cython"] = rk4_compiled(packed, psi0, 0.0, dt, args.steps)
        t_cy = time.perf_counter() - t0
        print(f"cython  backend: {t_cy:8.3f} s  ({args.steps / t_cy:9.1f} steps/s)")
        print(f"speedup: {t_py / t_cy:.1f}x")
        dev = float(np.max(np.abs(results["cython"] - results["python"])))
        print(f"max |amplitude difference|: {dev:.3e}")
    else:
        print("compiled backend not available (FIBERRING_PURE_PYTHON set or build skipped)")


if __name__ == "__main__":
    main()
