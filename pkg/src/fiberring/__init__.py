"""Simulator for a ring of fiber-linked atom-cavity nodes.

All frequencies are expressed in units of the atom-cavity coupling g
(g = 1 by convention); times are in units of 1/g.
"""

from .config import Drive, ModeSpectrum, NetworkConfig, load_config, mode_spectrum, save_config, validate_config
from .effective import (
    CouplingTable,
    RamanCoefficientTable,
    build_effective_ising,
    build_effective_pair,
    build_effective_parallel,
    build_effective_xy_chain,
    coupling_table,
    equalize_chain_rabi,
    raman_coefficients,
)
from .fullmodel import TimeDependentHamiltonian, build_H1, build_H2, build_nonlocal_transform, full_hamiltonian
from .dynamics import (
    IntegrationPlan,
    SimulationRecord,
    compare_full_effective,
    decoherence_estimate,
    evolve,
    excitation_probabilities,
)
from .operators import BasisLayout, QubitLayout, build_atomic, build_ladder, expectation
from .protocols import (
    protocol_cluster,
    protocol_entangle,
    protocol_parallel,
    protocol_transfer,
    protocol_xy_quench,
)

__all__ = [
    "BasisLayout",
    "CouplingTable",
    "Drive",
    "IntegrationPlan",
    "ModeSpectrum",
    "NetworkConfig",
    "QubitLayout",
    "RamanCoefficientTable",
    "SimulationRecord",
    "TimeDependentHamiltonian",
    "build_H1",
    "build_H2",
    "build_atomic",
    "build_effective_ising",
    "build_effective_pair",
    "build_effective_parallel",
    "build_effective_xy_chain",
    "build_ladder",
    "build_nonlocal_transform",
    "compare_full_effective",
    "coupling_table",
    "decoherence_estimate",
    "equalize_chain_rabi",
    "evolve",
    "excitation_probabilities",
    "expectation",
    "full_hamiltonian",
    "load_config",
    "mode_spectrum",
    "protocol_cluster",
    "protocol_entangle",
    "protocol_parallel",
    "protocol_transfer",
    "protocol_xy_quench",
    "raman_coefficients",
    "save_config",
    "validate_config",
]
