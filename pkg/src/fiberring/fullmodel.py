"""Exact pre-elimination Hamiltonians of the cavity-fiber ring.

H1 is the static photon-hopping Hamiltonian; H2(t) carries the drive and
cavity couplings with their explicit interaction-picture phases. The
simulation frame is exactly H(t) = H1 + H2(t); no further rotating frame
is applied (it acts trivially on the vacuum field states used for
full-vs-effective comparisons).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .config import BRANCH_GR, NetworkConfig
from .operators import BasisLayout, build_atomic, build_ladder

__all__ = [
    "NonlocalTransform",
    "TimeDependentHamiltonian",
    "build_H1",
    "build_H2",
    "build_nonlocal_transform",
    "full_hamiltonian",
    "hopping_matrix",
]


@dataclass(frozen=True)
class TimeDependentHamiltonian:
    """H(t) = static + sum_j (T_j e^{i w_j t} + T_j^dag e^{-i w_j t})."""

    static: sp.csr_matrix
    terms: tuple[tuple[sp.csr_matrix, float], ...]

    @property
    def dim(self) -> int:
        return self.static.shape[0]

    @property
    def max_frequency(self) -> float:
        return max((abs(w) for _, w in self.terms), default=0.0)

    def norm_bound(self) -> float:
        """Uniform-in-t upper bound on ||H(t)||_2 via row/column sums."""

        def bound(op):
            op = op.tocsr()
            if op.nnz == 0:
                return 0.0
            a = np.abs(op).sum(axis=1).max()
            b = np.abs(op).sum(axis=0).max()
            return float(math.sqrt(a * b))

        return bound(self.static) + 2.0 * sum(bound(t) for t, _ in self.terms)

    def at(self, t: float) -> sp.csr_matrix:
        """Explicit sparse matrix H(t)."""
        h = self.static.copy().astype(complex)
        for op, w in self.terms:
            phase = np.exp(1j * w * t)
            h = h + phase * op + np.conj(phase) * op.getH()
        return h.tocsr()

    def as_rotating_terms(self) -> tuple[list[sp.csr_matrix], np.ndarray]:
        """Flatten into one list of (matrix, frequency) pairs for the integrator.

        The static part appears at frequency 0 and each oscillating term
        appears twice, as (T, +w) and (T^dag, -w).
        """
        mats = []
        freqs = []
        if self.static.nnz:
            mats.append(self.static.astype(complex).tocsr())
            freqs.append(0.0)
        for op, w in self.terms:
            mats.append(op.astype(complex).tocsr())
            freqs.append(float(w))
            mats.append(op.getH().tocsr())
            freqs.append(-float(w))
        return mats, np.array(freqs)

    @classmethod
    def static_only(cls, op: sp.spmatrix) -> "TimeDependentHamiltonian":
        return cls(static=sp.csr_matrix(op), terms=())


def build_H1(config: NetworkConfig, layout: BasisLayout) -> sp.csr_matrix:
    """Photon hopping sum_l nu * b_l (a_l^dag + a_{l+1}^dag) + h.c., ring-closed."""
    n = config.n
    h = sp.csr_matrix((layout.dim, layout.dim), dtype=complex)
    if config.nu == 0:
        return h
    for l in range(1, n + 1):
        b = build_ladder(layout, layout.fiber_mode(l))
        a_here = build_ladder(layout, layout.cavity_mode(l))
        a_next = build_ladder(layout, layout.cavity_mode(l % n + 1))
        term = config.nu * ((a_here.getH() + a_next.getH()).dot(b))
        h = h + term + term.getH()
    return h.tocsr()


def build_H2(config: NetworkConfig, layout: BasisLayout) -> TimeDependentHamiltonian:
    """Drive and cavity couplings with interaction-picture phases.

    Classical drives contribute Omega |r><x| at frequency Delta_1 (x = e
    or g depending on the driven branch); each cavity contributes
    g a_l |r_l><g_l| at frequency Delta_2.
    """
    terms = []
    for drv in config.active_drives():
        lower = "g" if drv.branch == BRANCH_GR else "e"
        op = drv.rabi * build_atomic(layout, drv.atom, lower, "r")
        terms.append((op.tocsr(), float(drv.detuning)))
    if config.g > 0:
        for l in range(1, config.n + 1):
            op = config.g * build_ladder(layout, layout.cavity_mode(l)).dot(
                build_atomic(layout, l, "g", "r")
            )
            terms.append((op.tocsr(), float(config.delta2)))
    zero = sp.csr_matrix((layout.dim, layout.dim), dtype=complex)
    return TimeDependentHamiltonian(static=zero, terms=tuple(terms))


def full_hamiltonian(config: NetworkConfig, layout: BasisLayout | None = None) -> TimeDependentHamiltonian:
    """H(t) = H1 + H2(t) on the truncated composite space."""
    if layout is None:
        layout = BasisLayout(config.n, config.photon_cutoff)
    h2 = build_H2(config, layout)
    return TimeDependentHamiltonian(static=build_H1(config, layout), terms=h2.terms)


def hopping_matrix(config: NetworkConfig) -> np.ndarray:
    """Single-particle hopping matrix of H1 on (a1, b1, ..., an, bn)."""
    n = config.n
    m = np.zeros((2 * n, 2 * n), dtype=complex)
    for l in range(n):
        a_here = 2 * l
        b_here = 2 * l + 1
        a_next = 2 * ((l + 1) % n)
        m[a_here, b_here] = config.nu
        m[a_next, b_here] = config.nu
    return m + m.conj().T


@dataclass(frozen=True)
class NonlocalTransform:
    """Unitary mapping local modes (a1, b1, ...) to the ring's normal modes c_k."""

    matrix: np.ndarray

    @property
    def n(self) -> int:
        return self.matrix.shape[0] // 2

    def diagonalize(self, hopping: np.ndarray) -> np.ndarray:
        """U M U^dag; diagonal with entries 2 nu cos(pi k / n) when M is the ring hopping."""
        return self.matrix @ hopping @ self.matrix.conj().T


def build_nonlocal_transform(n: int) -> NonlocalTransform:
    """Plane-wave rows c_k = (1/sqrt(2n)) sum_m [e^{-i(2m-1)k pi/n} a_m + e^{-i 2mk pi/n} b_m]."""
    if n < 2:
        raise ValueError("need n >= 2")
    u = np.zeros((2 * n, 2 * n), dtype=complex)
    norm = 1.0 / math.sqrt(2 * n)
    for k in range(1, 2 * n + 1):
        for m in range(1, n + 1):
            u[k - 1, 2 * (m - 1)] = norm * np.exp(-1j * (2 * m - 1) * k * math.pi / n)
            u[k - 1, 2 * (m - 1) + 1] = norm * np.exp(-1j * 2 * m * k * math.pi / n)
    return NonlocalTransform(matrix=u)
