"""Composite Hilbert space, operator assembly, and measurement functionals.

Basis convention (fixed so numeric test vectors are portable): atom
factors vary fastest, atom 1 fastest of all; then the 2n photon modes in
ring order a1, b1, a2, b2, ..., an, bn. Atomic levels are g=0, e=1, r=2
on the full three-level layout and g=0, e=1 on the qubit layout.

Operators are plain scipy CSR matrices; states are plain complex numpy
vectors. Both are treated as immutable values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np
import scipy.sparse as sp

__all__ = [
    "ATOM_LEVELS",
    "BasisLayout",
    "QubitLayout",
    "build_atomic",
    "build_ladder",
    "cluster_state",
    "concurrence_2q",
    "embed_qubit_state",
    "expectation",
    "is_hermitian",
    "pauli_x",
    "pauli_z",
    "project_qubit_state",
    "qubit_basis_state",
    "plus_state",
    "reduced_density",
    "stabilizer_expectations",
]

ATOM_LEVELS = {"g": 0, "e": 1, "r": 2}
QUBIT_LEVELS = {"g": 0, "e": 1}


@dataclass(frozen=True)
class BasisLayout:
    """n three-level atoms tensored with 2n truncated bosonic modes."""

    n_atoms: int
    photon_cutoff: int = 1

    @property
    def n_modes(self) -> int:
        return 2 * self.n_atoms

    @property
    def mode_dim(self) -> int:
        return self.photon_cutoff + 1

    @property
    def dim(self) -> int:
        return 3**self.n_atoms * self.mode_dim ** self.n_modes

    def factor_dims(self) -> tuple[int, ...]:
        """Dimensions of all tensor factors, fastest-varying first."""
        return (3,) * self.n_atoms + (self.mode_dim,) * self.n_modes

    def cavity_mode(self, node: int) -> int:
        """Flat mode index of cavity mode a_node (node is 1-based)."""
        self._check_node(node)
        return 2 * (node - 1)

    def fiber_mode(self, node: int) -> int:
        """Flat mode index of fiber mode b_node (node is 1-based)."""
        self._check_node(node)
        return 2 * (node - 1) + 1

    def _check_node(self, node: int) -> None:
        if not 1 <= node <= self.n_atoms:
            raise IndexError(f"node {node} outside 1..{self.n_atoms}")

    def index_of(self, atom_levels: str, mode_occupations=None) -> int:
        """Flat basis index for atom labels like "egg" plus mode occupations."""
        if len(atom_levels) != self.n_atoms:
            raise ValueError(f"need {self.n_atoms} atomic labels, got {atom_levels!r}")
        idx = 0
        for l, label in enumerate(atom_levels):
            idx += ATOM_LEVELS[label] * 3**l
        if mode_occupations is not None:
            if len(mode_occupations) != self.n_modes:
                raise ValueError(f"need {self.n_modes} mode occupations")
            stride = 3**self.n_atoms
            for j, occ in enumerate(mode_occupations):
                if not 0 <= occ <= self.photon_cutoff:
                    raise ValueError(f"occupation {occ} exceeds cutoff")
                idx += occ * stride
                stride *= self.mode_dim
        return idx

    def labels_of(self, index: int) -> tuple[str, tuple[int, ...]]:
        """Inverse of index_of."""
        if not 0 <= index < self.dim:
            raise IndexError(index)
        labels = []
        rev = {v: k for k, v in ATOM_LEVELS.items()}
        for _ in range(self.n_atoms):
            labels.append(rev[index % 3])
            index //= 3
        occs = []
        for _ in range(self.n_modes):
            occs.append(index % self.mode_dim)
            index //= self.mode_dim
        return "".join(labels), tuple(occs)


@dataclass(frozen=True)
class QubitLayout:
    """n two-level atoms (g/e only, no photon modes): the effective model's space."""

    n_atoms: int

    @property
    def dim(self) -> int:
        return 2**self.n_atoms

    def factor_dims(self) -> tuple[int, ...]:
        return (2,) * self.n_atoms

    def index_of(self, atom_levels: str) -> int:
        if len(atom_levels) != self.n_atoms:
            raise ValueError(f"need {self.n_atoms} atomic labels, got {atom_levels!r}")
        idx = 0
        for l, label in enumerate(atom_levels):
            idx += QUBIT_LEVELS[label] * 2**l
        return idx


def _embed(layout, position: int, mat: sp.spmatrix) -> sp.csr_matrix:
    """Lift a single-factor matrix to the full space (factor 0 is fastest)."""
    dims = layout.factor_dims()
    right = int(np.prod(dims[:position], dtype=np.int64)) if position else 1
    left = int(np.prod(dims[position + 1 :], dtype=np.int64)) if position + 1 < len(dims) else 1
    op = sp.kron(mat, sp.identity(right, format="csr"), format="csr") if right > 1 else sp.csr_matrix(mat)
    if left > 1:
        op = sp.kron(sp.identity(left, format="csr"), op, format="csr")
    return op.tocsr()


def build_ladder(layout: BasisLayout, mode_index: int) -> sp.csr_matrix:
    """Truncated annihilation operator for the given flat mode index."""
    if not 0 <= mode_index < layout.n_modes:
        raise IndexError(f"mode index {mode_index} outside 0..{layout.n_modes - 1}")
    d = layout.mode_dim
    a = sp.diags(np.sqrt(np.arange(1, d)), offsets=1, format="csr")
    return _embed(layout, layout.n_atoms + mode_index, a)


def build_atomic(layout, atom: int, from_label: str, to_label: str) -> sp.csr_matrix:
    """|to><from| on the given atom (1-based), identity elsewhere."""
    levels = ATOM_LEVELS if isinstance(layout, BasisLayout) else QUBIT_LEVELS
    if from_label not in levels or to_label not in levels:
        raise ValueError(f"labels must be in {sorted(levels)}")
    if not 1 <= atom <= layout.n_atoms:
        raise IndexError(f"atom {atom} outside 1..{layout.n_atoms}")
    d = len(levels)
    mat = sp.csr_matrix(
        (np.array([1.0 + 0j]), (np.array([levels[to_label]]), np.array([levels[from_label]]))),
        shape=(d, d),
    )
    return _embed(layout, atom - 1, mat)


def pauli_x(layout, atom: int) -> sp.csr_matrix:
    return (build_atomic(layout, atom, "g", "e") + build_atomic(layout, atom, "e", "g")).tocsr()


def pauli_z(layout, atom: int) -> sp.csr_matrix:
    """sigma_z = |e><e| - |g><g| (the convention used throughout)."""
    return (build_atomic(layout, atom, "e", "e") - build_atomic(layout, atom, "g", "g")).tocsr()


def is_hermitian(op: sp.spmatrix, tol: float = 0.0) -> bool:
    diff = (op - op.getH()).tocoo()
    if diff.nnz == 0:
        return True
    return float(np.max(np.abs(diff.data))) <= tol


def expectation(state: np.ndarray, op: sp.spmatrix) -> complex:
    """<psi|O|psi>."""
    if op.shape[1] != state.shape[0]:
        raise ValueError(f"dimension mismatch: operator {op.shape}, state {state.shape}")
    return complex(np.vdot(state, op.dot(state)))


# --- states ---


def qubit_basis_state(layout, atom_levels: str, mode_occupations=None) -> np.ndarray:
    """Product basis state; modes default to vacuum on a full layout."""
    psi = np.zeros(layout.dim, dtype=complex)
    if isinstance(layout, BasisLayout):
        occ = mode_occupations if mode_occupations is not None else (0,) * layout.n_modes
        psi[layout.index_of(atom_levels, occ)] = 1.0
    else:
        psi[layout.index_of(atom_levels)] = 1.0
    return psi


def plus_state(layout: QubitLayout) -> np.ndarray:
    """All atoms in (|g> + |e>)/sqrt(2)."""
    psi = np.full(layout.dim, 2.0 ** (-layout.n_atoms / 2), dtype=complex)
    return psi


def embed_qubit_state(qubit_state: np.ndarray, layout: BasisLayout) -> np.ndarray:
    """Lift a 2^n qubit-register state into the full space with all modes in vacuum."""
    n = layout.n_atoms
    if qubit_state.shape[0] != 2**n:
        raise ValueError("qubit state dimension mismatch")
    psi = np.zeros(layout.dim, dtype=complex)
    psi[_qubit_sector_indices(layout)] = qubit_state
    return psi


def _qubit_sector_indices(layout: BasisLayout) -> np.ndarray:
    """Full-space indices of the (all modes vacuum, atoms in {g,e}) sector, qubit order."""
    n = layout.n_atoms
    idx = np.zeros(2**n, dtype=np.int64)
    for bits in range(2**n):
        i = 0
        for l in range(n):
            i += ((bits >> l) & 1) * 3**l
        idx[bits] = i
    return idx


def project_qubit_state(state: np.ndarray, layout: BasisLayout) -> tuple[np.ndarray, float]:
    """Project onto the vacuum-field {g,e}^n sector.

    Returns the unnormalized 2^n amplitude vector on that sector and the
    leaked weight outside it, with weight + leak = ||state||^2.
    """
    reduced = state[_qubit_sector_indices(layout)].copy()
    total = float(np.vdot(state, state).real)
    leak = total - float(np.vdot(reduced, reduced).real)
    return reduced, max(leak, 0.0)


def reduced_density(qubit_state: np.ndarray, layout: QubitLayout, keep: tuple[int, ...]) -> np.ndarray:
    """Reduced density matrix over the kept atoms (1-based), traced elsewhere.

    Row/column ordering of the result follows the order given in `keep`
    with the first kept atom varying fastest.
    """
    n = layout.n_atoms
    psi = qubit_state.reshape((2,) * n, order="F")  # axis l = atom l+1
    keep_axes = [q - 1 for q in keep]
    other = [ax for ax in range(n) if ax not in keep_axes]
    perm = keep_axes + other
    m = psi.transpose(perm).reshape(2 ** len(keep), -1, order="F")
    return m @ m.conj().T


def concurrence_2q(qubit_state: np.ndarray, layout: QubitLayout, pair: tuple[int, int]) -> float:
    """Wootters concurrence of the two designated atoms' reduced state."""
    rho = reduced_density(qubit_state, layout, pair)
    sy = np.array([[0, -1j], [1j, 0]])
    yy = np.kron(sy, sy)
    r = rho @ yy @ rho.conj() @ yy
    evals = np.linalg.eigvals(r)
    lam = np.sqrt(np.sort(np.maximum(evals.real, 0.0))[::-1])
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def stabilizer_expectations(qubit_state: np.ndarray, layout: QubitLayout, neighbors=None) -> np.ndarray:
    """<K_l> for K_l = sigma_x,l * prod_{m in nbr(l)} sigma_z,m.

    Default neighbor graph is the ring (l-1, l+1).
    """
    n = layout.n_atoms
    if neighbors is None:
        neighbors = {l: ((l - 2) % n + 1, l % n + 1) for l in range(1, n + 1)}
    out = np.zeros(n)
    for l in range(1, n + 1):
        op = pauli_x(layout, l)
        for m in neighbors[l]:
            op = op.dot(pauli_z(layout, m))
        out[l - 1] = expectation(qubit_state, op).real
    return out


def cluster_state(n: int) -> np.ndarray:
    """The ring cluster state built literally from its product formula.

    Amplitude of the basis string s is 2^(-n/2) * prod over sites l with
    s_l = g of the sigma_z eigenvalue of s_{l+1} (ring-closed), where
    sigma_z|g> = -|g> and sigma_z|e> = +|e>.
    """
    layout = QubitLayout(n)
    psi = np.zeros(layout.dim, dtype=complex)
    for bits in range(layout.dim):
        amp = 1.0
        for l in range(n):
            if (bits >> l) & 1 == 0:  # s_l = g
                nxt = (bits >> ((l + 1) % n)) & 1
                amp *= 1.0 if nxt else -1.0
        psi[bits] = amp
    return psi / math.sqrt(layout.dim)
