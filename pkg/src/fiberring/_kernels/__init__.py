"""Integration kernels: compiled RK4 core with a pure-python fallback.

The compiled extension is selected automatically at import; set
FIBERRING_PURE_PYTHON=1 to force the numpy/scipy fallback (used by the
kernel benchmark and as a safety net where the extension is unavailable).
"""

import os

import numpy as np
import scipy.sparse as sp

__all__ = ["BACKEND", "PackedHamiltonian", "pack_hamiltonian", "rk4_propagate"]


class PackedHamiltonian:
    """Flat CSR arrays for all rotating terms of one Hamiltonian.

    Matrix j contributes exp(i * freqs[j] * t) * mats[j] to H(t); the
    list already contains the hermitian-conjugate partners explicitly.
    """

    def __init__(self, mats, freqs):
        if not mats:
            raise ValueError("need at least one term")
        self.mats = [m.tocsr() for m in mats]
        self.freqs = np.asarray(freqs, dtype=np.float64)
        self.dim = self.mats[0].shape[0]
        indptr = []
        data = []
        indices = []
        offset = 0
        for m in self.mats:
            data.append(m.data.astype(np.complex128))
            indices.append(m.indices.astype(np.int64))
            indptr.append(m.indptr.astype(np.int64) + offset)
            offset += m.nnz
        self.data = np.concatenate(data)
        self.indices = np.concatenate(indices)
        self.indptr = np.ascontiguousarray(np.vstack(indptr))


def pack_hamiltonian(hamiltonian) -> PackedHamiltonian:
    mats, freqs = hamiltonian.as_rotating_terms()
    if not mats:
        dim = hamiltonian.dim
        mats = [sp.csr_matrix((dim, dim), dtype=complex)]
        freqs = np.zeros(1)
    return PackedHamiltonian(mats, freqs)


from ._rk4_np import rk4_propagate as _rk4_python

if os.environ.get("FIBERRING_PURE_PYTHON"):
    rk4_propagate = _rk4_python
    BACKEND = "python"
else:
    try:
        from ._rk4_cy import rk4_propagate as _rk4_compiled

        def rk4_propagate(packed, psi, t0, dt, nsteps):
            return _rk4_compiled(
                packed.data,
                packed.indices,
                packed.indptr,
                packed.freqs,
                psi,
                float(t0),
                float(dt),
                int(nsteps),
            )

        BACKEND = "cython"
    except ImportError:
        rk4_propagate = _rk4_python
        BACKEND = "python"
