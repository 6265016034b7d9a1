import itertools
import math

import numpy as np
import pytest
import scipy.sparse as sp

from fiberring.operators import (
    BasisLayout,
    QubitLayout,
    build_atomic,
    build_ladder,
    cluster_state,
    concurrence_2q,
    embed_qubit_state,
    expectation,
    is_hermitian,
    pauli_x,
    pauli_z,
    plus_state,
    project_qubit_state,
    qubit_basis_state,
    reduced_density,
    stabilizer_expectations,
)


class TestLayout:
    def test_dimensions(self):
        layout = BasisLayout(3, 1)
        assert layout.dim == 3**3 * 2**6 == 1728
        layout2 = BasisLayout(3, 2)
        assert layout2.dim == 3**3 * 3**6 == 19683

    def test_index_round_trip_exhaustive(self):
        layout = BasisLayout(2, 1)
        seen = set()
        for idx in range(layout.dim):
            atoms, modes = layout.labels_of(idx)
            assert layout.index_of(atoms, modes) == idx
            seen.add((atoms, modes))
        assert len(seen) == layout.dim

    def test_qubit_layout_round_trip(self):
        layout = QubitLayout(3)
        labels = ["".join(bits) for bits in itertools.product("ge", repeat=3)]
        indices = sorted(layout.index_of(lab) for lab in labels)
        assert indices == list(range(8))

    def test_mode_ordering(self):
        layout = BasisLayout(3, 1)
        assert layout.cavity_mode(1) == 0
        assert layout.fiber_mode(1) == 1
        assert layout.cavity_mode(3) == 4
        assert layout.fiber_mode(3) == 5


def _dense_kron_oracle(layout, position, local):
    """Brute-force Kronecker construction with the first factor fastest."""
    dims = layout.factor_dims()
    out = np.array([[1.0]])
    for i, d in enumerate(dims):
        f = local if i == position else np.eye(d)
        out = np.kron(f, out)  # little-endian: later factors on the left
    return out


class TestBruteForceAgreement:
    """Every operator matches a dense Kronecker construction at n=2, cutoff 1."""

    def test_ladder_operators(self):
        layout = BasisLayout(2, 1)
        a_local = np.array([[0.0, 1.0], [0.0, 0.0]])
        for mode in range(4):
            got = build_ladder(layout, mode).toarray()
            want = _dense_kron_oracle(layout, 2 + mode, a_local)
            np.testing.assert_allclose(got, want, atol=0)

    def test_atomic_operators(self):
        layout = BasisLayout(2, 1)
        levels = {"g": 0, "e": 1, "r": 2}
        for atom in (1, 2):
            for frm, to in itertools.product("ger", repeat=2):
                local = np.zeros((3, 3))
                local[levels[to], levels[frm]] = 1.0
                got = build_atomic(layout, atom, frm, to).toarray()
                want = _dense_kron_oracle(layout, atom - 1, local)
                np.testing.assert_allclose(got, want, atol=0)


class TestLadder:
    def test_square_is_zero_at_cutoff_1(self):
        layout = BasisLayout(2, 1)
        a = build_ladder(layout, 0)
        assert (a.dot(a)).nnz == 0

    def test_commutator_on_vacuum(self):
        layout = BasisLayout(2, 1)
        a = build_ladder(layout, 1)
        comm = a.dot(a.getH()) - a.getH().dot(a)
        vac = qubit_basis_state(layout, "gg")
        assert expectation(vac, comm) == pytest.approx(1.0)

    def test_number_operator_spectrum_cutoff_2(self):
        layout = BasisLayout(2, 2)
        a = build_ladder(layout, 0)
        num = a.getH().dot(a)
        evals = np.unique(np.round(num.diagonal().real, 12))
        assert list(evals) == [0.0, 1.0, 2.0]

    def test_index_out_of_range(self):
        layout = BasisLayout(2, 1)
        with pytest.raises(IndexError):
            build_ladder(layout, 4)


class TestAtomic:
    def test_raising_lowering_product_is_projector(self):
        layout = BasisLayout(2, 1)
        sp_op = build_atomic(layout, 1, "g", "e")
        sm_op = build_atomic(layout, 1, "e", "g")
        pe = build_atomic(layout, 1, "e", "e")
        assert (sp_op.dot(sm_op) - pe).nnz == 0

    def test_sigma_z_definition(self):
        layout = QubitLayout(2)
        want = build_atomic(layout, 1, "e", "e") - build_atomic(layout, 1, "g", "g")
        assert (pauli_z(layout, 1) - want).nnz == 0

    def test_raising_squared_is_zero(self):
        layout = BasisLayout(2, 1)
        sp_op = build_atomic(layout, 1, "g", "e")
        assert (sp_op.dot(sp_op)).nnz == 0

    def test_bad_label(self):
        with pytest.raises(ValueError):
            build_atomic(BasisLayout(2, 1), 1, "q", "e")


class TestExpectation:
    def test_identity(self):
        layout = QubitLayout(2)
        psi = plus_state(layout)
        ident = sp.identity(layout.dim, format="csr")
        assert expectation(psi, ident) == pytest.approx(1.0)

    def test_number_on_vacuum(self):
        layout = BasisLayout(2, 1)
        a = build_ladder(layout, 0)
        vac = qubit_basis_state(layout, "gg")
        assert expectation(vac, a.getH().dot(a)) == 0

    def test_sigma_z_on_plus(self):
        layout = QubitLayout(2)
        psi = plus_state(layout)
        assert abs(expectation(psi, pauli_z(layout, 1))) < 1e-12

    def test_hermitian_gives_real(self, rng):
        layout = QubitLayout(3)
        psi = rng.normal(size=layout.dim) + 1j * rng.normal(size=layout.dim)
        psi /= np.linalg.norm(psi)
        op = pauli_x(layout, 2).dot(pauli_z(layout, 1))
        assert abs(expectation(psi, op).imag) < 1e-12

    def test_hermiticity_checker(self):
        layout = QubitLayout(2)
        assert is_hermitian(pauli_x(layout, 1))
        assert not is_hermitian(build_atomic(layout, 1, "g", "e"))


class TestProjection:
    def test_ground_vacuum_passes_through(self):
        layout = BasisLayout(2, 1)
        psi = qubit_basis_state(layout, "gg")
        reduced, leak = project_qubit_state(psi, layout)
        assert leak == pytest.approx(0.0, abs=1e-15)
        assert abs(reduced[QubitLayout(2).index_of("gg")]) == pytest.approx(1.0)

    def test_single_photon_is_pure_leak(self):
        layout = BasisLayout(2, 1)
        psi = qubit_basis_state(layout, "gg", (1, 0, 0, 0))
        reduced, leak = project_qubit_state(psi, layout)
        assert leak == pytest.approx(1.0)
        assert np.linalg.norm(reduced) == 0

    def test_weight_plus_leak_is_norm(self, rng):
        layout = BasisLayout(2, 1)
        psi = rng.normal(size=layout.dim) + 1j * rng.normal(size=layout.dim)
        psi /= np.linalg.norm(psi)
        reduced, leak = project_qubit_state(psi, layout)
        assert np.linalg.norm(reduced) ** 2 + leak == pytest.approx(1.0, abs=1e-12)

    def test_embed_then_project_is_identity(self, rng):
        layout = BasisLayout(3, 1)
        qlay = QubitLayout(3)
        q = rng.normal(size=qlay.dim) + 1j * rng.normal(size=qlay.dim)
        q /= np.linalg.norm(q)
        reduced, leak = project_qubit_state(embed_qubit_state(q, layout), layout)
        assert leak == pytest.approx(0.0, abs=1e-15)
        np.testing.assert_allclose(reduced, q, atol=1e-14)


class TestConcurrence:
    def test_bell_state(self):
        layout = QubitLayout(2)
        psi = np.zeros(4, dtype=complex)
        psi[layout.index_of("eg")] = 1 / math.sqrt(2)
        psi[layout.index_of("ge")] = -1j / math.sqrt(2)
        assert concurrence_2q(psi, layout, (1, 2)) == pytest.approx(1.0, abs=1e-12)

    def test_product_state(self):
        layout = QubitLayout(2)
        psi = qubit_basis_state(layout, "eg")
        assert concurrence_2q(psi, layout, (1, 2)) == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("theta", [0.1, 0.4, math.pi / 4, 1.2])
    def test_partial_entanglement_closed_form(self, theta):
        layout = QubitLayout(2)
        psi = np.zeros(4, dtype=complex)
        psi[layout.index_of("eg")] = math.cos(theta)
        psi[layout.index_of("ge")] = -1j * math.sin(theta)
        assert concurrence_2q(psi, layout, (1, 2)) == pytest.approx(
            abs(math.sin(2 * theta)), abs=1e-7
        )

    def test_local_unitary_invariance(self, rng):
        layout = QubitLayout(3)
        psi = rng.normal(size=8) + 1j * rng.normal(size=8)
        psi /= np.linalg.norm(psi)
        base = concurrence_2q(psi, layout, (1, 3))
        for _ in range(5):
            # random unitary on each of the two designated qubits
            rot = np.eye(1)
            for atom in (1, 2, 3):  # little-endian: atom 1 fastest
                if atom in (1, 3):
                    h = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
                    u = _expm2(h + h.conj().T)
                else:
                    u = np.eye(2)
                rot = np.kron(u, rot)
            rotated = rot @ psi
            assert concurrence_2q(rotated, layout, (1, 3)) == pytest.approx(base, abs=1e-8)

    def test_traced_partner_mixes(self):
        # GHZ state: each two-qubit reduction is separable
        layout = QubitLayout(3)
        psi = np.zeros(8, dtype=complex)
        psi[layout.index_of("ggg")] = 1 / math.sqrt(2)
        psi[layout.index_of("eee")] = 1 / math.sqrt(2)
        assert concurrence_2q(psi, layout, (1, 2)) == pytest.approx(0.0, abs=1e-10)


def _expm2(h):
    evals, vecs = np.linalg.eigh(h)
    return (vecs * np.exp(1j * evals)) @ vecs.conj().T


class TestStabilizers:
    @pytest.mark.parametrize("n", [3, 4, 5, 6])
    def test_cluster_state_is_stabilized(self, n):
        psi = cluster_state(n)
        stabs = stabilizer_expectations(psi, QubitLayout(n))
        np.testing.assert_allclose(stabs, 1.0, atol=1e-12)

    def test_all_ground_gives_zero(self):
        layout = QubitLayout(3)
        psi = qubit_basis_state(layout, "ggg")
        np.testing.assert_allclose(stabilizer_expectations(psi, layout), 0.0, atol=1e-15)

    def test_plus_product_gives_zero(self):
        layout = QubitLayout(3)
        np.testing.assert_allclose(
            stabilizer_expectations(plus_state(layout), layout), 0.0, atol=1e-12
        )

    def test_cluster_state_normalized(self):
        assert np.linalg.norm(cluster_state(4)) == pytest.approx(1.0, abs=1e-14)


class TestReducedDensity:
    def test_pure_subsystem(self):
        layout = QubitLayout(3)
        psi = qubit_basis_state(layout, "egg")
        rho = reduced_density(psi, layout, (1,))
        np.testing.assert_allclose(rho, [[0, 0], [0, 1]], atol=1e-14)

    def test_trace_one(self, rng):
        layout = QubitLayout(3)
        psi = rng.normal(size=8) + 1j * rng.normal(size=8)
        psi /= np.linalg.norm(psi)
        rho = reduced_density(psi, layout, (2, 3))
        assert np.trace(rho).real == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(rho, rho.conj().T, atol=1e-14)
