import dataclasses
import math

import numpy as np
import pytest

import fiberring.effective
from fiberring.config import Drive, NetworkConfig
from fiberring.effective import (
    chain_link_couplings,
    coupling_table,
    equalize_chain_rabi,
    make_chain_config,
)
from fiberring.protocols import (
    protocol_cluster,
    protocol_entangle,
    protocol_parallel,
    protocol_transfer,
    protocol_xy_quench,
)

pytestmark = pytest.mark.filterwarnings("ignore::fiberring.effective.HierarchyWarning")


def circulant_populations(n, chi, epsilon, times, start=1):
    """Closed-form site populations of a single excitation on a uniform ring.

    The one-excitation block is circulant with eigenvalues
    eps + 2 Re(chi e^{i 2 pi j / n}); amplitudes follow by discrete Fourier
    transform.
    """
    j = np.arange(n)
    evals = epsilon + 2 * np.real(chi * np.exp(1j * 2 * math.pi * j / n))
    pops = np.zeros((len(times), n))
    for ti, t in enumerate(times):
        for l in range(n):
            amp = np.mean(np.exp(1j * 2 * math.pi * j * (l - (start - 1)) / n) * np.exp(-1j * evals * t))
            pops[ti, l] = abs(amp) ** 2
    return pops


class TestEntangle:
    def test_reference_gate(self, ring3):
        rep = protocol_entangle(ring3, 1, 3, model="effective")
        assert rep.concurrence["effective"] == pytest.approx(1.0, abs=1e-6)
        assert rep.gate_time == pytest.approx(9.53e2, rel=0.01)
        assert rep.bell_fidelity["effective"] == pytest.approx(1.0, abs=1e-6)

    def test_sign_flip_leaves_concurrence(self, ring3, monkeypatch):
        base = protocol_entangle(ring3, 1, 3).concurrence["effective"]
        monkeypatch.setattr(fiberring.effective, "EXCHANGE_SIGN", -1.0)
        flipped = protocol_entangle(ring3, 1, 3).concurrence["effective"]
        assert flipped == pytest.approx(base, abs=1e-8)

    def test_double_gate_equals_transfer(self, ring3):
        rep2 = protocol_entangle(ring3, 1, 3, t_end=math.pi / (2 * abs(protocol_entangle(ring3, 1, 3).chi)))
        swapped = rep2.final_states["effective"]
        rep_t = protocol_transfer(ring3, 1, 3, (0.0, 1.0))
        moved = rep_t.records["effective"]
        # population fully moved to atom 3 in both runs
        from fiberring.operators import QubitLayout, build_atomic
        from fiberring.dynamics import expect

        layout = QubitLayout(3)
        p3 = build_atomic(layout, 3, "e", "e")
        assert expect(swapped, p3).real == pytest.approx(1.0, abs=1e-6)
        assert rep_t.fidelity["effective"] == pytest.approx(1.0, abs=1e-6)

    def test_translation_covariance(self, ring3):
        shifted = ring3.with_drives(
            dataclasses.replace(d, atom=d.atom % ring3.n + 1) for d in ring3.drives
        )
        a = protocol_entangle(ring3, 1, 3)
        b = protocol_entangle(shifted, 2, 1)
        assert b.concurrence["effective"] == pytest.approx(a.concurrence["effective"], abs=1e-8)
        assert b.gate_time == pytest.approx(a.gate_time, rel=1e-12)

    def test_full_model_size_guard(self):
        cfg = NetworkConfig(
            n=5, nu=1.0, delta2=18.5,
            drives=(
                Drive(atom=1, rabi=1.0, detuning=16.0),
                Drive(atom=3, rabi=1.0, detuning=16.0),
            ),
        )
        with pytest.raises(ValueError, match="allow_large"):
            protocol_entangle(cfg, 1, 3, model="full")

    def test_unknown_model_rejected(self, ring3):
        with pytest.raises(ValueError):
            protocol_entangle(ring3, 1, 3, model="approximate")


class TestTransfer:
    def test_excitation_transfer(self, ring3):
        rep = protocol_transfer(ring3, 1, 3, (0.0, 1.0))
        assert rep.fidelity["effective"] == pytest.approx(1.0, abs=1e-6)
        assert rep.gate_time == pytest.approx(2 * protocol_entangle(ring3, 1, 3).gate_time, rel=1e-12)

    def test_ground_input_is_inert(self, ring3):
        rep = protocol_transfer(ring3, 1, 3, (1.0, 0.0))
        assert rep.fidelity["effective"] == pytest.approx(1.0, abs=1e-9)
        assert rep.fidelity_raw["effective"] == pytest.approx(1.0, abs=1e-9)

    def test_superposition_transfer(self, ring3):
        rep = protocol_transfer(ring3, 1, 3, (1 / math.sqrt(2), 1 / math.sqrt(2)))
        assert rep.fidelity["effective"] == pytest.approx(1.0, abs=1e-6)

    def test_zero_input_rejected(self, ring3):
        with pytest.raises(ValueError):
            protocol_transfer(ring3, 1, 3, (0.0, 0.0))


class TestParallel:
    @pytest.fixture
    def four_ring(self):
        # detuning gap 11.0-16.0 = 5.0 >> 50*chi
        return NetworkConfig(
            n=4, nu=1.0, delta2=18.5,
            drives=(
                Drive(atom=1, rabi=1.0, detuning=16.0),
                Drive(atom=2, rabi=1.0, detuning=16.0),
                Drive(atom=3, rabi=1.0, detuning=11.0),
                Drive(atom=4, rabi=1.0, detuning=11.0),
            ),
        )

    def test_low_crosstalk(self, four_ring):
        table = coupling_table(four_ring)
        gap = abs(16.0 - 11.0)
        assert gap >= 50 * abs(table.chi[0, 1])
        rep = protocol_parallel(four_ring, [(1, 2), (3, 4)])
        assert rep.crosstalk < 1e-3
        for f in rep.pair_fidelity.values():
            assert f >= 1 - 1e-3

    def test_single_pair_matches_entangle(self, ring3):
        rep = protocol_parallel(ring3, [(1, 3)])
        assert rep.pair_fidelity[(1, 3)] == pytest.approx(1.0, abs=1e-8)
        assert rep.gate_time == pytest.approx(protocol_entangle(ring3, 1, 3).gate_time)


class TestCluster:
    @pytest.mark.parametrize("n", [3, 4])
    def test_direct_mode(self, n):
        rep = protocol_cluster(n=n, chi=1.0, epsilon=0.37)
        np.testing.assert_allclose(rep.stabilizers, 1.0, atol=1e-8)
        assert rep.fidelity == pytest.approx(1.0, abs=1e-8)

    def test_zero_time_stays_product(self):
        rep = protocol_cluster(n=3, chi=1.0, epsilon=0.37, t_end=0.0)
        np.testing.assert_allclose(rep.stabilizers, 0.0, atol=1e-10)

    def test_rotation_is_load_bearing(self):
        rep = protocol_cluster(n=3, chi=1.0, epsilon=0.37, apply_rotation=False)
        assert np.max(np.abs(rep.stabilizers - 1.0)) > 0.1

    def test_from_chain_config(self):
        cfg = make_chain_config(3, 1.0, 18.5, 0.4, [12.0] * 3, branch="g-r")
        cfg = equalize_chain_rabi(cfg, float(chain_link_couplings(cfg)[0])).config
        rep = protocol_cluster(config=cfg)
        # long gate (t = pi/|chi| with |chi| ~ 1e-3) accumulates RK4 error
        np.testing.assert_allclose(rep.stabilizers, 1.0, atol=1e-4)
        assert rep.fidelity == pytest.approx(1.0, abs=1e-4)

    def test_unequalized_chain_rejected(self):
        cfg = make_chain_config(3, 1.0, 18.5, 0.4, [12.0] * 3, branch="g-r")
        bumped = cfg.with_drives(
            dataclasses.replace(d, rabi=1.3 * d.rabi) if d.atom == 2 else d
            for d in cfg.drives
        )
        with pytest.raises(Exception, match="equalize"):
            protocol_cluster(config=bumped)

    def test_requires_parameters(self):
        with pytest.raises(ValueError):
            protocol_cluster(n=3, chi=1.0)


class TestXYQuench:
    def test_direct_uniform_matches_circulant(self):
        n, chi, eps = 3, 0.8, 0.25
        rep = protocol_xy_quench(None, "egg", t_end=4.0, n=n, chi=chi, epsilon=eps, record_every=50)
        want = circulant_populations(n, chi, eps, rep.times, start=1)
        np.testing.assert_allclose(rep.populations, want, atol=1e-6)

    def test_config_chain_matches_circulant(self):
        cfg = make_chain_config(3, 1.0, 18.5, 0.4, [12.0] * 3, branch="e-r")
        table = coupling_table(cfg)
        chi_link = complex(table.chi_dd[0, 1, 1, 0])
        eps = float(table.epsilon[0])
        t_end = 0.5 * math.pi / abs(chi_link)
        rep = protocol_xy_quench(cfg, "egg", t_end=t_end, record_every=100)
        want = circulant_populations(3, chi_link, eps, rep.times, start=1)
        np.testing.assert_allclose(rep.populations, want, atol=1e-6)

    def test_zero_excitation_constant(self):
        rep = protocol_xy_quench(None, "ggg", t_end=3.0, n=3, chi=0.8, record_every=30)
        np.testing.assert_allclose(rep.populations, 0.0, atol=1e-12)

    def test_total_excitation_conserved(self):
        rep = protocol_xy_quench(None, "egge", t_end=5.0, n=4, chi=0.6, epsilon=0.1, record_every=40)
        np.testing.assert_allclose(rep.total_excitation, 2.0, atol=1e-8)

    def test_translation_covariance(self):
        a = protocol_xy_quench(None, "egg", t_end=3.0, n=3, chi=0.7, record_every=60)
        b = protocol_xy_quench(None, "geg", t_end=3.0, n=3, chi=0.7, record_every=60)
        np.testing.assert_allclose(b.populations, np.roll(a.populations, 1, axis=1), atol=1e-8)
