"""Deterministic fixed-step Schrodinger integration and model comparison.

The integrator is classic RK4 with a step cap tied to the fastest
oscillation present in H(t); adaptive stepping is deliberately avoided so
runs are bit-reproducible across platforms. The compiled kernel is used
when available (see fiberring._kernels.BACKEND).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import BACKEND, pack_hamiltonian, rk4_propagate
from .config import NetworkConfig
from .effective import build_effective_hamiltonian, raman_coefficients
from .fullmodel import TimeDependentHamiltonian, full_hamiltonian
from .operators import BasisLayout, embed_qubit_state, project_qubit_state

__all__ = [
    "ComparisonRecord",
    "IntegrationError",
    "IntegrationPlan",
    "SimulationRecord",
    "compare_full_effective",
    "decoherence_estimate",
    "evolve",
    "excitation_probabilities",
    "phase_optimized_fidelity",
]

#: dt must not exceed this fraction of the fastest oscillation period scale.
DT_SAFETY = 0.05
NORM_DRIFT_LIMIT = 1e-8


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class IntegrationPlan:
    """Fixed-step RK4 plan; dt is validated against the Hamiltonian's time scales."""

    t_end: float
    dt: float
    record_every: int = 0  # 0: record only the endpoints
    renormalize: bool = False

    def __post_init__(self):
        if self.t_end < 0:
            raise ValueError("t_end must be >= 0")
        if self.dt <= 0:
            raise ValueError("dt must be > 0")

    @staticmethod
    def max_stable_dt(hamiltonian: TimeDependentHamiltonian) -> float:
        scale = max(hamiltonian.max_frequency, hamiltonian.norm_bound())
        return DT_SAFETY / scale if scale > 0 else math.inf

    @classmethod
    def for_hamiltonian(
        cls,
        hamiltonian: TimeDependentHamiltonian,
        t_end: float,
        dt: float | None = None,
        record_every: int = 0,
        renormalize: bool = False,
    ) -> "IntegrationPlan":
        """Build a plan whose dt respects the oscillation-frequency cap."""
        cap = cls.max_stable_dt(hamiltonian)
        if dt is None:
            dt = cap if math.isfinite(cap) else max(t_end, 1.0)
            if t_end > 0:
                dt = min(dt, t_end)
        elif dt > cap:
            raise ValueError(
                f"dt = {dt:g} exceeds the stability cap {cap:g} "
                f"({DT_SAFETY:g} / fastest frequency present in H(t))"
            )
        return cls(t_end=t_end, dt=dt, record_every=record_every, renormalize=renormalize)


@dataclass
class SimulationRecord:
    """Sampled time series of one integration run."""

    times: np.ndarray
    norms: np.ndarray
    observables: dict[str, np.ndarray] = field(default_factory=dict)
    leaks: np.ndarray | None = None
    energies: np.ndarray | None = None
    dt: float = 0.0
    backend: str = BACKEND
    valid: bool = True

    @property
    def norm_drift(self) -> float:
        return float(np.max(np.abs(self.norms - 1.0))) if len(self.norms) else 0.0


def _steps_for(t_end: float, dt: float) -> tuple[int, float]:
    """Number of steps and the exact step hitting t_end (dt only shrinks)."""
    if t_end == 0:
        return 0, dt
    nsteps = max(1, math.ceil(t_end / dt - 1e-12))
    return nsteps, t_end / nsteps


def evolve(
    state: np.ndarray,
    hamiltonian: TimeDependentHamiltonian,
    plan: IntegrationPlan,
    observables: dict | None = None,
    layout: BasisLayout | None = None,
) -> tuple[np.ndarray, SimulationRecord]:
    """Integrate i dpsi/dt = H(t) psi from t = 0 to plan.t_end.

    observables maps names to sparse operators sampled at the record
    stride; passing the full-model layout additionally records the leak
    weight outside the vacuum qubit sector. Static Hamiltonians also get
    their energy expectation recorded (a conservation diagnostic).
    """
    if state.shape[0] != hamiltonian.dim:
        raise ValueError(f"state dim {state.shape[0]} != Hamiltonian dim {hamiltonian.dim}")
    packed = pack_hamiltonian(hamiltonian)
    nsteps, dt = _steps_for(plan.t_end, plan.dt)
    stride = plan.record_every if plan.record_every > 0 else nsteps
    stride = max(1, min(stride, nsteps)) if nsteps else 1

    observables = observables or {}
    static_energy = not hamiltonian.terms and hamiltonian.static.nnz > 0

    times = [0.0]
    psi = np.ascontiguousarray(state, dtype=np.complex128).copy()
    norms = [float(np.linalg.norm(psi))]
    obs = {name: [expect(psi, op)] for name, op in observables.items()}
    leaks = [project_qubit_state(psi, layout)[1]] if layout is not None else None
    energies = [expect(psi, hamiltonian.static).real] if static_energy else None

    done = 0
    while done < nsteps:
        chunk = min(stride, nsteps - done)
        psi = rk4_propagate(packed, psi, done * dt, dt, chunk)
        done += chunk
        if not np.all(np.isfinite(psi)):
            raise IntegrationError(
                f"non-finite amplitudes at t = {done * dt:g} (dt = {dt:g}); "
                "the step size is too large for this Hamiltonian"
            )
        if plan.renormalize:
            psi = psi / np.linalg.norm(psi)
        times.append(done * dt)
        norms.append(float(np.linalg.norm(psi)))
        for name, op in observables.items():
            obs[name].append(expect(psi, op))
        if leaks is not None:
            leaks.append(project_qubit_state(psi, layout)[1])
        if energies is not None:
            energies.append(expect(psi, hamiltonian.static).real)

    record = SimulationRecord(
        times=np.array(times),
        norms=np.array(norms),
        observables={k: np.array(v) for k, v in obs.items()},
        leaks=np.array(leaks) if leaks is not None else None,
        energies=np.array(energies) if energies is not None else None,
        dt=dt,
    )
    if not plan.renormalize and record.norm_drift > NORM_DRIFT_LIMIT:
        record.valid = False
    return psi, record


def expect(psi: np.ndarray, op) -> complex:
    return complex(np.vdot(psi, op.dot(psi)))


def phase_optimized_fidelity(target: np.ndarray, state: np.ndarray, n_qubits: int) -> float:
    """|<target| (x)_l e^{i phi_l n_l} |state>|^2 maximized over per-qubit phases.

    Both vectors live on the 2^n qubit register (atom 1 = least
    significant bit). Coordinate ascent with analytic per-qubit updates;
    deterministic and typically converges in a few sweeps.
    """
    w = np.conj(target) * state
    if not np.any(w):
        return 0.0
    dim = w.shape[0]
    bitmat = ((np.arange(dim)[:, None] >> np.arange(n_qubits)[None, :]) & 1).astype(float)
    phases = np.zeros(n_qubits)

    def overlap_mag() -> float:
        return abs((w * np.exp(1j * (bitmat @ phases))).sum())

    best = overlap_mag()
    for _ in range(200):
        for l in range(n_qubits):
            tot = w * np.exp(1j * (bitmat @ phases))
            sel = bitmat[:, l] == 1
            a = tot[~sel].sum()
            b = tot[sel].sum() * np.exp(-1j * phases[l])
            if abs(a) > 0 and abs(b) > 0:
                phases[l] = float(np.angle(a) - np.angle(b))
        cur = overlap_mag()
        if cur <= best + 1e-15:
            best = max(best, cur)
            break
        best = cur
    return float(best**2)


@dataclass
class ComparisonRecord:
    """Full-model vs effective-model trajectory comparison."""

    times: np.ndarray
    fidelity: np.ndarray  # phase-optimized
    fidelity_raw: np.ndarray  # phase-sensitive
    leak: np.ndarray
    full_record: SimulationRecord
    effective_record: SimulationRecord
    final_full: np.ndarray
    final_effective: np.ndarray


def compare_full_effective(
    config: NetworkConfig,
    initial_qubit_state: np.ndarray,
    t_end: float,
    dt: float | None = None,
    record_every: int = 0,
    photon_cutoff: int | None = None,
) -> ComparisonRecord:
    """Evolve the full and effective models side by side from vacuum fields.

    At each sample the full state is projected onto the vacuum qubit
    sector and compared with the effective trajectory, both as the raw
    overlap F = |<psi_eff|P psi_full>|^2 / ||P psi_full||^2 and in the
    per-qubit-phase-optimized variant that removes the Stark-frame
    ambiguity between the two pictures.
    """
    cutoff = photon_cutoff if photon_cutoff is not None else config.photon_cutoff
    layout = BasisLayout(config.n, cutoff)
    h_full = full_hamiltonian(config, layout)
    h_eff = build_effective_hamiltonian(config)

    psi_full = embed_qubit_state(initial_qubit_state, layout)
    psi_eff = np.asarray(initial_qubit_state, dtype=np.complex128).copy()

    plan_full = IntegrationPlan.for_hamiltonian(h_full, t_end, dt=dt, record_every=record_every)
    nsteps, step = _steps_for(t_end, plan_full.dt)
    stride = record_every if record_every > 0 else nsteps
    stride = max(1, min(stride, nsteps)) if nsteps else 1

    packed_full = pack_hamiltonian(h_full)
    packed_eff = pack_hamiltonian(h_eff)

    def sample(t_idx):
        reduced, leak = project_qubit_state(psi_full, layout)
        weight = float(np.vdot(reduced, reduced).real)
        if weight == 0:
            return 0.0, 0.0, leak
        raw = abs(np.vdot(psi_eff, reduced)) ** 2 / weight
        opt = phase_optimized_fidelity(psi_eff, reduced, config.n) / weight
        return opt, raw, leak

    times = [0.0]
    fid_opt, fid_raw, leak0 = sample(0)
    fids, raws, leaks = [fid_opt], [fid_raw], [leak0]
    norms_full = [float(np.linalg.norm(psi_full))]
    norms_eff = [float(np.linalg.norm(psi_eff))]

    done = 0
    while done < nsteps:
        chunk = min(stride, nsteps - done)
        psi_full = rk4_propagate(packed_full, psi_full, done * step, step, chunk)
        psi_eff = rk4_propagate(packed_eff, psi_eff, done * step, step, chunk)
        done += chunk
        if not (np.all(np.isfinite(psi_full)) and np.all(np.isfinite(psi_eff))):
            raise IntegrationError(f"non-finite amplitudes at t = {done * step:g}")
        times.append(done * step)
        f, r, lk = sample(done)
        fids.append(f)
        raws.append(r)
        leaks.append(lk)
        norms_full.append(float(np.linalg.norm(psi_full)))
        norms_eff.append(float(np.linalg.norm(psi_eff)))

    t_arr = np.array(times)
    full_rec = SimulationRecord(times=t_arr, norms=np.array(norms_full), dt=step)
    eff_rec = SimulationRecord(times=t_arr, norms=np.array(norms_eff), dt=step)
    for rec in (full_rec, eff_rec):
        if rec.norm_drift > NORM_DRIFT_LIMIT:
            rec.valid = False
    return ComparisonRecord(
        times=t_arr,
        fidelity=np.array(fids),
        fidelity_raw=np.array(raws),
        leak=np.array(leaks),
        full_record=full_rec,
        effective_record=eff_rec,
        final_full=psi_full,
        final_effective=psi_eff,
    )


def excitation_probabilities(config: NetworkConfig) -> tuple[float, float]:
    """Perturbative leak probabilities (p1: excited atomic level, p2: photons).

    p1 = max_l,d Omega^2 / Delta_1^2; p2 = max over atoms of
    sum_d sum_k lambda^2 / delta^2.
    """
    active = config.active_drives()
    if not active:
        return 0.0, 0.0
    p1 = max(d.rabi**2 / d.detuning**2 for d in active)
    tab = raman_coefficients(config)
    p2 = 0.0
    for l in range(config.n):
        total = 0.0
        for d in range(2):
            if tab.active[l, d]:
                total += float(np.sum(tab.lam[:, l, d] ** 2 / tab.delta[:, l, d] ** 2))
        p2 = max(p2, total)
    return p1, p2


def decoherence_estimate(config: NetworkConfig, p1: float, p2: float, t: float) -> tuple[float, float, float]:
    """(gamma_e, kappa_e, F) with gamma_e = p1*gamma, kappa_e = p2*kappa, F = 1 - (gamma_e+kappa_e)t."""
    if not 0 <= p1 <= 1 or not 0 <= p2 <= 1:
        raise ValueError("p1 and p2 must lie in [0, 1]")
    gamma_e = p1 * config.gamma
    kappa_e = p2 * config.kappa
    fidelity = 1.0 - (gamma_e + kappa_e) * t
    return gamma_e, kappa_e, max(fidelity, 0.0)
