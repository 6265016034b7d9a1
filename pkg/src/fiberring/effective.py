"""Adiabatic-elimination coefficients and effective spin Hamiltonians.

Two corrections to the source formulas are baked in, both validated by
the reference numeric reproduction and by full-model comparison:
the Delta_1 appearing in the single-drive lambda coefficient is the
per-atom Delta_{1,l}; the Rabi frequency in the two-drive lambda is the
slot's own Omega_{l,d}; and cos(2*pi*k/2n) is written as cos(pi*k/n).

Sign convention: the exchange term enters as +chi * S+ S- + h.c. and the
Stark term as +epsilon |e><e| with epsilon = sum_k mu - eta. The overall
sign is pinned by a full-model amplitude comparison and regression-tested;
do not flip it without rerunning that comparison.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .config import BRANCH_ER, BRANCH_GR, HIERARCHY_THRESHOLD, Drive, NetworkConfig, mode_spectrum
from .operators import QubitLayout, build_atomic

__all__ = [
    "CouplingTable",
    "EXCHANGE_SIGN",
    "EffectiveTheoryError",
    "EqualizeResult",
    "HierarchyWarning",
    "RamanCoefficientTable",
    "build_effective_ising",
    "build_effective_pair",
    "build_effective_parallel",
    "build_effective_xy_chain",
    "coupling_table",
    "equalize_chain_rabi",
    "make_chain_config",
    "raman_coefficients",
]

#: Global sign of the effective exchange/Ising couplings relative to the
#: coefficient magnitudes; frozen against the full-model run.
EXCHANGE_SIGN = +1.0


class EffectiveTheoryError(ValueError):
    """Effective-theory precondition violated (resonance, bad pairing, ...)."""


class HierarchyWarning(UserWarning):
    """A scale separation the effective theory relies on is marginal."""


@dataclass(frozen=True)
class RamanCoefficientTable:
    """Per-(k, l, d) elimination coefficients, arrays indexed [k-1, l-1, d-1].

    eta = Omega^2 / Delta_1 (Stark shift from the classical drive);
    xi = g^2 / (2n (Delta_2 - omega_k)) (per-photon shift, k only);
    lam = Raman coupling to nonlocal mode k;
    delta = two-photon detuning Delta_2 - omega_k - Delta_1;
    mu = lam^2 / delta. Inactive drive slots hold zeros (nan delta).
    """

    n: int
    omega: np.ndarray  # (2n,) mode frequencies
    eta: np.ndarray  # (n, 2)
    xi: np.ndarray  # (2n,)
    lam: np.ndarray  # (2n, n, 2)
    delta: np.ndarray  # (2n, n, 2)
    mu: np.ndarray  # (2n, n, 2)
    active: np.ndarray  # (n, 2) bool


def _drive_grid(config: NetworkConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(rabi, detuning, active) arrays of shape (n, 2); inactive slots zeroed."""
    n = config.n
    rabi = np.zeros((n, 2))
    det = np.zeros((n, 2))
    active = np.zeros((n, 2), dtype=bool)
    for drv in config.active_drives():
        rabi[drv.atom - 1, drv.d - 1] = drv.rabi
        det[drv.atom - 1, drv.d - 1] = drv.detuning
        active[drv.atom - 1, drv.d - 1] = True
    return rabi, det, active


def raman_coefficients(config: NetworkConfig) -> RamanCoefficientTable:
    """All per-(k, l, d) elimination coefficients for the given ring."""
    n = config.n
    omega = np.array(mode_spectrum(config).frequencies)
    dcav = config.delta2 - omega  # (2n,)
    if config.g > 0 and np.any(dcav == 0):
        k = int(np.nonzero(dcav == 0)[0][0]) + 1
        raise EffectiveTheoryError(f"cavity detuning Delta_2 - omega_k vanishes at k={k}")
    xi = np.zeros(2 * n)
    if config.g > 0:
        xi = config.g**2 / (2 * n * dcav)

    rabi, det, active = _drive_grid(config)
    eta = np.zeros((n, 2))
    lam = np.zeros((2 * n, n, 2))
    delta = np.full((2 * n, n, 2), np.nan)
    mu = np.zeros((2 * n, n, 2))
    for l in range(n):
        for d in range(2):
            if not active[l, d]:
                continue
            d1 = det[l, d]
            eta[l, d] = rabi[l, d] ** 2 / d1
            dd = dcav - d1  # (2n,)
            if np.any(dd == 0):
                k = int(np.nonzero(dd == 0)[0][0]) + 1
                raise EffectiveTheoryError(
                    f"Raman detuning delta vanishes at (k={k}, atom={l + 1}, d={d + 1})"
                )
            delta[:, l, d] = dd
            lam[:, l, d] = (rabi[l, d] * config.g / (2.0 * math.sqrt(2 * n))) * (1.0 / d1 + 1.0 / dcav)
            mu[:, l, d] = lam[:, l, d] ** 2 / dd
    return RamanCoefficientTable(n=n, omega=omega, eta=eta, xi=xi, lam=lam, delta=delta, mu=mu, active=active)


@dataclass(frozen=True)
class CouplingTable:
    """Qubit-level effective parameters.

    epsilon[l-1]: per-qubit Stark shift, summed over active drive slots.
    chi[l-1, m-1]: slot-1 pair coupling (the single-drive configuration).
    chi_dd[l-1, m-1, d-1, d'-1]: general two-drive pair couplings.
    lam_big[l-1, m-1, d-1, d'-1]: pairing detunings Delta_{1,m,d'} - Delta_{1,l,d}
    (nan where either slot is inactive).
    """

    epsilon: np.ndarray
    chi: np.ndarray
    chi_dd: np.ndarray
    lam_big: np.ndarray
    coeffs: RamanCoefficientTable


def coupling_table(config: NetworkConfig) -> CouplingTable:
    """Effective Stark shifts and pair couplings for all pairs and drive slots."""
    tab = raman_coefficients(config)
    n = tab.n
    epsilon = np.zeros(n)
    for l in range(n):
        for d in range(2):
            if tab.active[l, d]:
                epsilon[l] += tab.mu[:, l, d].sum() - tab.eta[l, d]

    k = np.arange(1, 2 * n + 1)
    chi_dd = np.zeros((n, n, 2, 2), dtype=complex)
    lam_big = np.full((n, n, 2, 2), np.nan)
    _, det, active = _drive_grid(config)
    for l in range(n):
        for m in range(n):
            for d in range(2):
                for dp in range(2):
                    if not (active[l, d] and active[m, dp]) or l == m:
                        continue
                    lam_big[l, m, d, dp] = det[m, dp] - det[l, d]
                    phase = np.exp(-2j * (l - m) * k * math.pi / n)
                    chi_dd[l, m, d, dp] = 0.5 * np.sum(
                        tab.lam[:, l, d]
                        * tab.lam[:, m, dp]
                        * (1.0 / tab.delta[:, l, d] + 1.0 / tab.delta[:, m, dp])
                        * phase
                    )
    return CouplingTable(epsilon=epsilon, chi=chi_dd[:, :, 0, 0].copy(), chi_dd=chi_dd, lam_big=lam_big, coeffs=tab)


def _exchange(layout: QubitLayout, l: int, m: int, chi: complex) -> sp.csr_matrix:
    """chi * S_l^+ S_m^- + h.c."""
    term = chi * build_atomic(layout, l, "g", "e").dot(build_atomic(layout, m, "e", "g"))
    return (term + term.getH()).tocsr()


def _number(layout: QubitLayout, l: int) -> sp.csr_matrix:
    return build_atomic(layout, l, "e", "e")


def _g_projector(layout: QubitLayout, l: int) -> sp.csr_matrix:
    return build_atomic(layout, l, "g", "g")


def build_effective_pair(config: NetworkConfig, p: int, q: int) -> sp.csr_matrix:
    """Selective pair coupling eps(n_p + n_q) + (chi_pq S_p^+ S_q^- + h.c.)."""
    if p == q:
        raise EffectiveTheoryError("p and q must differ")
    dp, dq = config.drive(p), config.drive(q)
    if dp is None or dq is None or dp.rabi == 0 or dq.rabi == 0:
        raise EffectiveTheoryError("both pair atoms must carry an active drive")
    if dp.rabi != dq.rabi or dp.detuning != dq.detuning:
        raise EffectiveTheoryError("pair drives must share Rabi frequency and detuning")
    for drv in config.active_drives():
        if drv.atom not in (p, q):
            raise EffectiveTheoryError(f"atom {drv.atom} must be undriven for a selective pair")
    table = coupling_table(config)
    layout = QubitLayout(config.n)
    eps = table.epsilon[p - 1]
    chi = table.chi[p - 1, q - 1]
    h = eps * (_number(layout, p) + _number(layout, q))
    h = h + EXCHANGE_SIGN * _exchange(layout, p, q, chi)
    return h.tocsr()


def build_effective_hamiltonian(config: NetworkConfig):
    """Generic single-drive effective model: Stark shifts plus all pair couplings.

    Pairs with equal laser detunings contribute static exchange terms;
    detuned pairs keep their oscillating phase exp(i Lambda t). Returns a
    TimeDependentHamiltonian on the qubit layout. Only slot-1 drives on
    the e-r branch participate (the single-drive configuration).
    """
    from .fullmodel import TimeDependentHamiltonian

    table = coupling_table(config)
    layout = QubitLayout(config.n)
    static = sp.csr_matrix((layout.dim, layout.dim), dtype=complex)
    terms = []
    for l in range(1, config.n + 1):
        static = static + table.epsilon[l - 1] * _number(layout, l)
    for l in range(1, config.n + 1):
        for m in range(l + 1, config.n + 1):
            chi = table.chi[l - 1, m - 1]
            if chi == 0:
                continue
            lam = table.lam_big[l - 1, m - 1, 0, 0]
            if lam == 0:
                static = static + EXCHANGE_SIGN * _exchange(layout, l, m, chi)
            else:
                op = EXCHANGE_SIGN * chi * build_atomic(layout, l, "g", "e").dot(
                    build_atomic(layout, m, "e", "g")
                )
                terms.append((op.tocsr(), float(lam)))
    return TimeDependentHamiltonian(static=static.tocsr(), terms=tuple(terms))


def build_effective_parallel(config: NetworkConfig, pairs) -> sp.csr_matrix:
    """Simultaneous per-pair blocks, one exchange or phase block per pair.

    The kind of each block follows the branch driven on its atoms: e-r
    drives give an exchange block, g-r drives give the conditional-phase
    block 2*Re(chi) |g g><g g|. Cross-pair detuning gaps are checked
    against the couplings and flagged with a HierarchyWarning when the
    ratio drops below 10.
    """
    pairs = [tuple(p) for p in pairs]
    flat = [a for pq in pairs for a in pq]
    if len(set(flat)) != len(flat):
        raise EffectiveTheoryError("pairs must not overlap")
    table = coupling_table(config)
    layout = QubitLayout(config.n)
    h = sp.csr_matrix((layout.dim, layout.dim), dtype=complex)
    kinds = []
    for p, q in pairs:
        dp, dq = config.drive(p), config.drive(q)
        if dp is None or dq is None or dp.rabi == 0 or dq.rabi == 0:
            raise EffectiveTheoryError(f"pair ({p},{q}) atoms must both carry an active drive")
        if dp.rabi != dq.rabi or dp.detuning != dq.detuning or dp.branch != dq.branch:
            raise EffectiveTheoryError(f"pair ({p},{q}) drives must match in Rabi, detuning, branch")
        kinds.append(dp.branch)
        eps = table.epsilon[p - 1]
        chi = table.chi[p - 1, q - 1]
        if dp.branch == BRANCH_ER:
            h = h + eps * (_number(layout, p) + _number(layout, q))
            h = h + EXCHANGE_SIGN * _exchange(layout, p, q, chi)
        else:
            h = h + eps * (_g_projector(layout, p) + _g_projector(layout, q))
            h = h + EXCHANGE_SIGN * 2.0 * chi.real * _g_projector(layout, p).dot(_g_projector(layout, q))
    # cross-pair decoupling check
    for i, (p, q) in enumerate(pairs):
        for u, v in pairs[i + 1 :]:
            gap = abs(config.drive(p).detuning - config.drive(u).detuning)
            coupl = max(abs(table.chi[p - 1, q - 1]), abs(table.chi[u - 1, v - 1]))
            if coupl > 0 and gap < HIERARCHY_THRESHOLD * coupl:
                warnings.warn(
                    f"cross-pair gap |Delta_1({p})-Delta_1({u})| = {gap:.3g} is below "
                    f"{HIERARCHY_THRESHOLD:g} x coupling {coupl:.3g}; pairs are not well decoupled",
                    HierarchyWarning,
                    stacklevel=2,
                )
    return h.tocsr()


PAIRING_TOL = 1e-9


def _chain_links(config: NetworkConfig, branch: str) -> tuple[CouplingTable, np.ndarray]:
    """Check the nearest-neighbor pairing and return per-link couplings chi_{l,l+1}."""
    n = config.n
    _, det, active = _drive_grid(config)
    for drv in config.active_drives():
        if drv.branch != branch:
            raise EffectiveTheoryError(f"chain requires all drives on the {branch} branch")
    if not active.all():
        raise EffectiveTheoryError("chain requires two active drives on every atom")
    for l in range(n):
        lp = (l + 1) % n
        gap = det[lp, 0] - det[l, 1]  # Lambda_{l,l+1,2,1}
        if abs(gap) > PAIRING_TOL:
            raise EffectiveTheoryError(
                f"pairing condition violated on link {l + 1}->{lp + 1}: "
                f"Delta_1[{lp + 1},1] - Delta_1[{l + 1},2] = {gap:.3g}"
            )
    table = coupling_table(config)
    links = np.array([table.chi_dd[l, (l + 1) % n, 1, 0] for l in range(n)])
    # off-pair resonances should sit far above the link couplings
    chi_scale = np.max(np.abs(links))
    if chi_scale > 0:
        lam = table.lam_big
        worst = np.inf
        for l in range(n):
            for m in range(n):
                for d in range(2):
                    for dp in range(2):
                        if l == m or np.isnan(lam[l, m, d, dp]):
                            continue
                        if m == (l + 1) % n and (d, dp) == (1, 0):
                            continue  # the intended resonance
                        if m == (l - 1) % n and (d, dp) == (0, 1):
                            continue
                        worst = min(worst, abs(lam[l, m, d, dp]) / chi_scale)
        if worst < HIERARCHY_THRESHOLD:
            warnings.warn(
                f"off-pair detuning over coupling ratio {worst:.3g} < {HIERARCHY_THRESHOLD:g}; "
                "unwanted Raman pairings are not strongly suppressed",
                HierarchyWarning,
                stacklevel=3,
            )
    return table, links


def build_effective_xy_chain(config: NetworkConfig) -> sp.csr_matrix:
    """Ring XY chain sum_l [eps_l n_l + (chi_{l,l+1} S_l^+ S_{l+1}^- + h.c.)]."""
    table, links = _chain_links(config, BRANCH_ER)
    layout = QubitLayout(config.n)
    h = sp.csr_matrix((layout.dim, layout.dim), dtype=complex)
    for l in range(1, config.n + 1):
        h = h + table.epsilon[l - 1] * _number(layout, l)
        h = h + EXCHANGE_SIGN * _exchange(layout, l, l % config.n + 1, links[l - 1])
    return h.tocsr()


def build_effective_ising(config: NetworkConfig) -> sp.csr_matrix:
    """Diagonal ring Ising sum_l [eps_l P_g,l + chi_l P_g,l P_g,l+1].

    P_g = (1 - sigma_z)/2 and the link coefficient is 2*Re(chi_{l,l+1})
    (the conditional-phase coupling is a diagonal term plus its own h.c.).
    """
    table, links = _chain_links(config, BRANCH_GR)
    layout = QubitLayout(config.n)
    h = sp.csr_matrix((layout.dim, layout.dim), dtype=complex)
    for l in range(1, config.n + 1):
        pg = _g_projector(layout, l)
        pg_next = _g_projector(layout, l % config.n + 1)
        h = h + table.epsilon[l - 1] * pg
        h = h + EXCHANGE_SIGN * 2.0 * links[l - 1].real * pg.dot(pg_next)
    return h.tocsr()


def chain_link_couplings(config: NetworkConfig) -> np.ndarray:
    """Per-link coupling magnitudes of a two-drive chain config.

    For an e-r chain this is |chi_{l,l+1}|; for a g-r chain it is the
    Ising link coefficient |2 Re chi_{l,l+1}|.
    """
    branch = config.drives[0].branch if config.drives else BRANCH_ER
    table, links = _chain_links(config, branch)
    if branch == BRANCH_GR:
        return np.abs(2.0 * links.real)
    return np.abs(links)


@dataclass(frozen=True)
class EqualizeResult:
    config: NetworkConfig
    residual: float
    iterations: int


def equalize_chain_rabi(config: NetworkConfig, target_chi: float, rel_tol: float = 1e-6, max_iter: int = 50) -> EqualizeResult:
    """Rescale the chain's Rabi frequencies so every link coupling hits target_chi.

    Each link coupling scales as Omega_{l,2} * Omega_{l+1,1}, so both
    slot amplitudes of a link are scaled by sqrt(target/current) per pass.
    """
    if target_chi <= 0:
        raise EffectiveTheoryError("target coupling must be positive (chi scales as Omega^2 != 0)")
    cfg = config
    best = math.inf
    for it in range(1, max_iter + 1):
        links = chain_link_couplings(cfg)
        if np.any(links == 0):
            raise EffectiveTheoryError("chain has a vanishing link coupling; cannot equalize")
        residual = float(np.max(np.abs(links - target_chi)) / target_chi)
        best = min(best, residual)
        if residual <= rel_tol:
            return EqualizeResult(config=cfg, residual=residual, iterations=it - 1)
        factors = np.sqrt(target_chi / links)  # factor for link l = (l, l+1)
        new_drives = []
        for drv in cfg.drives:
            if drv.rabi == 0:
                new_drives.append(drv)
                continue
            if drv.d == 2:
                f = factors[drv.atom - 1]
            else:
                f = factors[(drv.atom - 2) % cfg.n]
            new_drives.append(Drive(atom=drv.atom, rabi=drv.rabi * float(f), detuning=drv.detuning, branch=drv.branch, d=drv.d))
        cfg = cfg.with_drives(new_drives)
    raise EffectiveTheoryError(f"equalization did not converge; best residual {best:.3g}")


def make_chain_config(
    n: int,
    nu: float,
    delta2: float,
    rabi: float,
    detunings,
    branch: str = BRANCH_ER,
    photon_cutoff: int = 1,
    gamma: float = 0.0,
    kappa: float = 0.0,
) -> NetworkConfig:
    """Two-drive ring chain with the nearest-neighbor pairing built in.

    detunings[l-1] is Delta_{1,l,1}; slot 2 of atom l is set to
    detunings[l] (ring-closed) so that Lambda_{l,l+1,2,1} = 0 holds
    exactly on every link.
    """
    detunings = list(detunings)
    if len(detunings) != n:
        raise EffectiveTheoryError(f"need {n} detunings, got {len(detunings)}")
    drives = []
    for l in range(1, n + 1):
        drives.append(Drive(atom=l, rabi=rabi, detuning=detunings[l - 1], branch=branch, d=1))
        drives.append(Drive(atom=l, rabi=rabi, detuning=detunings[l % n], branch=branch, d=2))
    return NetworkConfig(
        n=n,
        nu=nu,
        delta2=delta2,
        drives=tuple(drives),
        gamma=gamma,
        kappa=kappa,
        photon_cutoff=photon_cutoff,
    )
