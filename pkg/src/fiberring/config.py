"""Network configuration, unit conventions, and hierarchy validation.

Conventions: the atom-cavity coupling g is the global frequency unit
(g = 1 unless overridden), the ring is periodic (fiber n couples cavity
n back to cavity 1), and a deactivated drive is represented by rabi = 0.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable

__all__ = [
    "ConfigError",
    "ConfigParseError",
    "Drive",
    "HIERARCHY_THRESHOLD",
    "ModeSpectrum",
    "NetworkConfig",
    "ValidationReport",
    "load_config",
    "mode_spectrum",
    "save_config",
    "validate_config",
]

#: Ratio below which a scale-separation assumption is flagged as dubious.
HIERARCHY_THRESHOLD = 10.0

BRANCH_ER = "e-r"
BRANCH_GR = "g-r"


class ConfigError(ValueError):
    """Structurally invalid network configuration."""


class ConfigParseError(ConfigError):
    """Config file that cannot be read as a config at all (I/O, JSON, schema)."""


@dataclass(frozen=True)
class Drive:
    """One classical laser field addressing one atom.

    atom is 1-based; branch selects which ground-state transition the
    field drives ("e-r" or "g-r"); d is the drive slot (1 or 2); rabi
    and detuning are in units of g.
    """

    atom: int
    rabi: float
    detuning: float
    branch: str = BRANCH_ER
    d: int = 1

    def __post_init__(self):
        if self.branch not in (BRANCH_ER, BRANCH_GR):
            raise ConfigError(f"unknown drive branch {self.branch!r}")
        if self.d not in (1, 2):
            raise ConfigError(f"drive slot d must be 1 or 2, got {self.d}")
        if self.rabi < 0:
            raise ConfigError("rabi must be >= 0")
        if self.rabi > 0 and self.detuning == 0:
            raise ConfigError(
                f"drive on atom {self.atom} (d={self.d}) has rabi > 0 but zero "
                "detuning; adiabatic elimination requires off-resonance"
            )


@dataclass(frozen=True)
class NetworkConfig:
    """Physical parameters of the ring of atom-cavity nodes."""

    n: int
    nu: float
    delta2: float
    drives: tuple[Drive, ...] = ()
    gamma: float = 0.0
    kappa: float = 0.0
    photon_cutoff: int = 1
    g: float = 1.0
    boundary: str = field(default="periodic")

    def __post_init__(self):
        object.__setattr__(self, "drives", tuple(self.drives))
        if self.n < 2:
            raise ConfigError(f"need at least 2 nodes, got n={self.n}")
        if self.photon_cutoff < 1:
            raise ConfigError("photon_cutoff must be >= 1")
        if self.g < 0:
            raise ConfigError("g must be >= 0")
        if self.gamma < 0 or self.kappa < 0:
            raise ConfigError("decay rates must be >= 0")
        if self.boundary != "periodic":
            raise ConfigError("only the periodic ring topology is supported")
        seen = set()
        for drv in self.drives:
            if not 1 <= drv.atom <= self.n:
                raise ConfigError(f"drive atom {drv.atom} outside 1..{self.n}")
            key = (drv.atom, drv.branch, drv.d)
            if key in seen:
                raise ConfigError(f"duplicate drive slot {key}")
            seen.add(key)

    def drive(self, atom: int, d: int = 1) -> Drive | None:
        """The drive in slot d on the given atom, or None if absent."""
        for drv in self.drives:
            if drv.atom == atom and drv.d == d:
                return drv
        return None

    def active_drives(self) -> tuple[Drive, ...]:
        return tuple(d for d in self.drives if d.rabi > 0)

    def with_drives(self, drives: Iterable[Drive]) -> "NetworkConfig":
        return replace(self, drives=tuple(drives))


@dataclass(frozen=True)
class ModeSpectrum:
    """Eigenfrequencies 2*nu*cos(pi*k/n) of the ring photon modes, k = 1..2n."""

    frequencies: tuple[float, ...]

    def __len__(self):
        return len(self.frequencies)

    def __getitem__(self, i):
        return self.frequencies[i]


def mode_spectrum(config: NetworkConfig) -> ModeSpectrum:
    """Normal-mode frequencies of the cavity-fiber hopping ring."""
    n = config.n
    freqs = tuple(2.0 * config.nu * math.cos(math.pi * k / n) for k in range(1, 2 * n + 1))
    return ModeSpectrum(freqs)


@dataclass(frozen=True)
class ValidationReport:
    """Hierarchy ratios backing the adiabatic-elimination assumptions.

    `ratios` carries the warning-bearing ratios (laser detuning over Rabi
    frequency, mode detuning over collective cavity coupling, and Raman
    detuning over Raman coupling); `stark_ratios` carries the secondary
    delta/eta and delta/xi diagnostics, which are reported but do not
    trigger warnings (the reference operating point itself sits near 8
    on delta/eta while its Raman hierarchy is comfortably ~20).
    """

    ratios: dict[str, float]
    stark_ratios: dict[str, float]
    min_ratio: float | None
    min_raman_ratio: float | None
    warnings: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.warnings


def validate_config(config: NetworkConfig, threshold: float = HIERARCHY_THRESHOLD) -> ValidationReport:
    """Evaluate the scale hierarchies required for adiabatic elimination.

    Pure function: drive ratios are reported only for drives with
    rabi > 0; a config with no active drives yields an empty report.
    """
    spectrum = mode_spectrum(config)
    n = config.n
    ratios: dict[str, float] = {}
    stark: dict[str, float] = {}

    active = config.active_drives()
    g_coll = config.g / math.sqrt(2 * n)

    for drv in active:
        key = f"atom{drv.atom}.d{drv.d}"
        ratios[f"delta1/rabi[{key}]"] = abs(drv.detuning) / drv.rabi

    if g_coll > 0:
        for k, omega in enumerate(spectrum.frequencies, start=1):
            ratios[f"mode_detuning/g_coll[k={k}]"] = abs(config.delta2 - omega) / g_coll

    for drv in active:
        eta = drv.rabi**2 / drv.detuning
        for k, omega in enumerate(spectrum.frequencies, start=1):
            dcav = config.delta2 - omega
            lam = (drv.rabi * config.g / (2.0 * math.sqrt(2 * n))) * (1.0 / drv.detuning + 1.0 / dcav)
            delta = dcav - drv.detuning
            key = f"k={k},atom{drv.atom}.d{drv.d}"
            if lam != 0:
                ratios[f"delta/lambda[{key}]"] = abs(delta) / abs(lam)
            if eta != 0:
                stark[f"delta/eta[{key}]"] = abs(delta) / abs(eta)
            if config.g > 0:
                xi = config.g**2 / (2 * n * dcav)
                stark[f"delta/xi[{key}]"] = abs(delta) / abs(xi)

    warnings = tuple(
        f"hierarchy ratio {name} = {value:.3g} < {threshold:g}"
        for name, value in ratios.items()
        if value < threshold
    )
    min_ratio = min(ratios.values()) if ratios else None
    raman = [v for k, v in ratios.items() if k.startswith("delta/lambda")]
    min_raman = min(raman) if raman else None
    return ValidationReport(
        ratios=ratios,
        stark_ratios=stark,
        min_ratio=min_ratio,
        min_raman_ratio=min_raman,
        warnings=warnings,
    )


# --- config file I/O (JSON; key names and g = 1 units are normative) ---


def config_to_dict(config: NetworkConfig) -> dict:
    return {
        "n": config.n,
        "nu": config.nu,
        "delta2": config.delta2,
        "photon_cutoff": config.photon_cutoff,
        "gamma": config.gamma,
        "kappa": config.kappa,
        "g": config.g,
        "drives": [
            {"atom": d.atom, "branch": d.branch, "d": d.d, "rabi": d.rabi, "detuning": d.detuning}
            for d in config.drives
        ],
    }


def config_from_dict(data: dict) -> NetworkConfig:
    try:
        drives = tuple(
            Drive(
                atom=int(item["atom"]),
                branch=str(item.get("branch", BRANCH_ER)),
                d=int(item.get("d", 1)),
                rabi=float(item["rabi"]),
                detuning=float(item["detuning"]),
            )
            for item in data.get("drives", [])
        )
        return NetworkConfig(
            n=int(data["n"]),
            nu=float(data["nu"]),
            delta2=float(data["delta2"]),
            drives=drives,
            gamma=float(data.get("gamma", 0.0)),
            kappa=float(data.get("kappa", 0.0)),
            photon_cutoff=int(data.get("photon_cutoff", 1)),
            g=float(data.get("g", 1.0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigParseError(f"malformed config: {exc}") from exc


def load_config(path: str | Path) -> NetworkConfig:
    """Parse a JSON config file."""
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigParseError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigParseError(f"{path}: top-level value must be an object")
    return config_from_dict(data)


def save_config(config: NetworkConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(config_to_dict(config), indent=2) + "\n")
