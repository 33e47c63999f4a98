"""Experiment configuration.

One JSON document drives every command. Each block maps to a dataclass whose
field names carry the unit of the quantity (``omega1_ghz``, ``kappa_mhz``,
``gamma_110_100_per_us``). Defaults describe the characterized three-transmon
device and the twelve-site false-vacuum run.
"""

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Union, get_args, get_origin, get_type_hints

from . import device_data
from .errors import ConfigError
from .models import (
    DECAY_CHANNELS,
    TRACKED_LABELS,
    ChainSpec,
    CircuitParams,
    LatticeSpec,
    FieldClosure,
    ReadoutParams,
    TargetMasses,
    TransmonBasis,
    VacuumStart,
)
from .numkit import ghz_to_rad_ns, mhz_to_rad_ns
from .qlm import MAX_QUENCH_SITES


@dataclass
class LatticeConfig:
    n_sites: int = 2
    boundary_left: int = -1
    boundary_right: int = -1

    def to_lattice(self) -> LatticeSpec:
        return LatticeSpec(self.n_sites, self.boundary_left, self.boundary_right)


@dataclass
class QlmConfig:
    n_sites: int = 12
    mu_over_j: float = 0.0
    mu_sweep: List[float] = field(default_factory=list)
    t_max_j_units: float = 200.0
    n_samples: int = 2001
    start: str = "false_vacuum_right"


@dataclass
class CircuitConfig:
    """Three-transmon device; frequencies are the zero-bias dressed targets."""

    omega1_ghz: float = device_data.QUBIT_FREQUENCIES_GHZ[0]
    omega2_ghz: float = device_data.QUBIT_FREQUENCIES_GHZ[1]
    omega3_ghz: float = device_data.QUBIT_FREQUENCIES_GHZ[2]
    ec1_mhz: float = device_data.CHARGING_ENERGIES_MHZ[0]
    ec2_mhz: float = device_data.CHARGING_ENERGIES_MHZ[1]
    ec3_mhz: float = device_data.CHARGING_ENERGIES_MHZ[2]
    g12_mhz: float = device_data.COUPLINGS_MHZ[(0, 1)]
    g13_mhz: float = device_data.COUPLINGS_MHZ[(0, 2)]
    g23_mhz: float = device_data.COUPLINGS_MHZ[(1, 2)]
    squid_asymmetry: float = 0.3
    charge_cutoff: int = 15
    levels_kept: int = 6
    flux_min_phi0: float = -0.5
    flux_max_phi0: float = 0.5
    n_flux: int = 41

    def targets(self) -> List[float]:
        return [ghz_to_rad_ns(self.omega1_ghz), ghz_to_rad_ns(self.omega2_ghz), ghz_to_rad_ns(self.omega3_ghz)]

    def charging_energies(self) -> List[float]:
        return [mhz_to_rad_ns(self.ec1_mhz), mhz_to_rad_ns(self.ec2_mhz), mhz_to_rad_ns(self.ec3_mhz)]

    def couplings(self) -> Dict[tuple, float]:
        return {(0, 1): mhz_to_rad_ns(self.g12_mhz), (0, 2): mhz_to_rad_ns(self.g13_mhz),
                (1, 2): mhz_to_rad_ns(self.g23_mhz)}

    def basis(self) -> TransmonBasis:
        return TransmonBasis(self.charge_cutoff, self.levels_kept)


@dataclass
class DriveConfig:
    amplitude_phi0: Optional[float] = None
    j_targets_mhz: List[float] = field(default_factory=lambda: [0.5, 1.0, 1.5, 2.0, 2.5])
    n_freq: int = 41
    n_times: int = 101
    max_excitations: int = 4


@dataclass
class ReadoutConfig:
    """
    Rates default to the single-qubit T1 values and the fitted three-body decay times.

    The fit starts away from the configured values: rates and J are scaled by
    ``guess_scale``, thermal populations divided by it. ``guess_j_mhz`` overrides
    the starting coupling.
    """

    resonator_ids: List[int] = field(default_factory=lambda: [1, 2])
    j_mhz: float = 2.3
    detuning_mhz: float = 0.0
    gamma_110_100_per_us: float = 1e3 / device_data.THREE_BODY_DECAY_NS[("110", "100")]
    gamma_110_010_per_us: float = 1e3 / device_data.THREE_BODY_DECAY_NS[("110", "010")]
    gamma_100_000_per_us: float = 1e3 / device_data.QUBIT_T1_NS[0]
    gamma_010_000_per_us: float = 1e3 / device_data.QUBIT_T1_NS[1]
    gamma_001_000_per_us: float = 1e3 / device_data.THREE_BODY_DECAY_NS[("001", "000")]
    gamma_phi_per_us: float = 0.2
    thermal_001: float = 0.02
    thermal_100: float = 0.03
    thermal_010: float = 0.03
    alpha_mhz: float = 0.0
    epsilon_mhz: float = 0.5
    t_evolve_max_ns: float = 600.0
    n_t_evolve: int = 25
    t_meas_ns: float = 1500.0
    n_t_meas: int = 151
    noise_sigma: float = 0.01
    n_starts: int = 8
    guess_scale: float = 1.3
    guess_j_mhz: Optional[float] = None
    field_closure: str = FieldClosure.FACTORIZED.value
    trace_files: List[str] = field(default_factory=list)

    def rates(self) -> Dict[tuple, float]:
        """Directed decay rates in 1/ns."""
        return {(i, f): getattr(self, f"gamma_{i}_{f}_per_us") * 1e-3 for i, f in DECAY_CHANNELS}

    def thermal(self) -> Dict[str, float]:
        return {"001": self.thermal_001, "100": self.thermal_100, "010": self.thermal_010}


@dataclass
class TransmonChainConfig:
    """Seven-transmon chain; transmons alternate matter site and link."""

    omega_ghz: List[float] = field(default_factory=lambda: [5.7, 5.9, 5.1, 5.8, 5.2, 6.0, 5.4])
    chi_mhz: List[float] = field(default_factory=lambda: [-1.2, -0.8, -1.0, -0.9, -1.1, -0.7])
    mu_mhz: List[float] = field(default_factory=lambda: [0.5, -0.3, 0.2, 0.0])
    j_mhz: List[float] = field(default_factory=lambda: [1.0, 1.0, 1.0])

    def to_spec(self) -> ChainSpec:
        n_matter = (len(self.omega_ghz) + 1) // 2
        return ChainSpec(n_matter=n_matter, omega=tuple(ghz_to_rad_ns(w) for w in self.omega_ghz),
                         chi=tuple(mhz_to_rad_ns(x) for x in self.chi_mhz))

    def masses(self) -> TargetMasses:
        return TargetMasses(tuple(mhz_to_rad_ns(m) for m in self.mu_mhz))


@dataclass
class ExperimentConfig:
    lattice: LatticeConfig = field(default_factory=LatticeConfig)
    qlm: QlmConfig = field(default_factory=QlmConfig)
    circuit: CircuitConfig = field(default_factory=CircuitConfig)
    drive: DriveConfig = field(default_factory=DriveConfig)
    readout: ReadoutConfig = field(default_factory=ReadoutConfig)
    chain: TransmonChainConfig = field(default_factory=TransmonChainConfig)
    seed: int = 0
    output_dir: str = "output"
    threads: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON form."""
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _check_value(path: str, value: Any, annotation: Any) -> Any:
    origin = get_origin(annotation)
    if origin is Union:
        options = [a for a in get_args(annotation) if a is not type(None)]
        if value is None:
            return None
        return _check_value(path, value, options[0])
    if origin in (list, List):
        if not isinstance(value, list):
            raise ConfigError(path, f"expected a list, got {type(value).__name__}")
        (inner,) = get_args(annotation) or (Any,)
        return [_check_value(f"{path}[{i}]", v, inner) for i, v in enumerate(value)]
    if annotation is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(path, f"expected a number, got {value!r}")
        return float(value)
    if annotation is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, f"expected an integer, got {value!r}")
        return value
    if annotation is str:
        if not isinstance(value, str):
            raise ConfigError(path, f"expected a string, got {value!r}")
        return value
    return value


def _build(cls, data: Dict[str, Any], path: str):
    if not isinstance(data, dict):
        raise ConfigError(path or "<root>", "expected an object")
    hints = get_type_hints(cls)
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        prefix = f"{path}." if path else ""
        raise ConfigError(f"{prefix}{unknown[0]}", "unknown key")

    kwargs = {}
    for name, value in data.items():
        key_path = f"{path}.{name}" if path else name
        annotation = hints[name]
        if isinstance(annotation, type) and hasattr(annotation, "__dataclass_fields__"):
            kwargs[name] = _build(annotation, value, key_path)
        else:
            kwargs[name] = _check_value(key_path, value, annotation)
    return cls(**kwargs)


def config_from_dict(data: Dict[str, Any]) -> ExperimentConfig:
    """Validate a parsed document; unknown keys and wrongly typed values raise ConfigError."""
    config = _build(ExperimentConfig, data, "")
    _validate(config)
    return config


def load_config(path: Union[str, Path, None]) -> ExperimentConfig:
    """
    Load an experiment configuration.

    Args:
        path: JSON file, or None for the defaults

    Returns:
        ExperimentConfig

    Raises:
        ConfigError: If the file cannot be read or fails validation
    """
    if path is None:
        return ExperimentConfig()
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError:
        raise ConfigError("<file>", f"config file not found: {path}")
    except json.JSONDecodeError as e:
        raise ConfigError("<file>", f"invalid JSON: {e}")
    return config_from_dict(data)


def _validate(config: ExperimentConfig) -> None:
    if config.threads < 0:
        raise ConfigError("threads", "must be >= 0")
    try:
        config.lattice.to_lattice()
    except ValueError as e:
        raise ConfigError("lattice", str(e))
    if config.qlm.n_sites % 2 or not 2 <= config.qlm.n_sites <= MAX_QUENCH_SITES:
        raise ConfigError("qlm.n_sites", f"must be even and between 2 and {MAX_QUENCH_SITES}")
    if config.qlm.start not in {s.value for s in VacuumStart}:
        raise ConfigError("qlm.start", f"must be one of {', '.join(s.value for s in VacuumStart)}")
    if config.qlm.n_samples < 2:
        raise ConfigError("qlm.n_samples", "must be >= 2")
    if config.qlm.t_max_j_units <= 0:
        raise ConfigError("qlm.t_max_j_units", "must be positive")
    if not 0.0 <= config.circuit.squid_asymmetry < 1.0:
        raise ConfigError("circuit.squid_asymmetry", "must lie in [0, 1)")
    try:
        config.circuit.basis()
    except ValueError as e:
        raise ConfigError("circuit.charge_cutoff", str(e))
    if config.drive.amplitude_phi0 is not None and not 0.0 <= config.drive.amplitude_phi0 < 0.5:
        raise ConfigError("drive.amplitude_phi0", "must lie in [0, 0.5)")
    if any(j <= 0 for j in config.drive.j_targets_mhz):
        raise ConfigError("drive.j_targets_mhz", "targets must be positive")
    for rid in config.readout.resonator_ids:
        if rid not in device_data.RESONATORS:
            raise ConfigError("readout.resonator_ids", f"unknown resonator {rid}")
    for name in ("thermal_001", "thermal_100", "thermal_010"):
        if not 0.0 <= getattr(config.readout, name) < 0.5:
            raise ConfigError(f"readout.{name}", "must lie in [0, 0.5)")
    for i, f in DECAY_CHANNELS:
        if getattr(config.readout, f"gamma_{i}_{f}_per_us") < 0:
            raise ConfigError(f"readout.gamma_{i}_{f}_per_us", "must be non-negative")
    if config.readout.guess_scale <= 0:
        raise ConfigError("readout.guess_scale", "must be positive")
    if config.readout.guess_j_mhz is not None and config.readout.guess_j_mhz <= 0:
        raise ConfigError("readout.guess_j_mhz", "must be positive")
    if config.readout.field_closure not in {c.value for c in FieldClosure}:
        raise ConfigError("readout.field_closure", f"must be one of {', '.join(c.value for c in FieldClosure)}")
    chain = config.chain
    if len(chain.omega_ghz) % 2 == 0:
        raise ConfigError("chain.omega_ghz", "a chain has an odd number of transmons")
    n_matter = (len(chain.omega_ghz) + 1) // 2
    for key, expected in (("chi_mhz", len(chain.omega_ghz) - 1), ("mu_mhz", n_matter), ("j_mhz", n_matter - 1)):
        if len(getattr(chain, key)) != expected:
            raise ConfigError(f"chain.{key}", f"expected {expected} values")


def readout_params(config: ReadoutConfig, resonator_id: int) -> ReadoutParams:
    """ReadoutParams of a characterized resonator with the configured qubit rates."""
    data = device_data.RESONATORS[resonator_id]
    kappa = mhz_to_rad_ns(data["kappa_mhz"])
    kappa_int = mhz_to_rad_ns(data["kappa_int_mhz"])
    chi = {s: mhz_to_rad_ns(v) for s, v in device_data.state_chi_mhz(resonator_id).items()}
    return ReadoutParams(
        omega_r=ghz_to_rad_ns(data["omega_r_ghz"]),
        kappa_int=kappa_int,
        kappa_ext=kappa - kappa_int,
        chi={s: chi[s] for s in TRACKED_LABELS},
        gamma=config.rates(),
        gamma_phi=config.gamma_phi_per_us * 1e-3,
        alpha=mhz_to_rad_ns(config.alpha_mhz),
        resonator_id=resonator_id,
    )


def initial_circuit(config: CircuitConfig) -> CircuitParams:
    """Starting circuit parameters for calibration."""
    from .circuit import initial_circuit_params
    return initial_circuit_params(config.targets(), config.charging_energies(), config.couplings(),
                                  asymmetry=config.squid_asymmetry)
