"""Data models for qlinksim."""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np


class SymmetryKind(str, Enum):
    """Discrete symmetries of the quantum link model."""
    PARITY = "parity"
    CHARGE_CONJUGATION = "charge_conjugation"


class VacuumStart(str, Enum):
    """Initial configurations for false-vacuum runs."""
    FALSE_VACUUM_RIGHT = "false_vacuum_right"
    FALSE_VACUUM_LEFT = "false_vacuum_left"
    TRUE_VACUUM = "true_vacuum"


class FieldClosure(str, Enum):
    """Closure of the readout-field equation.

    ``factorized`` shifts the field by the population-weighted dispersive shift
    2 sum_s chi_s <P_s> <a>; ``correlator`` sums 2 chi_s <|s><s| a> over the
    tracked state-field correlators.
    """
    FACTORIZED = "factorized"
    CORRELATOR = "correlator"


# Dressed states followed by drive and readout, in (matter1, link, matter2) order
TRACKED_LABELS = ("000", "001", "010", "100", "110")

# Gauge-invariant pair of the two-site model
GAUGE_INVARIANT_LABELS = ("001", "110")

# Directed decay channels of the five-level readout model
DECAY_CHANNELS = (
    ("110", "100"),
    ("110", "010"),
    ("100", "000"),
    ("010", "000"),
    ("001", "000"),
)


@dataclass(frozen=True)
class LatticeSpec:
    """Open chain of matter sites with background fields beyond both ends."""

    n_sites: int
    boundary_left: int = -1
    boundary_right: int = -1

    def __post_init__(self):
        if self.n_sites < 2:
            raise ValueError(f"n_sites must be >= 2, got {self.n_sites}")
        for name in ("boundary_left", "boundary_right"):
            if getattr(self, name) not in (-1, 1):
                raise ValueError(f"{name} must be +1 or -1")

    @property
    def n_links(self) -> int:
        return self.n_sites - 1

    def to_dict(self) -> dict:
        return {
            "n_sites": self.n_sites,
            "n_links": self.n_links,
            "boundary_left": self.boundary_left,
            "boundary_right": self.boundary_right,
        }


@dataclass(frozen=True)
class ChainConfig:
    """
    Computational-basis configuration of the chain.

    Bit 1 on a matter site means an occupied site (sigma^z = -1); bit 1 on a link
    means a field pointing right (tau^z = -1).
    """

    matter: Tuple[int, ...]
    links: Tuple[int, ...]

    def __post_init__(self):
        if len(self.links) != len(self.matter) - 1:
            raise ValueError("a chain of L sites has L-1 links")
        if any(b not in (0, 1) for b in self.matter + self.links):
            raise ValueError("configuration bits must be 0 or 1")

    @property
    def n_sites(self) -> int:
        return len(self.matter)

    @property
    def bits(self) -> str:
        """Interleaved bit string m1 l1 m2 l2 ... mL."""
        out = []
        for n, m in enumerate(self.matter):
            out.append(str(m))
            if n < len(self.links):
                out.append(str(self.links[n]))
        return "".join(out)

    @classmethod
    def from_bits(cls, bits: str) -> "ChainConfig":
        if len(bits) % 2 == 0 or set(bits) - {"0", "1"}:
            raise ValueError(f"not an interleaved chain bit string: {bits!r}")
        values = tuple(int(b) for b in bits)
        return cls(matter=values[0::2], links=values[1::2])

    def sigma_z(self, n: int) -> int:
        return 1 - 2 * self.matter[n - 1]

    def tau_z(self, k: int) -> int:
        return 1 - 2 * self.links[k - 1]

    def __str__(self) -> str:
        return f"|{self.bits}>"


@dataclass
class GaugeSector:
    """Configurations annihilated by every Gauss generator, in lexicographic order."""

    lattice: LatticeSpec
    states: List[ChainConfig]
    index_of: Dict[ChainConfig, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.index_of:
            self.index_of = {c: i for i, c in enumerate(self.states)}

    @property
    def dim(self) -> int:
        return len(self.states)

    def __len__(self) -> int:
        return len(self.states)

    def matter_bits(self) -> np.ndarray:
        """Occupation bits as an array of shape (dim, L)."""
        return np.array([c.matter for c in self.states], dtype=float).reshape(self.dim, -1)

    def link_bits(self) -> np.ndarray:
        return np.array([c.links for c in self.states], dtype=float).reshape(self.dim, -1)

    def to_dict(self) -> dict:
        return {
            "lattice": self.lattice.to_dict(),
            "dimension": self.dim,
            "states": [c.bits for c in self.states],
        }


@dataclass(frozen=True)
class QlmParams:
    """
    Couplings of the spin-1/2 link model.

    ``site_masses`` and ``bond_couplings`` override the uniform ``mu`` and ``j``
    when site- or bond-dependent values are needed.
    """

    mu: float = 0.0
    j: float = 1.0
    site_masses: Optional[Tuple[float, ...]] = None
    bond_couplings: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if self.j < 0:
            raise ValueError("j must be non-negative")
        if self.bond_couplings is not None and any(x < 0 for x in self.bond_couplings):
            raise ValueError("bond couplings must be non-negative")

    def mass(self, n: int) -> float:
        return self.site_masses[n - 1] if self.site_masses is not None else self.mu

    def coupling(self, k: int) -> float:
        return self.bond_couplings[k - 1] if self.bond_couplings is not None else self.j


@dataclass
class CircuitParams:
    """Three-transmon device; all energies in rad/ns (hbar = 1)."""

    ec_matrix: np.ndarray
    ej1: float
    ej3: float
    ej_sum: float
    dej: float
    flux_bias: float = 0.0

    def __post_init__(self):
        self.ec_matrix = np.array(self.ec_matrix, dtype=float)
        if self.ec_matrix.shape != (3, 3):
            raise ValueError("ec_matrix must be 3x3")
        if not np.allclose(self.ec_matrix, self.ec_matrix.T, rtol=0, atol=1e-14 * np.max(np.abs(self.ec_matrix))):
            raise ValueError("ec_matrix must be symmetric")
        if np.any(np.diag(self.ec_matrix) <= 0):
            raise ValueError("charging energies must be positive")
        if min(self.ej1, self.ej3, self.ej_sum) <= 0:
            raise ValueError("Josephson energies must be positive")
        if abs(self.dej) >= self.ej_sum:
            raise ValueError("|dej| must be smaller than ej_sum")

    @property
    def ej_values(self) -> Tuple[float, float, float]:
        """Zero-bias Josephson energies of the three transmons."""
        return (self.ej1, self.ej_sum, self.ej3)

    @property
    def asymmetry(self) -> float:
        return self.dej / self.ej_sum

    def to_dict(self) -> dict:
        from .numkit import rad_ns_to_ghz
        return {
            "ec_matrix_ghz": rad_ns_to_ghz(self.ec_matrix).tolist(),
            "ej1_ghz": rad_ns_to_ghz(self.ej1),
            "ej3_ghz": rad_ns_to_ghz(self.ej3),
            "ej_sum_ghz": rad_ns_to_ghz(self.ej_sum),
            "dej_ghz": rad_ns_to_ghz(self.dej),
            "flux_bias_phi0": self.flux_bias,
        }


@dataclass(frozen=True)
class TransmonBasis:
    """Charge cutoff per transmon and number of local levels kept."""

    charge_cutoff: int = 15
    levels_kept: int = 6

    def __post_init__(self):
        if self.charge_cutoff < 10:
            raise ValueError("charge_cutoff must be >= 10")
        if self.levels_kept < 4:
            raise ValueError("levels_kept must be >= 4")


@dataclass
class DressedSpectrum:
    """Eigenstates of the coupled circuit with bare-product labels."""

    energies: np.ndarray
    states: np.ndarray
    labels: Dict[str, int]
    overlaps: Dict[str, float]
    basis: TransmonBasis
    params: CircuitParams
    # Product-basis qubit-2 operators, used for SQUID matrix elements
    sin_phi2: np.ndarray = None
    cos_phi2: np.ndarray = None
    truncation_leakage: float = 0.0

    def energy(self, label: str) -> float:
        return float(self.energies[self.labels[label]])

    def transition(self, a: str, b: str) -> float:
        """Angular transition frequency a -> b in rad/ns."""
        return self.energy(b) - self.energy(a)

    def index(self, label: str) -> int:
        return self.labels[label]

    def to_dict(self) -> dict:
        from .numkit import rad_ns_to_ghz
        return {
            "labels": dict(self.labels),
            "overlaps": {k: float(v) for k, v in self.overlaps.items()},
            "energies_ghz": {k: rad_ns_to_ghz(self.energy(k) - self.energies[0]) for k in self.labels},
            "truncation_leakage": float(self.truncation_leakage),
        }


@dataclass(frozen=True)
class DriveSpec:
    """Parametric flux drive alpha_p(t) = A_p cos(omega_p t + phase)."""

    amplitude: float
    omega_p: float
    phase: float = 0.0
    rise_time: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.amplitude < 0.5:
            raise ValueError("amplitude must lie in [0, 0.5) flux quanta")
        if self.omega_p <= 0:
            raise ValueError("omega_p must be positive")
        if self.rise_time < 0:
            raise ValueError("rise_time must be non-negative")

    def flux(self, t: float) -> float:
        envelope = 1.0
        if self.rise_time > 0 and t < self.rise_time:
            envelope = np.sin(0.5 * np.pi * t / self.rise_time) ** 2
        return envelope * self.amplitude * np.cos(self.omega_p * t + self.phase)


@dataclass
class ChevronGrid:
    """Population of the dressed |110> vs drive frequency (rows) and time (columns)."""

    omega_p: np.ndarray
    times: np.ndarray
    populations: np.ndarray
    amplitude: float = 0.0

    def __post_init__(self):
        self.omega_p = np.asarray(self.omega_p, dtype=float)
        self.times = np.asarray(self.times, dtype=float)
        self.populations = np.asarray(self.populations, dtype=float)
        if self.populations.shape != (self.omega_p.size, self.times.size):
            raise ValueError("populations must have shape (len(omega_p), len(times))")
        if np.any(self.populations < -1e-6) or np.any(self.populations > 1 + 1e-6):
            raise ValueError("chevron populations must lie in [0, 1]")


@dataclass
class ReadoutParams:
    """
    One dispersively coupled resonator plus the five-level qubit model.

    Rates are in 1/ns, frequencies in rad/ns. ``gamma`` maps directed channels
    ("110", "100") to rates; reversed pairs are the thermal partners.
    """

    omega_r: float
    kappa_int: float
    kappa_ext: float
    chi: Dict[str, float]
    gamma: Dict[Tuple[str, str], float] = field(default_factory=dict)
    gamma_phi: float = 0.0
    alpha: float = 0.0
    resonator_id: int = 1

    def __post_init__(self):
        if self.kappa_int < 0 or self.kappa_ext < 0:
            raise ValueError("kappa_int and kappa_ext must be non-negative")
        if self.gamma_phi < 0 or any(g < 0 for g in self.gamma.values()):
            raise ValueError("decay and dephasing rates must be non-negative")
        missing = set(TRACKED_LABELS) - set(self.chi)
        if missing:
            raise ValueError(f"chi missing for states {sorted(missing)}")
        for (i, f), rate in self.gamma.items():
            forward = self.gamma.get((f, i))
            if (f, i) in DECAY_CHANNELS and forward is not None and rate > forward:
                raise ValueError(f"thermal rate {i}->{f} exceeds decay rate {f}->{i}")

    @property
    def kappa(self) -> float:
        return self.kappa_int + self.kappa_ext

    def rate(self, initial: str, final: str) -> float:
        return self.gamma.get((initial, final), 0.0)

    def shifted_frequency(self, state: str) -> float:
        """Resonator frequency with the qubits in ``state``."""
        return self.omega_r + 2.0 * self.chi[state]


@dataclass(frozen=True)
class PulseSchedule:
    """
    Rectangular three-body pulse on [0, t_evolve) followed by a rectangular
    readout pulse on [t_evolve, t_evolve + t_meas).

    ``detuning`` is omega_p - omega_3q; the qubit coherence rotates at omega_p and
    the field at ``omega_m``.
    """

    omega: complex
    detuning: float
    t_evolve: float
    epsilon: complex
    omega_m: float
    t_meas: float

    def __post_init__(self):
        if self.t_evolve < 0 or self.t_meas < 0:
            raise ValueError("pulse durations must be non-negative")

    @property
    def t_end(self) -> float:
        return self.t_evolve + self.t_meas

    def omega_at(self, t: float) -> complex:
        return self.omega if 0.0 <= t < self.t_evolve else 0.0

    def epsilon_at(self, t: float) -> complex:
        return self.epsilon if self.t_evolve <= t < self.t_end else 0.0


# Layout of the cavity-Bloch vector
POPULATION_SLICE = slice(0, 5)
COHERENCE_INDEX = 5
PHOTON_INDEX = 6
FIELD_INDEX = 7
CORRELATOR_SLICE = slice(8, 13)
COHERENCE_FIELD_INDEX = 13
COHERENCE_DAGGER_FIELD_INDEX = 14
CAVITY_BLOCH_SIZE = 15


@dataclass
class CavityBlochState:
    """
    Expectation values evolved by the cavity-Bloch equations.

    Populations and state-field correlators follow TRACKED_LABELS order.
    """

    vector: np.ndarray

    def __post_init__(self):
        self.vector = np.asarray(self.vector, dtype=complex).ravel()
        if self.vector.size != CAVITY_BLOCH_SIZE:
            raise ValueError(f"cavity-Bloch vector must have {CAVITY_BLOCH_SIZE} entries")

    @classmethod
    def from_populations(cls, populations: Dict[str, float], coherence: complex = 0.0) -> "CavityBlochState":
        vector = np.zeros(CAVITY_BLOCH_SIZE, dtype=complex)
        for i, label in enumerate(TRACKED_LABELS):
            vector[i] = populations.get(label, 0.0)
        vector[COHERENCE_INDEX] = coherence
        return cls(vector)

    @property
    def populations(self) -> Dict[str, float]:
        return {label: float(self.vector[i].real) for i, label in enumerate(TRACKED_LABELS)}

    @property
    def coherence(self) -> complex:
        return complex(self.vector[COHERENCE_INDEX])

    @property
    def photon_number(self) -> float:
        return float(self.vector[PHOTON_INDEX].real)

    @property
    def field(self) -> complex:
        return complex(self.vector[FIELD_INDEX])

    @property
    def correlators(self) -> Dict[str, complex]:
        return {label: complex(self.vector[8 + i]) for i, label in enumerate(TRACKED_LABELS)}


@dataclass(frozen=True)
class ChainSpec:
    """Transmon chain: 2*n_matter - 1 frequencies and nearest-neighbour ZZ shifts (rad/ns)."""

    n_matter: int
    omega: Tuple[float, ...]
    chi: Tuple[float, ...]

    def __post_init__(self):
        n_transmons = 2 * self.n_matter - 1
        if len(self.omega) != n_transmons:
            raise ValueError(f"expected {n_transmons} transmon frequencies, got {len(self.omega)}")
        if len(self.chi) != n_transmons - 1:
            raise ValueError(f"expected {n_transmons - 1} adjacent chi values, got {len(self.chi)}")

    @property
    def n_transmons(self) -> int:
        return 2 * self.n_matter - 1


@dataclass(frozen=True)
class TargetMasses:
    """Per-site mass terms mu_1 ... mu_n (rad/ns)."""

    mu: Tuple[float, ...]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.mu, dtype=float)
