"""U(1) spin-1/2 quantum link model on an open chain.

Gauge sector construction, Hamiltonians (restricted to the sector and on the
full qubit space), diagonal observables, exact time evolution, discrete
symmetries and the false-vacuum quench runs.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp

from .models import ChainConfig, GaugeSector, LatticeSpec, QlmParams, SymmetryKind, VacuumStart
from .numkit import Operator, SpectralPropagator, StateVector, eigh, kron_all, operator_from_coo

logger = logging.getLogger(__name__)

MAX_SECTOR_SITES = 16
MAX_QUENCH_SITES = 14
BULK_COUNT = 3


def _link_tau(c: ChainConfig, lattice: LatticeSpec, k: int) -> int:
    """tau^z on link k (between sites k and k+1), with the background fields at k=0 and k=L."""
    if k == 0:
        return lattice.boundary_left
    if k == lattice.n_sites:
        return lattice.boundary_right
    return c.tau_z(k)


def gauss_eigenvalue(c: ChainConfig, n: int, lattice: LatticeSpec) -> float:
    """
    Eigenvalue of the Gauss generator G_n on a basis configuration.

    Args:
        c: Chain configuration
        n: Site index, 1 <= n <= L
        lattice: Lattice providing the background fields beyond both ends

    Returns:
        1/2 [sigma^z_n - (-1)^n] - 1/2 (tau^z_{n,n+1} - tau^z_{n-1,n})
    """
    if not 1 <= n <= lattice.n_sites:
        raise ValueError(f"site index {n} outside 1..{lattice.n_sites}")
    if c.n_sites != lattice.n_sites:
        raise ValueError("configuration and lattice sizes differ")
    background = (-1) ** n
    return 0.5 * (c.sigma_z(n) - background) - 0.5 * (_link_tau(c, lattice, n) - _link_tau(c, lattice, n - 1))


def is_gauge_invariant(c: ChainConfig, lattice: LatticeSpec) -> bool:
    return all(gauss_eigenvalue(c, n, lattice) == 0 for n in range(1, lattice.n_sites + 1))


def enumerate_gauge_sector(lattice: LatticeSpec) -> GaugeSector:
    """
    List every configuration with G_n = 0 on all sites.

    Gauss's law fixes tau_{n,n+1} = tau_{n-1,n} + sigma_n - (-1)^n, so only the
    matter bits are branched on; taking bit 0 before bit 1 at each site yields
    lexicographic order of the interleaved pattern.

    Args:
        lattice: Lattice specification, 2 <= L <= 16

    Returns:
        GaugeSector with states in lexicographic order
    """
    if lattice.n_sites > MAX_SECTOR_SITES:
        raise ValueError(f"n_sites must be <= {MAX_SECTOR_SITES}, got {lattice.n_sites}")

    L = lattice.n_sites
    states: List[ChainConfig] = []

    def branch(n: int, tau_in: int, matter: List[int], links: List[int]):
        for bit in (0, 1):
            sigma = 1 - 2 * bit
            tau_out = tau_in + sigma - (-1) ** n
            if n == L:
                if tau_out == lattice.boundary_right:
                    states.append(ChainConfig(tuple(matter + [bit]), tuple(links)))
                continue
            if tau_out not in (-1, 1):
                continue
            branch(n + 1, tau_out, matter + [bit], links + [(1 - tau_out) // 2])

    branch(1, lattice.boundary_left, [], [])
    logger.debug(f"Gauge sector for L={L}: {len(states)} states")
    return GaugeSector(lattice=lattice, states=states)


def scan_gauge_sector(lattice: LatticeSpec) -> GaugeSector:
    """Exhaustive scan of all 2^(2L-1) configurations; reference for small chains."""
    n_bits = 2 * lattice.n_sites - 1
    states = []
    for index in range(2 ** n_bits):
        c = ChainConfig.from_bits(format(index, f"0{n_bits}b"))
        if is_gauge_invariant(c, lattice):
            states.append(c)
    return GaugeSector(lattice=lattice, states=states)


def hop(c: ChainConfig, k: int) -> Optional[ChainConfig]:
    """
    Apply sigma^+_k tau^+_{k,k+1} sigma^-_{k+1} to a configuration.

    Returns None when the term annihilates the configuration.
    """
    if c.matter[k - 1] == 1 and c.links[k - 1] == 1 and c.matter[k] == 0:
        matter = list(c.matter)
        links = list(c.links)
        matter[k - 1], links[k - 1], matter[k] = 0, 0, 1
        return ChainConfig(tuple(matter), tuple(links))
    return None


def hop_dagger(c: ChainConfig, k: int) -> Optional[ChainConfig]:
    """Hermitian conjugate of ``hop``."""
    if c.matter[k - 1] == 0 and c.links[k - 1] == 0 and c.matter[k] == 1:
        matter = list(c.matter)
        links = list(c.links)
        matter[k - 1], links[k - 1], matter[k] = 1, 1, 0
        return ChainConfig(tuple(matter), tuple(links))
    return None


def diagonal_energy(c: ChainConfig, p: QlmParams) -> float:
    """Staggered mass term (mu_n/2) (-1)^n sigma^z_n summed over sites."""
    return sum(0.5 * p.mass(n) * (-1) ** n * c.sigma_z(n) for n in range(1, c.n_sites + 1))


def build_qlm_hamiltonian(sector: GaugeSector, p: QlmParams) -> Operator:
    """
    Hamiltonian restricted to the gauge sector.

    Args:
        sector: Nonempty gauge sector
        p: Masses and three-body couplings

    Returns:
        Real symmetric operator (dense below 64 states, CSR otherwise)
    """
    if sector.dim == 0:
        raise ValueError("sector is empty")

    rows, cols, values = [], [], []
    for i, c in enumerate(sector.states):
        rows.append(i)
        cols.append(i)
        values.append(diagonal_energy(c, p))
        for k in range(1, sector.lattice.n_sites):
            target = hop(c, k)
            if target is None:
                continue
            j = sector.index_of.get(target)
            if j is None:
                continue
            rows.extend((j, i))
            cols.extend((i, j))
            values.extend((-p.coupling(k), -p.coupling(k)))

    return operator_from_coo(rows, cols, values, (sector.dim, sector.dim))


# Single-qubit operators in the (|0>, |1>) basis
_SIGMA_Z = sp.csr_matrix(np.diag([1.0, -1.0]))
_SIGMA_PLUS = sp.csr_matrix(np.array([[0.0, 1.0], [0.0, 0.0]]))
_SIGMA_MINUS = sp.csr_matrix(np.array([[0.0, 0.0], [1.0, 0.0]]))
_IDENTITY = sp.identity(2, format="csr")


def _embed(ops: Dict[int, sp.spmatrix], n_qubits: int) -> sp.csr_matrix:
    return sp.csr_matrix(kron_all(*[ops.get(q, _IDENTITY) for q in range(n_qubits)]))


def _matter_qubit(n: int) -> int:
    return 2 * (n - 1)


def _link_qubit(k: int) -> int:
    return 2 * k - 1


def build_full_hamiltonian(lattice: LatticeSpec, p: QlmParams) -> sp.csr_matrix:
    """
    Hamiltonian on the full 2^(2L-1) qubit space from Pauli operators.

    Qubits are ordered m1 l1 m2 ... mL with the first qubit most significant,
    so a configuration's index is int(c.bits, 2).
    """
    n_qubits = 2 * lattice.n_sites - 1
    dim = 2 ** n_qubits
    h = sp.csr_matrix((dim, dim), dtype=complex)
    for n in range(1, lattice.n_sites + 1):
        h = h + 0.5 * p.mass(n) * (-1) ** n * _embed({_matter_qubit(n): _SIGMA_Z}, n_qubits)
    for k in range(1, lattice.n_sites):
        term = _embed({
            _matter_qubit(k): _SIGMA_PLUS,
            _link_qubit(k): _SIGMA_PLUS,
            _matter_qubit(k + 1): _SIGMA_MINUS,
        }, n_qubits)
        h = h - p.coupling(k) * (term + term.conj().T)
    return h.tocsr()


def build_full_gauss_generator(lattice: LatticeSpec, n: int) -> sp.csr_matrix:
    """Gauss generator G_n on the full qubit space, background fields as multiples of identity."""
    n_qubits = 2 * lattice.n_sites - 1
    identity = sp.identity(2 ** n_qubits, format="csr")

    def tau(k: int):
        if k == 0:
            return lattice.boundary_left * identity
        if k == lattice.n_sites:
            return lattice.boundary_right * identity
        return _embed({_link_qubit(k): _SIGMA_Z}, n_qubits)

    sigma = _embed({_matter_qubit(n): _SIGMA_Z}, n_qubits)
    return (0.5 * (sigma - (-1) ** n * identity) - 0.5 * (tau(n) - tau(n - 1))).tocsr()


def full_space_indices(sector: GaugeSector) -> np.ndarray:
    """Positions of the sector states inside the full qubit space."""
    return np.array([int(c.bits, 2) for c in sector.states], dtype=int)


def project_to_sector(full_operator: sp.spmatrix, sector: GaugeSector) -> np.ndarray:
    idx = full_space_indices(sector)
    return full_operator.tocsr()[idx][:, idx].toarray()


def sector_leakage(full_operator: sp.spmatrix, sector: GaugeSector) -> float:
    """Largest weight a full-space operator moves from a sector state to outside the sector."""
    idx = full_space_indices(sector)
    outside = np.ones(full_operator.shape[0], dtype=bool)
    outside[idx] = False
    block = full_operator.tocsr()[:, idx].toarray()[outside]
    return float(np.max(np.abs(block))) if block.size else 0.0


def _amplitudes(state: Union[StateVector, np.ndarray]) -> np.ndarray:
    if isinstance(state, StateVector):
        return state.amplitudes
    return np.asarray(state, dtype=complex)


def particle_number(c_or_state: Union[ChainConfig, StateVector, np.ndarray], n: int,
                    sector: Optional[GaugeSector] = None) -> float:
    """
    Expectation of N_n = (1 - sigma^z_n)/2.

    Args:
        c_or_state: Basis configuration, or amplitudes on ``sector``
        n: Site index
        sector: Required for state vectors

    Returns:
        Occupation in [0, 1]
    """
    if isinstance(c_or_state, ChainConfig):
        if not 1 <= n <= c_or_state.n_sites:
            raise ValueError(f"site index {n} out of range")
        return float(c_or_state.matter[n - 1])
    if sector is None:
        raise ValueError("a sector is required to evaluate a state vector")
    if not 1 <= n <= sector.lattice.n_sites:
        raise ValueError(f"site index {n} out of range")
    probs = np.abs(_amplitudes(c_or_state)) ** 2
    return float(probs @ sector.matter_bits()[:, n - 1])


def electric_field(c_or_state: Union[ChainConfig, StateVector, np.ndarray], k: int,
                   sector: Optional[GaugeSector] = None) -> float:
    """Expectation of E_k = -tau^z_{k,k+1}."""
    if isinstance(c_or_state, ChainConfig):
        if not 1 <= k <= c_or_state.n_sites - 1:
            raise ValueError(f"link index {k} out of range")
        return float(-c_or_state.tau_z(k))
    if sector is None:
        raise ValueError("a sector is required to evaluate a state vector")
    if not 1 <= k <= sector.lattice.n_links:
        raise ValueError(f"link index {k} out of range")
    probs = np.abs(_amplitudes(c_or_state)) ** 2
    return float(probs @ (2.0 * sector.link_bits()[:, k - 1] - 1.0))


def gauss_expectations(sector: GaugeSector, state: Union[StateVector, np.ndarray]) -> np.ndarray:
    """<G_n> for every site; G_n is diagonal in the configuration basis."""
    probs = np.abs(_amplitudes(state)) ** 2
    table = np.array([[gauss_eigenvalue(c, n, sector.lattice) for n in range(1, sector.lattice.n_sites + 1)]
                      for c in sector.states])
    return probs @ table


def basis_state(sector: GaugeSector, c: ChainConfig) -> StateVector:
    if c not in sector.index_of:
        raise ValueError(f"{c} is not in the gauge sector")
    amplitudes = np.zeros(sector.dim, dtype=complex)
    amplitudes[sector.index_of[c]] = 1.0
    return StateVector(amplitudes, basis_tag=f"gauge-sector-L{sector.lattice.n_sites}")


def evolve(sector: GaugeSector, h: Operator, psi0: StateVector, times: Sequence[float]) -> List[StateVector]:
    """
    Exact evolution exp(-iHt)|psi0> at each requested time.

    Args:
        sector: Gauge sector the state lives on
        h: Sector Hamiltonian
        psi0: Normalized initial state in the sector basis
        times: Sample times (units of 1/J when J = 1)

    Returns:
        List of StateVector, one per time
    """
    if psi0.dim != sector.dim or h.shape != (sector.dim, sector.dim):
        raise ValueError(f"dimension mismatch: sector {sector.dim}, state {psi0.dim}, H {h.shape}")
    if not psi0.is_normalized():
        raise ValueError("initial state must be normalized")
    samples = SpectralPropagator(h).evolve(psi0.amplitudes, times)
    return [StateVector(row, basis_tag=psi0.basis_tag) for row in samples]


def symmetry_transform(c: ChainConfig, kind: Union[SymmetryKind, str],
                       lattice: LatticeSpec) -> Tuple[ChainConfig, LatticeSpec]:
    """
    Image of a configuration under parity or charge conjugation.

    Parity reflects the chain about a site and flips every link. For odd L the
    reflection centre is the middle site (n -> L+1-n) and the background fields go
    to (-b_R, -b_L). For even L the centre is site L/2+1 (n -> L+2-n), which keeps
    odd sites odd: site 1 is filled from the uniform background beyond the right
    edge (an uncharged odd site), the left background becomes -b_R and the old
    first link, flipped, becomes the new right background. On even chains parity is
    an involution for configurations whose first site carries no charge.

    Charge conjugation shifts by one site to the right, complementing occupations
    and flipping links. The site and link entering at the left edge come from the
    uniform background beyond the chain (an empty even site 0, link field b_L);
    the last link leaving on the right becomes the new right background.

    Args:
        c: Configuration
        kind: parity or charge_conjugation
        lattice: Lattice holding the background fields of ``c``

    Returns:
        Tuple of (image configuration, lattice with the image's background fields)
    """
    kind = SymmetryKind(kind)
    L = lattice.n_sites

    if kind == SymmetryKind.PARITY:
        if L % 2:
            matter = tuple(reversed(c.matter))
            links = tuple(1 - b for b in reversed(c.links))
            image_lattice = LatticeSpec(L, -lattice.boundary_right, -lattice.boundary_left)
            return ChainConfig(matter, links), image_lattice
        # Odd site beyond the right edge, uncharged in a uniform background
        matter = (1,) + tuple(reversed(c.matter[1:]))
        first_link = (1 + lattice.boundary_right) // 2  # flipped tau = -b_R
        links = (first_link,) + tuple(1 - b for b in reversed(c.links[1:]))
        image_lattice = LatticeSpec(L, -lattice.boundary_right, -_link_tau(c, lattice, 1))
        return ChainConfig(matter, links), image_lattice

    # Site 0 is even and, with a uniform background field, empty
    matter = (1,) + tuple(1 - b for b in c.matter[:-1])
    first_link = (1 + lattice.boundary_left) // 2  # flipped tau = -b_L
    links = (first_link,) + tuple(1 - b for b in c.links[:-1])
    right_background = -_link_tau(c, lattice, L - 1)
    image_lattice = LatticeSpec(L, -lattice.boundary_left, right_background)
    return ChainConfig(matter, links), image_lattice


def vacuum_configuration(n_sites: int, kind: Union[VacuumStart, str]) -> Tuple[ChainConfig, LatticeSpec]:
    """
    Reference vacua of the chain.

    False vacua fill the odd sites with all fields pointing one way; the true
    vacuum fills the even sites with alternating fields. On an odd chain the true
    vacuum ends on an empty odd site, so its right background points left.

    Returns:
        Tuple of (configuration, lattice whose background fields make it gauge invariant)
    """
    kind = VacuumStart(kind)
    odd_filled = tuple(1 if n % 2 == 1 else 0 for n in range(1, n_sites + 1))
    if kind == VacuumStart.FALSE_VACUUM_RIGHT:
        config = ChainConfig(odd_filled, (1,) * (n_sites - 1))
        lattice = LatticeSpec(n_sites, -1, -1)
    elif kind == VacuumStart.FALSE_VACUUM_LEFT:
        config = ChainConfig(odd_filled, (0,) * (n_sites - 1))
        lattice = LatticeSpec(n_sites, 1, 1)
    else:
        even_filled = tuple(1 - b for b in odd_filled)
        links = tuple(1 if k % 2 == 0 else 0 for k in range(1, n_sites))
        config = ChainConfig(even_filled, links)
        lattice = LatticeSpec(n_sites, -1, 1 if n_sites % 2 else -1)
    return config, lattice


def bulk_indices(count: int, parity: int, n_bulk: int = BULK_COUNT) -> List[int]:
    """
    The n_bulk odd (parity=1) or even (parity=0) indices among 1..count nearest the
    centre, lower index first on ties.
    """
    center = (count + 1) / 2.0
    candidates = [i for i in range(1, count + 1) if i % 2 == parity]
    candidates.sort(key=lambda i: (abs(i - center), i))
    return sorted(candidates[:n_bulk])


@dataclass
class FalseVacuumResult:
    """Bulk-averaged observables of one quench run."""

    n_sites: int
    mu_over_j: float
    start: str
    sector_dim: int
    times: np.ndarray
    n_odd: np.ndarray
    n_even: np.ndarray
    e_odd: np.ndarray
    e_even: np.ndarray
    total_flux: np.ndarray
    ground_state: Dict[str, float] = field(default_factory=dict)
    bulk_sites: Dict[str, List[int]] = field(default_factory=dict)
    max_gauss_violation: float = 0.0
    max_norm_error: float = 0.0
    energy_drift: float = 0.0

    def rows(self) -> List[Tuple[float, float, float, float, float]]:
        return list(zip(self.times, self.n_odd, self.n_even, self.e_odd, self.e_even))

    def to_dict(self) -> dict:
        return {
            "n_sites": self.n_sites,
            "mu_over_j": self.mu_over_j,
            "start": self.start,
            "sector_dim": self.sector_dim,
            "n_samples": int(self.times.size),
            "t_max_j_units": float(self.times[-1]) if self.times.size else 0.0,
            "bulk_sites": self.bulk_sites,
            "ground_state_reference": self.ground_state,
            "late_time_means": self.late_time_means(),
            "max_gauss_violation": self.max_gauss_violation,
            "max_norm_error": self.max_norm_error,
            "energy_drift": self.energy_drift,
        }

    def late_time_means(self) -> Dict[str, float]:
        half = self.times.size // 2
        return {
            "n_odd": float(np.mean(self.n_odd[half:])),
            "n_even": float(np.mean(self.n_even[half:])),
            "e_odd": float(np.mean(self.e_odd[half:])),
            "e_even": float(np.mean(self.e_even[half:])),
        }


def _bulk_observables(sector: GaugeSector, probs: np.ndarray, sites: Dict[str, List[int]]) -> Dict[str, np.ndarray]:
    occupation = probs @ sector.matter_bits()
    field_values = probs @ (2.0 * sector.link_bits() - 1.0)
    return {
        "n_odd": occupation[..., [i - 1 for i in sites["odd_sites"]]].mean(axis=-1),
        "n_even": occupation[..., [i - 1 for i in sites["even_sites"]]].mean(axis=-1),
        "e_odd": field_values[..., [k - 1 for k in sites["odd_links"]]].mean(axis=-1),
        "e_even": field_values[..., [k - 1 for k in sites["even_links"]]].mean(axis=-1),
        "total_flux": field_values.sum(axis=-1),
    }


def false_vacuum_experiment(n_sites: int, mu_over_j: float, t_max_in_j_units: float = 200.0,
                            start: Union[VacuumStart, str] = VacuumStart.FALSE_VACUUM_RIGHT,
                            n_samples: int = 2001) -> FalseVacuumResult:
    """
    Quench from a vacuum configuration and follow the bulk observables.

    Args:
        n_sites: Even chain length, at most 14
        mu_over_j: Mass in units of J (J = 1)
        t_max_in_j_units: End of the window in units of hbar/J
        start: Initial vacuum
        n_samples: Number of uniform time samples including t = 0

    Returns:
        FalseVacuumResult with the J-only ground-state reference attached
    """
    if n_sites % 2 or not 2 <= n_sites <= MAX_QUENCH_SITES:
        raise ValueError(f"n_sites must be even and between 2 and {MAX_QUENCH_SITES}, got {n_sites}")
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")

    start = VacuumStart(start)
    config, lattice = vacuum_configuration(n_sites, start)
    sector = enumerate_gauge_sector(lattice)
    logger.info(f"False-vacuum run: L={n_sites}, mu/J={mu_over_j}, start={start.value}, sector dim={sector.dim}")

    sites = {
        "odd_sites": bulk_indices(n_sites, 1),
        "even_sites": bulk_indices(n_sites, 0),
        "odd_links": bulk_indices(n_sites - 1, 1),
        "even_links": bulk_indices(n_sites - 1, 0),
    }

    h = build_qlm_hamiltonian(sector, QlmParams(mu=mu_over_j, j=1.0))
    psi0 = basis_state(sector, config)
    times = np.linspace(0.0, t_max_in_j_units, n_samples)
    propagator = SpectralPropagator(h)
    amplitudes = propagator.evolve(psi0.amplitudes, times)
    probs = np.abs(amplitudes) ** 2
    observables = _bulk_observables(sector, probs, sites)

    dense_h = h.toarray() if sp.issparse(h) else h
    energies = np.einsum("ti,ij,tj->t", amplitudes.conj(), dense_h, amplitudes).real
    gauss = probs @ np.array([[gauss_eigenvalue(c, n, lattice) for n in range(1, n_sites + 1)]
                              for c in sector.states])

    # Ground state of the hopping-only Hamiltonian as the equilibrium reference
    _, vectors = eigh(build_qlm_hamiltonian(sector, QlmParams(mu=0.0, j=1.0)))
    ground_probs = np.abs(vectors[:, 0]) ** 2
    reference = {k: float(v) for k, v in _bulk_observables(sector, ground_probs, sites).items()}

    return FalseVacuumResult(
        n_sites=n_sites,
        mu_over_j=mu_over_j,
        start=start.value,
        sector_dim=sector.dim,
        times=times,
        n_odd=observables["n_odd"],
        n_even=observables["n_even"],
        e_odd=observables["e_odd"],
        e_even=observables["e_even"],
        total_flux=observables["total_flux"],
        ground_state=reference,
        bulk_sites=sites,
        max_gauss_violation=float(np.max(np.abs(gauss))),
        max_norm_error=float(np.max(np.abs(np.linalg.norm(amplitudes, axis=1) - 1.0))),
        energy_drift=float(np.max(np.abs(energies - energies[0]))),
    )


def mu_sweep(n_sites: int, mu_values: Sequence[float], t_max_in_j_units: float = 200.0,
             start: Union[VacuumStart, str] = VacuumStart.FALSE_VACUUM_RIGHT, n_samples: int = 2001,
             max_workers: Optional[int] = None) -> List[FalseVacuumResult]:
    """Run false_vacuum_experiment for each mass; results come back in input order."""
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(
            lambda mu: false_vacuum_experiment(n_sites, mu, t_max_in_j_units, start, n_samples),
            mu_values,
        ))
