"""Three-transmon circuit: charge-basis Hamiltonian, dressed spectrum, calibration.

Each transmon is diagonalized in its own charge basis (exact cos/sin shift
operators), the lowest ``levels_kept`` states are kept, and the capacitive
couplings are added in the product of those local eigenbases.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.constants
from scipy.optimize import linear_sum_assignment

from .errors import ConvergenceError, LabelingError
from .models import TRACKED_LABELS, CircuitParams, DressedSpectrum, TransmonBasis
from .numkit import eigh, kron_all, mhz_to_rad_ns, rad_ns_to_ghz

logger = logging.getLogger(__name__)

# Two-photon states labeled alongside the tracked ones
EXTRA_LABELS = ("200", "020", "002", "011", "101")
LABEL_THRESHOLD = 0.5
LEAKAGE_THRESHOLD = 1e-8

# e^2 / (2 hbar) for capacitances in fF, in rad/ns
_E2_OVER_2HBAR_FF = scipy.constants.e ** 2 / (2.0 * scipy.constants.hbar * 1e-15) * 1e-9


def charging_matrix_from_capacitances(c1: float, c2: float, c3: float,
                                      c12: float, c13: float, c23: float) -> np.ndarray:
    """
    Charging-energy matrix E_C = (e^2/2) M^-1 from the Maxwell capacitance matrix.

    Args:
        c1, c2, c3: Shunt capacitances (fF)
        c12, c13, c23: Coupling capacitances (fF)

    Returns:
        3x3 symmetric matrix in rad/ns
    """
    if min(c1, c2, c3) <= 0:
        raise ValueError("shunt capacitances must be positive")
    if min(c12, c13, c23) < 0:
        raise ValueError("coupling capacitances must be non-negative")
    maxwell = np.array([
        [c1 + c12 + c13, -c12, -c13],
        [-c12, c2 + c12 + c23, -c23],
        [-c13, -c23, c3 + c13 + c23],
    ], dtype=float)
    try:
        inverse = np.linalg.inv(maxwell)
    except np.linalg.LinAlgError as e:
        raise ValueError(f"capacitance matrix is singular: {e}") from e
    ec = _E2_OVER_2HBAR_FF * inverse
    return 0.5 * (ec + ec.T)


@dataclass
class LocalTransmon:
    """Lowest eigenstates of one transmon and its operators in that basis."""

    energies: np.ndarray
    n_op: np.ndarray
    cos_op: np.ndarray
    sin_op: np.ndarray
    leakage: float


def _charge_operators(cutoff: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    charges = np.arange(-cutoff, cutoff + 1, dtype=float)
    raise_op = np.diag(np.ones(2 * cutoff), k=-1).astype(complex)
    cos_op = 0.5 * (raise_op + raise_op.conj().T)
    sin_op = (raise_op - raise_op.conj().T) / 2j
    return np.diag(charges).astype(complex), cos_op, sin_op


def diagonalize_transmon(ec: float, ej_cos: float, ej_sin: float, basis: TransmonBasis) -> LocalTransmon:
    """
    Diagonalize H = 4 E_C n^2 - ej_cos cos(phi) - ej_sin sin(phi) in the charge basis.

    Args:
        ec: Charging energy (rad/ns)
        ej_cos: Josephson energy multiplying cos(phi)
        ej_sin: Josephson energy multiplying sin(phi)
        basis: Charge cutoff and number of levels kept

    Returns:
        LocalTransmon with operators projected onto the kept levels
    """
    n_op, cos_op, sin_op = _charge_operators(basis.charge_cutoff)
    h = 4.0 * ec * n_op @ n_op - ej_cos * cos_op - ej_sin * sin_op
    evals, evecs = eigh(h)
    kept = evecs[:, :basis.levels_kept]
    ground = np.abs(evecs[:, 0]) ** 2
    leakage = float(ground[0] + ground[-1])

    def project(op):
        return kept.conj().T @ op @ kept

    return LocalTransmon(
        energies=evals[:basis.levels_kept],
        n_op=project(n_op),
        cos_op=project(cos_op),
        sin_op=project(sin_op),
        leakage=leakage,
    )


def _local_transmons(p: CircuitParams, basis: TransmonBasis) -> List[LocalTransmon]:
    flux_angle = np.pi * p.flux_bias
    ec = np.diag(p.ec_matrix)
    transmons = [
        diagonalize_transmon(ec[0], p.ej1, 0.0, basis),
        diagonalize_transmon(ec[1], p.ej_sum * np.cos(flux_angle), p.dej * np.sin(flux_angle), basis),
        diagonalize_transmon(ec[2], p.ej3, 0.0, basis),
    ]
    worst = max(t.leakage for t in transmons)
    if worst > LEAKAGE_THRESHOLD:
        logger.warning(f"Charge cutoff {basis.charge_cutoff} too small: ground-state weight "
                       f"{worst:.2e} at the truncation edge")
    return transmons


def _embed(op: np.ndarray, position: int, levels: int) -> np.ndarray:
    identity = np.eye(levels, dtype=complex)
    factors = [identity, identity, identity]
    factors[position] = op
    return kron_all(*factors)


def _assemble(p: CircuitParams, basis: TransmonBasis) -> Tuple[np.ndarray, List[LocalTransmon]]:
    transmons = _local_transmons(p, basis)
    levels = basis.levels_kept
    h = np.zeros((levels ** 3, levels ** 3), dtype=complex)
    for j, t in enumerate(transmons):
        h += _embed(np.diag(t.energies).astype(complex), j, levels)
    for j, k in ((0, 1), (0, 2), (1, 2)):
        ec_jk = p.ec_matrix[j, k]
        if ec_jk != 0.0:
            h += 8.0 * ec_jk * (_embed(transmons[j].n_op, j, levels) @ _embed(transmons[k].n_op, k, levels))
    return 0.5 * (h + h.conj().T), transmons


def build_static_hamiltonian(p: CircuitParams, basis: TransmonBasis) -> np.ndarray:
    """
    Static circuit Hamiltonian in the product of local transmon eigenbases.

    Args:
        p: Circuit parameters; qubit 2 sees E_J cos(pi Phi_b) and dE_J sin(pi Phi_b)
        basis: Truncation

    Returns:
        Hermitian matrix of dimension levels_kept^3
    """
    h, _ = _assemble(p, basis)
    return h


def bare_index(label: str, levels: int) -> int:
    n1, n2, n3 = (int(ch) for ch in label)
    return (n1 * levels + n2) * levels + n3


def _assign_labels(states: np.ndarray, levels: int, labels: Sequence[str],
                   strict_labels: Sequence[str]) -> Tuple[Dict[str, int], Dict[str, float]]:
    rows = [bare_index(label, levels) for label in labels]
    overlap = np.abs(states[rows, :]) ** 2
    row_ind, col_ind = linear_sum_assignment(-overlap)
    assignment = {labels[r]: int(c) for r, c in zip(row_ind, col_ind)}
    overlaps = {labels[r]: float(overlap[r, c]) for r, c in zip(row_ind, col_ind)}

    for label in strict_labels:
        if overlaps[label] <= LABEL_THRESHOLD:
            r = labels.index(label)
            top = np.argsort(overlap[r])[::-1][:3]
            raise LabelingError(label, [(int(i), float(overlap[r, i])) for i in top])
    return assignment, overlaps


def dressed_spectrum(p: CircuitParams, basis: TransmonBasis, labels: Sequence[str] = TRACKED_LABELS + EXTRA_LABELS,
                     strict_labels: Optional[Sequence[str]] = TRACKED_LABELS) -> DressedSpectrum:
    """
    Diagonalize the static Hamiltonian and label eigenstates by their bare product state.

    Labels are assigned jointly (maximal total overlap), so the map is injective.

    Args:
        p: Circuit parameters
        basis: Truncation
        labels: Bare labels n1n2n3 to assign
        strict_labels: Labels whose overlap must exceed 0.5; pass () to only record overlaps

    Returns:
        DressedSpectrum

    Raises:
        LabelingError: If a strict label has overlap <= 0.5
    """
    h, transmons = _assemble(p, basis)
    energies, states = eigh(h)
    levels = basis.levels_kept
    labels = [label for label in labels if max(int(ch) for ch in label) < levels]
    assignment, overlaps = _assign_labels(states, levels, list(labels), strict_labels or ())
    logger.debug(f"Dressed labels: { {k: round(v, 3) for k, v in overlaps.items()} }")

    return DressedSpectrum(
        energies=energies,
        states=states,
        labels=assignment,
        overlaps=overlaps,
        basis=basis,
        params=p,
        sin_phi2=_embed(transmons[1].sin_op, 1, levels),
        cos_phi2=_embed(transmons[1].cos_op, 1, levels),
        truncation_leakage=max(t.leakage for t in transmons),
    )


def single_photon_frequencies(spec: DressedSpectrum) -> np.ndarray:
    """Dressed transitions 000 -> 100, 010, 001 in rad/ns."""
    return np.array([spec.transition("000", label) for label in ("100", "010", "001")])


def transmon_frequency(ec: float, ej: float) -> float:
    """Transmon approximation hbar*omega = sqrt(8 E_C E_J) - E_C."""
    return float(np.sqrt(8.0 * ec * ej) - ec)


def ej_from_frequency(ec: float, omega: float) -> float:
    """Inverse of transmon_frequency."""
    return float((omega + ec) ** 2 / (8.0 * ec))


def _effective_ej(p: CircuitParams) -> np.ndarray:
    angle = np.pi * p.flux_bias
    ej2 = np.hypot(p.ej_sum * np.cos(angle), p.dej * np.sin(angle))
    return np.array([p.ej1, ej2, p.ej3])


def perturbative_couplings(p: CircuitParams) -> Tuple[np.ndarray, Dict[Tuple[int, int], float]]:
    """
    Bare frequencies and capacitive couplings in the transmon approximation.

    Returns:
        Tuple of (omega_0 per transmon, g keyed by zero-based pair), both rad/ns
    """
    ec = np.diag(p.ec_matrix)
    ej = _effective_ej(p)
    omega0 = np.sqrt(8.0 * ec * ej) - ec
    couplings = {}
    for j, k in ((0, 1), (0, 2), (1, 2)):
        couplings[(j, k)] = float(2.0 * p.ec_matrix[j, k] * (ej[j] * ej[k] / (4.0 * ec[j] * ec[k])) ** 0.25)
    return omega0, couplings


def ec_matrix_from_couplings(ec_diag: Sequence[float], ej: Sequence[float],
                             couplings: Dict[Tuple[int, int], float]) -> np.ndarray:
    """Off-diagonal charging energies that reproduce the given capacitive couplings."""
    ec = np.diag(np.asarray(ec_diag, dtype=float))
    for (j, k), g in couplings.items():
        scale = 2.0 * (ej[j] * ej[k] / (4.0 * ec[j, j] * ec[k, k])) ** 0.25
        ec[j, k] = ec[k, j] = g / scale
    return ec


def initial_circuit_params(omega: Sequence[float], ec_diag: Sequence[float],
                           couplings: Dict[Tuple[int, int], float], asymmetry: float = 0.3) -> CircuitParams:
    """
    Starting point for calibrate_ej from measured frequencies, charging energies and couplings.

    Args:
        omega: Target single-photon frequencies (rad/ns)
        ec_diag: E_C,jj (rad/ns)
        couplings: g_jk (rad/ns) keyed by zero-based pair
        asymmetry: dE_J / E_J of the SQUID

    Returns:
        CircuitParams at zero flux bias
    """
    ej = [ej_from_frequency(ec, w) for ec, w in zip(ec_diag, omega)]
    return CircuitParams(
        ec_matrix=ec_matrix_from_couplings(ec_diag, ej, couplings),
        ej1=ej[0],
        ej3=ej[2],
        ej_sum=ej[1],
        dej=asymmetry * ej[1],
    )


def calibrate_ej(targets: Sequence[float], p0: CircuitParams, basis: TransmonBasis,
                 coupling_targets: Optional[Dict[Tuple[int, int], float]] = None,
                 tol: float = mhz_to_rad_ns(0.1), max_iter: int = 100) -> CircuitParams:
    """
    Fit the Josephson energies so the dressed single-photon frequencies hit the targets.

    Each pass rescales E_J,j by ((target + E_C)/(measured + E_C))^2, the inverse of
    the transmon approximation. With ``coupling_targets`` the off-diagonal charging
    energies are re-derived from g_jk at the current E_J on every pass.

    Args:
        targets: Zero-bias dressed frequencies of qubits 1, 2, 3 (rad/ns)
        p0: Starting parameters (zero flux bias)
        basis: Truncation
        coupling_targets: Optional g_jk to hold fixed (rad/ns)
        tol: Convergence threshold on every frequency (rad/ns)
        max_iter: Iteration budget

    Returns:
        Calibrated CircuitParams

    Raises:
        ConvergenceError: If the budget is exhausted
    """
    targets = np.asarray(targets, dtype=float)
    ec = np.diag(p0.ec_matrix)
    asymmetry = p0.asymmetry
    ej = np.array(p0.ej_values, dtype=float)
    params = replace(p0, flux_bias=0.0)

    for iteration in range(1, max_iter + 1):
        ec_matrix = ec_matrix_from_couplings(ec, ej, coupling_targets) if coupling_targets else p0.ec_matrix
        params = replace(params, ec_matrix=ec_matrix, ej1=ej[0], ej_sum=ej[1], ej3=ej[2], dej=asymmetry * ej[1])
        spec = dressed_spectrum(params, basis, labels=TRACKED_LABELS, strict_labels=())
        measured = single_photon_frequencies(spec)
        error = measured - targets
        logger.debug(f"calibrate_ej iteration {iteration}: errors (MHz) {np.round(error / (2e-3 * np.pi), 4)}")
        if np.max(np.abs(error)) < tol:
            logger.info(f"E_J calibration converged after {iteration} iterations")
            return params
        ej = ej * ((targets + ec) / (measured + ec)) ** 2

    raise ConvergenceError(f"E_J calibration did not converge in {max_iter} iterations "
                           f"(residual {np.max(np.abs(error)):.3e} rad/ns)")


@dataclass
class FluxPoint:
    """Single-photon transitions at one flux bias."""

    phi_b: float
    omega: np.ndarray
    min_overlap: float


def spectrum_vs_flux(p: CircuitParams, phi_b_list: Sequence[float], basis: TransmonBasis,
                     max_workers: Optional[int] = None) -> List[FluxPoint]:
    """
    Single-photon transition frequencies across a flux sweep.

    Labels are recorded without the strict overlap check since the tunable qubit
    crosses the fixed ones.

    Args:
        p: Calibrated circuit parameters
        phi_b_list: Flux biases in units of Phi_0, within [-1/2, 1/2]
        basis: Truncation
        max_workers: Thread pool size

    Returns:
        List of FluxPoint in input order
    """
    for phi in phi_b_list:
        if abs(phi) > 0.5:
            raise ValueError(f"flux bias {phi} outside [-1/2, 1/2]")

    def point(phi: float) -> FluxPoint:
        spec = dressed_spectrum(replace(p, flux_bias=float(phi)), basis, labels=TRACKED_LABELS, strict_labels=())
        singles = ("100", "010", "001")
        return FluxPoint(float(phi), single_photon_frequencies(spec), min(spec.overlaps[s] for s in singles))

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(point, phi_b_list))


def squid_matrix_elements(spec: DressedSpectrum) -> Tuple[np.ndarray, np.ndarray]:
    """
    sin(phi_2) and cos(phi_2) in the dressed eigenbasis.

    Returns:
        Tuple of (full <l|sin phi_2|m> matrix, diagonal <l|cos phi_2|l>)
    """
    v = spec.states
    sin_dressed = v.conj().T @ spec.sin_phi2 @ v
    cos_dressed = v.conj().T @ spec.cos_phi2 @ v
    return sin_dressed, np.real(np.diag(cos_dressed))


def transition_table(spec: DressedSpectrum, pairs: Sequence[Tuple[str, str]]) -> Dict[Tuple[str, str], float]:
    """
    Model transition frequencies in GHz for (initial, final) pairs.

    Two-photon transitions out of the ground state are quoted per photon.
    """
    table = {}
    for a, b in pairs:
        if a not in spec.labels or b not in spec.labels:
            continue
        photons = abs(sum(int(ch) for ch in b) - sum(int(ch) for ch in a))
        table[(a, b)] = rad_ns_to_ghz(spec.transition(a, b)) / max(photons, 1)
    return table


def sum_rule_residual(spec: DressedSpectrum) -> float:
    """omega(000->010) + omega(010->110) - omega(000->100) - omega(100->110), rad/ns."""
    return (spec.transition("000", "010") + spec.transition("010", "110")
            - spec.transition("000", "100") - spec.transition("100", "110"))


def cross_kerr(spec: DressedSpectrum, a: str = "100", b: str = "010") -> float:
    """ZZ shift E(a+b) - E(a) - E(b) + E(000) for two single-excitation labels."""
    combined = "".join(str(int(x) + int(y)) for x, y in zip(a, b))
    return spec.energy(combined) - spec.energy(a) - spec.energy(b) + spec.energy("000")


def all_labels(levels: int, max_excitations: int) -> List[str]:
    """Bare labels with at most ``max_excitations`` quanta in total."""
    labels = []
    for n in product(range(min(levels, max_excitations + 1)), repeat=3):
        if sum(n) <= max_excitations:
            labels.append("".join(str(x) for x in n))
    return labels
