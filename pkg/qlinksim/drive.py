"""Parametric flux drive of the SQUID transmon and the three-body resonance it activates.

The drive is exact in the flux amplitude. Driven evolution runs in the lowest
dressed states of the static circuit. With a rectangular envelope the drive is
periodic, so the propagator over one drive period is integrated once and raised
to integer powers; a rise time falls back to direct integration.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import comb
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from scipy.optimize import curve_fit, least_squares

from .circuit import squid_matrix_elements
from .errors import FitError, PerturbationError
from .models import TRACKED_LABELS, ChevronGrid, DressedSpectrum, DriveSpec
from .numkit import UNITARY_ATOL, integrate_ode, rad_ns_to_ghz, rad_ns_to_mhz, schrodinger_rhs

logger = logging.getLogger(__name__)

DEFAULT_MAX_EXCITATIONS = 4
DRIVE_RTOL = 1e-10

# Chevron fit acceptance
MIN_RELIABLE_CONTRAST = 0.2
MAX_FIT_RMS = 0.05
DEGENERACY_FRACTION = 1e-4


def drive_hamiltonian(spec: DressedSpectrum, d: DriveSpec, t: float) -> np.ndarray:
    """
    Drive operator -E_J (cos(pi alpha) - 1) cos(phi_2) - dE_J sin(pi alpha) sin(phi_2).

    Args:
        spec: Zero-bias dressed spectrum (carries the product-basis SQUID operators)
        d: Drive
        t: Time (ns)

    Returns:
        Operator in the product basis of the static Hamiltonian
    """
    if spec.params.flux_bias != 0.0:
        raise ValueError("the drive is defined around zero DC flux bias")
    angle = np.pi * d.flux(t)
    p = spec.params
    return -p.ej_sum * (np.cos(angle) - 1.0) * spec.cos_phi2 - p.dej * np.sin(angle) * spec.sin_phi2


def zero_order_resonance(spec: DressedSpectrum) -> float:
    """Three-body resonance (E_110 - E_001) of the undriven circuit, rad/ns."""
    return spec.transition("001", "110")


class DressedDriveModel:
    """Static energies and SQUID operators restricted to the lowest dressed states."""

    def __init__(self, spec: DressedSpectrum, max_excitations: int = DEFAULT_MAX_EXCITATIONS):
        self.spec = spec
        self.size = min(comb(max_excitations + 3, 3), spec.energies.size)
        for label in TRACKED_LABELS:
            if spec.index(label) >= self.size:
                raise ValueError(f"dressed |{label}> lies outside the {self.size} kept states")

        sin_dressed, _ = squid_matrix_elements(spec)
        v = spec.states[:, :self.size]
        kept = slice(0, self.size)
        self.energies = spec.energies[kept] - spec.energies[0]
        self.sin_op = sin_dressed[kept, kept]
        self.cos_op = v.conj().T @ spec.cos_phi2 @ v
        self.ej = spec.params.ej_sum
        self.dej = spec.params.dej

    def hamiltonian(self, d: DriveSpec, t: float) -> np.ndarray:
        angle = np.pi * d.flux(t)
        h = -self.ej * (np.cos(angle) - 1.0) * self.cos_op - self.dej * np.sin(angle) * self.sin_op
        return h + np.diag(self.energies)

    def basis_state(self, label: str) -> np.ndarray:
        psi = np.zeros(self.size, dtype=complex)
        psi[self.spec.index(label)] = 1.0
        return psi


class PeriodicPropagator:
    """
    Evolution under a periodic drive from the propagator over a single period.

    U(t) = U(tau) U_T^n with t = n T + tau; U_T is applied through its Schur form
    with eigenvalues renormalized onto the unit circle.
    """

    def __init__(self, model: DressedDriveModel, d: DriveSpec, rtol: float = DRIVE_RTOL):
        if d.rise_time > 0:
            raise ValueError("a rise time breaks periodicity; use direct integration")
        self.period = 2.0 * np.pi / d.omega_p
        dim = model.size
        rhs = schrodinger_rhs(lambda t: model.hamiltonian(d, t))

        def matrix_rhs(t, y):
            return rhs(t, y.reshape(dim, dim)).ravel()

        traj = integrate_ode(matrix_rhs, np.eye(dim, dtype=complex).ravel(), (0.0, self.period),
                             rtol=rtol, atol=UNITARY_ATOL, dense_output=True)
        self._dense = traj.dense
        self._dim = dim
        u_period = traj.y[-1].reshape(dim, dim)
        schur_form, self._schur_vectors = scipy.linalg.schur(u_period, output="complex")
        eigenvalues = np.diag(schur_form)
        self._phases = eigenvalues / np.abs(eigenvalues)
        logger.debug(f"One-period propagator: {traj.n_evaluations} evaluations, "
                     f"unitarity defect {np.max(np.abs(np.abs(eigenvalues) - 1.0)):.2e}")

    def within_period(self, tau: float) -> np.ndarray:
        if tau == 0.0:
            return np.eye(self._dim, dtype=complex)
        return self._dense(tau).reshape(self._dim, self._dim)

    def evolve(self, psi0: np.ndarray, times: Sequence[float]) -> np.ndarray:
        """State at every requested time, shape (len(times), dim)."""
        z = self._schur_vectors
        coeffs = z.conj().T @ psi0
        out = np.empty((len(times), self._dim), dtype=complex)
        for i, t in enumerate(times):
            n = int(np.floor(t / self.period))
            tau = t - n * self.period
            psi_n = z @ (self._phases ** n * coeffs)
            out[i] = self.within_period(tau) @ psi_n
        return out


@dataclass
class DrivenEvolution:
    """Tracked dressed populations along a time grid."""

    times: np.ndarray
    populations: Dict[str, np.ndarray]
    norm_error: float
    leakage: np.ndarray

    def to_dict(self) -> dict:
        return {
            "times_ns": self.times.tolist(),
            "populations": {k: v.tolist() for k, v in self.populations.items()},
            "norm_error": self.norm_error,
            "max_leakage": float(np.max(self.leakage)) if self.leakage.size else 0.0,
        }


def evolve_driven(spec: DressedSpectrum, d: DriveSpec, t_grid: Sequence[float], psi0_label: str = "001",
                  max_excitations: int = DEFAULT_MAX_EXCITATIONS, rtol: float = DRIVE_RTOL,
                  model: Optional[DressedDriveModel] = None) -> DrivenEvolution:
    """
    Evolve a dressed eigenstate under the parametric drive.

    Args:
        spec: Zero-bias dressed spectrum
        d: Drive
        t_grid: Non-negative sample times (ns)
        psi0_label: Initial dressed state
        max_excitations: Keep the C(max_excitations + 3, 3) lowest dressed states
        rtol: Relative tolerance of the integrator
        model: Prebuilt restriction to reuse across drives

    Returns:
        DrivenEvolution with |<l|psi(t)>|^2 for the tracked labels
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(t_grid < 0):
        raise ValueError("t_grid must be non-negative")
    model = model or DressedDriveModel(spec, max_excitations)
    psi0 = model.basis_state(psi0_label)

    if d.rise_time > 0:
        rhs = schrodinger_rhs(lambda t: model.hamiltonian(d, t))
        traj = integrate_ode(rhs, psi0, (0.0, float(t_grid.max(initial=0.0))), rtol=rtol,
                             atol=UNITARY_ATOL, t_eval=t_grid)
        states = traj.y
    else:
        states = PeriodicPropagator(model, d, rtol=rtol).evolve(psi0, t_grid)

    probs = np.abs(states) ** 2
    populations = {label: probs[:, spec.index(label)] for label in TRACKED_LABELS}
    tracked = sum(populations.values())
    norm_error = float(np.max(np.abs(np.linalg.norm(states, axis=1) - 1.0))) if len(states) else 0.0
    leakage = 1.0 - populations["001"] - populations["110"]
    logger.debug(f"evolve_driven: norm error {norm_error:.2e}, "
                 f"untracked weight {float(np.max(1.0 - tracked, initial=0.0)):.2e}")
    return DrivenEvolution(times=t_grid, populations=populations, norm_error=norm_error, leakage=leakage)


def default_chevron_axes(center: float, j: float, n_freq: int = 41,
                         n_times: int = 101) -> Tuple[np.ndarray, np.ndarray]:
    """Drive frequencies spanning +-5J around ``center`` and times spanning three Rabi periods."""
    if j <= 0:
        raise ValueError("j must be positive")
    omega_p = np.linspace(center - 5.0 * j, center + 5.0 * j, n_freq)
    times = np.linspace(0.0, 3.0 * np.pi / j, n_times)
    return omega_p, times


def chevron_scan(spec: DressedSpectrum, omega_p_values: Sequence[float], times: Sequence[float],
                 amplitude: float, max_excitations: int = DEFAULT_MAX_EXCITATIONS,
                 max_workers: Optional[int] = None) -> ChevronGrid:
    """
    Population of dressed |110> after driving from |001>, over frequency and time.

    Args:
        spec: Zero-bias dressed spectrum
        omega_p_values: Drive frequencies (rad/ns)
        times: Drive durations (ns)
        amplitude: Flux amplitude A_p (flux quanta)
        max_excitations: Dressed-space truncation
        max_workers: Thread pool size; rows are computed independently

    Returns:
        ChevronGrid with one row per drive frequency
    """
    model = DressedDriveModel(spec, max_excitations)
    times = np.asarray(times, dtype=float)

    def row(omega_p: float) -> np.ndarray:
        result = evolve_driven(spec, DriveSpec(amplitude=amplitude, omega_p=float(omega_p)), times, model=model)
        return np.clip(result.populations["110"], 0.0, 1.0)

    logger.info(f"Chevron scan: {len(omega_p_values)} frequencies x {times.size} times at A_p={amplitude:.4g}")
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        rows = list(pool.map(row, omega_p_values))
    return ChevronGrid(omega_p=np.asarray(omega_p_values, dtype=float), times=times,
                       populations=np.vstack(rows), amplitude=amplitude)


def _rabi(t, amplitude, omega):
    return amplitude * np.sin(0.5 * omega * t) ** 2


def _dominant_frequency(times: np.ndarray, values: np.ndarray) -> float:
    dt = times[1] - times[0]
    n_fft = 8 * times.size
    spectrum = np.abs(np.fft.rfft(values - values.mean(), n=n_fft))
    freqs = np.fft.rfftfreq(n_fft, dt)
    spectrum[0] = 0.0
    return 2.0 * np.pi * freqs[int(np.argmax(spectrum))]


@dataclass
class ChevronFit:
    """Per-row Rabi fits and the extracted coupling and resonance."""

    j: float
    omega_3q: float
    contrast: np.ndarray
    rabi_frequency: np.ndarray
    rms: np.ndarray
    resonant_row: int

    def to_dict(self) -> dict:
        return {
            "j_mhz": rad_ns_to_mhz(self.j),
            "omega_3q_ghz": rad_ns_to_ghz(self.omega_3q),
            "resonant_row": self.resonant_row,
            "max_contrast": float(np.nanmax(self.contrast)),
        }


def fit_rabi_row(times: np.ndarray, populations: np.ndarray) -> Tuple[float, float, float]:
    """
    Fit P(t) = A sin^2(Omega t / 2) to one chevron row.

    Returns:
        Tuple of (A, Omega, rms residual); NaNs when the fit does not converge
    """
    guess_omega = _dominant_frequency(times, populations)
    guess_amp = float(np.clip(populations.max(), 1e-3, 1.0))
    try:
        popt, _ = curve_fit(_rabi, times, populations, p0=[guess_amp, guess_omega],
                            bounds=([0.0, 0.0], [1.05, np.inf]), maxfev=20000)
    except (RuntimeError, ValueError) as e:
        logger.debug(f"Rabi fit failed: {e}")
        return np.nan, np.nan, np.nan
    rms = float(np.sqrt(np.mean((_rabi(times, *popt) - populations) ** 2)))
    return float(popt[0]), float(popt[1]), rms


def extract_j_and_center(grid: ChevronGrid) -> ChevronFit:
    """
    Extract the three-body coupling J and resonance omega_3q from a chevron.

    Every row is fitted to A sin^2(Omega t/2). The resonance is the parabolic
    refinement of the contrast maximum; (J, omega_3q) are then refined together by
    least squares on Omega^2 = (2J)^2 + (omega_p - omega_3q)^2 over rows with
    usable contrast.

    Args:
        grid: Chevron with uniformly spaced times

    Returns:
        ChevronFit

    Raises:
        FitError: If the resonant row cannot be fitted
    """
    fits = np.array([fit_rabi_row(grid.times, row) for row in grid.populations])
    contrast, rabi, rms = fits[:, 0], fits[:, 1], fits[:, 2]
    if np.all(np.isnan(contrast)):
        raise FitError("no chevron row could be fitted")

    k = int(np.nanargmax(contrast))
    if not np.isfinite(rms[k]) or rms[k] > MAX_FIT_RMS:
        raise FitError(f"resonant row {k} fit residual {rms[k]:.3g} above {MAX_FIT_RMS}")

    omega_p = grid.omega_p
    center = omega_p[k]
    if 0 < k < omega_p.size - 1 and np.all(np.isfinite(contrast[k - 1:k + 2])):
        c_minus, c_0, c_plus = contrast[k - 1:k + 2]
        curvature = c_minus - 2.0 * c_0 + c_plus
        if curvature < 0:
            step = 0.5 * (omega_p[k + 1] - omega_p[k - 1])
            center = omega_p[k] + 0.5 * step * (c_minus - c_plus) / curvature

    usable = np.isfinite(rabi) & (contrast > MIN_RELIABLE_CONTRAST) & (rms < MAX_FIT_RMS)
    j0 = 0.5 * rabi[k]

    def residuals(x):
        j, w = x
        return np.sqrt(4.0 * j ** 2 + (omega_p[usable] - w) ** 2) - rabi[usable]

    if np.count_nonzero(usable) >= 3:
        result = least_squares(residuals, x0=[j0, center], x_scale=[j0, j0])
        j, center = float(abs(result.x[0])), float(result.x[1])
    else:
        j = float(j0)

    logger.info(f"Chevron fit: J/2pi = {rad_ns_to_mhz(j):.4f} MHz, "
                f"omega_3q/2pi = {rad_ns_to_ghz(center):.6f} GHz ({np.count_nonzero(usable)} rows)")
    return ChevronFit(j=j, omega_3q=float(center), contrast=contrast, rabi_frequency=rabi, rms=rms,
                      resonant_row=k)


def three_body_matrix_element(spec: DressedSpectrum) -> float:
    """|<110| sin(phi_2) |001>| in the dressed basis."""
    sin_dressed, _ = squid_matrix_elements(spec)
    return float(abs(sin_dressed[spec.index("110"), spec.index("001")]))


def perturbative_j(spec: DressedSpectrum, amplitude: float) -> float:
    """First-order coupling J = (pi dE_J / 2) |<110|sin phi_2|001>| A_p."""
    return 0.5 * np.pi * spec.params.dej * three_body_matrix_element(spec) * amplitude


def amplitude_for_j(spec: DressedSpectrum, j: float) -> float:
    """Drive amplitude whose first-order coupling equals ``j``."""
    element = three_body_matrix_element(spec)
    if spec.params.dej == 0.0 or element == 0.0:
        raise ValueError("no three-body coupling without SQUID asymmetry")
    return j / (0.5 * np.pi * spec.params.dej * element)


def _stark_sum(sin_dressed: np.ndarray, energies: np.ndarray, s: int, omega: float,
               skip: Dict[int, int]) -> float:
    """Sum_l |S_ls|^2 [1/(e_s - e_l + w) + 1/(e_s - e_l - w)], skipping resonant terms."""
    weights = np.abs(sin_dressed[:, s]) ** 2
    total = 0.0
    threshold = DEGENERACY_FRACTION * omega
    for sign in (1.0, -1.0):
        denominators = energies[s] - energies + sign * omega
        for l in np.nonzero(weights > 0)[0]:
            if l == s or skip.get(l) == sign:
                continue
            if abs(denominators[l]) < threshold:
                raise PerturbationError(f"near-degenerate denominator {denominators[l]:.3e} rad/ns "
                                        f"between dressed states {s} and {l}")
            total += weights[l] / denominators[l]
    return total


def perturbative_shift(spec: DressedSpectrum, amplitude: float, cos_only: bool = False) -> float:
    """
    Second-order shift of the three-body resonance.

    The static part averages -E_J (cos(pi alpha) - 1) over a period, giving
    (pi A_p)^2 E_J / 4 times the diagonal of cos(phi_2). The sin channel adds
    AC-Stark shifts with denominators e_s - e_l +- omega_3q, leaving out the
    resonant 001 <-> 110 term.

    Args:
        spec: Zero-bias dressed spectrum
        amplitude: Drive amplitude A_p
        cos_only: Only the static dispersion term

    Returns:
        Shift of omega_3q in rad/ns

    Raises:
        PerturbationError: On a near-degenerate non-resonant denominator
    """
    p = spec.params
    sin_dressed, cos_diag = squid_matrix_elements(spec)
    i110, i001 = spec.index("110"), spec.index("001")
    prefactor = (np.pi * amplitude) ** 2 / 4.0
    static = p.ej_sum * (cos_diag[i110] - cos_diag[i001])
    if cos_only or amplitude == 0.0:
        return prefactor * static

    omega = zero_order_resonance(spec)
    energies = spec.energies
    stark = (_stark_sum(sin_dressed, energies, i110, omega, skip={i001: -1.0})
             - _stark_sum(sin_dressed, energies, i001, omega, skip={i110: 1.0}))
    return prefactor * (p.dej ** 2 * stark + static)


@dataclass
class CouplingPoint:
    """Brute-force and perturbative coupling and resonance at one drive amplitude."""

    amplitude: float
    j_brute: float
    omega_brute: float
    j_first_order: float
    omega_cos_only: float
    omega_second_order: float
    grid: Optional[ChevronGrid] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "amplitude_phi0": self.amplitude,
            "j_brute_mhz": rad_ns_to_mhz(self.j_brute),
            "j_first_order_mhz": rad_ns_to_mhz(self.j_first_order),
            "omega_3q_brute_ghz": rad_ns_to_ghz(self.omega_brute),
            "omega_3q_cos_only_ghz": rad_ns_to_ghz(self.omega_cos_only),
            "omega_3q_second_order_ghz": rad_ns_to_ghz(self.omega_second_order),
        }


def coupling_curve(spec: DressedSpectrum, amplitudes: Optional[Sequence[float]] = None,
                   j_targets: Optional[Sequence[float]] = None, n_freq: int = 41, n_times: int = 101,
                   max_excitations: int = DEFAULT_MAX_EXCITATIONS,
                   max_workers: Optional[int] = None) -> List[CouplingPoint]:
    """
    J and omega_3q versus drive amplitude, brute force against perturbation theory.

    Each chevron is centred on the second-order resonance and spans +-5 J_pert.

    Args:
        spec: Zero-bias dressed spectrum
        amplitudes: Drive amplitudes A_p
        j_targets: Alternatively, first-order couplings (rad/ns) to convert into amplitudes
        n_freq: Chevron frequency points
        n_times: Chevron time points
        max_excitations: Dressed-space truncation
        max_workers: Thread pool size for each chevron

    Returns:
        One CouplingPoint per amplitude, with its chevron attached
    """
    if (amplitudes is None) == (j_targets is None):
        raise ValueError("give exactly one of amplitudes or j_targets")
    if amplitudes is None:
        amplitudes = [amplitude_for_j(spec, j) for j in j_targets]

    omega0 = zero_order_resonance(spec)
    points = []
    for n, amplitude in enumerate(amplitudes, 1):
        j_pert = perturbative_j(spec, amplitude)
        second = omega0 + perturbative_shift(spec, amplitude)
        cos_only = omega0 + perturbative_shift(spec, amplitude, cos_only=True)
        omega_p, times = default_chevron_axes(second, j_pert, n_freq, n_times)
        grid = chevron_scan(spec, omega_p, times, amplitude, max_excitations, max_workers)
        fit = extract_j_and_center(grid)
        logger.info(f"[{n}/{len(amplitudes)}] A_p={amplitude:.4g}: J brute/pert = "
                    f"{fit.j / j_pert:.4f}, shift brute {rad_ns_to_mhz(fit.omega_3q - omega0):.4f} MHz")
        points.append(CouplingPoint(amplitude=float(amplitude), j_brute=fit.j, omega_brute=fit.omega_3q,
                                    j_first_order=j_pert, omega_cos_only=cos_only,
                                    omega_second_order=second, grid=grid))
    return points
