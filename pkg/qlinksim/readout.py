"""Dispersive readout with the cavity-Bloch equations.

The five-level qubit model (000, 001, 010, 100, 110) is coupled to one readout
resonator. Higher moments are factorized into products of tracked expectation
values, e.g. <a^dag a |110><001|> -> <a^dag a><|110><001|>. The qubit coherence
rotates at the drive frequency omega_p and the field at the readout frequency
omega_m.

The field equation takes its dispersive shift from the populations by default,
2 sum_s chi_s <P_s> <a>. The correlator closure replaces it with
2 sum_s chi_s <|s><s| a>; then <a> stays the sum of the correlators and, with a
linear resonator (alpha = 0) and the three-body pulse off, the readout stage is
linear time-invariant in the start-of-readout populations (``readout_kernel``).
``readout_fields`` is the fast path for either closure; ``integrate_cavity_bloch``
always integrates the full set.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg

from .invariants import assert_invariants, check_cavity_bloch
from .models import (
    CAVITY_BLOCH_SIZE,
    COHERENCE_DAGGER_FIELD_INDEX,
    COHERENCE_FIELD_INDEX,
    COHERENCE_INDEX,
    CORRELATOR_SLICE,
    DECAY_CHANNELS,
    FIELD_INDEX,
    PHOTON_INDEX,
    POPULATION_SLICE,
    TRACKED_LABELS,
    CavityBlochState,
    FieldClosure,
    PulseSchedule,
    ReadoutParams,
)
from .numkit import DISSIPATIVE_ATOL, DISSIPATIVE_RTOL, integrate_ode

logger = logging.getLogger(__name__)

I000, I001, I010, I100, I110 = (TRACKED_LABELS.index(s) for s in ("000", "001", "010", "100", "110"))

# Initially thermal states before the pi pulse on qubit 3
THERMAL_LABELS = ("001", "100", "010")


def rate_matrix(rp: ReadoutParams) -> np.ndarray:
    """Generator R of the population rate equations dP/dt = R P (TRACKED_LABELS order)."""
    r = np.zeros((5, 5))
    for initial, final in DECAY_CHANNELS:
        for i, f in ((initial, final), (final, initial)):
            rate = rp.rate(i, f)
            if rate:
                r[TRACKED_LABELS.index(f), TRACKED_LABELS.index(i)] += rate
                r[TRACKED_LABELS.index(i), TRACKED_LABELS.index(i)] -= rate
    return r


def coherence_decay(rp: ReadoutParams) -> float:
    """Decay of the 110/001 coherence: half the 110 and 001 decay rates plus pure dephasing."""
    return 0.5 * (rp.rate("110", "100") + rp.rate("110", "010") + rp.rate("001", "000")) + rp.gamma_phi


def _chi_vector(rp: ReadoutParams) -> np.ndarray:
    return np.array([rp.chi[s] for s in TRACKED_LABELS])


def cavity_bloch_rhs(rp: ReadoutParams, sched: PulseSchedule,
                     closure: Union[FieldClosure, str] = FieldClosure.FACTORIZED):
    """Right-hand side of the fifteen factorized cavity-Bloch equations."""
    correlator_closure = FieldClosure(closure) == FieldClosure.CORRELATOR
    r = rate_matrix(rp)
    chi = _chi_vector(rp)
    chi_001, chi_110 = chi[I001], chi[I110]
    gamma_c = coherence_decay(rp)
    kappa = rp.kappa
    delta_r = rp.omega_r - sched.omega_m
    # frame of the coherence: omega_110 - omega_001 - omega_p
    delta_q = -sched.detuning

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        om = sched.omega_at(t)
        eps = sched.epsilon_at(t)
        p = y[POPULATION_SLICE]
        c = y[COHERENCE_INDEX]
        n = y[PHOTON_INDEX].real
        a = y[FIELD_INDEX]
        corr = y[CORRELATOR_SLICE]
        ca = y[COHERENCE_FIELD_INDEX]
        cda = y[COHERENCE_DAGGER_FIELD_INDEX]
        shift = delta_r + 2.0 * rp.alpha * n

        dy = np.empty(CAVITY_BLOCH_SIZE, dtype=complex)

        dp = r @ p
        flow = -1j * (np.conj(om) * np.conj(c) - om * c)
        dp[I001] += flow
        dp[I110] -= flow
        dy[POPULATION_SLICE] = dp

        dy[COHERENCE_INDEX] = ((1j * (delta_q + 2.0 * (chi_110 - chi_001) * n) - gamma_c) * c
                               + 1j * np.conj(om) * (p[I001] - p[I110]))

        dy[PHOTON_INDEX] = -1j * eps * np.conj(a) + 1j * np.conj(eps) * a - kappa * n
        dispersive = 2.0 * np.dot(chi, corr) if correlator_closure else 2.0 * np.dot(chi, p.real) * a
        dy[FIELD_INDEX] = -1j * shift * a - 1j * dispersive - 1j * eps - 0.5 * kappa * a

        dcorr = -1j * (shift + 2.0 * chi) * corr - 1j * eps * p - 0.5 * kappa * corr + r @ corr
        flow_a = -1j * (np.conj(om) * cda - om * ca)
        dcorr[I001] += flow_a
        dcorr[I110] -= flow_a
        dy[CORRELATOR_SLICE] = dcorr

        damping = gamma_c + 0.5 * kappa + 1j * shift
        dy[COHERENCE_FIELD_INDEX] = ((1j * (2.0 * (chi_110 - chi_001) * n - 2.0 * chi_001 + delta_q) - damping) * ca
                                     + 1j * np.conj(om) * (corr[I001] - corr[I110]) - 1j * eps * c)
        dy[COHERENCE_DAGGER_FIELD_INDEX] = ((1j * (2.0 * (chi_001 - chi_110) * n - 2.0 * chi_110 - delta_q) - damping) * cda
                                            - 1j * om * (corr[I001] - corr[I110]) - 1j * eps * np.conj(c))
        return dy

    return rhs


@dataclass
class CavityBlochTrajectory:
    """Sampled cavity-Bloch vectors, shape (n_samples, 15)."""

    times: np.ndarray
    vectors: np.ndarray

    def state(self, i: int) -> CavityBlochState:
        return CavityBlochState(self.vectors[i])

    @property
    def populations(self) -> np.ndarray:
        return self.vectors[:, POPULATION_SLICE].real

    @property
    def field(self) -> np.ndarray:
        return self.vectors[:, FIELD_INDEX]

    @property
    def coherence(self) -> np.ndarray:
        return self.vectors[:, COHERENCE_INDEX]


def _segment_schedule(sched: PulseSchedule, t: float) -> PulseSchedule:
    """Schedule holding the pulse values at ``t`` constant over all times."""
    epsilon = sched.epsilon_at(t)
    if epsilon:
        return replace(sched, omega=0.0, epsilon=epsilon, t_evolve=0.0, t_meas=np.inf)
    return replace(sched, omega=sched.omega_at(t), epsilon=0.0, t_evolve=np.inf, t_meas=0.0)


def integrate_cavity_bloch(rp: ReadoutParams, sched: PulseSchedule, y0: CavityBlochState,
                           t_grid: Sequence[float], rtol: float = DISSIPATIVE_RTOL,
                           atol: float = DISSIPATIVE_ATOL, check: bool = True,
                           closure: Union[FieldClosure, str] = FieldClosure.FACTORIZED) -> CavityBlochTrajectory:
    """
    Integrate the cavity-Bloch equations from t = 0.

    The evolve and readout windows are integrated as separate segments so the
    stepper never crosses a pulse edge.

    Args:
        rp: Resonator and qubit rates
        sched: Three-body and readout pulses
        y0: State at t = 0
        t_grid: Increasing non-negative sample times (ns)
        rtol: Relative tolerance
        atol: Absolute tolerance
        check: Evaluate the trajectory invariants
        closure: Closure of the field equation

    Returns:
        CavityBlochTrajectory sampled on t_grid

    Raises:
        IntegrationError: If the stepper fails
        InvariantViolation: If populations, photon number or coherence leave their bounds
    """
    closure = FieldClosure(closure)
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size == 0 or np.any(np.diff(t_grid) < 0) or t_grid[0] < 0:
        raise ValueError("t_grid must be non-empty, non-negative and increasing")

    edges = [0.0] + [e for e in (sched.t_evolve, sched.t_end) if 0.0 < e < t_grid[-1]] + [float(t_grid[-1])]
    y = np.asarray(y0.vector, dtype=complex)
    samples = np.empty((t_grid.size, CAVITY_BLOCH_SIZE), dtype=complex)
    samples[t_grid == 0.0] = y

    for start, stop in zip(edges[:-1], edges[1:]):
        if stop <= start:
            continue
        inside = (t_grid > start) & (t_grid <= stop)
        t_eval = np.unique(np.concatenate([t_grid[inside], [stop]]))
        traj = integrate_ode(cavity_bloch_rhs(rp, _segment_schedule(sched, 0.5 * (start + stop)), closure), y,
                             (start, stop), rtol=rtol, atol=atol, t_eval=t_eval)
        samples[inside] = traj.y[np.searchsorted(t_eval, t_grid[inside])]
        y = traj.y[-1]

    result = CavityBlochTrajectory(times=t_grid, vectors=samples)
    if check:
        ok, reasons = check_cavity_bloch(samples, field_sum=closure == FieldClosure.CORRELATOR)
        if not ok:
            logger.error(f"Cavity-Bloch invariants violated: {reasons}")
        assert_invariants(ok, reasons, context="cavity-Bloch integration")
    return result


def output_signal(traj: CavityBlochTrajectory, rp: ReadoutParams, sched: PulseSchedule) -> np.ndarray:
    """Transmitted hanger signal epsilon_m(t) - (i/2) kappa_ext <a(t)>."""
    eps = np.array([sched.epsilon_at(t) for t in traj.times], dtype=complex)
    return eps - 0.5j * rp.kappa_ext * traj.field


def steady_state_field(rp: ReadoutParams, state: str, epsilon: complex, omega_m: float) -> complex:
    """<a> of a linear resonator driven at omega_m with the qubits frozen in ``state``."""
    return -1j * epsilon / (1j * (rp.shifted_frequency(state) - omega_m) + 0.5 * rp.kappa)


def initial_populations(thermal: Optional[Dict[str, float]] = None) -> Dict[str, float]:
    """
    Populations right after the pi pulse on qubit 3.

    The qubits start in a mixture of 000 with thermal 001, 100 and 010; the pulse
    swaps the 000 and 001 populations.
    """
    thermal = thermal or {}
    unknown = set(thermal) - set(THERMAL_LABELS)
    if unknown:
        raise ValueError(f"no thermal population allowed for {sorted(unknown)}")
    if any(v < 0 for v in thermal.values()) or sum(thermal.values()) >= 1.0:
        raise ValueError("thermal populations must be non-negative and sum below one")
    ground = 1.0 - sum(thermal.values())
    return {
        "000": thermal.get("001", 0.0),
        "001": ground,
        "010": thermal.get("010", 0.0),
        "100": thermal.get("100", 0.0),
        "110": 0.0,
    }


@dataclass
class ReadoutTrace:
    """Transmitted signal during one readout pulse, times relative to the pulse start."""

    resonator_id: int
    omega_m: float
    t_evolve: float
    times: np.ndarray
    signal: np.ndarray


def experiment_trace(rp: ReadoutParams, sched: PulseSchedule, t_meas_grid: Sequence[float],
                     thermal: Optional[Dict[str, float]] = None,
                     closure: Union[FieldClosure, str] = FieldClosure.FACTORIZED) -> ReadoutTrace:
    """
    Full experiment: thermal mixture, pi pulse, three-body evolution, readout.

    Args:
        rp: Resonator and qubit rates
        sched: Pulses; ``omega`` is the three-body coupling J and ``detuning`` is omega_p - omega_3q
        t_meas_grid: Sample times within the readout pulse (ns, from its start)
        thermal: Thermal populations of 001, 100, 010 before the pi pulse
        closure: Closure of the field equation

    Returns:
        ReadoutTrace
    """
    t_meas_grid = np.asarray(t_meas_grid, dtype=float)
    y0 = CavityBlochState.from_populations(initial_populations(thermal))
    grid = np.concatenate([[0.0], sched.t_evolve + t_meas_grid]) if sched.t_evolve > 0 else t_meas_grid
    traj = integrate_cavity_bloch(rp, sched, y0, grid, closure=closure)
    if sched.t_evolve > 0:
        traj = CavityBlochTrajectory(times=traj.times[1:], vectors=traj.vectors[1:])
    signal = output_signal(traj, rp, sched)
    return ReadoutTrace(resonator_id=rp.resonator_id, omega_m=sched.omega_m, t_evolve=sched.t_evolve,
                        times=t_meas_grid, signal=signal)


def _evolve_generator(rp: ReadoutParams, omega: complex, detuning: float) -> np.ndarray:
    """Linear generator of (P_000..P_110, c, c*) while the readout field is empty."""
    q = np.zeros((7, 7), dtype=complex)
    q[:5, :5] = rate_matrix(rp)
    gamma_c = coherence_decay(rp)
    # dP_001 = -i (Omega* c* - Omega c); dP_110 opposite
    q[I001, 5] += 1j * omega
    q[I001, 6] += -1j * np.conj(omega)
    q[I110, 5] -= 1j * omega
    q[I110, 6] -= -1j * np.conj(omega)
    q[5, 5] = -1j * detuning - gamma_c
    q[5, I001] += 1j * np.conj(omega)
    q[5, I110] -= 1j * np.conj(omega)
    q[6, 6] = 1j * detuning - gamma_c
    q[6, I001] += -1j * omega
    q[6, I110] -= -1j * omega
    return q


def evolve_qubits(rp: ReadoutParams, omega: complex, detuning: float, t_evolve: Sequence[float],
                  p0: Dict[str, float]) -> Tuple[np.ndarray, np.ndarray]:
    """
    Populations and coherence after the three-body pulse, from matrix exponentials.

    Args:
        rp: Rates
        omega: Three-body coupling
        detuning: omega_p - omega_3q
        t_evolve: Pulse durations (ns)
        p0: Populations at the start of the pulse

    Returns:
        Tuple of (populations (n, 5), coherence (n,))
    """
    q = _evolve_generator(rp, omega, detuning)
    x0 = np.zeros(7, dtype=complex)
    x0[:5] = [p0.get(s, 0.0) for s in TRACKED_LABELS]
    out = np.array([scipy.linalg.expm(q * t) @ x0 for t in np.asarray(t_evolve, dtype=float)])
    out = out.reshape(-1, 7)
    return out[:, :5].real, out[:, 5]


# Largest substep of the factorized field solver (ns)
FIELD_SUBSTEP = 0.5


def _uniform_grid(rp: ReadoutParams, t_meas_grid: Sequence[float]) -> np.ndarray:
    if rp.alpha != 0.0:
        raise ValueError("the readout fast path needs a linear resonator (alpha = 0)")
    times = np.asarray(t_meas_grid, dtype=float)
    if times[0] != 0.0 or (times.size > 2 and not np.allclose(np.diff(times), times[1] - times[0])):
        raise ValueError("t_meas_grid must be uniform and start at 0")
    return times


def readout_kernel(rp: ReadoutParams, epsilon: complex, omega_m: float,
                   t_meas_grid: Sequence[float]) -> np.ndarray:
    """
    Field response of a linear resonator to unit population in each qubit state.

    <a(t)> = kernel(t) @ P under the correlator closure, where P are the
    populations when the readout pulse starts. Decay during readout is included.

    Args:
        rp: Resonator and rates (alpha must be zero)
        epsilon: Readout drive amplitude
        omega_m: Readout frequency (rad/ns)
        t_meas_grid: Uniform grid starting at 0 (ns)

    Returns:
        Complex array of shape (n_t, 5)
    """
    times = _uniform_grid(rp, t_meas_grid)
    r = rate_matrix(rp)
    chi = _chi_vector(rp)
    m = np.zeros((10, 10), dtype=complex)
    m[:5, :5] = r
    m[5:, :5] = -1j * epsilon * np.eye(5)
    m[5:, 5:] = r + np.diag(-1j * (rp.omega_r - omega_m + 2.0 * chi) - 0.5 * rp.kappa)

    z = np.zeros((10, 5), dtype=complex)
    z[:5, :5] = np.eye(5)
    kernel = np.empty((times.size, 5), dtype=complex)
    kernel[0] = 0.0
    if times.size > 1:
        step = scipy.linalg.expm(m * (times[1] - times[0]))
        for k in range(1, times.size):
            z = step @ z
            kernel[k] = np.sum(z[5:], axis=0)
    return kernel


def _relaxation_factor(z: np.ndarray) -> np.ndarray:
    """(1 - exp(-z)) / z, with its series near z = 0."""
    small = np.abs(z) < 1e-4
    safe = np.where(small, 1.0, z)
    return np.where(small, 1.0 - z / 2.0 + z ** 2 / 6.0, (1.0 - np.exp(-safe)) / safe)


def factorized_fields(rp: ReadoutParams, epsilon: complex, omega_m: float, t_meas_grid: Sequence[float],
                      populations: np.ndarray, max_step: float = FIELD_SUBSTEP) -> np.ndarray:
    """
    <a(t)> under the factorized closure for a batch of start-of-readout populations.

    With the three-body pulse off the populations follow the rate equations in
    closed form, so the field obeys a scalar linear equation whose frequency
    omega_r - omega_m + 2 sum_s chi_s P_s(t) drifts with them. Each grid interval is
    split into substeps of at most ``max_step`` with the populations taken at the
    substep midpoints; the field is propagated exactly across each substep.

    Args:
        rp: Resonator and rates (alpha must be zero)
        epsilon: Readout drive amplitude
        omega_m: Readout frequency (rad/ns)
        t_meas_grid: Uniform grid starting at 0 (ns)
        populations: Start-of-readout populations, shape (n_traces, 5)
        max_step: Largest substep (ns)

    Returns:
        Complex array of shape (n_traces, n_t)
    """
    times = _uniform_grid(rp, t_meas_grid)
    p = np.atleast_2d(np.asarray(populations, dtype=float)).T.astype(complex)
    fields = np.zeros((p.shape[1], times.size), dtype=complex)
    if times.size < 2:
        return fields

    dt = times[1] - times[0]
    n_sub = max(1, int(np.ceil(dt / max_step)))
    h = dt / n_sub
    r = rate_matrix(rp)
    midpoints = np.array([scipy.linalg.expm(r * (j + 0.5) * h) for j in range(n_sub)])
    step = scipy.linalg.expm(r * dt)
    chi = _chi_vector(rp)
    delta_r = rp.omega_r - omega_m

    a = np.zeros(p.shape[1], dtype=complex)
    for k in range(1, times.size):
        p_mid = np.einsum("jab,bn->jan", midpoints, p)
        rate = 1j * (delta_r + 2.0 * np.einsum("a,jan->jn", chi, p_mid.real)) + 0.5 * rp.kappa
        source = -1j * epsilon * h * _relaxation_factor(rate * h)
        tail = np.cumsum(rate[::-1], axis=0)[::-1] - rate
        a = a * np.exp(-h * np.sum(rate, axis=0)) + np.sum(source * np.exp(-h * tail), axis=0)
        fields[:, k] = a
        p = step @ p
    return fields


def readout_fields(rp: ReadoutParams, epsilon: complex, omega_m: float, t_meas_grid: Sequence[float],
                   populations: np.ndarray,
                   closure: Union[FieldClosure, str] = FieldClosure.FACTORIZED) -> np.ndarray:
    """<a(t)> of a linear resonator for start-of-readout populations (n_traces, 5)."""
    if FieldClosure(closure) == FieldClosure.CORRELATOR:
        return np.atleast_2d(populations) @ readout_kernel(rp, epsilon, omega_m, t_meas_grid).T
    return factorized_fields(rp, epsilon, omega_m, t_meas_grid, populations)


def hanger_signal(rp: ReadoutParams, epsilon: complex, fields: np.ndarray) -> np.ndarray:
    """Transmitted signal epsilon - (i/2) kappa_ext <a> while the readout pulse is on."""
    return epsilon - 0.5j * rp.kappa_ext * fields


def kernel_trace(rp: ReadoutParams, sched: PulseSchedule, t_meas_grid: Sequence[float],
                 thermal: Optional[Dict[str, float]] = None,
                 closure: Union[FieldClosure, str] = FieldClosure.FACTORIZED) -> ReadoutTrace:
    """experiment_trace through the closed-form qubit evolution and readout fast path (alpha = 0)."""
    populations, _ = evolve_qubits(rp, sched.omega, sched.detuning, [sched.t_evolve], initial_populations(thermal))
    fields = readout_fields(rp, sched.epsilon, sched.omega_m, t_meas_grid, populations, closure)
    return ReadoutTrace(resonator_id=rp.resonator_id, omega_m=sched.omega_m, t_evolve=sched.t_evolve,
                        times=np.asarray(t_meas_grid, dtype=float), signal=hanger_signal(rp, sched.epsilon, fields)[0])


def default_readout_frequencies(rp: ReadoutParams, min_spacing: float = 1e-6) -> Dict[str, float]:
    """
    Ground-state frequency plus each distinct state-shifted frequency omega_r + 2 chi_s.

    States whose shifted frequency coincides with an earlier one are skipped.
    """
    frequencies: Dict[str, float] = {}
    for s in TRACKED_LABELS:
        f = rp.shifted_frequency(s)
        if all(abs(f - g) > min_spacing for g in frequencies.values()):
            frequencies[s] = f
    return frequencies


def synthesize_traces(readouts: Sequence[ReadoutParams], j: float, detuning: float, t_evolve: Sequence[float],
                      t_meas_grid: Sequence[float], epsilon: complex,
                      thermal: Optional[Dict[str, float]] = None,
                      omega_m: Optional[Dict[int, Sequence[float]]] = None, noise_sigma: float = 0.0,
                      scale: complex = 1.0, seed: int = 0, max_workers: Optional[int] = None,
                      closure: Union[FieldClosure, str] = FieldClosure.FACTORIZED) -> List[ReadoutTrace]:
    """
    Synthetic multi-frequency readout data set.

    Args:
        readouts: One ReadoutParams per resonator, all carrying the same qubit rates
        j: Three-body coupling (rad/ns)
        detuning: omega_p - omega_3q
        t_evolve: Evolution times (ns)
        t_meas_grid: Readout sample times from the pulse start (ns)
        epsilon: Readout amplitude
        thermal: Thermal populations before the pi pulse
        omega_m: Readout frequencies per resonator id (default_readout_frequencies otherwise)
        noise_sigma: Std of additive complex Gaussian noise per quadrature, relative to |epsilon|
        scale: Common complex gain applied to every trace
        seed: Noise seed
        max_workers: Thread pool size over (resonator, frequency)
        closure: Closure of the field equation

    Returns:
        Traces ordered by resonator, frequency and t_evolve
    """
    t_evolve = np.asarray(t_evolve, dtype=float)
    p0 = initial_populations(thermal)
    jobs = []
    for rp in readouts:
        freqs = omega_m.get(rp.resonator_id) if omega_m else None
        for w in (freqs if freqs is not None else default_readout_frequencies(rp).values()):
            jobs.append((rp, float(w)))

    def channel(job):
        rp, w = job
        if rp.alpha == 0.0:
            populations, _ = evolve_qubits(rp, j, detuning, t_evolve, p0)
            return hanger_signal(rp, epsilon, readout_fields(rp, epsilon, w, t_meas_grid, populations, closure))
        out = []
        for te in t_evolve:
            sched = PulseSchedule(omega=j, detuning=detuning, t_evolve=float(te), epsilon=epsilon,
                                  omega_m=w, t_meas=float(np.max(t_meas_grid)) + 1.0)
            out.append(experiment_trace(rp, sched, t_meas_grid, thermal, closure).signal)
        return np.array(out)

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        signals = list(pool.map(channel, jobs))

    rng = np.random.default_rng(seed)
    traces = []
    for (rp, w), block in zip(jobs, signals):
        for te, sig in zip(t_evolve, block):
            noisy = scale * sig
            if noise_sigma > 0:
                noisy = noisy + noise_sigma * abs(epsilon) * (rng.standard_normal(sig.size)
                                                              + 1j * rng.standard_normal(sig.size))
            traces.append(ReadoutTrace(resonator_id=rp.resonator_id, omega_m=w, t_evolve=float(te),
                                       times=np.asarray(t_meas_grid, dtype=float), signal=noisy))
    logger.info(f"Synthesized {len(traces)} traces over {len(jobs)} readout channels")
    return traces


# sigma^z = 1 - 2 * bit for (matter 1, link, matter 2)
_SPIN_Z = {s: tuple(1 - 2 * int(b) for b in s) for s in TRACKED_LABELS}


@dataclass
class GaugeDiagnostics:
    """Gauge-invariant weight, boundary Gauss generators and spin expectations over time."""

    p_inv: np.ndarray
    g1: np.ndarray
    g2: np.ndarray
    sigma_z1: np.ndarray
    tau_z: np.ndarray
    sigma_z2: np.ndarray

    def to_rows(self, times: Sequence[float]) -> List[dict]:
        return [
            {"t_evolve_ns": float(t), "P_inv": float(self.p_inv[i]), "G1": float(self.g1[i]),
             "G2": float(self.g2[i]), "sigma_z1": float(self.sigma_z1[i]), "tau_z": float(self.tau_z[i]),
             "sigma_z2": float(self.sigma_z2[i])}
            for i, t in enumerate(times)
        ]


def gauge_diagnostics(populations: Dict[str, Sequence[float]]) -> GaugeDiagnostics:
    """
    Diagnostics of the two-site model from the five state populations.

    G1 = sigma^z_1/2 - tau^z/2 and G2 = sigma^z_2/2 + tau^z/2, without the constant
    offsets, so both vanish on 001 and 110.

    Args:
        populations: Population trace per label in TRACKED_LABELS

    Returns:
        GaugeDiagnostics
    """
    p = {s: np.asarray(populations[s], dtype=float) for s in TRACKED_LABELS}

    def expect(index: int) -> np.ndarray:
        return sum(_SPIN_Z[s][index] * p[s] for s in TRACKED_LABELS)

    sigma_z1, tau_z, sigma_z2 = expect(0), expect(1), expect(2)
    return GaugeDiagnostics(
        p_inv=p["001"] + p["110"],
        g1=0.5 * sigma_z1 - 0.5 * tau_z,
        g2=0.5 * sigma_z2 + 0.5 * tau_z,
        sigma_z1=sigma_z1,
        tau_z=tau_z,
        sigma_z2=sigma_z2,
    )


def density_matrix_block(p001: float, p110: float, coherence: complex) -> np.ndarray:
    """2x2 density matrix on (001, 110); ``coherence`` is <|110><001|> = rho[001, 110]."""
    return np.array([[p001, coherence], [np.conj(coherence), p110]], dtype=complex)
