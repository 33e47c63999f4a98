"""Fit of qubit rates, thermal populations and the three-body drive to multi-frequency readout traces.

Every (resonator, readout frequency) channel gets its own complex gain, eliminated
in closed form (variable projection), so only the eleven physical parameters are
searched. Model traces come from the closed-form qubit evolution and the readout
fast path for the chosen field closure, so resonators must be linear (alpha = 0).
"""

import logging
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import least_squares

from .errors import FitError
from .models import DECAY_CHANNELS, TRACKED_LABELS, FieldClosure, ReadoutParams
from .readout import (
    THERMAL_LABELS,
    ReadoutTrace,
    density_matrix_block,
    evolve_qubits,
    hanger_signal,
    initial_populations,
    readout_fields,
)

logger = logging.getLogger(__name__)

PARAMETER_NAMES = (
    "gamma_110_100",
    "gamma_110_010",
    "gamma_100_000",
    "gamma_010_000",
    "gamma_001_000",
    "gamma_phi",
    "thermal_001",
    "thermal_100",
    "thermal_010",
    "j",
    "detuning",
)

# Upper bounds (1/ns, probability, rad/ns); lower bounds are 0 except the detuning
MAX_RATE = 1.0
MAX_THERMAL = 0.3
MAX_J = 1.0
MAX_DETUNING = 0.5

# Smallest parameter scales handed to the optimizer
SCALE_FLOORS = np.array([1e-5] * 6 + [1e-3] * 3 + [1e-5, 1e-5])

MIN_READOUT_FREQUENCIES = 3
DEFAULT_STARTS = 8


@dataclass
class FitParameters:
    """Physical parameters shared by every readout channel."""

    gamma: Dict[Tuple[str, str], float]
    gamma_phi: float
    thermal: Dict[str, float]
    j: float
    detuning: float = 0.0

    def to_vector(self) -> np.ndarray:
        return np.array([self.gamma.get(c, 0.0) for c in DECAY_CHANNELS]
                        + [self.gamma_phi]
                        + [self.thermal.get(s, 0.0) for s in THERMAL_LABELS]
                        + [self.j, self.detuning])

    @classmethod
    def from_vector(cls, x: Sequence[float]) -> "FitParameters":
        x = np.asarray(x, dtype=float)
        return cls(
            gamma={c: float(v) for c, v in zip(DECAY_CHANNELS, x[:5])},
            gamma_phi=float(x[5]),
            thermal={s: float(v) for s, v in zip(THERMAL_LABELS, x[6:9])},
            j=float(x[9]),
            detuning=float(x[10]),
        )

    def apply(self, rp: ReadoutParams) -> ReadoutParams:
        """Resonator parameters carrying these qubit rates."""
        return replace(rp, gamma=dict(self.gamma), gamma_phi=self.gamma_phi)

    def to_dict(self) -> dict:
        out = {name: float(v) for name, v in zip(PARAMETER_NAMES, self.to_vector())}
        for (i, f), rate in self.gamma.items():
            if rate > 0:
                out[f"lifetime_{i}_{f}_us"] = 1e-3 / rate
        return out


def _bounds() -> Tuple[np.ndarray, np.ndarray]:
    lower = np.zeros(len(PARAMETER_NAMES))
    upper = np.array([MAX_RATE] * 6 + [MAX_THERMAL] * 3 + [MAX_J, MAX_DETUNING])
    lower[-1] = -MAX_DETUNING
    return lower, upper


@dataclass
class _Channel:
    """Traces of one (resonator, readout frequency) pair, ordered by t_evolve."""

    rp: ReadoutParams
    omega_m: float
    times: np.ndarray
    data: np.ndarray  # shape (n_t_evolve, n_times)


def _group_channels(traces: Sequence[ReadoutTrace], readouts: Dict[int, ReadoutParams],
                    t_evolve: np.ndarray) -> List[_Channel]:
    grouped = defaultdict(dict)
    for tr in traces:
        if tr.resonator_id not in readouts:
            raise ValueError(f"no ReadoutParams for resonator {tr.resonator_id}")
        grouped[(tr.resonator_id, round(tr.omega_m, 12))][round(tr.t_evolve, 9)] = tr

    channels = []
    for (rid, omega_m), by_time in sorted(grouped.items()):
        ordered = [by_time.get(round(t, 9)) for t in t_evolve]
        if any(tr is None for tr in ordered):
            raise ValueError(f"channel ({rid}, {omega_m}) does not cover every t_evolve")
        times = ordered[0].times
        if any(tr.times.shape != times.shape or not np.allclose(tr.times, times) for tr in ordered):
            raise ValueError(f"channel ({rid}, {omega_m}) mixes readout time grids")
        channels.append(_Channel(rp=readouts[rid], omega_m=ordered[0].omega_m, times=times,
                                 data=np.array([tr.signal for tr in ordered])))

    per_resonator = defaultdict(int)
    for ch in channels:
        per_resonator[ch.rp.resonator_id] += 1
    for rid, count in per_resonator.items():
        if count < MIN_READOUT_FREQUENCIES:
            raise ValueError(f"resonator {rid} has {count} readout frequencies, "
                             f"at least {MIN_READOUT_FREQUENCIES} are needed")
    return channels


def _project(model: np.ndarray, data: np.ndarray, fit_offset: bool) -> Tuple[complex, complex]:
    """Complex gain (and offset) minimizing |data - gain * model - offset|."""
    m = model.ravel()
    d = data.ravel()
    if fit_offset:
        design = np.column_stack([m, np.ones_like(m)])
        coeffs, *_ = np.linalg.lstsq(design, d, rcond=None)
        return complex(coeffs[0]), complex(coeffs[1])
    norm = np.vdot(m, m).real
    return (complex(np.vdot(m, d) / norm) if norm > 0 else 1.0), 0.0


@dataclass
class PopulationFit:
    """Result of fit_populations."""

    params: FitParameters
    gains: Dict[Tuple[int, float], complex]
    offsets: Dict[Tuple[int, float], complex]
    t_evolve: np.ndarray
    populations: np.ndarray  # shape (n_t_evolve, 5)
    coherence: np.ndarray
    cost: float
    rms: float
    n_starts: int
    start_costs: List[float] = field(default_factory=list)
    closure: FieldClosure = FieldClosure.FACTORIZED

    def population_series(self) -> Dict[str, np.ndarray]:
        return {s: self.populations[:, i] for i, s in enumerate(TRACKED_LABELS)}

    def to_dict(self) -> dict:
        return {
            "parameters": self.params.to_dict(),
            "rms_residual": self.rms,
            "cost": self.cost,
            "n_starts": self.n_starts,
            "field_closure": FieldClosure(self.closure).value,
            "start_costs": [float(c) for c in self.start_costs],
            "gains": [{"resonator_id": k[0], "omega_m_rad_ns": k[1], "re": g.real, "im": g.imag}
                      for k, g in self.gains.items()],
            "t_evolve_ns": self.t_evolve.tolist(),
            "populations": {s: v.tolist() for s, v in self.population_series().items()},
        }


class _TraceModel:
    """Residuals of the trace model over all channels for a parameter vector."""

    def __init__(self, channels: List[_Channel], t_evolve: np.ndarray, epsilon: complex,
                 fit_offset: bool, pool: Optional[ThreadPoolExecutor], closure: FieldClosure):
        self.closure = closure
        self.channels = channels
        self.t_evolve = t_evolve
        self.epsilon = epsilon
        self.fit_offset = fit_offset
        self.pool = pool
        self.scale = abs(epsilon) if epsilon else 1.0

    def populations(self, params: FitParameters) -> Tuple[np.ndarray, np.ndarray]:
        rp = params.apply(self.channels[0].rp)
        return evolve_qubits(rp, params.j, params.detuning, self.t_evolve, initial_populations(params.thermal))

    def channel_model(self, params: FitParameters, populations: np.ndarray, ch: _Channel) -> np.ndarray:
        rp = params.apply(ch.rp)
        fields = readout_fields(rp, self.epsilon, ch.omega_m, ch.times, populations, self.closure)
        return hanger_signal(rp, self.epsilon, fields)

    def evaluate(self, x: np.ndarray):
        params = FitParameters.from_vector(x)
        populations, coherence = self.populations(params)

        def one(ch: _Channel):
            model = self.channel_model(params, populations, ch)
            gain, offset = _project(model, ch.data, self.fit_offset)
            return gain, offset, (ch.data - gain * model - offset).ravel()

        results = list(self.pool.map(one, self.channels)) if self.pool else [one(ch) for ch in self.channels]
        return params, populations, coherence, results

    def residuals(self, x: np.ndarray) -> np.ndarray:
        *_, results = self.evaluate(x)
        r = np.concatenate([res for _, _, res in results]) / self.scale
        return np.concatenate([r.real, r.imag])


def _starts(guess: np.ndarray, n_starts: int, rng: np.random.Generator) -> List[np.ndarray]:
    lower, upper = _bounds()
    starts = [np.clip(guess, lower, upper)]
    for _ in range(n_starts - 1):
        x = guess * np.exp(0.3 * rng.standard_normal(guess.size))
        x[-1] = guess[-1] + 0.2 * max(guess[-2], 1e-6) * rng.standard_normal()
        starts.append(np.clip(x, lower, upper))
    return starts


def fit_populations(traces: Sequence[ReadoutTrace], readouts: Dict[int, ReadoutParams], epsilon: complex,
                    guess: FitParameters, n_starts: int = DEFAULT_STARTS, seed: int = 0,
                    fit_offset: bool = False, max_rms: Optional[float] = None,
                    max_workers: Optional[int] = None,
                    closure: Union[FieldClosure, str] = FieldClosure.FACTORIZED) -> PopulationFit:
    """
    Fit rates, dephasing, thermal populations, J and detuning to readout traces.

    Args:
        traces: Traces covering every t_evolve on every (resonator, frequency) channel
        readouts: Characterized resonators by id (omega_r, kappa, chi); rates are fitted
        epsilon: Readout drive amplitude used for the model
        guess: Starting parameters
        n_starts: Local optimizations from perturbed starts; the lowest cost wins
        seed: Seed of the start perturbations
        fit_offset: Also fit a complex offset per channel
        max_rms: Largest acceptable rms residual relative to |epsilon|
        max_workers: Thread pool size for channel evaluation
        closure: Closure of the readout-field equation; must match the data

    Returns:
        PopulationFit

    Raises:
        ValueError: If fewer than three readout frequencies cover a resonator
        FitError: If no start converges, the residual exceeds max_rms, or a parameter sits at its upper bound
    """
    if not traces:
        raise ValueError("no traces to fit")
    for rp in readouts.values():
        if rp.alpha != 0.0:
            raise ValueError("fitting needs linear resonators (alpha = 0)")
    t_evolve = np.array(sorted({round(tr.t_evolve, 9) for tr in traces}))
    channels = _group_channels(traces, readouts, t_evolve)
    lower, upper = _bounds()
    rng = np.random.default_rng(seed)
    x_scale = np.maximum(np.abs(guess.to_vector()), SCALE_FLOORS)
    x_scale[-1] = max(abs(guess.j), SCALE_FLOORS[-1])

    best = None
    start_costs = []
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        model = _TraceModel(channels, t_evolve, epsilon, fit_offset, pool if max_workers != 1 else None,
                            FieldClosure(closure))
        for n, x0 in enumerate(_starts(guess.to_vector(), max(1, n_starts), rng), 1):
            try:
                result = least_squares(model.residuals, x0, bounds=(lower, upper), x_scale=x_scale,
                                       method="trf", xtol=1e-12, ftol=1e-12, gtol=1e-12, max_nfev=2000)
            except (ValueError, np.linalg.LinAlgError) as e:
                logger.warning(f"Fit start {n} failed: {e}")
                start_costs.append(float("nan"))
                continue
            start_costs.append(float(result.cost))
            logger.debug(f"Fit start {n}/{n_starts}: cost {result.cost:.6e}, nfev {result.nfev}")
            if best is None or result.cost < best.cost:
                best = result

        if best is None:
            raise FitError("no fit start converged")
        params, populations, coherence, results = model.evaluate(best.x)

    n_points = 2 * sum(ch.data.size for ch in channels)
    rms = float(np.sqrt(2.0 * best.cost / n_points))
    logger.info(f"Population fit: rms residual {rms:.3e}, J={params.j:.4e} rad/ns")

    at_upper = [name for name, x, u in zip(PARAMETER_NAMES, best.x, upper) if np.isclose(x, u, rtol=1e-6)]
    if at_upper:
        raise FitError(f"parameters at upper bound: {', '.join(at_upper)}")
    if max_rms is not None and rms > max_rms:
        raise FitError(f"fit residual {rms:.3e} above threshold {max_rms:.3e}")

    keys = [(ch.rp.resonator_id, ch.omega_m) for ch in channels]
    return PopulationFit(
        params=params,
        gains={k: g for k, (g, _, _) in zip(keys, results)},
        offsets={k: o for k, (_, o, _) in zip(keys, results)},
        t_evolve=t_evolve,
        populations=populations,
        coherence=coherence,
        cost=float(best.cost),
        rms=rms,
        n_starts=max(1, n_starts),
        start_costs=start_costs,
        closure=FieldClosure(closure),
    )


# Population step of the finite-difference field Jacobian
POPULATION_STEP = 1e-4


def rescaled_populations(traces: Sequence[ReadoutTrace], readouts: Dict[int, ReadoutParams],
                         epsilon: complex, fit: PopulationFit) -> Dict[str, np.ndarray]:
    """
    Populations read directly off the data using the fitted gains and readout model.

    For each t_evolve the gain-corrected field of every channel is expanded to first
    order around the fitted populations (exact under the correlator closure, where
    the field is linear in them). The ground-state population is taken from the fit
    and held fixed (the resonator ground frequency only sees P_000 + P_001 when
    qubit 3 does not shift it); the remaining four populations come from a linear
    least-squares inversion.

    Returns:
        Population trace per label in TRACKED_LABELS
    """
    channels = _group_channels(traces, readouts, fit.t_evolve)
    i000 = TRACKED_LABELS.index("000")
    others = [i for i in range(5) if i != i000]
    n_te = fit.t_evolve.size
    steps = POPULATION_STEP * np.eye(5)[others]

    jacobians, residuals = [], []
    for ch in channels:
        rp = fit.params.apply(ch.rp)
        key = (ch.rp.resonator_id, ch.omega_m)
        field_data = (ch.data - fit.offsets.get(key, 0.0)) / fit.gains[key]
        field_data = (field_data - epsilon) / (-0.5j * rp.kappa_ext)
        batch = np.concatenate([fit.populations[:, None, :] + sign * steps[None, :, :] for sign in (1.0, -1.0)],
                               axis=1).reshape(-1, 5)
        fields = readout_fields(rp, epsilon, ch.omega_m, ch.times, np.vstack([fit.populations, batch]), fit.closure)
        base, shifted = fields[:n_te], fields[n_te:].reshape(n_te, 2, len(others), -1)
        jacobians.append((shifted[:, 0] - shifted[:, 1]) / (2.0 * POPULATION_STEP))  # (n_te, 4, n_t)
        residuals.append(field_data - base)

    out = np.array(fit.populations, dtype=float)
    for k in range(n_te):
        design = np.hstack([jac[k] for jac in jacobians]).T
        y = np.concatenate([r[k] for r in residuals])
        delta, *_ = np.linalg.lstsq(np.vstack([design.real, design.imag]), np.concatenate([y.real, y.imag]),
                                    rcond=None)
        out[k, others] += delta
    return {s: out[:, i] for i, s in enumerate(TRACKED_LABELS)}


def reconstruct_density_matrix(fit: PopulationFit, readout: ReadoutParams, t_evolve: float) -> np.ndarray:
    """2x2 density matrix on (001, 110) at ``t_evolve`` from the fitted model."""
    rp = fit.params.apply(readout)
    populations, coherence = evolve_qubits(rp, fit.params.j, fit.params.detuning, [t_evolve],
                                           initial_populations(fit.params.thermal))
    return density_matrix_block(populations[0, TRACKED_LABELS.index("001")],
                                populations[0, TRACKED_LABELS.index("110")], coherence[0])
