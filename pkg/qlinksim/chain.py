"""Mapping a transmon chain onto the link model.

Transmons alternate matter site, link, matter site, ...; an excited transmon is a
set bit of the lattice configuration. In the two-level approximation a chain
state has energy sum(omega_i) over excited transmons plus chi_{i,i+1} for every
adjacent excited pair. One parametric tone per bond drives the three-body
exchange; its detuning from the bare resonance sets the site masses.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .invariants import check_frame_residuals
from .models import ChainConfig, ChainSpec, LatticeSpec, QlmParams, TargetMasses
from .numkit import as_dense
from .qlm import build_qlm_hamiltonian, diagonal_energy, enumerate_gauge_sector, hop

logger = logging.getLogger(__name__)

# Roman labels of the gauge-invariant states of the four-site chain
FOUR_SITE_LABELS = ("I", "II", "III", "IV", "V")


def chain_lattice(spec: ChainSpec) -> LatticeSpec:
    return LatticeSpec(n_sites=spec.n_matter)


def state_energy(spec: ChainSpec, c: ChainConfig) -> float:
    """Bare energy of a chain configuration (rad/ns)."""
    bits = [int(b) for b in c.bits]
    if len(bits) != spec.n_transmons:
        raise ValueError(f"configuration has {len(bits)} transmons, chain has {spec.n_transmons}")
    energy = sum(w for w, b in zip(spec.omega, bits) if b)
    energy += sum(x for x, b1, b2 in zip(spec.chi, bits[:-1], bits[1:]) if b1 and b2)
    return float(energy)


@dataclass
class GaugeState:
    """A gauge-invariant chain configuration and its bare energy."""

    label: str
    config: ChainConfig
    energy: float

    def to_dict(self) -> dict:
        return {"label": self.label, "ket": self.config.bits, "energy_rad_ns": self.energy}


def gauge_states_and_energies(spec: ChainSpec) -> List[GaugeState]:
    """
    Gauge-invariant chain states with their bare energies.

    Four matter sites give the five states I to V in lexicographic order; longer
    chains are labeled by index.

    Args:
        spec: Transmon chain

    Returns:
        List of GaugeState in sector order
    """
    sector = enumerate_gauge_sector(chain_lattice(spec))
    labels = FOUR_SITE_LABELS if spec.n_matter == 4 else [str(i) for i in range(sector.dim)]
    return [GaugeState(label, c, state_energy(spec, c)) for label, c in zip(labels, sector.states)]


@dataclass(frozen=True)
class Coupling:
    """Three-body coupling of bond k between an upper and a lower sector state."""

    bond: int
    upper: int
    lower: int


def coupling_graph(spec: ChainSpec) -> List[Coupling]:
    """
    Pairs of gauge states connected by sigma^+_k tau^+ sigma^-_{k+1}.

    ``upper`` has matter site k occupied; the bond-k tone is resonant with
    E_upper - E_lower.
    """
    sector = enumerate_gauge_sector(chain_lattice(spec))
    couplings = []
    for i, c in enumerate(sector.states):
        for k in range(1, spec.n_matter):
            target = hop(c, k)
            if target is not None and target in sector.index_of:
                couplings.append(Coupling(bond=k, upper=i, lower=sector.index_of[target]))
    return sorted(couplings, key=lambda x: (x.bond, x.lower, x.upper))


def adjacency_matrix(spec: ChainSpec) -> np.ndarray:
    """Bond index (1-based) on every coupled pair, 0 elsewhere."""
    states = gauge_states_and_energies(spec)
    adjacency = np.zeros((len(states), len(states)), dtype=int)
    for c in coupling_graph(spec):
        adjacency[c.upper, c.lower] = adjacency[c.lower, c.upper] = c.bond
    return adjacency


def resonance_frequencies(spec: ChainSpec) -> Tuple[float, ...]:
    """
    Three-body resonance of every bond from the gauge-state energy differences.

    Every pair coupled by the same bond must give the same frequency.

    Raises:
        ValueError: If two pairs of one bond disagree beyond 1e-9 rad/ns
    """
    states = gauge_states_and_energies(spec)
    per_bond: Dict[int, List[float]] = {}
    for c in coupling_graph(spec):
        per_bond.setdefault(c.bond, []).append(states[c.upper].energy - states[c.lower].energy)
    frequencies = []
    for bond in range(1, spec.n_matter):
        values = per_bond[bond]
        if max(values) - min(values) > 1e-9:
            raise ValueError(f"bond {bond} has inconsistent resonances {values}")
        frequencies.append(values[0])
    return tuple(frequencies)


def closed_form_resonances(spec: ChainSpec) -> Tuple[float, float, float]:
    """Bond resonances of the seven-transmon chain written out term by term."""
    if spec.n_matter != 4:
        raise ValueError("closed forms exist for four matter sites only")
    w = (None,) + tuple(spec.omega)
    chi = {(i + 1, i + 2): x for i, x in enumerate(spec.chi)}
    return (
        w[1] + w[2] - w[3] + chi[(1, 2)] - chi[(3, 4)],
        w[3] + w[4] - w[5] + chi[(3, 4)],
        w[5] + w[6] - w[7] + chi[(4, 5)] + chi[(5, 6)],
    )


def detunings_from_masses(mu: TargetMasses) -> np.ndarray:
    """
    Drive detunings that realize the site masses.

    delta_k = (-1)^k (mu_k + mu_{k+1}) for bonds k = 1 .. n-1.
    """
    m = mu.as_array()
    return np.array([(-1) ** k * (m[k - 1] + m[k]) for k in range(1, m.size)])


def masses_from_detunings(delta: Sequence[float], pinned_site: int, pinned_value: float = 0.0) -> TargetMasses:
    """
    Site masses producing the detunings, with one mass pinned.

    The detunings fix all but the staggered combination (m, -m, m, -m, ...), so
    one site mass must be chosen.

    Args:
        delta: Detuning of each bond
        pinned_site: Site (1-based) whose mass is fixed
        pinned_value: Its mass

    Returns:
        TargetMasses
    """
    delta = np.asarray(delta, dtype=float)
    n = delta.size + 1
    if not 1 <= pinned_site <= n:
        raise ValueError(f"pinned_site must lie in 1..{n}")
    system = np.zeros((n, n))
    rhs = np.zeros(n)
    for k in range(1, n):
        system[k - 1, k - 1] = system[k - 1, k] = (-1) ** k
        rhs[k - 1] = delta[k - 1]
    system[n - 1, pinned_site - 1] = 1.0
    rhs[n - 1] = pinned_value
    return TargetMasses(tuple(np.linalg.solve(system, rhs)))


def target_parameters(mu: TargetMasses, j_strengths: Sequence[float]) -> QlmParams:
    """Link-model parameters with site-dependent masses and bond-dependent couplings."""
    return QlmParams(site_masses=tuple(mu.mu), bond_couplings=tuple(j_strengths))


@dataclass
class FrameReport:
    """Outcome of verify_rotating_frame."""

    reference_energies: np.ndarray
    frame_residuals: Dict[Tuple[int, int], float]
    diagonal_error: float
    hamiltonian: np.ndarray
    target_error: float
    ok: bool
    reasons: List[str] = field(default_factory=list)

    def to_dict(self, labels: Optional[Sequence[str]] = None) -> dict:
        def name(i):
            return labels[i] if labels else str(i)
        return {
            "ok": self.ok,
            "reasons": self.reasons,
            "reference_energies_rad_ns": self.reference_energies.tolist(),
            "frame_residuals_rad_ns": {f"{name(a)}-{name(b)}": r for (a, b), r in self.frame_residuals.items()},
            "diagonal_error": self.diagonal_error,
            "target_error": self.target_error,
        }


def verify_rotating_frame(spec: ChainSpec, mu: TargetMasses, detunings: Sequence[float],
                          j_strengths: Sequence[float]) -> FrameReport:
    """
    Check that the driven chain reproduces the link model in the rotating frame.

    Reference energies are eps_n = E_n - D_n(mu), with D_n the staggered-mass
    energy of state n. The coupling between states a and b then rotates at
    omega_3q,k + delta_k - (eps_b - eps_a); these residuals must vanish.

    Args:
        spec: Transmon chain
        mu: Target site masses
        detunings: Drive detuning of each bond
        j_strengths: Three-body coupling of each bond

    Returns:
        FrameReport with per-pair residuals and the rotating-frame Hamiltonian
    """
    detunings = np.asarray(detunings, dtype=float)
    if detunings.size != spec.n_matter - 1 or len(j_strengths) != spec.n_matter - 1:
        raise ValueError(f"need {spec.n_matter - 1} detunings and couplings")
    states = gauge_states_and_energies(spec)
    target = target_parameters(mu, j_strengths)
    staggered = np.array([diagonal_energy(s.config, target) for s in states])
    energies = np.array([s.energy for s in states])
    reference = energies - staggered
    resonances = resonance_frequencies(spec)

    h = np.diag(energies - reference).astype(complex)
    residuals = {}
    for c in coupling_graph(spec):
        r = resonances[c.bond - 1] + detunings[c.bond - 1] - (reference[c.upper] - reference[c.lower])
        residuals[(c.lower, c.upper)] = float(r)
        h[c.lower, c.upper] = h[c.upper, c.lower] = -j_strengths[c.bond - 1]

    diagonal_error = float(np.max(np.abs(np.diag(h).real - staggered)))
    sector = enumerate_gauge_sector(chain_lattice(spec))
    target_error = float(np.max(np.abs(h - as_dense(build_qlm_hamiltonian(sector, target)))))

    ok, reasons = check_frame_residuals(list(residuals.values()))
    if diagonal_error > 1e-12 or target_error > 1e-12:
        ok = False
        reasons.append("rotating_frame_mismatch")
    if not ok:
        logger.warning(f"Rotating frame inconsistent: largest residual "
                       f"{max(abs(r) for r in residuals.values()):.3e} rad/ns")
    return FrameReport(reference_energies=reference, frame_residuals=residuals, diagonal_error=diagonal_error,
                       hamiltonian=h, target_error=target_error, ok=ok, reasons=sorted(set(reasons)))
