"""Numerical invariant rules for simulation results."""

from typing import Dict, List, Sequence, Tuple

import numpy as np

from .errors import InvariantViolation
from .models import CORRELATOR_SLICE, COHERENCE_INDEX, FIELD_INDEX, PHOTON_INDEX, POPULATION_SLICE


# Tolerances (violations are reported beyond TOLERANCE_FACTOR times these)
PROBABILITY_TOL = 1e-6
PHOTON_FLOOR = -1e-9
COHERENCE_BOUND = 0.5 + 1e-9
NORM_TOL = 1e-7
GAUSS_TOL = 1e-10
ENERGY_TOL = 1e-6
FRAME_TOL = 1e-9
TOLERANCE_FACTOR = 10.0


def check_cavity_bloch(vectors: np.ndarray, field_sum: bool = True) -> Tuple[bool, List[str]]:
    """
    Check a sampled cavity-Bloch trajectory.

    Rules:
    1. Populations sum to one
    2. Photon number is non-negative
    3. The 110/001 coherence is bounded by 1/2
    4. The field equals the sum of the state-field correlators (correlator closure only)

    Args:
        vectors: Samples of shape (n_samples, 15)
        field_sum: Apply rule 4

    Returns:
        Tuple of (ok, violation reasons)
    """
    vectors = np.atleast_2d(vectors)
    reasons = []

    total = np.sum(vectors[:, POPULATION_SLICE].real, axis=1)
    if np.max(np.abs(total - 1.0)) > TOLERANCE_FACTOR * PROBABILITY_TOL:
        reasons.append("probability_not_conserved")

    if np.min(vectors[:, PHOTON_INDEX].real) < TOLERANCE_FACTOR * PHOTON_FLOOR:
        reasons.append("negative_photon_number")

    if np.max(np.abs(vectors[:, COHERENCE_INDEX])) > 0.5 + TOLERANCE_FACTOR * (COHERENCE_BOUND - 0.5):
        reasons.append("coherence_out_of_bounds")

    if field_sum:
        field_error = np.abs(vectors[:, FIELD_INDEX] - np.sum(vectors[:, CORRELATOR_SLICE], axis=1))
        scale = max(1.0, float(np.max(np.abs(vectors[:, FIELD_INDEX]))))
        if np.max(field_error) > TOLERANCE_FACTOR * PROBABILITY_TOL * scale:
            reasons.append("field_correlator_mismatch")

    return not reasons, reasons


def check_unitary_run(norm_drift: float, gauss_residual: float = 0.0,
                      energy_drift: float = 0.0) -> Tuple[bool, List[str]]:
    """
    Check the bookkeeping of a closed-system evolution.

    Args:
        norm_drift: Largest |norm - 1| along the run
        gauss_residual: Largest |<G_n>| along the run
        energy_drift: Largest relative change of <H>

    Returns:
        Tuple of (ok, violation reasons)
    """
    reasons = []
    if norm_drift > TOLERANCE_FACTOR * NORM_TOL:
        reasons.append("norm_not_conserved")
    if gauss_residual > TOLERANCE_FACTOR * GAUSS_TOL:
        reasons.append("gauss_law_violated")
    if energy_drift > TOLERANCE_FACTOR * ENERGY_TOL:
        reasons.append("energy_not_conserved")
    return not reasons, reasons


def check_frame_residuals(residuals: Sequence[float]) -> Tuple[bool, List[str]]:
    """Check that resonance conditions of a chain mapping hold to FRAME_TOL (rad/ns)."""
    if np.max(np.abs(residuals), initial=0.0) > FRAME_TOL:
        return False, ["rotating_frame_mismatch"]
    return True, []


def get_violation_explanation(reasons: List[str]) -> str:
    """
    Get a human-readable explanation for violation reasons.

    Args:
        reasons: List of violation reason codes

    Returns:
        Human-readable explanation
    """
    explanations: Dict[str, str] = {
        "probability_not_conserved": "Total population drifted away from one",
        "negative_photon_number": "Photon number became negative",
        "coherence_out_of_bounds": "Coherence |<110><001|> exceeded 1/2",
        "field_correlator_mismatch": "Field no longer equals the sum of state-field correlators",
        "norm_not_conserved": "State norm drifted",
        "gauss_law_violated": "Gauss law violated",
        "energy_not_conserved": "Energy expectation drifted",
        "rotating_frame_mismatch": "Resonance conditions do not match the target Hamiltonian",
    }

    return "; ".join(explanations.get(reason, reason) for reason in reasons)


def assert_invariants(ok: bool, reasons: List[str], context: str = "") -> None:
    """Raise InvariantViolation with an explanation when a check failed."""
    if ok:
        return
    explanation = get_violation_explanation(reasons)
    raise InvariantViolation(reasons, f"{context}: {explanation}" if context else explanation)
