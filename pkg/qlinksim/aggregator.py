"""Summary generation for simulation results."""

from typing import Any, Dict, List, Optional

import numpy as np

from .drive import CouplingPoint
from .fitting import PopulationFit
from .models import TRACKED_LABELS
from .numkit import rad_ns_to_mhz
from .qlm import FalseVacuumResult
from .readout import GaugeDiagnostics

OBSERVABLES = ("n_odd", "n_even", "e_odd", "e_even")


def aggregate_false_vacuum(results: List[FalseVacuumResult]) -> Dict[str, Any]:
    """
    Summarize quench runs, one entry per mass.

    For every bulk observable the summary records the initial value, the
    second-half time average and whether the average moved toward the hopping-only
    ground-state value.

    Args:
        results: Runs in sweep order

    Returns:
        Dictionary containing the summary
    """
    if not results:
        return {"runs": [], "n_runs": 0}

    runs = []
    for result in results:
        entry = result.to_dict()
        late = result.late_time_means()
        relaxation = {}
        for name in OBSERVABLES:
            initial = float(getattr(result, name)[0])
            reference = result.ground_state[name]
            relaxation[name] = {
                "initial": initial,
                "late_mean": late[name],
                "ground_state": reference,
                "relaxed_toward_ground_state": abs(late[name] - reference) < abs(initial - reference),
            }
        entry["relaxation"] = relaxation
        runs.append(entry)

    return {
        "n_runs": len(runs),
        "n_sites": results[0].n_sites,
        "mu_over_j": [r.mu_over_j for r in results],
        "max_gauss_violation": max(r.max_gauss_violation for r in results),
        "max_norm_error": max(r.max_norm_error for r in results),
        "runs": runs,
    }


def _r_squared(x: np.ndarray, y: np.ndarray) -> float:
    """Coefficient of determination of a straight-line fit through the origin."""
    slope = float(x @ y / (x @ x))
    residual = np.sum((y - slope * x) ** 2)
    total = np.sum((y - np.mean(y)) ** 2)
    return float(1.0 - residual / total) if total > 0 else 1.0


def aggregate_coupling_curve(points: List[CouplingPoint], omega0: float) -> Dict[str, Any]:
    """
    Compare brute-force couplings and resonances with both perturbative predictions.

    Args:
        points: One CouplingPoint per amplitude
        omega0: Undriven resonance omega_110 - omega_001 (rad/ns)

    Returns:
        Dictionary containing per-point comparisons and the linearity of J(A_p)
    """
    if not points:
        return {"points": [], "n_points": 0}

    amplitudes = np.array([p.amplitude for p in points])
    j_brute = np.array([p.j_brute for p in points])
    rows = []
    for p in points:
        shift = p.omega_brute - omega0
        second_error = p.omega_second_order - p.omega_brute
        cos_error = p.omega_cos_only - p.omega_brute
        row = p.to_dict()
        row.update({
            "j_relative_error": float((p.j_first_order - p.j_brute) / p.j_brute),
            "shift_brute_mhz": rad_ns_to_mhz(shift),
            "shift_second_order_error_mhz": rad_ns_to_mhz(second_error),
            "shift_cos_only_error_mhz": rad_ns_to_mhz(cos_error),
            "second_order_better": abs(second_error) < abs(cos_error),
        })
        rows.append(row)

    return {
        "n_points": len(points),
        "omega0_mhz": rad_ns_to_mhz(omega0),
        "j_linearity_r2": _r_squared(amplitudes, j_brute),
        "max_j_relative_error": max(abs(r["j_relative_error"]) for r in rows),
        "points": rows,
    }


def aggregate_fit(fit: PopulationFit, diagnostics: GaugeDiagnostics,
                  rescaled: Optional[Dict[str, np.ndarray]] = None,
                  density_matrix: Optional[np.ndarray] = None,
                  truth: Optional[Dict[str, float]] = None) -> Dict[str, Any]:
    """
    Fit report: fitted parameters, lifetimes, Gauss-law diagnostics.

    Args:
        fit: Population fit
        diagnostics: Gauge diagnostics of the fitted populations
        rescaled: Populations read off the data directly
        density_matrix: Reconstructed 2x2 block on (001, 110)
        truth: Parameter values used to synthesize the data, if known

    Returns:
        Dictionary containing the report
    """
    report: Dict[str, Any] = fit.to_dict()
    report["j_mhz"] = rad_ns_to_mhz(fit.params.j)
    report["detuning_mhz"] = rad_ns_to_mhz(fit.params.detuning)
    report["gauge"] = {
        "min_p_inv": float(np.min(diagnostics.p_inv)),
        "max_abs_g1": float(np.max(np.abs(diagnostics.g1))),
        "max_abs_g2": float(np.max(np.abs(diagnostics.g2))),
    }
    if rescaled is not None:
        report["rescaled_populations"] = {s: np.asarray(rescaled[s]).tolist() for s in TRACKED_LABELS}
    if density_matrix is not None:
        report["density_matrix_001_110"] = [[{"re": float(v.real), "im": float(v.imag)} for v in row]
                                            for row in density_matrix]
    if truth is not None:
        fitted = fit.params.to_dict()
        report["relative_errors"] = {
            name: (fitted[name] - value) / value
            for name, value in truth.items() if value != 0 and name in fitted
        }
    return report
