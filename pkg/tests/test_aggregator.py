import numpy as np
import pytest

from qlinksim.aggregator import aggregate_coupling_curve, aggregate_false_vacuum, aggregate_fit
from qlinksim.drive import CouplingPoint
from qlinksim.fitting import FitParameters, PopulationFit
from qlinksim.models import DECAY_CHANNELS
from qlinksim.qlm import false_vacuum_experiment
from qlinksim.readout import gauge_diagnostics


def test_empty_inputs():
    assert aggregate_false_vacuum([]) == {"runs": [], "n_runs": 0}
    assert aggregate_coupling_curve([], 40.0) == {"points": [], "n_points": 0}


def test_false_vacuum_summary():
    results = [false_vacuum_experiment(6, mu, 20.0, n_samples=41) for mu in (0.0, 2.0)]
    summary = aggregate_false_vacuum(results)
    assert summary["n_runs"] == 2
    assert summary["n_sites"] == 6
    assert summary["mu_over_j"] == [0.0, 2.0]
    assert summary["max_gauss_violation"] < 1e-9
    relaxation = summary["runs"][0]["relaxation"]["n_odd"]
    assert relaxation["initial"] == pytest.approx(1.0)
    assert set(summary["runs"][1]["relaxation"]) == {"n_odd", "n_even", "e_odd", "e_even"}


def _point(amplitude, j_brute, omega_brute, omega_cos_only, omega_second_order):
    return CouplingPoint(amplitude=amplitude, j_brute=j_brute, omega_brute=omega_brute,
                         j_first_order=0.5 * amplitude, omega_cos_only=omega_cos_only,
                         omega_second_order=omega_second_order)


def test_coupling_curve_summary():
    omega0 = 40.0
    points = [
        _point(0.01, 0.005, omega0 - 0.001, omega0 - 0.0005, omega0 - 0.00098),
        _point(0.02, 0.010, omega0 - 0.004, omega0 - 0.006, omega0 - 0.0039),
        _point(0.04, 0.021, omega0 - 0.016, omega0 - 0.010, omega0 - 0.0185),
    ]
    summary = aggregate_coupling_curve(points, omega0)
    assert summary["n_points"] == 3
    assert 0.99 < summary["j_linearity_r2"] < 1.0
    assert summary["max_j_relative_error"] == pytest.approx(0.001 / 0.021)
    assert [row["second_order_better"] for row in summary["points"]] == [True, True, True]
    assert summary["points"][0]["j_relative_error"] == pytest.approx(0.0)


def test_fit_report():
    params = FitParameters(gamma={c: 1e-3 for c in DECAY_CHANNELS}, gamma_phi=2e-4,
                           thermal={"001": 0.02, "100": 0.03, "010": 0.03}, j=0.01)
    populations = np.array([[0.02, 0.92, 0.03, 0.03, 0.0], [0.03, 0.4, 0.04, 0.05, 0.48]])
    fit = PopulationFit(params=params, gains={(1, 48.0): 1.0 + 0.0j}, offsets={}, t_evolve=np.array([0.0, 100.0]),
                        populations=populations, coherence=np.zeros(2, dtype=complex), cost=0.0, rms=0.0,
                        n_starts=1)
    diagnostics = gauge_diagnostics(fit.population_series())
    truth = FitParameters(gamma={c: 2e-3 for c in DECAY_CHANNELS}, gamma_phi=2e-4,
                          thermal={"001": 0.02, "100": 0.03, "010": 0.03}, j=0.01).to_dict()
    report = aggregate_fit(fit, diagnostics, density_matrix=np.eye(2, dtype=complex), truth=truth)
    assert report["gauge"]["min_p_inv"] == pytest.approx(0.88)
    assert report["j_mhz"] == pytest.approx(0.01 / (2e-3 * np.pi))
    assert report["density_matrix_001_110"][0][0] == {"re": 1.0, "im": 0.0}
    assert "rescaled_populations" not in report
    errors = report["relative_errors"]
    assert errors["gamma_110_100"] == pytest.approx(-0.5)
    assert errors["gamma_phi"] == pytest.approx(0.0)
    assert "detuning" not in errors
