from dataclasses import replace

import numpy as np
import pytest
from numpy.testing import assert_allclose

from qlinksim.aggregator import aggregate_coupling_curve
from qlinksim.circuit import dressed_spectrum
from qlinksim.drive import (
    DressedDriveModel,
    PeriodicPropagator,
    amplitude_for_j,
    chevron_scan,
    coupling_curve,
    default_chevron_axes,
    drive_hamiltonian,
    evolve_driven,
    extract_j_and_center,
    perturbative_j,
    perturbative_shift,
    three_body_matrix_element,
    zero_order_resonance,
)
from qlinksim.errors import FitError
from qlinksim.models import ChevronGrid, DriveSpec
from qlinksim.numkit import UNITARY_ATOL, integrate_ode, mhz_to_rad_ns, schrodinger_rhs


@pytest.fixture(scope="module")
def spec(calibrated_device):
    return calibrated_device[1]


def test_drive_spec_validation():
    with pytest.raises(ValueError):
        DriveSpec(amplitude=0.5, omega_p=40.0)
    with pytest.raises(ValueError):
        DriveSpec(amplitude=0.1, omega_p=0.0)
    with pytest.raises(ValueError):
        DriveSpec(amplitude=0.1, omega_p=40.0, rise_time=-1.0)


def test_undriven_circuit_stays_put(spec):
    d = DriveSpec(amplitude=0.0, omega_p=zero_order_resonance(spec))
    assert np.count_nonzero(drive_hamiltonian(spec, d, 3.7)) == 0
    result = evolve_driven(spec, d, [0.0, 50.0, 200.0], max_excitations=2)
    assert_allclose(result.populations["001"], 1.0, atol=1e-8)
    assert result.norm_error < 1e-8


def test_weak_drive_is_linear_in_sin_phi2(spec):
    amplitude = 1e-6
    d = DriveSpec(amplitude=amplitude, omega_p=zero_order_resonance(spec))
    expected = -spec.params.dej * np.pi * amplitude * spec.sin_phi2
    assert_allclose(drive_hamiltonian(spec, d, 0.0), expected, atol=1e-8)


def test_drive_needs_zero_flux_bias(spec):
    biased = replace(spec, params=replace(spec.params, flux_bias=0.1))
    with pytest.raises(ValueError):
        drive_hamiltonian(biased, DriveSpec(amplitude=0.01, omega_p=40.0), 0.0)


def test_model_must_hold_tracked_states(spec):
    with pytest.raises(ValueError):
        DressedDriveModel(spec, max_excitations=0)


def test_periodic_propagator_matches_direct_integration(spec):
    model = DressedDriveModel(spec, max_excitations=2)
    d = DriveSpec(amplitude=0.05, omega_p=zero_order_resonance(spec))
    psi0 = model.basis_state("001")
    times = [0.0, 7.3, 40.0, 123.4]
    periodic = PeriodicPropagator(model, d).evolve(psi0, times)
    direct = integrate_ode(schrodinger_rhs(lambda t: model.hamiltonian(d, t)), psi0, (0.0, 123.4),
                           rtol=1e-10, atol=UNITARY_ATOL, t_eval=times)
    assert_allclose(periodic, direct.y, atol=1e-6)


def test_rise_time_uses_direct_integration(spec):
    d = DriveSpec(amplitude=0.05, omega_p=zero_order_resonance(spec), rise_time=10.0)
    with pytest.raises(ValueError):
        PeriodicPropagator(DressedDriveModel(spec, max_excitations=2), d)
    result = evolve_driven(spec, d, np.linspace(0.0, 30.0, 4), max_excitations=2)
    assert result.norm_error < 1e-6


def test_symmetric_squid_cannot_drive_three_body_transition(spec):
    symmetric = dressed_spectrum(replace(spec.params, dej=0.0), spec.basis, strict_labels=())
    assert three_body_matrix_element(symmetric) > 0.0
    with pytest.raises(ValueError):
        amplitude_for_j(symmetric, 0.01)
    d = DriveSpec(amplitude=0.05, omega_p=zero_order_resonance(symmetric))
    result = evolve_driven(symmetric, d, [0.0, 100.0, 250.0], max_excitations=2)
    assert np.max(result.populations["110"]) < 1e-10


def test_first_order_coupling(spec):
    assert three_body_matrix_element(spec) > 0.0
    assert perturbative_j(spec, 0.02) == pytest.approx(2.0 * perturbative_j(spec, 0.01), rel=1e-12)
    j = mhz_to_rad_ns(1.5)
    assert perturbative_j(spec, amplitude_for_j(spec, j)) == pytest.approx(j, rel=1e-12)


def test_shift_is_quadratic_in_amplitude(spec):
    assert perturbative_shift(spec, 0.0) == 0.0
    assert perturbative_shift(spec, 0.02) == pytest.approx(4.0 * perturbative_shift(spec, 0.01), rel=1e-12)
    assert perturbative_shift(spec, 0.02, cos_only=True) == pytest.approx(
        4.0 * perturbative_shift(spec, 0.01, cos_only=True), rel=1e-12)


def test_chevron_axes():
    omega_p, times = default_chevron_axes(40.0, 0.01, n_freq=5, n_times=4)
    assert_allclose(omega_p, [39.95, 39.975, 40.0, 40.025, 40.05])
    assert times[-1] == pytest.approx(3.0 * np.pi / 0.01)
    with pytest.raises(ValueError):
        default_chevron_axes(40.0, 0.0)


def test_synthetic_chevron_is_recovered():
    j, center = 0.01, 40.0
    omega_p, times = default_chevron_axes(center + 0.003, j)
    detuning = omega_p[:, None] - center
    rabi = np.sqrt(4.0 * j ** 2 + detuning ** 2)
    grid = ChevronGrid(omega_p=omega_p, times=times,
                       populations=(2.0 * j / rabi) ** 2 * np.sin(0.5 * rabi * times[None, :]) ** 2)
    fit = extract_j_and_center(grid)
    assert fit.j == pytest.approx(j, rel=1e-3)
    assert fit.omega_3q == pytest.approx(center, abs=1e-3 * j)


def test_unfittable_chevron_raises():
    grid = ChevronGrid(omega_p=np.array([39.9, 40.0, 40.1]), times=np.linspace(0.0, 10.0, 11),
                       populations=np.full((3, 11), np.nan))
    with pytest.raises(FitError):
        extract_j_and_center(grid)


def test_coupling_curve_needs_one_axis(spec):
    with pytest.raises(ValueError):
        coupling_curve(spec)
    with pytest.raises(ValueError):
        coupling_curve(spec, amplitudes=[0.01], j_targets=[0.01])


@pytest.fixture(scope="module")
def curve(spec):
    points = coupling_curve(spec, j_targets=mhz_to_rad_ns([0.5, 1.0, 1.5, 2.0, 2.5]), max_excitations=4)
    return points, aggregate_coupling_curve(points, zero_order_resonance(spec))


def test_brute_force_coupling_is_linear(curve):
    _, summary = curve
    assert summary["n_points"] == 5
    assert summary["j_linearity_r2"] > 0.999
    assert summary["max_j_relative_error"] < 0.05


def test_second_order_shift_tracks_brute_force(curve, spec):
    points, summary = curve
    omega0 = zero_order_resonance(spec)
    for p, row in zip(points, summary["points"]):
        shift = p.omega_brute - omega0
        assert abs(p.omega_second_order - p.omega_brute) < 0.1 * abs(shift)
        assert row["second_order_better"]


def test_chevron_scan_rows_match_single_runs(spec):
    omega0 = zero_order_resonance(spec)
    amplitude = amplitude_for_j(spec, mhz_to_rad_ns(2.0))
    omega_p = [omega0 - 0.01, omega0, omega0 + 0.01]
    times = [0.0, 60.0, 120.0]
    grid = chevron_scan(spec, omega_p, times, amplitude, max_excitations=2, max_workers=2)
    assert grid.populations.shape == (3, 3)
    assert grid.amplitude == amplitude
    assert_allclose(grid.populations[:, 0], 0.0, atol=1e-8)
    assert np.all((grid.populations >= 0.0) & (grid.populations <= 1.0))
    single = evolve_driven(spec, DriveSpec(amplitude=amplitude, omega_p=omega0), times, max_excitations=2)
    assert_allclose(grid.populations[1], single.populations["110"], atol=1e-8)
