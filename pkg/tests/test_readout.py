from dataclasses import replace

import numpy as np
import pytest
import scipy.linalg
from numpy.testing import assert_allclose

from conftest import make_readout
from qlinksim.models import TRACKED_LABELS, CavityBlochState, PulseSchedule, ReadoutParams
from qlinksim.readout import (
    default_readout_frequencies,
    density_matrix_block,
    evolve_qubits,
    experiment_trace,
    factorized_fields,
    gauge_diagnostics,
    initial_populations,
    integrate_cavity_bloch,
    kernel_trace,
    output_signal,
    rate_matrix,
    readout_fields,
    readout_kernel,
    steady_state_field,
    synthesize_traces,
)

THERMAL = {"001": 0.05, "100": 0.1, "010": 0.1}


def test_steady_state_of_linear_resonator():
    rp = make_readout(1, kappa_int=0.01, kappa_ext=0.03)
    epsilon, omega_m = 0.01, rp.omega_r - 0.005
    sched = PulseSchedule(omega=0.0, detuning=0.0, t_evolve=0.0, epsilon=epsilon, omega_m=omega_m, t_meas=1000.0)
    y0 = CavityBlochState.from_populations({"001": 1.0})
    traj = integrate_cavity_bloch(rp, sched, y0, np.linspace(0.0, 1000.0, 11), rtol=1e-10, atol=1e-12)
    expected = steady_state_field(rp, "001", epsilon, omega_m)
    assert traj.field[-1] == pytest.approx(expected, rel=1e-6)
    assert traj.state(-1).photon_number == pytest.approx(abs(expected) ** 2, rel=1e-6)
    assert traj.state(-1).correlators["001"] == pytest.approx(expected, rel=1e-6)


def test_populations_follow_rate_equations(lossy_readouts):
    rp = lossy_readouts[1]
    p0 = {"110": 0.6, "100": 0.2, "001": 0.2}
    sched = PulseSchedule(omega=0.0, detuning=0.0, t_evolve=0.0, epsilon=0.0, omega_m=rp.omega_r, t_meas=0.0)
    times = np.linspace(0.0, 2000.0, 21)
    traj = integrate_cavity_bloch(rp, sched, CavityBlochState.from_populations(p0), times, rtol=1e-10, atol=1e-12)
    x0 = np.array([p0.get(s, 0.0) for s in TRACKED_LABELS])
    expected = np.array([scipy.linalg.expm(rate_matrix(rp) * t) @ x0 for t in times])
    assert_allclose(traj.populations, expected, atol=1e-8)
    assert_allclose(traj.populations.sum(axis=1), 1.0, atol=1e-9)


def test_rate_matrix_conserves_probability(lossy_readouts):
    r = rate_matrix(lossy_readouts[1])
    assert_allclose(r.sum(axis=0), 0.0, atol=1e-15)
    assert r[TRACKED_LABELS.index("100"), TRACKED_LABELS.index("110")] == pytest.approx(1.0 / 600.0)


@pytest.mark.parametrize("detuning", [0.0, 0.008])
def test_three_body_oscillation_without_loss(detuning):
    rp = make_readout(1)
    j = 0.01
    times = np.linspace(0.0, 600.0, 61)
    sched = PulseSchedule(omega=j, detuning=detuning, t_evolve=600.0, epsilon=0.0, omega_m=rp.omega_r, t_meas=0.0)
    traj = integrate_cavity_bloch(rp, sched, CavityBlochState.from_populations({"001": 1.0}), times)
    rabi = np.sqrt(j ** 2 + 0.25 * detuning ** 2)
    expected = j ** 2 / rabi ** 2 * np.sin(rabi * times) ** 2
    assert_allclose(traj.populations[:, TRACKED_LABELS.index("110")], expected, atol=1e-6)

    populations, coherence = evolve_qubits(rp, j, detuning, times, {"001": 1.0})
    assert_allclose(populations[:, TRACKED_LABELS.index("110")], expected, atol=1e-9)
    assert_allclose(traj.coherence, coherence, atol=1e-6)


def test_resonant_coherence_magnitude():
    rp = make_readout(2)
    j = 0.01
    times = np.linspace(0.0, 400.0, 41)
    _, coherence = evolve_qubits(rp, j, 0.0, times, {"001": 1.0})
    assert_allclose(np.abs(coherence), np.abs(np.sin(j * times) * np.cos(j * times)), atol=1e-9)


@pytest.mark.parametrize("closure", ["factorized", "correlator"])
def test_fast_path_matches_full_integration(lossy_readouts, closure):
    rp = lossy_readouts[1]
    t_meas_grid = np.linspace(0.0, 600.0, 61)
    sched = PulseSchedule(omega=0.012, detuning=0.002, t_evolve=250.0, epsilon=0.01,
                          omega_m=rp.shifted_frequency("110"), t_meas=601.0)
    full = experiment_trace(rp, sched, t_meas_grid, THERMAL, closure=closure)
    fast = kernel_trace(rp, sched, t_meas_grid, THERMAL, closure=closure)
    assert full.signal[0] == pytest.approx(0.01)
    assert_allclose(full.signal, fast.signal, atol=1e-7)


def test_far_detuned_readout_passes_the_drive():
    rp = make_readout(1)
    sched = PulseSchedule(omega=0.0, detuning=0.0, t_evolve=0.0, epsilon=0.01, omega_m=rp.omega_r + 5.0,
                          t_meas=500.0)
    trace = kernel_trace(rp, sched, np.linspace(0.0, 400.0, 41))
    assert_allclose(np.abs(trace.signal), 0.01, rtol=0.01)


def test_kernel_needs_linear_resonator():
    rp = replace(make_readout(1), alpha=-1e-4)
    with pytest.raises(ValueError):
        readout_kernel(rp, 0.01, rp.omega_r, np.linspace(0.0, 10.0, 11))


def test_kernel_needs_uniform_grid():
    rp = make_readout(1)
    with pytest.raises(ValueError):
        readout_kernel(rp, 0.01, rp.omega_r, [0.0, 1.0, 3.0])


def test_initial_populations_swap_ground_and_qubit_three():
    p = initial_populations(THERMAL)
    assert p == pytest.approx({"000": 0.05, "001": 0.75, "010": 0.1, "100": 0.1, "110": 0.0})
    assert initial_populations() == {"000": 0.0, "001": 1.0, "010": 0.0, "100": 0.0, "110": 0.0}


@pytest.mark.parametrize("thermal", [{"110": 0.1}, {"001": -0.1}, {"001": 0.5, "100": 0.5}])
def test_initial_populations_rejects_bad_thermal(thermal):
    with pytest.raises(ValueError):
        initial_populations(thermal)


def test_default_frequencies_skip_coinciding_shifts():
    rp = ReadoutParams(omega_r=40.0, kappa_int=0.003, kappa_ext=0.001,
                       chi={"000": 0.0, "001": 0.0, "010": -0.001, "100": -0.02, "110": -0.021})
    assert list(default_readout_frequencies(rp)) == ["000", "010", "100", "110"]


def test_synthesized_traces_are_seeded_and_scaled(lossy_readouts):
    readouts = list(lossy_readouts.values())
    grid = np.linspace(0.0, 300.0, 31)
    omega_m = {rid: [rp.omega_r, rp.shifted_frequency("110")] for rid, rp in lossy_readouts.items()}
    kwargs = dict(j=0.012, detuning=0.0, t_evolve=[0.0, 100.0, 200.0], t_meas_grid=grid, epsilon=0.01,
                  thermal=THERMAL, omega_m=omega_m, max_workers=1)

    clean = synthesize_traces(readouts, **kwargs)
    assert len(clean) == 2 * 2 * 3
    assert [(t.resonator_id, t.t_evolve) for t in clean[:3]] == [(1, 0.0), (1, 100.0), (1, 200.0)]

    scaled = synthesize_traces(readouts, scale=0.5j, **kwargs)
    assert_allclose(scaled[4].signal, 0.5j * clean[4].signal)

    noisy_a = synthesize_traces(readouts, noise_sigma=0.01, seed=3, **kwargs)
    noisy_b = synthesize_traces(readouts, noise_sigma=0.01, seed=3, **kwargs)
    assert all(np.array_equal(a.signal, b.signal) for a, b in zip(noisy_a, noisy_b))
    assert not np.array_equal(noisy_a[0].signal, clean[0].signal)


def test_nonlinear_resonator_uses_full_integration():
    rp = replace(make_readout(1, kappa_int=0.01, kappa_ext=0.03), alpha=-1e-5)
    traces = synthesize_traces([rp], j=0.01, detuning=0.0, t_evolve=[50.0], t_meas_grid=np.linspace(0.0, 100.0, 11),
                               epsilon=0.01, omega_m={1: [rp.omega_r]}, max_workers=1)
    assert len(traces) == 1
    assert traces[0].signal[0] == pytest.approx(0.01)


def test_gauge_diagnostics_vanish_inside_the_sector():
    p001 = np.array([1.0, 0.5, 0.2])
    zeros = np.zeros(3)
    diagnostics = gauge_diagnostics({"000": zeros, "001": p001, "010": zeros, "100": zeros, "110": 1.0 - p001})
    assert_allclose(diagnostics.p_inv, 1.0)
    assert_allclose(diagnostics.g1, 0.0, atol=1e-15)
    assert_allclose(diagnostics.g2, 0.0, atol=1e-15)
    assert_allclose(diagnostics.sigma_z1, 2.0 * p001 - 1.0)


def test_gauge_diagnostics_weight_leakage():
    diagnostics = gauge_diagnostics({"000": [0.1], "001": [0.6], "010": [0.1], "100": [0.05], "110": [0.15]})
    assert diagnostics.p_inv[0] == pytest.approx(0.75)
    assert diagnostics.g1[0] == pytest.approx(0.1 - 0.05)
    assert diagnostics.g2[0] == pytest.approx(0.1 + 0.05)
    rows = diagnostics.to_rows([100.0])
    assert rows[0]["t_evolve_ns"] == 100.0


def test_density_matrix_block_is_hermitian():
    rho = density_matrix_block(0.6, 0.3, 0.2 - 0.1j)
    assert_allclose(rho, rho.conj().T)
    assert np.trace(rho).real == pytest.approx(0.9)


def test_leakage_into_100_shifts_first_gauss_generator():
    eps = 0.03
    diagnostics = gauge_diagnostics({"000": [0.0], "001": [0.5], "010": [0.0], "100": [eps], "110": [0.5 - eps]})
    assert diagnostics.g1[0] == pytest.approx(-eps)
    assert diagnostics.g2[0] == pytest.approx(eps)


def test_output_signal_is_drive_minus_emitted_field():
    rp = make_readout(2, kappa_int=0.01, kappa_ext=0.03)
    epsilon, omega_m = 0.02, rp.omega_r
    sched = PulseSchedule(omega=0.0, detuning=0.0, t_evolve=0.0, epsilon=epsilon, omega_m=omega_m, t_meas=1000.0)
    traj = integrate_cavity_bloch(rp, sched, CavityBlochState.from_populations({"000": 1.0}),
                                  np.linspace(0.0, 1000.0, 11), rtol=1e-10, atol=1e-12)
    signal = output_signal(traj, rp, sched)
    assert signal[0] == pytest.approx(epsilon)
    expected = epsilon - 0.5j * rp.kappa_ext * steady_state_field(rp, "000", epsilon, omega_m)
    assert signal[-2] == pytest.approx(expected, rel=1e-6)
    # pulse is off at t_end
    assert signal[-1] == pytest.approx(-0.5j * rp.kappa_ext * traj.field[-1])


def _steady_readout(rp, populations, omega_m, closure, epsilon=0.01):
    sched = PulseSchedule(omega=0.0, detuning=0.0, t_evolve=0.0, epsilon=epsilon, omega_m=omega_m, t_meas=1001.0)
    return integrate_cavity_bloch(rp, sched, CavityBlochState.from_populations(populations),
                                  np.linspace(0.0, 1000.0, 11), rtol=1e-10, atol=1e-12, closure=closure)


def test_closures_agree_without_dispersive_shift(lossy_readouts):
    rp = replace(lossy_readouts[1], chi={s: 0.0 for s in TRACKED_LABELS})
    mixed = {"001": 0.4, "110": 0.3, "100": 0.2, "010": 0.1}
    factorized = _steady_readout(rp, mixed, rp.omega_r - 0.003, "factorized")
    correlator = _steady_readout(rp, mixed, rp.omega_r - 0.003, "correlator")
    assert_allclose(factorized.field, correlator.field, atol=1e-10)


def test_closures_agree_in_a_pure_state_at_steady_state():
    rp = make_readout(1, kappa_int=0.01, kappa_ext=0.03)
    omega_m = rp.shifted_frequency("110") + 0.004
    expected = steady_state_field(rp, "110", 0.01, omega_m)
    for closure in ("factorized", "correlator"):
        traj = _steady_readout(rp, {"110": 1.0}, omega_m, closure)
        assert traj.field[-1] == pytest.approx(expected, rel=1e-6)


def test_factorized_field_follows_the_mean_shift():
    rp = make_readout(1, kappa_int=0.01, kappa_ext=0.03)
    mixed = {"001": 0.5, "110": 0.5}
    mean_chi = 0.5 * (rp.chi["001"] + rp.chi["110"])
    omega_m = rp.omega_r + 2.0 * mean_chi
    factorized = _steady_readout(rp, mixed, omega_m, "factorized").field[-1]
    correlator = _steady_readout(rp, mixed, omega_m, "correlator").field[-1]
    assert factorized == pytest.approx(-1j * 0.01 / (0.5 * rp.kappa), rel=1e-6)
    assert correlator == pytest.approx(0.5 * (steady_state_field(rp, "001", 0.01, omega_m)
                                              + steady_state_field(rp, "110", 0.01, omega_m)), rel=1e-6)
    assert abs(factorized - correlator) > 0.05 * abs(factorized)


def test_factorized_fields_batch_over_populations(lossy_readouts):
    rp = lossy_readouts[2]
    grid = np.linspace(0.0, 200.0, 21)
    populations = np.array([[0.0, 1.0, 0.0, 0.0, 0.0], [0.1, 0.4, 0.1, 0.1, 0.3]])
    batch = readout_fields(rp, 0.01, rp.omega_r, grid, populations)
    assert batch.shape == (2, 21)
    single = factorized_fields(rp, 0.01, rp.omega_r, grid, populations[1])
    assert_allclose(batch[1], single[0], atol=1e-14)
    assert_allclose(batch[:, 0], 0.0)
