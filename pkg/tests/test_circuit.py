from dataclasses import replace

import numpy as np
import pytest
import scipy.constants
from numpy.testing import assert_allclose

from qlinksim.circuit import (
    _assign_labels,
    all_labels,
    bare_index,
    build_static_hamiltonian,
    charging_matrix_from_capacitances,
    cross_kerr,
    diagonalize_transmon,
    dressed_spectrum,
    ej_from_frequency,
    initial_circuit_params,
    perturbative_couplings,
    single_photon_frequencies,
    spectrum_vs_flux,
    squid_matrix_elements,
    sum_rule_residual,
    transition_table,
)
from qlinksim.config import CircuitConfig
from qlinksim.errors import LabelingError
from qlinksim.models import TRACKED_LABELS, CircuitParams, TransmonBasis
from qlinksim.numkit import ghz_to_rad_ns, mhz_to_rad_ns, rad_ns_to_ghz

SMALL_BASIS = TransmonBasis(10, 4)


def _cofactor_inverse(m):
    cof = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            minor = np.delete(np.delete(m, i, axis=0), j, axis=1)
            cof[i, j] = (-1) ** (i + j) * (minor[0, 0] * minor[1, 1] - minor[0, 1] * minor[1, 0])
    det = m[0] @ cof[0]
    return cof.T / det


def _e2_over_2hbar(c_ff):
    return scipy.constants.e ** 2 / (2.0 * scipy.constants.hbar * c_ff * 1e-15) * 1e-9


def test_decoupled_charging_matrix():
    ec = charging_matrix_from_capacitances(80.0, 90.0, 100.0, 0.0, 0.0, 0.0)
    assert_allclose(np.diag(ec), [_e2_over_2hbar(c) for c in (80.0, 90.0, 100.0)], rtol=1e-12)
    assert_allclose(ec - np.diag(np.diag(ec)), 0.0, atol=1e-15)


def test_charging_matrix_matches_cofactor_inverse():
    c1, c2, c3, c12, c13, c23 = 85.0, 70.0, 95.0, 4.0, 1.5, 6.0
    maxwell = np.array([[c1 + c12 + c13, -c12, -c13],
                        [-c12, c2 + c12 + c23, -c23],
                        [-c13, -c23, c3 + c13 + c23]])
    ec = charging_matrix_from_capacitances(c1, c2, c3, c12, c13, c23)
    assert_allclose(ec, _e2_over_2hbar(1.0) * _cofactor_inverse(maxwell), rtol=1e-12)
    assert_allclose(ec, ec.T, rtol=1e-14)


@pytest.mark.parametrize("caps", [(0.0, 90.0, 100.0, 1.0, 1.0, 1.0), (80.0, 90.0, 100.0, -1.0, 0.0, 0.0)])
def test_charging_matrix_rejects_bad_capacitances(caps):
    with pytest.raises(ValueError):
        charging_matrix_from_capacitances(*caps)


def test_transmon_against_analytic_limit():
    t = diagonalize_transmon(1.0, 50.0, 0.0, TransmonBasis(15, 4))
    omega01 = t.energies[1] - t.energies[0]
    anharmonicity = t.energies[2] - 2.0 * t.energies[1] + t.energies[0]
    assert omega01 == pytest.approx(np.sqrt(8.0 * 50.0) - 1.0, rel=0.01)
    assert anharmonicity == pytest.approx(-1.0, rel=0.25)
    assert t.leakage < 1e-8


def test_transmon_without_josephson_term_is_a_charge_ladder():
    t = diagonalize_transmon(1.0, 0.0, 0.0, SMALL_BASIS)
    assert_allclose(t.energies, [0.0, 4.0, 4.0, 16.0], atol=1e-12)


def _decoupled_params():
    ec = mhz_to_rad_ns([200.0, 180.0, 190.0])
    omega = ghz_to_rad_ns([5.5, 6.1, 4.9])
    ej = [ej_from_frequency(e, w) for e, w in zip(ec, omega)]
    return CircuitParams(ec_matrix=np.diag(ec), ej1=ej[0], ej3=ej[2], ej_sum=ej[1], dej=0.3 * ej[1])


def test_decoupled_spectrum_is_a_sum_of_transmons():
    spec = dressed_spectrum(_decoupled_params(), SMALL_BASIS)
    singles = single_photon_frequencies(spec)
    assert spec.transition("000", "110") == pytest.approx(singles[0] + singles[1], abs=1e-9)
    assert abs(cross_kerr(spec)) < 1e-9
    assert min(spec.overlaps[s] for s in TRACKED_LABELS) > 1.0 - 1e-12


def test_decoupled_circuit_has_no_three_body_element():
    spec = dressed_spectrum(_decoupled_params(), SMALL_BASIS)
    sin_dressed, _ = squid_matrix_elements(spec)
    assert abs(sin_dressed[spec.index("110"), spec.index("001")]) < 1e-12


def test_perturbative_couplings_invert_initial_params():
    config = CircuitConfig()
    params = initial_circuit_params(config.targets(), config.charging_energies(), config.couplings())
    omega0, couplings = perturbative_couplings(params)
    assert_allclose(omega0, config.targets(), rtol=1e-12)
    for pair, g in config.couplings().items():
        assert couplings[pair] == pytest.approx(g, rel=1e-12)

    doubled = replace(params, ec_matrix=params.ec_matrix * 2.0 - np.diag(np.diag(params.ec_matrix)))
    _, doubled_couplings = perturbative_couplings(doubled)
    assert doubled_couplings[(0, 1)] == pytest.approx(2.0 * couplings[(0, 1)], rel=1e-12)

    _, none = perturbative_couplings(_decoupled_params())
    assert all(g == 0.0 for g in none.values())


def test_calibration_hits_targets(calibrated_device):
    _, spec = calibrated_device
    assert_allclose(single_photon_frequencies(spec), CircuitConfig().targets(), atol=mhz_to_rad_ns(0.1))


def test_calibration_keeps_couplings(calibrated_device):
    params, _ = calibrated_device
    _, couplings = perturbative_couplings(params)
    for pair, g in CircuitConfig().couplings().items():
        assert couplings[pair] == pytest.approx(g, rel=1e-9)


def test_single_excitation_labels_are_unambiguous(calibrated_device):
    _, spec = calibrated_device
    assert min(spec.overlaps[s] for s in ("000", "100", "010", "001")) > 0.5


def test_sum_rule_is_exact(calibrated_device):
    _, spec = calibrated_device
    assert abs(sum_rule_residual(spec)) < 1e-9


def test_three_body_transition_near_measured_value(calibrated_device):
    _, spec = calibrated_device
    assert rad_ns_to_ghz(spec.transition("001", "110")) == pytest.approx(6.4907, abs=0.020)


def test_cross_kerr_is_negative(calibrated_device):
    _, spec = calibrated_device
    assert cross_kerr(spec, "100", "010") < 0


def test_larger_josephson_energy_raises_frequency(calibrated_device):
    params, spec = calibrated_device
    basis = spec.basis
    shifted = dressed_spectrum(replace(params, ej1=1.01 * params.ej1), basis, labels=TRACKED_LABELS,
                               strict_labels=())
    assert single_photon_frequencies(shifted)[0] > single_photon_frequencies(spec)[0]


def test_sin_phi2_has_no_diagonal_at_zero_bias(calibrated_device):
    _, spec = calibrated_device
    sin_dressed, cos_diag = squid_matrix_elements(spec)
    assert np.max(np.abs(np.diag(sin_dressed)[:20])) < 1e-8
    assert np.all(cos_diag[:4] > 0)


def test_transition_table_quotes_two_photon_lines_per_photon(calibrated_device):
    _, spec = calibrated_device
    table = transition_table(spec, [("000", "110"), ("001", "110"), ("000", "300")])
    assert set(table) == {("000", "110"), ("001", "110")}
    assert table[("000", "110")] == pytest.approx(0.5 * rad_ns_to_ghz(spec.transition("000", "110")))


def test_flux_sweep(calibrated_device):
    params, spec = calibrated_device
    phis = np.linspace(0.0, 0.5, 11)
    sweep = spectrum_vs_flux(params, phis, spec.basis, max_workers=2)
    assert [p.phi_b for p in sweep] == list(phis)
    assert_allclose(sweep[0].omega, single_photon_frequencies(spec), atol=1e-9)
    qubit2 = np.array([p.omega[1] for p in sweep])
    assert np.all(np.diff(qubit2) < 0)

    mirrored = spectrum_vs_flux(params, [-0.2, 0.2], spec.basis)
    assert mirrored[0].omega[1] == pytest.approx(mirrored[1].omega[1], abs=1e-9)


def test_flux_sweep_rejects_out_of_range_bias(calibrated_device):
    params, spec = calibrated_device
    with pytest.raises(ValueError):
        spectrum_vs_flux(params, [0.0, 0.6], spec.basis)


def test_ambiguous_label_fails_loudly():
    states = np.eye(8, dtype=complex)
    k = np.arange(3)
    states[:3, :3] = np.exp(2j * np.pi * np.outer(k, k) / 3) / np.sqrt(3.0)
    labels = ["000", "001", "010"]
    assignment, overlaps = _assign_labels(states, 2, labels, strict_labels=())
    assert sorted(assignment.values()) == [0, 1, 2]
    with pytest.raises(LabelingError) as info:
        _assign_labels(states, 2, labels, strict_labels=["000"])
    assert info.value.label == "000"
    assert len(info.value.candidates) == 3


def test_label_helpers():
    assert bare_index("110", 6) == 42
    assert len(all_labels(4, 2)) == 10
    assert len(all_labels(6, 4)) == 35
    assert "020" in all_labels(4, 2)


def test_static_hamiltonian_is_hermitian_product_space_operator():
    h = build_static_hamiltonian(_decoupled_params(), SMALL_BASIS)
    assert h.shape == (64, 64)
    assert np.max(np.abs(h - h.conj().T)) < 1e-12
