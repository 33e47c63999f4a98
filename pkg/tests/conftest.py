import pytest

from qlinksim.circuit import calibrate_ej, dressed_spectrum
from qlinksim.config import CircuitConfig, initial_circuit
from qlinksim.models import ReadoutParams
from qlinksim.numkit import ghz_to_rad_ns

# 2*chi per excited qubit (rad/ns); every tracked state gets a distinct shift
SHIFTS = {
    1: (-0.020, -0.006, -0.012),
    2: (-0.004, -0.016, -0.010),
}

RATES = {
    ("110", "100"): 1.0 / 600.0,
    ("110", "010"): 1.0 / 900.0,
    ("100", "000"): 1.0 / 700.0,
    ("010", "000"): 1.0 / 500.0,
    ("001", "000"): 1.0 / 800.0,
}


def make_readout(resonator_id, gamma=None, gamma_phi=0.0, kappa_int=0.005, kappa_ext=0.015):
    shifts = SHIFTS[resonator_id]
    chi = {s: sum(0.5 * x for x, bit in zip(shifts, s) if bit == "1")
           for s in ("000", "001", "010", "100", "110")}
    return ReadoutParams(
        omega_r=ghz_to_rad_ns(7.5 + 0.2 * resonator_id),
        kappa_int=kappa_int,
        kappa_ext=kappa_ext,
        chi=chi,
        gamma=dict(gamma or {}),
        gamma_phi=gamma_phi,
        resonator_id=resonator_id,
    )


@pytest.fixture
def lossy_readouts():
    return {rid: make_readout(rid, RATES, gamma_phi=1e-3) for rid in (1, 2)}


@pytest.fixture(scope="session")
def calibrated_device():
    """Calibrated default circuit and its zero-bias dressed spectrum."""
    circuit = CircuitConfig()
    params = calibrate_ej(circuit.targets(), initial_circuit(circuit), circuit.basis(),
                          coupling_targets=circuit.couplings())
    return params, dressed_spectrum(params, circuit.basis(), strict_labels=())
