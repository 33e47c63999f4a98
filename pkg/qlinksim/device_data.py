"""Characterization data of the three-transmon device and its readout resonators.

Values are quoted as ordinary frequencies (GHz or MHz) and times in ns, the way
they were measured. Conversion to rad/ns happens in config and at call sites.
"""

# Qubit frequencies at zero DC flux bias (GHz)
QUBIT_FREQUENCIES_GHZ = (5.7279, 5.9098, 5.0538)

# Charging energies E_C,jj/h (MHz)
CHARGING_ENERGIES_MHZ = (183.0, 165.0, 184.0)

# Capacitive couplings g_jk/h (MHz), keyed by zero-based transmon pair
COUPLINGS_MHZ = {
    (0, 1): 63.0,
    (0, 2): 18.0,
    (1, 2): 108.0,
}

# Measured transition frequencies (GHz), keyed by (initial, final) label
TRANSITION_FREQUENCIES_GHZ = {
    ("000", "100"): 5.7279,
    ("000", "010"): 5.9098,
    ("000", "001"): 5.0538,
    ("000", "200"): 5.6352,  # two-photon transition, per photon
    ("000", "110"): 5.7742,  # two-photon transition, per photon
    ("000", "020"): 5.8582,  # two-photon transition, per photon
    ("100", "200"): 5.5435,
    ("100", "110"): 5.8094,
    ("010", "110"): 5.6345,
    ("010", "020"): 5.806,
    ("001", "110"): 6.4907,
}

# Readout resonators: frequency (GHz), internal and total loss (MHz); eta is
# quoted alongside but has no role in the model
RESONATORS = {
    1: {"omega_r_ghz": 7.698, "kappa_int_mhz": 0.439, "kappa_mhz": 0.650, "eta": 0.325},
    2: {"omega_r_ghz": 7.518, "kappa_int_mhz": 0.489, "kappa_mhz": 0.643, "eta": 0.240},
    3: {"omega_r_ghz": 7.035, "kappa_int_mhz": 5.1, "kappa_mhz": 6.37, "eta": 0.199},
}

# Dispersive shifts 2*chi/h (MHz) of each resonator per excited qubit (q1, q2, q3)
DISPERSIVE_SHIFTS_2CHI_MHZ = {
    1: (-7.3, -0.4, 0.0),
    2: (-2.2, -2.4, 0.0),
    3: (-2.0, -3.0, -0.5),
}

# Single-qubit coherence (ns)
QUBIT_T1_NS = (4216.0, 1302.0, 4152.0)
QUBIT_T_RAMSEY_NS = (2470.0, 971.0, 2907.0)

# Three-body decay times reported from the population fit (ns)
THREE_BODY_DECAY_NS = {
    ("110", "100"): 1561.0,
    ("110", "010"): 6600.0,
    ("001", "000"): 1280.0,
}

# Largest three-body coupling J/h reached on the device (MHz)
MAX_THREE_BODY_COUPLING_MHZ = 3.0


def state_chi_mhz(resonator_id: int) -> dict:
    """
    Dispersive shift chi_s/h (MHz) of a resonator for each tracked qubit state.

    Shifts of multi-excitation states add the single-qubit contributions.

    Args:
        resonator_id: Resonator number 1, 2 or 3

    Returns:
        Dictionary mapping state label to chi in MHz
    """
    shifts = DISPERSIVE_SHIFTS_2CHI_MHZ[resonator_id]
    chi = {}
    for label in ("000", "001", "010", "100", "110"):
        chi[label] = sum(0.5 * s for s, bit in zip(shifts, label) if bit == "1")
    return chi
