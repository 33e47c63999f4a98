import numpy as np
import pytest

from qlinksim.errors import InvariantViolation
from qlinksim.invariants import (
    assert_invariants,
    check_cavity_bloch,
    check_frame_residuals,
    check_unitary_run,
    get_violation_explanation,
)
from qlinksim.models import COHERENCE_INDEX, FIELD_INDEX, PHOTON_INDEX, CavityBlochState


def _vector():
    return CavityBlochState.from_populations({"001": 0.7, "110": 0.3}, coherence=0.2j).vector.copy()


def test_physical_state_passes():
    assert check_cavity_bloch(_vector()) == (True, [])


@pytest.mark.parametrize("index, value, reason", [
    (0, 0.1, "probability_not_conserved"),
    (PHOTON_INDEX, -1.0, "negative_photon_number"),
    (COHERENCE_INDEX, 0.6, "coherence_out_of_bounds"),
    (FIELD_INDEX, 0.01, "field_correlator_mismatch"),
])
def test_broken_state_is_flagged(index, value, reason):
    v = _vector()
    v[index] = value
    ok, reasons = check_cavity_bloch(np.vstack([_vector(), v]))
    assert not ok
    assert reasons == [reason]


def test_unitary_run_checks():
    assert check_unitary_run(1e-10, 1e-12, 1e-9) == (True, [])
    ok, reasons = check_unitary_run(1e-3, 1e-3, 1e-3)
    assert not ok
    assert reasons == ["norm_not_conserved", "gauss_law_violated", "energy_not_conserved"]


def test_frame_residuals():
    assert check_frame_residuals([]) == (True, [])
    assert check_frame_residuals([0.0, 1e-3]) == (False, ["rotating_frame_mismatch"])


def test_assert_invariants_explains_reasons():
    assert_invariants(True, [])
    with pytest.raises(InvariantViolation) as info:
        assert_invariants(False, ["gauss_law_violated", "custom"], context="false vacuum")
    assert info.value.reasons == ["gauss_law_violated", "custom"]
    assert str(info.value) == "false vacuum: Gauss law violated; custom"
    assert get_violation_explanation(["norm_not_conserved"]) == "State norm drifted"
