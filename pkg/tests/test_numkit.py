import numpy as np
import pytest
import scipy.sparse as sp
from numpy.testing import assert_allclose

from qlinksim.errors import NotHermitianError
from qlinksim.numkit import (
    SpectralPropagator,
    StateVector,
    eigh,
    expm_unitary,
    ghz_to_rad_ns,
    hermiticity_error,
    integrate_ode,
    kron_all,
    mhz_to_rad_ns,
    operator_from_coo,
    rad_ns_to_ghz,
    rad_ns_to_mhz,
    schrodinger_rhs,
)

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]])
SIGMA_Z = np.diag([1.0, -1.0])


def test_unit_conversions():
    assert ghz_to_rad_ns(1.0) == pytest.approx(2.0 * np.pi)
    assert mhz_to_rad_ns(1000.0) == pytest.approx(ghz_to_rad_ns(1.0))
    assert rad_ns_to_ghz(ghz_to_rad_ns(6.4907)) == pytest.approx(6.4907)
    assert rad_ns_to_mhz(mhz_to_rad_ns(0.1)) == pytest.approx(0.1)
    assert_allclose(ghz_to_rad_ns([1.0, 2.0]), [2.0 * np.pi, 4.0 * np.pi])


def test_kron_ordering_is_row_major():
    up = np.array([1.0, 0.0])
    down = np.array([0.0, 1.0])
    z1 = kron_all(SIGMA_Z, np.eye(2), np.eye(2))
    state = np.kron(np.kron(down, up), up)
    assert state @ z1 @ state == -1.0
    assert sp.issparse(kron_all(sp.identity(2), SIGMA_X))


def test_small_operators_come_back_dense():
    op = operator_from_coo([0, 0, 1], [1, 1, 0], [1.0, 1.0, 2.0], (2, 2))
    assert isinstance(op, np.ndarray)
    assert_allclose(op, [[0.0, 2.0], [2.0, 0.0]])
    large = operator_from_coo([0], [1], [1.0], (100, 100))
    assert sp.issparse(large)
    assert large.nnz == 1


def test_eigh_rejects_non_hermitian():
    with pytest.raises(NotHermitianError):
        eigh(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(ValueError):
        eigh(np.ones((2, 3)))
    assert hermiticity_error(np.zeros((2, 2))) == 0.0


def test_spectral_propagator_rotates_a_spin():
    times = np.linspace(0.0, np.pi, 5)
    states = SpectralPropagator(SIGMA_X).evolve(np.array([1.0, 0.0]), times)
    assert_allclose(np.abs(states[:, 1]) ** 2, np.sin(times) ** 2, atol=1e-12)
    assert_allclose(expm_unitary(SIGMA_X, 0.3) @ np.array([1.0, 0.0]), [np.cos(0.3), -1j * np.sin(0.3)], atol=1e-12)


def test_integrate_ode_agrees_with_spectral_propagator():
    h = np.array([[0.3, 0.7], [0.7, -0.3]])
    times = np.linspace(0.0, 20.0, 11)
    traj = integrate_ode(schrodinger_rhs(lambda t: h), np.array([1.0, 0.0]), (0.0, 20.0), t_eval=times)
    assert_allclose(traj.y, SpectralPropagator(h).evolve(np.array([1.0, 0.0]), times), atol=1e-7)
    assert traj.n_evaluations > 0


def test_integrate_ode_rejects_bad_tolerance():
    with pytest.raises(ValueError):
        integrate_ode(lambda t, y: y, np.array([1.0]), (0.0, 1.0), rtol=0.0)


def test_state_vector():
    psi = StateVector([0.6, 0.8j], "sector")
    assert psi.dim == 2
    assert psi.is_normalized()
    assert_allclose(psi.probabilities(), [0.36, 0.64])
    assert not StateVector([1.0, 1.0], "sector").is_normalized()
