"""Numerical layer: Kronecker products, Hermitian eigensolving, propagators, ODE integration.

Every other module goes through these helpers so that operator storage,
Hermiticity checks and tolerances are handled in one place. Operators are
plain ``numpy.ndarray`` (dense) or ``scipy.sparse`` CSR matrices.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.integrate import solve_ivp

from .errors import IntegrationError, NotHermitianError

logger = logging.getLogger(__name__)

Operator = Union[np.ndarray, sp.spmatrix]

# Below this dimension operators are kept dense
DENSE_DIM_LIMIT = 64

# Exact GHz -> rad/ns factor
TWO_PI = 2.0 * np.pi

# Tolerances for unitary and dissipative dynamics
UNITARY_RTOL = 1e-9
UNITARY_ATOL = 1e-12
DISSIPATIVE_RTOL = 1e-7
DISSIPATIVE_ATOL = 1e-10


def _scaled(x, factor):
    arr = np.asarray(x, dtype=float) * factor
    return float(arr) if arr.ndim == 0 else arr


def ghz_to_rad_ns(f_ghz):
    """Convert an ordinary frequency in GHz to an angular frequency in rad/ns."""
    return _scaled(f_ghz, TWO_PI)


def mhz_to_rad_ns(f_mhz):
    return _scaled(f_mhz, TWO_PI * 1e-3)


def rad_ns_to_ghz(omega):
    return _scaled(omega, 1.0 / TWO_PI)


def rad_ns_to_mhz(omega):
    return _scaled(omega, 1e3 / TWO_PI)


@dataclass
class StateVector:
    """Amplitudes expressed in a named basis."""

    amplitudes: np.ndarray
    basis_tag: str

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex).ravel()

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def is_normalized(self, tol: float = 1e-10) -> bool:
        return abs(self.norm() - 1.0) < tol

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass
class OdeTrajectory:
    """Samples of an ODE solution plus solver bookkeeping."""

    t: np.ndarray
    y: np.ndarray  # shape (n_samples, dim)
    n_evaluations: int
    dense: Optional[Callable[[float], np.ndarray]] = None


def as_dense(a: Operator) -> np.ndarray:
    """Return a dense ndarray view of an operator."""
    if sp.issparse(a):
        return a.toarray()
    return np.asarray(a)


def operator_from_coo(rows: Sequence[int], cols: Sequence[int], values: Sequence[complex],
                      shape: Tuple[int, int]) -> Operator:
    """
    Assemble an operator from coordinate triplets.

    Duplicate coordinates are summed and explicit zeros dropped. Small operators
    come back dense.

    Args:
        rows: Row indices
        cols: Column indices
        values: Entries
        shape: Operator shape

    Returns:
        Dense ndarray below DENSE_DIM_LIMIT, CSR matrix otherwise
    """
    coo = sp.coo_matrix((np.asarray(values, dtype=complex), (rows, cols)), shape=shape)
    csr = coo.tocsr()
    csr.sum_duplicates()
    csr.eliminate_zeros()
    if max(shape) < DENSE_DIM_LIMIT:
        return csr.toarray()
    return csr


def hermiticity_error(h: Operator) -> float:
    """Relative Hermiticity defect max|A - A^dagger| / max|A|."""
    dense = as_dense(h)
    scale = np.max(np.abs(dense)) if dense.size else 0.0
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(dense - dense.conj().T)) / scale)


def _require_hermitian(h: Operator) -> np.ndarray:
    dense = as_dense(h)
    if dense.ndim != 2 or dense.shape[0] != dense.shape[1]:
        raise NotHermitianError(f"expected a square matrix, got shape {dense.shape}")
    err = hermiticity_error(dense)
    if err >= 1e-12:
        raise NotHermitianError(f"matrix is not Hermitian (relative defect {err:.3e})")
    return dense


def kron(a: Operator, b: Operator) -> Operator:
    """Kronecker product in row-major composite indexing; sparse if either factor is sparse."""
    if sp.issparse(a) or sp.issparse(b):
        return sp.kron(a, b, format="csr")
    return np.kron(np.asarray(a), np.asarray(b))


def kron_all(*factors: Operator) -> Operator:
    result = factors[0]
    for factor in factors[1:]:
        result = kron(result, factor)
    return result


def eigh(h: Operator) -> Tuple[np.ndarray, np.ndarray]:
    """
    Diagonalize a Hermitian operator.

    Args:
        h: Hermitian operator (dense or sparse)

    Returns:
        Tuple of (ascending eigenvalues, eigenvector matrix with eigenvectors as columns)

    Raises:
        NotHermitianError: If h is not Hermitian to 1e-12 relative
    """
    dense = _require_hermitian(h)
    evals, evecs = scipy.linalg.eigh(dense)
    return evals, evecs


def expm_unitary(h: Operator, t: float) -> np.ndarray:
    """Propagator exp(-i h t) from the spectral decomposition of h."""
    evals, evecs = eigh(h)
    phases = np.exp(-1j * evals * t)
    return (evecs * phases) @ evecs.conj().T


class SpectralPropagator:
    """Reusable exp(-iHt) for a time-independent Hamiltonian."""

    def __init__(self, h: Operator):
        self.energies, self.vectors = eigh(h)

    def evolve(self, psi0: np.ndarray, times: Sequence[float]) -> np.ndarray:
        """
        Evolve a state to every requested time.

        Args:
            psi0: Initial amplitudes
            times: Sample times

        Returns:
            Array of shape (len(times), dim)
        """
        coeffs = self.vectors.conj().T @ np.asarray(psi0, dtype=complex)
        times = np.asarray(times, dtype=float)
        phases = np.exp(-1j * np.outer(times, self.energies))
        return (phases * coeffs[None, :]) @ self.vectors.T


def integrate_ode(f: Callable[[float, np.ndarray], np.ndarray], y0: np.ndarray,
                  t_span: Tuple[float, float], rtol: float = UNITARY_RTOL,
                  atol: float = UNITARY_ATOL, t_eval: Optional[Sequence[float]] = None,
                  dense_output: bool = False, method: str = "DOP853") -> OdeTrajectory:
    """
    Integrate a complex ODE with an adaptive embedded Runge-Kutta stepper.

    Args:
        f: Right-hand side f(t, y)
        y0: Initial value (complex allowed)
        t_span: Integration window
        rtol: Relative tolerance
        atol: Absolute tolerance
        t_eval: Sample times (defaults to the solver's own steps)
        dense_output: Keep the continuous interpolant on the trajectory
        method: solve_ivp explicit RK method (RK45 or DOP853)

    Returns:
        OdeTrajectory with samples of shape (n_samples, dim)

    Raises:
        ValueError: If a tolerance is not positive
        IntegrationError: If the stepper fails
    """
    if rtol <= 0 or atol <= 0:
        raise ValueError("rtol and atol must be positive")

    y0 = np.asarray(y0, dtype=complex).ravel()
    sol = solve_ivp(f, t_span, y0, method=method, t_eval=t_eval, rtol=rtol, atol=atol,
                    dense_output=dense_output)
    if sol.status < 0:
        t_fail = float(sol.t[-1]) if len(sol.t) else float(t_span[0])
        raise IntegrationError(f"ODE integration failed: {sol.message}", t_fail=t_fail)

    logger.debug(f"integrate_ode: {sol.nfev} evaluations over {t_span}")
    return OdeTrajectory(
        t=np.asarray(sol.t),
        y=np.asarray(sol.y).T,
        n_evaluations=int(sol.nfev),
        dense=sol.sol if dense_output else None,
    )


def schrodinger_rhs(h_of_t: Callable[[float], Operator]) -> Callable[[float, np.ndarray], np.ndarray]:
    """Right-hand side dy/dt = -i H(t) y."""

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        return -1j * (h_of_t(t) @ y)

    return rhs
