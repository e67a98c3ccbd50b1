from dataclasses import dataclass

import numpy as np
import scipy.linalg

from utils.logger import run_logger

from .config import BRANCH_CUT_TOL, HERMITIAN_TOL, SINGULAR_TOL
from .errors import BranchCutError, InvariantError, NonConvergenceError, SingularMatrixError
from .liouville import ComplexMatrix, as_matrix, is_hermitian, require_square


@dataclass(frozen=True)
class EigenDecomposition:
    values: np.ndarray
    vectors: np.ndarray  # columns are eigenvectors
    is_hermitian_path: bool

    def reconstruct(self) -> ComplexMatrix:
        v = self.vectors
        if self.is_hermitian_path:
            return (v * self.values) @ v.conj().T
        return (v * self.values) @ np.linalg.inv(v)


def expm(a: ComplexMatrix, scale: float = 1.0) -> ComplexMatrix:
    """exp(scale * a) by Pade scaling and squaring; valid for non-normal a"""
    a = as_matrix(a)
    require_square(a)
    return scipy.linalg.expm(scale * a)


def logm_principal(a: ComplexMatrix, tol: float = BRANCH_CUT_TOL) -> ComplexMatrix:
    """Principal logarithm, refusing singular input and eigenvalues on the negative real axis"""
    a = as_matrix(a)
    require_square(a)
    values = np.linalg.eigvals(a)
    scale = max(1.0, np.abs(values).max())
    if np.abs(values).min() <= SINGULAR_TOL * scale:
        raise SingularMatrixError(
            f"matrix is singular (smallest |eigenvalue| {np.abs(values).min():.3e})"
        )
    on_cut = (values.real < 0) & (np.abs(values.imag) <= tol * np.maximum(1.0, np.abs(values)))
    if np.any(on_cut):
        raise BranchCutError(
            f"eigenvalue {values[on_cut][0]:.6g} lies on the branch cut of the principal logarithm",
            hint="the logarithm is ambiguous here; try a shorter time or another estimator",
        )
    result, errest = scipy.linalg.logm(a, disp=False)
    if not np.isfinite(errest) or errest > 1e-6:
        run_logger.log_warning(f"logm error estimate {errest:.3e}", step="logm")
    return np.asarray(result, dtype=complex)


def eig(a: ComplexMatrix, hermitian: bool = False, tol: float = HERMITIAN_TOL) -> EigenDecomposition:
    """Eigendecomposition, sorted descending (real part, then imaginary part)"""
    a = as_matrix(a)
    require_square(a)
    try:
        if hermitian:
            if not is_hermitian(a, tol):
                raise InvariantError("eig: input flagged Hermitian is not Hermitian within tolerance")
            values, vectors = np.linalg.eigh(0.5 * (a + a.conj().T))
            order = np.argsort(values)[::-1]
            return EigenDecomposition(values[order], vectors[:, order], True)
        values, vectors = scipy.linalg.eig(a)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as e:
        raise NonConvergenceError(f"eigendecomposition did not converge: {e}")
    order = np.lexsort((-values.imag, -values.real))
    return EigenDecomposition(values[order], vectors[:, order], False)


def frobenius_norm(a: ComplexMatrix) -> float:
    return float(np.linalg.norm(np.asarray(a), "fro"))


def hermitian_part(a: ComplexMatrix) -> ComplexMatrix:
    a = np.asarray(a)
    return 0.5 * (a + a.conj().T)


def psd_project(a: ComplexMatrix) -> ComplexMatrix:
    """Nearest PSD matrix in Frobenius norm: clip the negative eigenvalues"""
    h = hermitian_part(as_matrix(a))
    values, vectors = np.linalg.eigh(h)
    clipped = np.clip(values, 0.0, None)
    return (vectors * clipped) @ vectors.conj().T


def negative_mass(a: ComplexMatrix) -> float:
    """Sum of |negative eigenvalues| of the Hermitian part"""
    values = np.linalg.eigvalsh(hermitian_part(as_matrix(a)))
    return float(-values[values < 0].sum())
