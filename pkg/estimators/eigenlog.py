import numpy as np

from core.cp import Supergenerator
from core.errors import NumericalError

from .base import BaseEstimator, FitReport, make_report
from .dataset import TomographyDataset

MAX_EIGVEC_COND = 1e10


def eigenlog_relaxation(p: np.ndarray, t: float) -> np.ndarray:
    """Rebuild -log|zeta| / t on the eigenvectors of P, discarding the phases"""
    values, vectors = np.linalg.eig(p)
    if np.abs(values).min() <= 1e-300:
        raise NumericalError(f"propagator at t={t:g} s has a zero eigenvalue")
    if np.linalg.cond(vectors) > MAX_EIGVEC_COND:
        raise NumericalError(
            f"propagator at t={t:g} s is defective or nearly so",
            hint="eiglog needs diagonalisable propagators",
        )
    rates = -np.log(np.abs(values)) / t
    return (vectors * rates) @ np.linalg.inv(vectors)


def eigenlog_average_estimate(ds: TomographyDataset) -> Supergenerator:
    """Average over times of the phase-free eigenvalue-log relaxation estimates.

    Meaningful only when the relaxation part (nearly) commutes with the
    Hamiltonian commutator.
    """
    props = ds.superpropagators()
    total = np.zeros_like(props[0], dtype=complex)
    for p, t in zip(props, ds.times):
        total = total + eigenlog_relaxation(p, t)
    return Supergenerator.from_hamiltonian(ds.hamiltonian, total / len(props))


class EigenLogEstimator(BaseEstimator):
    name = "eiglog"
    description = "averaged logarithms of propagator eigenvalue moduli"

    def estimate(self, ds: TomographyDataset) -> FitReport:
        return make_report(eigenlog_average_estimate(ds), ds, self.name)
