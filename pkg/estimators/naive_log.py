import logging

import numpy as np

from core.cp import Supergenerator
from core.errors import InputError
from core.matfuncs import logm_principal
from utils.logger import run_logger

from .base import BaseEstimator, FitReport, make_report
from .dataset import TomographyDataset

logger = logging.getLogger(f"lindblad_fit.{__name__}")


def naive_log_estimate(ds: TomographyDataset, index: int = 0) -> Supergenerator:
    """R = -log(P_m) / t_m - i Hc from a single propagator"""
    if not 0 <= index < len(ds.times):
        raise InputError(f"time index {index} out of range for {len(ds.times)} times")
    p = ds.superpropagators()[index]
    t = ds.times[index]
    hc = ds.commutator()
    phase = np.abs(np.linalg.eigvals(hc)).max() * t
    if phase > np.pi:
        run_logger.log_warning(
            f"logm: Hamiltonian phase {phase:.1f} rad exceeds pi at t={t:g} s; "
            "the principal logarithm will alias the precession frequencies"
        )
    relaxation = -logm_principal(p) / t - 1j * hc
    return Supergenerator.from_hamiltonian(ds.hamiltonian, relaxation)


class NaiveLogEstimator(BaseEstimator):
    name = "logm"
    description = "principal matrix logarithm of one propagator"

    def __init__(self, config=None, index: int = 0):
        super().__init__(config)
        self.index = index

    def estimate(self, ds: TomographyDataset) -> FitReport:
        g = naive_log_estimate(ds, self.index)
        report = make_report(g, ds, self.name, time_index=self.index)
        if not report.penalty_at_solution <= self.config.simplex_tolerance:
            run_logger.log_warning(
                f"logm estimate is not completely positive (penalty {report.penalty_at_solution:.3e})"
            )
        return report
