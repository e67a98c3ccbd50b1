import logging
from typing import List

import numpy as np

from core.config import DOUBLING_TOL
from core.cp import Supergenerator
from core.errors import InputError, SingularMatrixError
from core.matfuncs import expm

from .base import BaseEstimator, FitReport, make_report
from .dataset import TomographyDataset

logger = logging.getLogger(f"lindblad_fit.{__name__}")


def symmetric_difference(p: np.ndarray, hc: np.ndarray, t: float) -> np.ndarray:
    """(A(t) - A(-t)) / 2t with A(t) = e^{i Hc t/2} P(t) e^{i Hc t/2}.

    A(-t) is taken as the matrix inverse of A(t), which equals the propagator
    run backwards for exact data. The result is -R + O(t^2) with only even
    powers of t.
    """
    half = expm(hc, 0.5j * t)
    a = half @ p @ half
    try:
        a_inv = np.linalg.inv(a)
    except np.linalg.LinAlgError:
        raise SingularMatrixError(f"propagator at t={t:g} s is singular")
    if not np.all(np.isfinite(a_inv)) or np.linalg.cond(a) > 1e14:
        raise SingularMatrixError(f"propagator at t={t:g} s is numerically singular")
    return (a - a_inv) / (2.0 * t)


def romberg_tableau(estimates: List[np.ndarray]) -> List[List[np.ndarray]]:
    """Even-power Richardson tableau; estimates ordered from coarsest to finest step"""
    table = [[estimates[0]]]
    for k in range(1, len(estimates)):
        row = [estimates[k]]
        for l in range(1, k + 1):
            prev = row[l - 1]
            row.append(prev + (prev - table[k - 1][l - 1]) / (4.0 ** l - 1.0))
        table.append(row)
    return table


def richardson_estimate(ds: TomographyDataset) -> Supergenerator:
    """Central differences about t=0 on a doubling grid, extrapolated to O(t1^{2M})"""
    if not ds.is_doubling_grid(DOUBLING_TOL):
        raise InputError(
            f"times {ds.times} do not form a doubling sequence",
            hint="richardson requires doubling time grid t_m = 2^(m-1) t_1",
        )
    hc = ds.commutator()
    diffs = [symmetric_difference(p, hc, t) for p, t in zip(ds.superpropagators(), ds.times)]
    table = romberg_tableau(diffs[::-1])
    relaxation = -table[-1][-1]
    logger.debug(f"richardson: {len(diffs)} levels")
    return Supergenerator.from_hamiltonian(ds.hamiltonian, relaxation)


class RichardsonEstimator(BaseEstimator):
    name = "richardson"
    description = "Richardson extrapolation of symmetric differences"

    def check(self, ds: TomographyDataset):
        if not ds.is_doubling_grid():
            raise InputError("richardson requires doubling time grid",
                             hint="use times like 0.4,0.8,1.6,3.2")

    def estimate(self, ds: TomographyDataset) -> FitReport:
        self.check(ds)
        return make_report(richardson_estimate(ds), ds, self.name, levels=len(ds.times))
