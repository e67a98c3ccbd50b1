import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from core.config import DENSITY_TOL, DOUBLING_TOL
from core.errors import InputError, InvariantError
from core.liouville import as_matrix, commutation_superoperator, is_hermitian, vec

logger = logging.getLogger(f"lindblad_fit.{__name__}")

StatePair = Tuple[np.ndarray, np.ndarray]


def check_density_matrix(rho: np.ndarray, tol: float = DENSITY_TOL, name: str = "density matrix",
                         psd_tol: Optional[float] = None):
    if not is_hermitian(rho, tol):
        raise InvariantError(f"{name} is not Hermitian")
    tr = np.trace(rho)
    if abs(tr - 1.0) > tol * 10:
        raise InvariantError(f"{name} has trace {tr.real:.6g}, expected 1")
    if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() < -(tol * 10 if psd_tol is None else psd_tol):
        raise InvariantError(f"{name} is not positive semidefinite")


def propagator_from_state_pairs(pairs: List[StatePair]) -> np.ndarray:
    """Least-squares P with P vec(rho_in) = vec(rho_out) over all pairs"""
    if not pairs:
        raise InputError("no state pairs given")
    n = np.asarray(pairs[0][0]).shape[0]
    x_cols, y_cols = [], []
    for rho_in, rho_out in pairs:
        rho_in, rho_out = as_matrix(rho_in, "input state"), as_matrix(rho_out, "output state")
        if rho_in.shape != (n, n) or rho_out.shape != (n, n):
            raise InputError(f"state pair shapes {rho_in.shape}/{rho_out.shape} do not match N={n}")
        x_cols.append(vec(rho_in))
        y_cols.append(vec(rho_out))
    x = np.hstack(x_cols)
    y = np.hstack(y_cols)
    if np.linalg.matrix_rank(x) < n * n:
        raise InputError(
            f"input states span a {np.linalg.matrix_rank(x)}-dimensional space, need {n * n}",
            hint="prepare a complete set of input states",
        )
    # P X = Y  <=>  X^T P^T = Y^T
    pt, *_ = np.linalg.lstsq(x.T, y.T, rcond=None)
    return pt.T


@dataclass
class TomographyDataset:
    n: int
    times: List[float]
    hamiltonian: np.ndarray
    propagators: Optional[List[np.ndarray]] = None
    state_pairs: Optional[List[List[StatePair]]] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.times = [float(t) for t in self.times]
        self.hamiltonian = as_matrix(self.hamiltonian, "hamiltonian")
        self.validate()

    def validate(self):
        if not self.times:
            raise InputError("dataset has no time points")
        if any(t <= 0 for t in self.times):
            raise InputError("dataset times must all be positive")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise InputError("dataset times must be strictly increasing")
        if self.hamiltonian.shape != (self.n, self.n):
            raise InputError(f"hamiltonian shape {self.hamiltonian.shape} does not match N={self.n}")
        if self.propagators is None and self.state_pairs is None:
            raise InputError("dataset needs propagators or state pairs")
        if self.propagators is not None:
            if len(self.propagators) != len(self.times):
                raise InputError(f"{len(self.propagators)} propagators for {len(self.times)} times")
            n2 = self.n * self.n
            self.propagators = [as_matrix(p, "propagator") for p in self.propagators]
            for p in self.propagators:
                if p.shape != (n2, n2):
                    raise InputError(f"propagator shape {p.shape} does not match N^2={n2}")
        if self.state_pairs is not None:
            if len(self.state_pairs) != len(self.times):
                raise InputError(f"{len(self.state_pairs)} state-pair sets for {len(self.times)} times")
            # measured outputs may dip below zero by the noise level
            sigma = float(self.metadata.get("noise_sigma", 0.0))
            psd_tol = DENSITY_TOL * 10 + 4 * self.n * sigma
            for pairs in self.state_pairs:
                for rho_in, rho_out in pairs:
                    check_density_matrix(rho_in, name="input density matrix")
                    check_density_matrix(rho_out, name="output density matrix", psd_tol=psd_tol)

    @property
    def kind(self) -> str:
        return "propagators" if self.propagators is not None else "state_pairs"

    def superpropagators(self) -> List[np.ndarray]:
        if self.propagators is not None:
            return self.propagators
        return [propagator_from_state_pairs(pairs) for pairs in self.state_pairs]

    def commutator(self) -> np.ndarray:
        return commutation_superoperator(self.hamiltonian)

    def is_doubling_grid(self, tol: float = DOUBLING_TOL) -> bool:
        t1 = self.times[0]
        return all(abs(t - 2 ** m * t1) <= tol * 2 ** m * t1 for m, t in enumerate(self.times))

    def with_times(self, indices: List[int]) -> "TomographyDataset":
        return replace(
            self,
            times=[self.times[i] for i in indices],
            propagators=None if self.propagators is None else [self.propagators[i] for i in indices],
            state_pairs=None if self.state_pairs is None else [self.state_pairs[i] for i in indices],
        )
