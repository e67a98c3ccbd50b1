"""
Parameter-to-matrix maps for the least-squares fits.

The relaxation matrix is parameterised in an orthonormal Hermitian basis whose
first element is the identity, so trace preservation is a zero first row and
symmetry and block masks hold exactly.
"""
from typing import List, Tuple

import numpy as np

from core.errors import InputError
from core.liouville import OperatorBasis, cartesian_basis, transition_basis

# 0-based transition-basis indices of the kite blocks (identity excluded)
KITE_BLOCKS: Tuple[Tuple[int, ...], ...] = (
    (1, 2, 3),                        # populations
    (4, 5),                           # zero-quantum coherences
    (6, 7, 8, 9, 10, 11, 12, 13),     # single-quantum coherences
    (14, 15),                         # double-quantum coherences
)


class Parameterization:
    def __init__(self, structure: str, n: int, detailed_balance: bool = True, border_identity_row: bool = True):
        self.structure = structure
        self.n = n
        if structure == "redfield_kite":
            self.basis: OperatorBasis = transition_basis(n)
            self.symmetric = detailed_balance
        elif structure in ("full_symmetric", "none"):
            self.basis = cartesian_basis(n)
            self.symmetric = structure == "full_symmetric"
        else:
            raise InputError(f"unknown structure '{structure}'")
        self.border_identity_row = border_identity_row
        self.positions = self._positions()
        self._m = self.basis.matrix()

    def _positions(self) -> List[Tuple[int, int]]:
        n2 = self.n * self.n
        if self.structure == "redfield_kite":
            pos = []
            for block in KITE_BLOCKS:
                for a, i in enumerate(block):
                    for b, j in enumerate(block):
                        if self.symmetric and b < a:
                            continue
                        pos.append((i, j))
            return pos
        if self.symmetric:
            return [(i, j) for i in range(1, n2) for j in range(i, n2)]
        first_col = 1 if self.border_identity_row else 0
        return [(i, j) for i in range(1, n2) for j in range(first_col, n2)]

    @property
    def n_params(self) -> int:
        return len(self.positions)

    def to_matrix(self, x: np.ndarray) -> np.ndarray:
        n2 = self.n * self.n
        r = np.zeros((n2, n2))
        for value, (i, j) in zip(x, self.positions):
            r[i, j] = value
            if self.symmetric:
                r[j, i] = value
        return r

    def from_matrix(self, r: np.ndarray) -> np.ndarray:
        r = np.real(np.asarray(r))
        if self.symmetric:
            return np.array([0.5 * (r[i, j] + r[j, i]) for i, j in self.positions])
        return np.array([r[i, j] for i, j in self.positions])

    def to_relaxation(self, x: np.ndarray) -> np.ndarray:
        """Relaxation supermatrix in vec coordinates"""
        return self._m @ self.to_matrix(x) @ self._m.conj().T

    def from_relaxation(self, r_vec: np.ndarray) -> np.ndarray:
        """Least-squares projection of a vec-coordinate relaxation matrix onto the parameters"""
        return self.from_matrix(self._m.conj().T @ r_vec @ self._m)


def structure_parameter_count(structure: str, n: int, detailed_balance: bool = True,
                              border_identity_row: bool = True) -> int:
    return Parameterization(structure, n, detailed_balance, border_identity_row).n_params
