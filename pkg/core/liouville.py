"""
Liouville-space algebra.

Density matrices are vectorised by stacking columns left to right, so the
vec index k*N + i holds rho[i, k]. Under this convention

    vec(A X B) = (B^T kron A) vec(X)

and every superoperator in the package is written with it.
"""
import itertools
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .config import HERMITIAN_TOL
from .errors import InputError, InvariantError

logger = logging.getLogger(f"lindblad_fit.{__name__}")

ComplexMatrix = np.ndarray

PAULI: Dict[str, np.ndarray] = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

BASIS_NAMES = ("cartesian", "transition", "zeeman")


def as_matrix(a, name: str = "matrix") -> ComplexMatrix:
    """Coerce to a 2-D complex array, rejecting empty or ragged input"""
    try:
        m = np.array(a, dtype=complex)
    except (TypeError, ValueError) as e:
        raise InputError(f"{name} is not a numeric matrix: {e}")
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise InputError(f"{name} must be a non-empty 2-D matrix, got shape {m.shape}")
    return m


def require_square(m: ComplexMatrix, name: str = "matrix") -> int:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InputError(f"{name} must be square, got shape {m.shape}")
    return m.shape[0]


def liouville_dimension(size: int, name: str = "supermatrix") -> int:
    """Return N for a length N^2, raising if size is not a perfect square"""
    n = int(round(np.sqrt(size)))
    if n < 1 or n * n != size:
        raise InputError(f"{name} has size {size}, which is not a perfect square")
    return n


def is_hermitian(a: ComplexMatrix, tol: float = HERMITIAN_TOL) -> bool:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    scale = max(1.0, np.linalg.norm(a))
    return np.linalg.norm(a - a.conj().T) <= tol * scale


def is_unitary(a: ComplexMatrix, tol: float = HERMITIAN_TOL) -> bool:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    eye = np.eye(a.shape[0])
    return np.linalg.norm(a.conj().T @ a - eye) <= tol * max(1.0, np.sqrt(a.shape[0]))


def is_psd(a: ComplexMatrix, tol: float = HERMITIAN_TOL) -> bool:
    if not is_hermitian(a, tol):
        return False
    a = np.asarray(a)
    values = np.linalg.eigvalsh(0.5 * (a + a.conj().T))
    return values.min() >= -tol * max(1.0, np.linalg.norm(a))


def vec(m: ComplexMatrix) -> ComplexMatrix:
    m = np.asarray(m)
    require_square(m, "vec input")
    return m.reshape(-1, 1, order="F").astype(complex)


def unvec(v: ComplexMatrix) -> ComplexMatrix:
    v = np.asarray(v)
    n = liouville_dimension(v.size, "vector")
    return v.reshape(n, n, order="F").astype(complex)


def commutation_superoperator(h: ComplexMatrix, tol: float = HERMITIAN_TOL) -> ComplexMatrix:
    """Supermatrix of rho -> H rho - rho H"""
    h = as_matrix(h, "hamiltonian")
    n = require_square(h, "hamiltonian")
    if not is_hermitian(h, tol):
        raise InvariantError("hamiltonian is not Hermitian within tolerance")
    eye = np.eye(n, dtype=complex)
    return np.kron(eye, h) - np.kron(h.T, eye)


def kron_all(*ops: np.ndarray) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for op in ops:
        out = np.kron(out, op)
    return out


def spin_operator(label: str) -> np.ndarray:
    """Two-spin product operator from a label such as "XZ" (first letter acts on spin 1)"""
    return kron_all(*(PAULI[c] for c in label))


@dataclass(frozen=True)
class TwoSpinHamiltonian:
    nu1: float  # Hz
    J: float    # Hz

    def matrix(self) -> ComplexMatrix:
        coupling = spin_operator("XX") + spin_operator("YY") + spin_operator("ZZ")
        return np.pi * (self.nu1 * spin_operator("ZI") + 0.5 * self.J * coupling)


def two_spin_hamiltonian(spec: TwoSpinHamiltonian) -> ComplexMatrix:
    return spec.matrix()


@dataclass(frozen=True)
class OperatorBasis:
    """Named operator basis; elements are stored unnormalised."""

    name: str
    dimension: int
    elements: Tuple[np.ndarray, ...]
    coherence_orders: Optional[Tuple[int, ...]] = None
    labels: Optional[Tuple[str, ...]] = None

    def __len__(self) -> int:
        return len(self.elements)

    @property
    def is_hermitian(self) -> bool:
        return all(is_hermitian(b) for b in self.elements)

    def raw_matrix(self) -> ComplexMatrix:
        return np.hstack([vec(b) for b in self.elements])

    def matrix(self) -> ComplexMatrix:
        """Columns vec(B_k) / ||B_k||"""
        cols = [vec(b) / np.linalg.norm(b) for b in self.elements]
        return np.hstack(cols)

    def check_complete(self):
        n2 = self.dimension ** 2
        if len(self.elements) != n2:
            raise InputError(
                f"basis '{self.name}' has {len(self.elements)} elements, expected {n2}"
            )
        if np.linalg.matrix_rank(self.raw_matrix()) < n2:
            raise InputError(f"basis '{self.name}' is rank deficient")

    def gram(self) -> np.ndarray:
        m = self.raw_matrix()
        return m.conj().T @ m

    def is_orthogonal(self, tol: float = 1e-10) -> bool:
        g = self.gram()
        off = g - np.diag(np.diag(g))
        return np.linalg.norm(off) <= tol * max(1.0, np.linalg.norm(g))

    def expand(self, op: ComplexMatrix) -> np.ndarray:
        """Coefficients c with op = sum_k c_k B_k"""
        op = as_matrix(op, "operator")
        if op.shape != (self.dimension, self.dimension):
            raise InputError(f"operator shape {op.shape} does not match basis dimension {self.dimension}")
        return np.linalg.solve(self.raw_matrix(), vec(op)).ravel()

    def reconstruct(self, coefficients: np.ndarray) -> ComplexMatrix:
        c = np.asarray(coefficients, dtype=complex).ravel()
        return sum(ck * b for ck, b in zip(c, self.elements))


def cartesian_basis(n: int) -> OperatorBasis:
    """Pauli products, identity first, first factor acting on spin 1"""
    qubits = int(round(np.log2(n))) if n > 0 else -1
    if qubits < 1 or 2 ** qubits != n:
        raise InputError(f"cartesian basis needs N a power of two, got N={n}")
    labels = ["".join(p) for p in itertools.product("IXYZ", repeat=qubits)]
    return OperatorBasis(
        name="cartesian",
        dimension=n,
        elements=tuple(spin_operator(lab) for lab in labels),
        labels=tuple(labels),
    )


# Hermitian two-spin basis ordered by coherence order
_TRANSITION_TABLE: List[Tuple[str, Dict[str, float], int]] = [
    ("E", {"II": 1}, 0),
    ("Z1", {"ZI": 1}, 0),
    ("Z2", {"IZ": 1}, 0),
    ("Z1Z2", {"ZZ": 1}, 0),
    ("X1X2+Y1Y2", {"XX": 1, "YY": 1}, 0),
    ("X1Y2-Y1X2", {"XY": 1, "YX": -1}, 0),
    ("X1", {"XI": 1}, 1),
    ("Y1", {"YI": 1}, 1),
    ("X2", {"IX": 1}, 1),
    ("Y2", {"IY": 1}, 1),
    ("X1Z2", {"XZ": 1}, 1),
    ("Y1Z2", {"YZ": 1}, 1),
    ("Z1X2", {"ZX": 1}, 1),
    ("Z1Y2", {"ZY": 1}, 1),
    ("X1X2-Y1Y2", {"XX": 1, "YY": -1}, 2),
    ("X1Y2+Y1X2", {"XY": 1, "YX": 1}, 2),
]


def transition_basis(n: int = 4) -> OperatorBasis:
    if n != 4:
        raise InputError(f"transition basis is defined for two spins (N=4), got N={n}")
    elements = []
    for _, terms, _ in _TRANSITION_TABLE:
        elements.append(sum(c * spin_operator(lab) for lab, c in terms.items()))
    return OperatorBasis(
        name="transition",
        dimension=4,
        elements=tuple(elements),
        coherence_orders=tuple(order for _, _, order in _TRANSITION_TABLE),
        labels=tuple(label for label, _, _ in _TRANSITION_TABLE),
    )


def zeeman_basis(n: int) -> OperatorBasis:
    """Elementary matrices |i><k| in vec order, so the basis matrix is the identity"""
    if n < 1:
        raise InputError(f"dimension must be positive, got {n}")
    elements = []
    labels = []
    for idx in range(n * n):
        i, k = idx % n, idx // n
        e = np.zeros((n, n), dtype=complex)
        e[i, k] = 1.0
        elements.append(e)
        labels.append(f"|{i}><{k}|")
    return OperatorBasis(name="zeeman", dimension=n, elements=tuple(elements), labels=tuple(labels))


def basis_by_name(name: str, n: int) -> OperatorBasis:
    if name == "cartesian":
        return cartesian_basis(n)
    if name == "transition":
        return transition_basis(n)
    if name == "zeeman":
        return zeeman_basis(n)
    raise InputError(f"unknown basis '{name}'", hint=f"choose one of {', '.join(BASIS_NAMES)}")


def basis_change_matrix(source: OperatorBasis, target: OperatorBasis) -> ComplexMatrix:
    """U taking normalised-coefficient vectors in `source` to those in `target`"""
    if source.dimension != target.dimension:
        raise InputError(
            f"basis dimension mismatch: {source.name} has N={source.dimension}, "
            f"{target.name} has N={target.dimension}"
        )
    source.check_complete()
    target.check_complete()
    return np.linalg.solve(target.matrix(), source.matrix())


def presentation_factor(source: OperatorBasis, target: OperatorBasis) -> float:
    """Norm factor between Hermitian bases and the elementary Zeeman basis.

    Printed relaxation matrices in the Zeeman basis carry a factor 2 relative to
    the Hermitian transition / cartesian presentation.
    """
    if source.name == target.name:
        return 1.0
    if target.name == "zeeman" and source.name != "zeeman":
        return 2.0
    if source.name == "zeeman" and target.name != "zeeman":
        return 0.5
    return 1.0


def convert_superoperator(
    s: ComplexMatrix,
    source: OperatorBasis,
    target: OperatorBasis,
    norm_factor: Optional[float] = None,
) -> ComplexMatrix:
    """factor * U s U^-1, with the presentation factor unless one is given"""
    s = as_matrix(s, "superoperator")
    u = basis_change_matrix(source, target)
    if s.shape != u.shape:
        raise InputError(f"superoperator shape {s.shape} does not match basis size {u.shape}")
    factor = presentation_factor(source, target) if norm_factor is None else norm_factor
    return factor * (u @ s @ np.linalg.inv(u))


def superoperator_in_basis(s_vec: ComplexMatrix, basis: OperatorBasis) -> ComplexMatrix:
    """Physical change of representation (no presentation factor) from vec coordinates"""
    m = basis.matrix()
    return np.linalg.solve(m, s_vec @ m)


def superoperator_from_basis(s_basis: ComplexMatrix, basis: OperatorBasis) -> ComplexMatrix:
    m = basis.matrix()
    return m @ s_basis @ np.linalg.inv(m)
