"""
Complete positivity: Choi reshuffle, Kraus extraction, the projected Choi test
for generators, Lindblad extraction and CP filtering.

Sign convention: P(t) = exp(-G t) with G = i*Hc + R, so the dissipator D of a
Lindblad set enters as R = -D.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .config import EIGEN_CUT_REL, TRACE_TOL
from .errors import InputError, InvariantError, NotCompletelyPositiveError
from .liouville import (
    ComplexMatrix,
    as_matrix,
    basis_by_name,
    commutation_superoperator,
    liouville_dimension,
    require_square,
    superoperator_from_basis,
    superoperator_in_basis,
    vec,
)
from .matfuncs import expm, hermitian_part, psd_project

logger = logging.getLogger(f"lindblad_fit.{__name__}")

PROVENANCES = ("spectral", "hadamard_t1", "hadamard_t2_nonadiabatic", "hadamard_t2_adiabatic")


def reshuffle(s: ComplexMatrix) -> ComplexMatrix:
    """
    Choi layout C = sum_ij P(|i><j|) (x) |i><j|, i.e. C[aN+i, bN+j] = S[bN+a, jN+i].

    With column-stacking vec this is a 4-cycle of the index axes, not an
    involution; unshuffle is its exact inverse.
    """
    s = as_matrix(s, "supermatrix")
    require_square(s, "supermatrix")
    n = liouville_dimension(s.shape[0])
    return s.reshape(n, n, n, n).transpose(1, 3, 0, 2).reshape(n * n, n * n)


def unshuffle(c: ComplexMatrix) -> ComplexMatrix:
    """Inverse of reshuffle: S[bN+a, jN+i] = C[aN+i, bN+j]"""
    c = as_matrix(c, "Choi matrix")
    require_square(c, "Choi matrix")
    n = liouville_dimension(c.shape[0])
    return c.reshape(n, n, n, n).transpose(2, 0, 3, 1).reshape(n * n, n * n)


def operator_from_choi_vector(v: np.ndarray) -> np.ndarray:
    """Operator K with v[aN+i] = K[a, i], the inverse of K -> K.reshape(-1)"""
    v = np.asarray(v).ravel()
    n = liouville_dimension(v.size)
    return v.reshape(n, n)


@dataclass(frozen=True)
class ChoiMatrix:
    n: int
    matrix: np.ndarray
    source: str = "propagator"

    def eigenvalues(self) -> np.ndarray:
        return np.sort(np.linalg.eigvalsh(hermitian_part(self.matrix)))[::-1]

    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues()[-1])

    def is_psd(self, tol: float = 1e-8) -> bool:
        return self.min_eigenvalue() >= -tol


def choi_from_supermatrix(s: ComplexMatrix, source: str = "propagator") -> ChoiMatrix:
    c = reshuffle(s)
    return ChoiMatrix(n=liouville_dimension(c.shape[0]), matrix=c, source=source)


def supermatrix_from_choi(c: ComplexMatrix) -> ComplexMatrix:
    return unshuffle(c)


def kraus_from_propagator(p: ComplexMatrix, tol: float = 1e-9) -> List[np.ndarray]:
    """Kraus operators K_l = sqrt(kappa_l) K(k_l) from the Choi eigenpairs"""
    choi = choi_from_supermatrix(p)
    values, vectors = np.linalg.eigh(hermitian_part(choi.matrix))
    if values.min() < -tol:
        raise NotCompletelyPositiveError(
            f"Choi matrix has eigenvalue {values.min():.3e} < -{tol:g}; map is not completely positive",
            min_eigenvalue=float(values.min()),
        )
    cut = tol * max(1.0, values.max())
    kraus = []
    for idx in np.argsort(values)[::-1]:
        if values[idx] <= cut:
            continue
        kraus.append(np.sqrt(values[idx]) * operator_from_choi_vector(vectors[:, idx]))
    return kraus


def kraus_to_propagator(kraus: List[np.ndarray]) -> ComplexMatrix:
    if not kraus:
        raise InputError("empty Kraus set")
    return sum(np.kron(k.conj(), k) for k in kraus)


def apply_kraus(kraus: List[np.ndarray], rho: np.ndarray) -> np.ndarray:
    return sum(k @ rho @ k.conj().T for k in kraus)


def is_cp_propagator(p: ComplexMatrix, tol: float = 1e-8) -> bool:
    return choi_from_supermatrix(p).is_psd(tol)


def cp_filter_propagator(p: ComplexMatrix) -> ComplexMatrix:
    """Nearest supermatrix with PSD Choi matrix (reshuffling is an isometry)"""
    choi = choi_from_supermatrix(p)
    return supermatrix_from_choi(psd_project(choi.matrix))


@dataclass
class LindbladSystem:
    """Weighted Lindblad operators. The physical operator is sqrt(weight) * operator."""

    operators: List[np.ndarray] = field(default_factory=list)
    weights: List[float] = field(default_factory=list)
    provenance: List[str] = field(default_factory=list)

    def __post_init__(self):
        if len(self.operators) != len(self.weights):
            raise InputError("LindbladSystem needs one weight per operator")
        if not self.provenance:
            self.provenance = ["spectral"] * len(self.operators)
        elif len(self.provenance) != len(self.operators):
            raise InputError("LindbladSystem needs one provenance tag per operator")
        for tag in self.provenance:
            if tag not in PROVENANCES:
                raise InputError(f"unknown Lindblad provenance '{tag}'")
        for w in self.weights:
            if w < 0:
                raise InvariantError(f"negative Lindblad weight {w:g}")

    @classmethod
    def single(cls, operator: np.ndarray, weight: float, provenance: str = "spectral") -> "LindbladSystem":
        return cls([np.asarray(operator, dtype=complex)], [float(weight)], [provenance])

    def __len__(self) -> int:
        return len(self.operators)

    def __add__(self, other: "LindbladSystem") -> "LindbladSystem":
        return LindbladSystem(
            self.operators + other.operators,
            self.weights + other.weights,
            self.provenance + other.provenance,
        )

    @property
    def dimension(self) -> Optional[int]:
        return self.operators[0].shape[0] if self.operators else None

    def lindblads(self) -> List[np.ndarray]:
        return [np.sqrt(w) * op for op, w in zip(self.operators, self.weights)]

    def shares(self) -> List[float]:
        """Fraction of the total mean-square noise carried by each operator"""
        norms = [np.linalg.norm(l) ** 2 for l in self.lindblads()]
        total = sum(norms)
        return [x / total if total > 0 else 0.0 for x in norms]

    def filter(self, provenance: str) -> "LindbladSystem":
        keep = [i for i, tag in enumerate(self.provenance) if tag == provenance]
        return LindbladSystem(
            [self.operators[i] for i in keep],
            [self.weights[i] for i in keep],
            [self.provenance[i] for i in keep],
        )

    def to_records(self) -> List[Dict[str, Any]]:
        return [
            {"weight": float(w), "matrix": op, "provenance": tag}
            for op, w, tag in zip(self.operators, self.weights, self.provenance)
        ]


def _single_dissipator(l: np.ndarray) -> np.ndarray:
    n = l.shape[0]
    eye = np.eye(n, dtype=complex)
    ldl = l.conj().T @ l
    return np.kron(l.conj(), l) - 0.5 * np.kron(eye, ldl) - 0.5 * np.kron(ldl.T, eye)


def dissipator_from_lindblads(ls: LindbladSystem, n: Optional[int] = None) -> ComplexMatrix:
    """Supermatrix of rho -> sum (2 L rho L^+ - L^+L rho - rho L^+L) / 2"""
    dim = ls.dimension or n
    if dim is None:
        raise InputError("empty Lindblad system needs an explicit dimension")
    out = np.zeros((dim * dim, dim * dim), dtype=complex)
    for l in ls.lindblads():
        if l.shape != (dim, dim):
            raise InputError(f"Lindblad operator shape {l.shape} does not match N={dim}")
        out += _single_dissipator(l)
    return out


@dataclass(frozen=True)
class Supergenerator:
    """G = hamiltonian_part + relaxation_part, with hamiltonian_part = i * Hc"""

    n: int
    hamiltonian_part: np.ndarray
    relaxation_part: np.ndarray
    basis: str = "zeeman"
    hamiltonian: Optional[np.ndarray] = None  # N x N, computational basis

    @classmethod
    def from_hamiltonian(
        cls, hamiltonian: Optional[np.ndarray], relaxation: np.ndarray, basis: str = "zeeman"
    ) -> "Supergenerator":
        """Build from an N x N Hamiltonian and a relaxation supermatrix given in `basis`"""
        relaxation = as_matrix(relaxation, "relaxation")
        require_square(relaxation, "relaxation")
        n = liouville_dimension(relaxation.shape[0])
        h = np.zeros((n, n), dtype=complex) if hamiltonian is None else as_matrix(hamiltonian, "hamiltonian")
        if h.shape != (n, n):
            raise InputError(f"hamiltonian shape {h.shape} does not match N={n}")
        hc = 1j * commutation_superoperator(h)
        if basis != "zeeman":
            hc = superoperator_in_basis(hc, basis_by_name(basis, n))
        return cls(n=n, hamiltonian_part=hc, relaxation_part=relaxation, basis=basis, hamiltonian=h)

    @classmethod
    def from_lindblads(cls, ls: LindbladSystem, hamiltonian: Optional[np.ndarray] = None) -> "Supergenerator":
        return cls.from_hamiltonian(hamiltonian, -dissipator_from_lindblads(ls))

    def generator(self) -> np.ndarray:
        return self.hamiltonian_part + self.relaxation_part

    def in_basis(self, name: str) -> "Supergenerator":
        if name == self.basis:
            return self
        if self.basis == "zeeman":
            hc, r = self.hamiltonian_part, self.relaxation_part
        else:
            src = basis_by_name(self.basis, self.n)
            hc = superoperator_from_basis(self.hamiltonian_part, src)
            r = superoperator_from_basis(self.relaxation_part, src)
        if name != "zeeman":
            dst = basis_by_name(name, self.n)
            hc = superoperator_in_basis(hc, dst)
            r = superoperator_in_basis(r, dst)
        return Supergenerator(self.n, hc, r, name, self.hamiltonian)

    def with_relaxation(self, relaxation: np.ndarray) -> "Supergenerator":
        return Supergenerator(self.n, self.hamiltonian_part, np.asarray(relaxation, dtype=complex), self.basis, self.hamiltonian)

    def propagator(self, t: float) -> np.ndarray:
        return expm(self.generator(), -t)

    def trace_violation(self) -> float:
        g = self.in_basis("zeeman")
        v = vec(np.eye(self.n)).conj().T
        return float(np.linalg.norm(v @ g.generator()))

    def validate(self, tol: float = TRACE_TOL):
        scale = max(1.0, np.linalg.norm(self.relaxation_part))
        if self.trace_violation() > tol * scale:
            raise InvariantError(
                f"generator is not trace preserving (|<vec I| G| = {self.trace_violation():.3e})"
            )


def identity_projector(n: int) -> np.ndarray:
    v = vec(np.eye(n)) / np.sqrt(n)
    return np.eye(n * n, dtype=complex) - v @ v.conj().T


def projected_choi_of_relaxation(r_vec: np.ndarray, tol: float = TRACE_TOL) -> np.ndarray:
    """E Choi(-R) E for a relaxation supermatrix in vec coordinates"""
    r_vec = as_matrix(r_vec, "relaxation")
    n = liouville_dimension(r_vec.shape[0])
    v = vec(np.eye(n)).conj().T
    violation = np.linalg.norm(v @ r_vec)
    if violation > tol * max(1.0, np.linalg.norm(r_vec)):
        raise InvariantError(f"relaxation part is not trace preserving (|<vec I| R| = {violation:.3e})")
    e = identity_projector(n)
    return hermitian_part(e @ reshuffle(-r_vec) @ e)


def projected_choi(g: Supergenerator) -> np.ndarray:
    return projected_choi_of_relaxation(g.in_basis("zeeman").relaxation_part)


def penalty_from_eigenvalues(values: np.ndarray) -> float:
    neg = np.minimum(np.asarray(values, dtype=float), 0.0)
    return float(np.sum(neg * neg))


def cp_penalty_of_relaxation(r_vec: np.ndarray) -> float:
    return penalty_from_eigenvalues(np.linalg.eigvalsh(projected_choi_of_relaxation(r_vec)))


def cp_penalty(g: Supergenerator) -> float:
    """Sum of squared negative eigenvalues of the projected Choi matrix"""
    return penalty_from_eigenvalues(np.linalg.eigvalsh(projected_choi(g)))


def fix_lindblad_phase(l: np.ndarray) -> np.ndarray:
    """Global phase making l as nearly Hermitian as possible, with a deterministic sign"""
    t = np.trace(l @ l)
    if abs(t) > 1e-14 * max(1.0, np.linalg.norm(l) ** 2):
        l = l * np.exp(-0.5j * np.angle(t))
    h = l + l.conj().T
    d = np.real(np.diag(h))
    if np.abs(d).max() > 1e-12 * max(1.0, np.linalg.norm(h)):
        sign = np.sign(d[np.argmax(np.abs(d))])
    else:
        flat = h.ravel()
        pivot = flat[np.argmax(np.abs(flat))]
        sign = np.sign(pivot.real) if abs(pivot.real) > 1e-12 else np.sign(pivot.imag)
    return l * (sign if sign != 0 else 1.0)


def lindblads_from_generator(g: Supergenerator, tol: Optional[float] = None) -> LindbladSystem:
    """Lindblads sqrt(lambda_m) K(v_m) from the projected Choi eigenpairs"""
    pc = projected_choi(g)
    values, vectors = np.linalg.eigh(pc)
    order = np.argsort(values)[::-1]
    values, vectors = values[order], vectors[:, order]
    cut = EIGEN_CUT_REL * max(float(np.trace(pc).real), 1e-300)
    if tol is not None:
        cut = max(cut, tol)
    if values.size and values[-1] < -cut:
        raise NotCompletelyPositiveError(
            f"projected Choi matrix has eigenvalue {values[-1]:.3e}; generator is not completely positive",
            min_eigenvalue=float(values[-1]),
            hint="filter the generator or refit with the CP penalty",
        )
    ops, weights = [], []
    for mu, v in zip(values, vectors.T):
        if mu <= cut:
            continue
        ops.append(fix_lindblad_phase(operator_from_choi_vector(v)))
        weights.append(float(mu))
    logger.debug(f"extracted {len(ops)} Lindblad operators (cut {cut:.3e})")
    return LindbladSystem(ops, weights, ["spectral"] * len(ops))


def cp_filter_generator(g: Supergenerator) -> Tuple[Supergenerator, float]:
    """Remove the dissipators of negative projected-Choi modes; returns (generator, removed mass)"""
    zee = g.in_basis("zeeman")
    pc = projected_choi(zee)
    values, vectors = np.linalg.eigh(pc)
    minus_r = -zee.relaxation_part.copy()
    removed = 0.0
    for mu, v in zip(values, vectors.T):
        if mu >= 0:
            continue
        minus_r -= mu * _single_dissipator(operator_from_choi_vector(v))
        removed += -mu
    filtered = zee.with_relaxation(-minus_r)
    return filtered.in_basis(g.basis), float(removed)


def rebuild_error(g: Supergenerator, ls: LindbladSystem) -> float:
    """Frobenius distance between -R and the dissipator rebuilt from ls"""
    r = g.in_basis("zeeman").relaxation_part
    return float(np.linalg.norm(-r - dissipator_from_lindblads(ls, g.n)))
