"""
Two-spin relaxation decomposition into T1 and T2 Lindblad operators.

Zeeman states are ordered |0>=|uu>, |1>=|ud>, |2>=|du>, |3>=|dd>. Rates in the
Zeeman presentation carry the factor 2 of `presentation_factor` relative to the
transition basis, so R_zee = 2 W R_tra W on the population block.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from utils.logger import run_logger

from .config import DEFAULT_MERGE_TOL, IMAG_RESIDUE_TOL
from .cp import LindbladSystem, dissipator_from_lindblads
from .errors import InputError, InvariantError, NotCompletelyPositiveError
from .liouville import as_matrix, convert_superoperator, spin_operator, transition_basis, zeeman_basis

logger = logging.getLogger(f"lindblad_fit.{__name__}")

N_SPIN_STATES = 4

# (j, k) population transfers grouped by the spin that flips, with the
# Hermitian operators that replace the four elementary jumps of a group
_T1_GROUPS: List[Tuple[str, Tuple[Tuple[int, int], ...], Tuple[str, ...]]] = [
    ("spin1", ((0, 2), (2, 0), (1, 3), (3, 1)), ("XI", "YI", "XZ", "YZ")),
    ("spin2", ((0, 1), (1, 0), (2, 3), (3, 2)), ("IX", "IY", "ZX", "ZY")),
    ("multiple_quantum", ((0, 3), (3, 0), (1, 2), (2, 1)), ("XX", "XY", "YX", "YY")),
]


@dataclass(frozen=True)
class HadamardRelaxationMatrix:
    """Rate matrix acting entrywise: d rho_ij / dt = -rates_ij rho_ij"""

    rates: np.ndarray
    zero_diagonal: bool = True

    @property
    def n(self) -> int:
        return self.rates.shape[0]

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return -self.rates * rho

    def supermatrix(self) -> np.ndarray:
        """Diagonal relaxation supermatrix in vec order"""
        return np.diag(self.rates.reshape(-1, order="F")).astype(complex)

    def projected(self) -> np.ndarray:
        e = projection_matrix(self.n)
        return -e @ self.rates @ e

    def is_physical(self, tol: float = 1e-8) -> bool:
        values = np.linalg.eigvalsh(self.projected())
        return values.min() >= -tol * max(1.0, np.abs(values).max())


@dataclass
class RelaxationDecomposition:
    r_t1_tra: Optional[np.ndarray]
    r_t1_zee: np.ndarray
    r_t2_zee: HadamardRelaxationMatrix
    r_t2_na: HadamardRelaxationMatrix
    r_t2_ad: HadamardRelaxationMatrix
    lindblads: LindbladSystem
    discrepancy: float = 0.0
    notes: List[str] = field(default_factory=list)

    def adiabatic_rates(self) -> List[float]:
        return self.lindblads.filter("hadamard_t2_adiabatic").weights

    def t1_rates(self) -> List[float]:
        return self.lindblads.filter("hadamard_t1").weights

    def to_dict(self) -> Dict[str, Any]:
        return {
            "r_t1_tra": None if self.r_t1_tra is None else self.r_t1_tra.tolist(),
            "r_t1_zee": self.r_t1_zee.tolist(),
            "r_t2_zee": self.r_t2_zee.rates.tolist(),
            "r_t2_na": self.r_t2_na.rates.tolist(),
            "r_t2_ad": self.r_t2_ad.rates.tolist(),
            "lindblads": self.lindblads.to_records(),
            "discrepancy": self.discrepancy,
            "notes": list(self.notes),
        }


def hadamard_transform_4() -> np.ndarray:
    return 0.5 * np.array(
        [[1, 1, 1, 1], [1, 1, -1, -1], [1, -1, 1, -1], [1, -1, -1, 1]], dtype=float
    )


def exchange_matrix(n: int = N_SPIN_STATES) -> np.ndarray:
    """Matrix of X1 X2 in the Zeeman basis"""
    return np.fliplr(np.eye(n))


def projection_matrix(n: int = N_SPIN_STATES) -> np.ndarray:
    return np.eye(n) - np.ones((n, n)) / n


def _require_4x4(r: np.ndarray, name: str) -> np.ndarray:
    r = np.asarray(r)
    if r.shape != (N_SPIN_STATES, N_SPIN_STATES):
        raise InputError(f"{name} must be 4x4, got shape {r.shape}")
    return r


def _real_part(m: np.ndarray, name: str) -> np.ndarray:
    residue = np.abs(np.imag(m)).max() if np.iscomplexobj(m) else 0.0
    if residue > IMAG_RESIDUE_TOL:
        run_logger.log_warning(f"{name}: discarding imaginary residue {residue:.3e}")
    return np.real(m).astype(float)


def extract_t1_block(r_tra: np.ndarray, basis: str = "transition") -> np.ndarray:
    """Population block (identity, Z1, Z2, Z1Z2) of a transition-basis relaxation matrix"""
    if basis != "transition":
        raise InputError(f"T1 block extraction needs the transition basis, got '{basis}'")
    r_tra = as_matrix(r_tra, "relaxation")
    if r_tra.shape != (16, 16):
        raise InputError(f"expected a 16x16 superoperator, got shape {r_tra.shape}")
    return _real_part(r_tra[:N_SPIN_STATES, :N_SPIN_STATES], "T1 block")


def centrosymmetrize(r_zee: np.ndarray) -> np.ndarray:
    r = np.asarray(r_zee)
    if r.ndim != 2 or r.shape[0] != r.shape[1]:
        raise InputError(f"centrosymmetrize needs a square matrix, got shape {r.shape}")
    j = exchange_matrix(r.shape[0])
    return 0.5 * (r + j @ r @ j)


def t1_zeeman_from_transition(r_t1_tra: np.ndarray) -> np.ndarray:
    w = hadamard_transform_4()
    return 2.0 * w @ _require_4x4(r_t1_tra, "T1 block") @ w


def t1_transition_from_zeeman(r_t1_zee: np.ndarray) -> np.ndarray:
    w = hadamard_transform_4()
    return 0.5 * w @ _require_4x4(r_t1_zee, "T1 block") @ w


def _relative_spread(rates: Sequence[float]) -> float:
    mean = float(np.mean(rates))
    if mean <= 0:
        return 0.0
    return (max(rates) - min(rates)) / mean


def _flip_operator(j: int, k: int, n: int) -> np.ndarray:
    op = np.zeros((n, n), dtype=complex)
    op[k, j] = 1.0
    return op


def t1_lindblads(
    r_t1_zee: np.ndarray, merge_degenerate: bool = True, merge_tol: float = DEFAULT_MERGE_TOL,
    tol: float = 1e-12,
) -> LindbladSystem:
    """Population-transfer Lindblads |k><j| at rate -R[k, j], optionally merged into spin-flip sets"""
    r = np.asarray(r_t1_zee, dtype=float)
    n = r.shape[0]
    off = r - np.diag(np.diag(r))
    if off.max() > max(tol, IMAG_RESIDUE_TOL):
        raise InvariantError(
            f"T1 matrix has positive off-diagonal entry {off.max():.4g} (negative transfer rate)"
        )
    rates = {(j, k): -r[k, j] for j in range(n) for k in range(n) if j != k}

    ops: List[np.ndarray] = []
    weights: List[float] = []
    handled = set()
    if merge_degenerate:
        _require_4x4(r, "T1 matrix")
        for group, pairs, labels in _T1_GROUPS:
            group_rates = [rates[p] for p in pairs]
            spread = _relative_spread(group_rates)
            if spread > merge_tol:
                run_logger.log_warning(
                    f"{group} T1 rates spread {spread:.1%} exceeds {merge_tol:.1%}; keeping individual jumps"
                )
                continue
            mean = float(np.mean(group_rates))
            handled.update(pairs)
            if mean <= tol:
                continue
            for lab in labels:
                ops.append(0.5 * spin_operator(lab))
                weights.append(mean)
            logger.debug(f"merged {group} T1 group at rate {mean:.4f} (spread {spread:.2%})")
    for (j, k), rate in rates.items():
        if (j, k) in handled or rate <= tol:
            continue
        ops.append(_flip_operator(j, k, n))
        weights.append(float(rate))
    return LindbladSystem(ops, weights, ["hadamard_t1"] * len(ops))


def nonadiabatic_t2_lindblads(r_t1_zee: np.ndarray, tol: float = 1e-12) -> LindbladSystem:
    """Dephasing Lindblads 1/2 Z1, 1/2 Z2, 1/2 Z1Z2 at the mean T1 diagonal rate"""
    r = _require_4x4(np.asarray(r_t1_zee, dtype=float), "T1 matrix")
    diag = np.diag(r)
    rate = float(diag.mean())
    spread = _relative_spread(diag)
    if spread > DEFAULT_MERGE_TOL:
        run_logger.log_warning(f"T1 diagonal spread {spread:.1%} is large for a common nonadiabatic rate")
    if rate <= tol:
        return LindbladSystem()
    ops = [0.5 * spin_operator(lab) for lab in ("ZI", "IZ", "ZZ")]
    return LindbladSystem(ops, [rate] * 3, ["hadamard_t2_nonadiabatic"] * 3)


def hadamard_matrix_of_diagonal_lindblads(ls: LindbladSystem, n: int = N_SPIN_STATES, tol: float = 1e-10) -> HadamardRelaxationMatrix:
    """R = sum 1/2 (l*l) 1^T + 1/2 1 (l*l)^T - l l^T over the diagonals l of the Lindblads"""
    dim = ls.dimension or n
    rates = np.zeros((dim, dim))
    ones = np.ones(dim)
    for l in ls.lindblads():
        if np.linalg.norm(l - np.diag(np.diag(l))) > tol * max(1.0, np.linalg.norm(l)):
            raise InputError("Hadamard relaxation matrix needs diagonal Lindblad operators")
        d = np.diag(l)
        if np.abs(d.imag).max() > tol * max(1.0, np.abs(d).max()):
            raise InputError("Hadamard relaxation matrix needs real diagonal Lindblad operators")
        ell = d.real
        sq = ell * ell
        rates += 0.5 * np.outer(sq, ones) + 0.5 * np.outer(ones, sq) - np.outer(ell, ell)
    return HadamardRelaxationMatrix(rates)


def t2_diag_matrix(r_zee: np.ndarray, basis: str = "zeeman", symmetrize: bool = True) -> HadamardRelaxationMatrix:
    """Diagonal superoperator entries arranged as a 4x4 rate matrix, R[j, k] for |j><k|"""
    if basis != "zeeman":
        raise InputError(f"T2 rate extraction needs the Zeeman basis, got '{basis}'")
    r_zee = as_matrix(r_zee, "relaxation")
    if r_zee.shape != (16, 16):
        raise InputError(f"expected a 16x16 superoperator, got shape {r_zee.shape}")
    rates = _real_part(np.diag(r_zee), "T2 diagonal").reshape(N_SPIN_STATES, N_SPIN_STATES, order="F")
    rates = rates - np.diag(np.diag(rates))
    if symmetrize:
        rates = centrosymmetrize(rates)
    return HadamardRelaxationMatrix(rates)


def _fix_sign(v: np.ndarray) -> np.ndarray:
    pivot = v[np.argmax(np.abs(v))]
    return v if pivot >= 0 else -v


def adiabatic_decomposition(
    r_t2_zee: HadamardRelaxationMatrix, r_t2_na: HadamardRelaxationMatrix, tol: float = 1e-8
) -> LindbladSystem:
    """Diagonal Lindblads from the positive eigenpairs of -E R_ad E"""
    if r_t2_zee.rates.shape != r_t2_na.rates.shape:
        raise InputError(
            f"T2 matrix shapes differ: {r_t2_zee.rates.shape} vs {r_t2_na.rates.shape}"
        )
    r_ad = HadamardRelaxationMatrix(r_t2_zee.rates - r_t2_na.rates)
    values, vectors = np.linalg.eigh(r_ad.projected())
    order = np.argsort(values)[::-1]
    values, vectors = values[order], vectors[:, order]
    cut = tol * max(1.0, np.abs(values).max())
    if values.size and values[-1] < -cut:
        raise NotCompletelyPositiveError(
            f"adiabatic T2 matrix is not physical: -E R_ad E has eigenvalue {values[-1]:.4g}",
            min_eigenvalue=float(values[-1]),
        )
    ops, weights = [], []
    for mu, v in zip(values, vectors.T):
        if mu <= cut:
            continue
        ops.append(np.diag(_fix_sign(v)).astype(complex))
        weights.append(float(mu))
    return LindbladSystem(ops, weights, ["hadamard_t2_adiabatic"] * len(ops))


def assemble_zeeman_model(r_t1_zee: np.ndarray, r_t2_zee: np.ndarray) -> np.ndarray:
    """Scatter the T1 block onto the population entries and place T2 rates on the diagonal"""
    r_t1_zee = np.asarray(r_t1_zee)
    n = r_t1_zee.shape[0]
    out = np.zeros((n * n, n * n), dtype=complex)
    pops = [j * n + j for j in range(n)]
    for a, j in enumerate(pops):
        for b, k in enumerate(pops):
            out[j, k] = r_t1_zee[a, b]
    t2 = np.asarray(r_t2_zee).reshape(-1, order="F")
    out[np.diag_indices(n * n)] += t2
    return out


def discrepancy(r_zee: np.ndarray, decomp: RelaxationDecomposition) -> float:
    r_zee = as_matrix(r_zee, "relaxation")
    model = assemble_zeeman_model(decomp.r_t1_zee, decomp.r_t2_zee.rates)
    if model.shape != r_zee.shape:
        raise InputError(f"dimension mismatch: {r_zee.shape} vs model {model.shape}")
    denom = np.linalg.norm(r_zee) ** 2
    if denom == 0:
        return 0.0
    return float(np.linalg.norm(r_zee - model) ** 2 / denom)


def decomposition_from_zeeman(
    r_zee: np.ndarray,
    merge_degenerate: bool = True,
    merge_tol: float = DEFAULT_MERGE_TOL,
    symmetrize: bool = True,
    eigen_tol: float = 1e-8,
    r_t1_tra: Optional[np.ndarray] = None,
) -> RelaxationDecomposition:
    r_zee = as_matrix(r_zee, "relaxation")
    if r_zee.shape != (16, 16):
        raise InputError(f"the T1/T2 decomposition is defined for two spins, got shape {r_zee.shape}")
    pops = [j * N_SPIN_STATES + j for j in range(N_SPIN_STATES)]
    r_t1_zee = _real_part(r_zee[np.ix_(pops, pops)], "T1 block")
    if symmetrize:
        r_t1_zee = centrosymmetrize(r_t1_zee)
    t1 = t1_lindblads(r_t1_zee, merge_degenerate, merge_tol)
    na = nonadiabatic_t2_lindblads(r_t1_zee)
    r_t2_zee = t2_diag_matrix(r_zee, symmetrize=symmetrize)
    r_t2_na = hadamard_matrix_of_diagonal_lindblads(na)
    ad = adiabatic_decomposition(r_t2_zee, r_t2_na, eigen_tol)
    decomp = RelaxationDecomposition(
        r_t1_tra=r_t1_tra,
        r_t1_zee=r_t1_zee,
        r_t2_zee=r_t2_zee,
        r_t2_na=r_t2_na,
        r_t2_ad=HadamardRelaxationMatrix(r_t2_zee.rates - r_t2_na.rates),
        lindblads=t1 + na + ad,
    )
    decomp.discrepancy = discrepancy(r_zee, decomp)
    run_logger.log_step(
        "decompose",
        {"merge": merge_degenerate, "symmetrize": symmetrize},
        summary=f"{len(decomp.lindblads)} Lindblads, discrepancy {decomp.discrepancy:.4f}",
    )
    return decomp


def decompose_relaxation(r_tra: np.ndarray, **kwargs) -> RelaxationDecomposition:
    """Full T1/T2 pipeline from a transition-basis relaxation matrix"""
    r_t1_tra = extract_t1_block(r_tra)
    r_zee = convert_superoperator(r_tra, transition_basis(), zeeman_basis(N_SPIN_STATES))
    return decomposition_from_zeeman(r_zee, r_t1_tra=r_t1_tra, **kwargs)


def rebuild_check(decomp: RelaxationDecomposition) -> Dict[str, float]:
    """Compare the Lindblad models against the matrices they were derived from"""
    t1 = decomp.lindblads.filter("hadamard_t1")
    d = dissipator_from_lindblads(t1, N_SPIN_STATES)
    pops = [j * N_SPIN_STATES + j for j in range(N_SPIN_STATES)]
    t1_model = -np.real(d[np.ix_(pops, pops)])
    t2_model = decomp.r_t2_na.rates + hadamard_matrix_of_diagonal_lindblads(
        decomp.lindblads.filter("hadamard_t2_adiabatic")
    ).rates
    return {
        "t1_max_error": float(np.abs(t1_model - decomp.r_t1_zee).max()),
        "t2_max_error": float(np.abs(t2_model - decomp.r_t2_zee.rates).max()),
    }
