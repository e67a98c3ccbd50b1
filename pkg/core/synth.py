"""Forward simulation and synthetic dataset generation."""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from estimators.dataset import TomographyDataset

from .cp import LindbladSystem, Supergenerator
from .errors import InputError
from .liouville import OperatorBasis, as_matrix, is_hermitian, unvec, vec

logger = logging.getLogger(f"lindblad_fit.{__name__}")

NOISE_TARGETS = ("density_matrices", "propagators")


@dataclass(frozen=True)
class NoiseSpec:
    sigma: float = 0.0
    seed: int = 0
    target: str = "propagators"

    def __post_init__(self):
        if self.sigma < 0:
            raise InputError(f"noise sigma must be >= 0, got {self.sigma}")
        if self.target not in NOISE_TARGETS:
            raise InputError(f"unknown noise target '{self.target}'", hint=f"choose one of {', '.join(NOISE_TARGETS)}")


def _hamiltonian_of(g: Supergenerator) -> np.ndarray:
    if g.hamiltonian is None:
        raise InputError("generator carries no Hamiltonian matrix; datasets need one")
    return g.hamiltonian


def simulate_propagators(g: Supergenerator, times: Sequence[float]) -> TomographyDataset:
    """Exact exp(-G t) at every time"""
    zee = g.in_basis("zeeman")
    props = [zee.propagator(t) for t in times]
    return TomographyDataset(
        n=g.n,
        times=list(times),
        hamiltonian=_hamiltonian_of(g),
        propagators=props,
        metadata={"source": "simulate_propagators", "noiseless": True},
    )


def _state_from_hermitian(h: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    values = np.linalg.eigvalsh(h)
    if values.min() >= -tol:
        return h / np.trace(h).real
    if values.max() <= tol:
        return -h / np.trace(-h).real
    s = np.eye(h.shape[0]) + h / -values.min()
    return s / np.trace(s).real


def input_states(basis: OperatorBasis) -> List[np.ndarray]:
    """One PSD unit-trace state per basis element, spanning the operator space"""
    basis.check_complete()
    states = []
    for b in basis.elements:
        b = b.astype(complex)
        if not is_hermitian(b):
            # elementary |i><k| with i != k: real (i<k) or imaginary (i>k) Hermitian partner
            i, k = np.unravel_index(np.argmax(np.abs(b)), b.shape)
            b = b + b.conj().T if i < k else 1j * (b - b.conj().T)
        states.append(_state_from_hermitian(b))
    return states


def simulate_state_pairs(g: Supergenerator, time: float, basis: OperatorBasis) -> List[Tuple[np.ndarray, np.ndarray]]:
    if basis.dimension != g.n:
        raise InputError(f"basis dimension {basis.dimension} does not match generator N={g.n}")
    p = g.in_basis("zeeman").propagator(time)
    pairs = []
    for rho in input_states(basis):
        pairs.append((rho, unvec(p @ vec(rho))))
    return pairs


def simulate_state_dataset(g: Supergenerator, times: Sequence[float], basis: OperatorBasis) -> TomographyDataset:
    return TomographyDataset(
        n=g.n,
        times=list(times),
        hamiltonian=_hamiltonian_of(g),
        state_pairs=[simulate_state_pairs(g, t, basis) for t in times],
        metadata={"source": "simulate_state_pairs", "basis": basis.name, "noiseless": True},
    )


def _complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def add_noise(ds: TomographyDataset, spec: NoiseSpec) -> TomographyDataset:
    """Gaussian perturbation of propagators or measured output states, seeded"""
    meta = dict(ds.metadata)
    meta.update({"noise_sigma": spec.sigma, "noise_seed": spec.seed, "noise_target": spec.target,
                 "noiseless": spec.sigma == 0})
    rng = np.random.default_rng(spec.seed)

    if spec.target == "propagators":
        if ds.propagators is None:
            raise InputError("propagator noise needs a propagator dataset")
        noisy = []
        for p in ds.propagators:
            scale = spec.sigma * np.abs(p).max()
            noisy.append(p + scale * _complex_gaussian(rng, p.shape))
        return TomographyDataset(ds.n, ds.times, ds.hamiltonian, propagators=noisy, metadata=meta)

    if ds.state_pairs is None:
        raise InputError("density-matrix noise needs a state-pair dataset",
                         hint="simulate with --state-pairs")
    noisy_sets = []
    for pairs in ds.state_pairs:
        noisy_pairs = []
        for rho_in, rho_out in pairs:
            scale = spec.sigma * np.abs(rho_out).max()
            rho = rho_out + scale * _complex_gaussian(rng, rho_out.shape)
            rho = 0.5 * (rho + rho.conj().T)
            rho = rho / np.trace(rho).real
            noisy_pairs.append((rho_in, rho))
        noisy_sets.append(noisy_pairs)
    return TomographyDataset(ds.n, ds.times, ds.hamiltonian, state_pairs=noisy_sets, metadata=meta)


def random_lindblad_system(n: int, num_lindblads: int, rate_scale: float, seed: int) -> LindbladSystem:
    if num_lindblads > n * n:
        raise InputError(f"at most N^2={n * n} Lindblad operators, got {num_lindblads}")
    rng = np.random.default_rng(seed)
    ops, weights = [], []
    for _ in range(num_lindblads):
        a = _complex_gaussian(rng, (n, n))
        a -= np.trace(a) / n * np.eye(n)
        ops.append(a / np.linalg.norm(a))
        weights.append(float(rate_scale * rng.uniform(0.5, 1.5)))
    return LindbladSystem(ops, weights, ["spectral"] * len(ops))


def random_cp_generator(
    n: int, num_lindblads: int, rate_scale: float, seed: int, hamiltonian: Optional[np.ndarray] = None
) -> Supergenerator:
    ls = random_lindblad_system(n, num_lindblads, rate_scale, seed)
    if not len(ls):
        return Supergenerator.from_hamiltonian(hamiltonian, np.zeros((n * n, n * n), dtype=complex))
    return Supergenerator.from_lindblads(ls, hamiltonian)


def random_kite_generator(
    rate_scale: float, seed: int, hamiltonian: Optional[np.ndarray] = None, num_dephasing: int = 2
) -> Supergenerator:
    """Two-spin CP generator with symmetric population jumps and real diagonal dephasing.

    The result is unital, has a symmetric real matrix in the transition basis
    and no coupling across the kite blocks.
    """
    n = 4
    rng = np.random.default_rng(seed)
    ops, weights = [], []
    for j in range(n):
        for k in range(j + 1, n):
            rate = float(rate_scale * rng.uniform(0.5, 1.5))
            for a, b in ((j, k), (k, j)):
                op = np.zeros((n, n), dtype=complex)
                op[b, a] = 1.0
                ops.append(op)
                weights.append(rate)
    for _ in range(num_dephasing):
        d = rng.standard_normal(n)
        d -= d.mean()
        ops.append(np.diag(d / np.linalg.norm(d)).astype(complex))
        weights.append(float(rate_scale * rng.uniform(0.5, 1.5)))
    return Supergenerator.from_lindblads(LindbladSystem(ops, weights), hamiltonian)


def random_secular_generator(
    hamiltonian: np.ndarray, rate_scale: float, seed: int, num_dephasing: int = 2
) -> Supergenerator:
    """CP generator whose relaxation part commutes with the Hamiltonian commutator.

    Jumps run between eigenstates of the Hamiltonian and dephasing operators
    are diagonal in its eigenbasis.
    """
    h = as_matrix(hamiltonian, "hamiltonian")
    n = h.shape[0]
    _, v = np.linalg.eigh(h)
    rng = np.random.default_rng(seed)
    ops, weights = [], []
    for a in range(n):
        for b in range(n):
            if a == b:
                continue
            jump = np.zeros((n, n), dtype=complex)
            jump[b, a] = 1.0
            ops.append(v @ jump @ v.conj().T)
            weights.append(float(rate_scale * rng.uniform(0.5, 1.5)))
    for _ in range(num_dephasing):
        d = rng.standard_normal(n)
        d -= d.mean()
        ops.append(v @ np.diag(d / np.linalg.norm(d)) @ v.conj().T)
        weights.append(float(rate_scale * rng.uniform(0.5, 1.5)))
    return Supergenerator.from_lindblads(LindbladSystem(ops, weights), h)
