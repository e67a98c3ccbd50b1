import numpy as np
import pytest

from core.cp import (
    LindbladSystem,
    Supergenerator,
    apply_kraus,
    choi_from_supermatrix,
    cp_filter_generator,
    cp_filter_propagator,
    cp_penalty,
    dissipator_from_lindblads,
    fix_lindblad_phase,
    identity_projector,
    is_cp_propagator,
    kraus_from_propagator,
    kraus_to_propagator,
    lindblads_from_generator,
    operator_from_choi_vector,
    projected_choi,
    rebuild_error,
    reshuffle,
    supermatrix_from_choi,
    unshuffle,
)
from core.errors import InputError, InvariantError, NotCompletelyPositiveError
from core.hadamard import assemble_zeeman_model, centrosymmetrize
from core.liouville import PAULI, unvec, vec
from core.matfuncs import psd_project
from core.synth import random_cp_generator
from tests.conftest import random_density, random_hermitian


def transpose_map(n):
    p = np.zeros((n * n, n * n))
    for i in range(n):
        for k in range(n):
            p[i * n + k, k * n + i] = 1.0
    return p


def traceless(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return a - np.trace(a) / n * np.eye(n)


def brute_force_choi(p):
    n = int(round(np.sqrt(p.shape[0])))
    c = np.zeros((n * n, n * n), dtype=complex)
    for i in range(n):
        for j in range(n):
            e = np.zeros((n, n))
            e[i, j] = 1.0
            c += np.kron(unvec(p @ vec(e)), e)
    return c


def test_reshuffle_round_trip(rng):
    s = rng.standard_normal((16, 16)) + 1j * rng.standard_normal((16, 16))
    assert np.array_equal(unshuffle(reshuffle(s)), s)
    assert np.array_equal(reshuffle(unshuffle(s)), s)
    assert np.array_equal(supermatrix_from_choi(choi_from_supermatrix(s).matrix), s)


@pytest.mark.parametrize("n", [2, 3])
def test_choi_matches_sum_over_matrix_units(rng, n):
    p = rng.standard_normal((n * n, n * n)) + 1j * rng.standard_normal((n * n, n * n))
    expected = brute_force_choi(p)
    assert np.allclose(choi_from_supermatrix(p).matrix, expected)
    assert np.allclose(supermatrix_from_choi(expected), p)


def test_choi_eigenvector_reads_back_kraus_operator(rng):
    k = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    c = brute_force_choi(np.kron(k.conj(), k))
    assert np.allclose(c, np.outer(k.reshape(-1), k.reshape(-1).conj()))
    assert np.array_equal(operator_from_choi_vector(k.reshape(-1)), k)
    (recovered,) = kraus_from_propagator(np.kron(k.conj(), k))
    phase = np.vdot(recovered.reshape(-1), k.reshape(-1))
    assert np.allclose(recovered * phase / abs(phase), k)


def test_choi_of_identity_map():
    choi = choi_from_supermatrix(np.eye(4))
    assert np.allclose(choi.eigenvalues(), [2, 0, 0, 0])
    assert choi.is_psd()


def test_transpose_is_not_cp():
    choi = choi_from_supermatrix(transpose_map(2))
    assert choi.min_eigenvalue() == pytest.approx(-1.0)
    assert not is_cp_propagator(transpose_map(2))


def test_kraus_round_trip(rng):
    kraus = [rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)) for _ in range(3)]
    p = kraus_to_propagator(kraus)
    recovered = kraus_from_propagator(p)
    assert len(recovered) == 3
    rho = random_density(rng, 3)
    assert np.abs(apply_kraus(recovered, rho) - apply_kraus(kraus, rho)).max() < 1e-9
    assert np.allclose(unvec(p @ vec(rho)), apply_kraus(kraus, rho))


def test_kraus_of_unitary_is_single():
    u = np.array([[0, 1], [1, 0]], dtype=complex)
    (k,) = kraus_from_propagator(np.kron(u.conj(), u))
    assert np.allclose(np.abs(k), np.abs(u))


def test_kraus_rejects_non_cp():
    with pytest.raises(NotCompletelyPositiveError):
        kraus_from_propagator(transpose_map(2))
    with pytest.raises(InputError):
        kraus_to_propagator([])


def test_cp_filter_propagator(rng):
    kraus = [rng.standard_normal((2, 2)) for _ in range(2)]
    p = kraus_to_propagator(kraus)
    assert np.allclose(cp_filter_propagator(p), p, atol=1e-12)

    q = transpose_map(2)
    filtered = cp_filter_propagator(q)
    assert is_cp_propagator(filtered)
    assert np.allclose(cp_filter_propagator(filtered), filtered, atol=1e-12)
    assert np.allclose(reshuffle(filtered), psd_project(reshuffle(q)))


def test_single_dephasing_dissipator():
    ls = LindbladSystem.single(PAULI["Z"] / np.sqrt(2), 1.0)
    assert np.allclose(dissipator_from_lindblads(ls), np.diag([0, -1, -1, 0]))


def test_dissipator_matches_explicit_form(rng):
    ls = LindbladSystem([traceless(rng, 3) for _ in range(2)], [0.7, 1.3])
    rho = random_density(rng, 3)
    explicit = sum(
        l @ rho @ l.conj().T - 0.5 * (l.conj().T @ l @ rho + rho @ l.conj().T @ l) for l in ls.lindblads()
    )
    assert np.allclose(unvec(dissipator_from_lindblads(ls) @ vec(rho)), explicit)


def test_empty_system_needs_dimension():
    with pytest.raises(InputError):
        dissipator_from_lindblads(LindbladSystem())
    assert np.allclose(dissipator_from_lindblads(LindbladSystem(), 2), 0)


def test_lindblad_system_checks_and_shares():
    with pytest.raises(InvariantError):
        LindbladSystem([np.eye(2)], [-1.0])
    with pytest.raises(InputError):
        LindbladSystem([np.eye(2)], [1.0], ["bogus"])
    ls = LindbladSystem([PAULI["X"], PAULI["Z"]], [1.0, 3.0], ["hadamard_t1", "hadamard_t2_adiabatic"])
    assert sum(ls.shares()) == pytest.approx(1.0)
    assert ls.shares()[1] == pytest.approx(0.75)
    assert len(ls.filter("hadamard_t1")) == 1
    assert len(ls + ls) == 4


def test_projected_choi_of_zero_relaxation():
    g = Supergenerator.from_hamiltonian(PAULI["Z"], np.zeros((4, 4)))
    assert np.allclose(projected_choi(g), 0)


def test_projected_choi_of_single_lindblad(rng):
    l = traceless(rng, 3)
    g = Supergenerator.from_lindblads(LindbladSystem.single(l, 1.0))
    values, vectors = np.linalg.eigh(projected_choi(g))
    assert values[-1] == pytest.approx(np.linalg.norm(l) ** 2)
    assert np.allclose(values[:-1], 0, atol=1e-10)
    overlap = abs(np.vdot(vectors[:, -1], l.reshape(-1))) / np.linalg.norm(l)
    assert overlap == pytest.approx(1.0)


def test_identity_projector():
    e = identity_projector(3)
    assert np.allclose(e @ e, e)
    assert np.allclose(e @ vec(np.eye(3)), 0)


def test_cp_penalty():
    g = random_cp_generator(2, 3, 1.0, seed=5)
    assert cp_penalty(g) < 1e-20
    l = PAULI["X"]
    anti = Supergenerator.from_hamiltonian(None, dissipator_from_lindblads(LindbladSystem.single(l, 1.0)))
    assert cp_penalty(anti) == pytest.approx(np.linalg.norm(l) ** 4)


def test_projected_choi_requires_trace_preservation():
    g = Supergenerator.from_hamiltonian(None, np.eye(4))
    with pytest.raises(InvariantError):
        cp_penalty(g)


def test_lindblads_round_trip():
    g = random_cp_generator(4, 3, 1.0, seed=11)
    ls = lindblads_from_generator(g)
    assert len(ls) == 3
    assert rebuild_error(g, ls) < 1e-8
    assert all(np.isclose(np.linalg.norm(op), 1.0) for op in ls.operators)


def trace_preserving_reference(dbt):
    transfers = -np.asarray(dbt["r_t1_zee_symmetrized"], dtype=float)
    np.fill_diagonal(transfers, 0.0)
    r_t1 = np.diag(transfers.sum(axis=0)) - transfers
    return assemble_zeeman_model(r_t1, centrosymmetrize(dbt["r_t2_zee"]))


def test_dominant_lindblad_of_reference_relaxation(dbt, reference_hamiltonian):
    g = Supergenerator.from_hamiltonian(reference_hamiltonian, trace_preserving_reference(dbt))
    ls = lindblads_from_generator(g)
    assert len(ls) == 15
    assert ls.shares()[0] == pytest.approx(0.35, abs=0.01)

    dominant = ls.lindblads()[0]
    dominant = dominant * np.sign(dominant[0, 0].real)
    assert np.allclose(dominant, np.diag(np.diag(dominant)), atol=1e-8)
    z = PAULI["Z"]
    z1, z2 = np.kron(z, np.eye(2)), np.kron(np.eye(2), z)
    coeff = {name: np.trace(p @ dominant) / 4 for name, p in (("z1", z1), ("z2", z2), ("zz", z1 @ z2))}
    assert coeff["z1"].real == pytest.approx(0.346, abs=2e-3)
    assert coeff["z2"].real == pytest.approx(0.346, abs=2e-3)
    assert abs(coeff["zz"]) <= 0.03
    assert abs(np.trace(dominant)) < 1e-8


def test_lindblads_of_non_cp_generator():
    anti = Supergenerator.from_hamiltonian(None, dissipator_from_lindblads(LindbladSystem.single(PAULI["Z"], 1.0)))
    with pytest.raises(NotCompletelyPositiveError):
        lindblads_from_generator(anti)


def test_cp_filter_generator():
    g = random_cp_generator(2, 2, 1.0, seed=3)
    same, removed = cp_filter_generator(g)
    assert removed == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(same.relaxation_part, g.relaxation_part)

    bad = g.with_relaxation(g.relaxation_part + dissipator_from_lindblads(LindbladSystem.single(PAULI["X"], 2.0)))
    filtered, removed = cp_filter_generator(bad)
    assert removed > 0
    assert cp_penalty(filtered) < 1e-20
    assert filtered.trace_violation() < 1e-10


def test_fix_lindblad_phase(rng):
    h = random_hermitian(rng, 3)
    fixed = fix_lindblad_phase(np.exp(0.7j) * h)
    assert np.allclose(fixed, fixed.conj().T)
    assert np.allclose(np.abs(fixed), np.abs(h))


def test_supergenerator_basis_round_trip(reference_hamiltonian):
    g = random_cp_generator(4, 2, 0.5, seed=2, hamiltonian=reference_hamiltonian)
    back = g.in_basis("transition").in_basis("cartesian").in_basis("zeeman")
    assert np.allclose(back.generator(), g.generator())
    assert g.in_basis("transition").trace_violation() < 1e-10
    assert np.allclose(g.propagator(0.0), np.eye(16))
    g.validate()


def test_validate_rejects_trace_loss():
    with pytest.raises(InvariantError):
        Supergenerator.from_hamiltonian(None, np.eye(4)).validate()
