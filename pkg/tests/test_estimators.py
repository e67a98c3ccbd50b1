import numpy as np
import pytest
from numpy.testing import assert_allclose

from core.config import REFERENCE_TIMES
from core.cp import LindbladSystem, Supergenerator, cp_penalty
from core.errors import InputError, NonConvergenceError
from core.liouville import PAULI, transition_basis
from core.synth import (
    NoiseSpec,
    add_noise,
    random_cp_generator,
    random_kite_generator,
    random_secular_generator,
    simulate_propagators,
    simulate_state_dataset,
)
from estimators import ESTIMATORS, FitConfig, get_estimator
from estimators.base import chi_squared
from estimators.cp_fit import cp_constrained_fit, initial_simplex
from estimators.dataset import TomographyDataset
from estimators.eigenlog import eigenlog_average_estimate
from estimators.naive_log import naive_log_estimate
from estimators.richardson import richardson_estimate, romberg_tableau
from estimators.structures import Parameterization, structure_parameter_count
from utils.logger import run_logger


def doubling(t1, levels):
    return [t1 * 2 ** m for m in range(levels)]


def relaxation_error(estimate, truth):
    return float(np.linalg.norm(estimate.relaxation_part - truth.in_basis("zeeman").relaxation_part))


def unital_qubit_generator(rates=(0.3, 0.5, 0.8), hamiltonian=None):
    ops = [PAULI[p] / np.sqrt(2) for p in "XYZ"]
    return Supergenerator.from_lindblads(LindbladSystem(ops, list(rates)), hamiltonian)


# --- configuration and structure ---------------------------------------------------------


def test_fit_config_validation():
    assert FitConfig(structure="kite").structure == "redfield_kite"
    assert FitConfig(structure="full").structure == "full_symmetric"
    with pytest.raises(InputError):
        FitConfig(structure="triangle")
    with pytest.raises(InputError):
        FitConfig(penalty_weight=0.0)
    with pytest.raises(InputError):
        FitConfig(simplex_tolerance=-1.0)
    cfg = FitConfig.from_dict({"structure": "kite", "restarts": 1, "unrelated": True})
    assert cfg.restarts == 1
    assert cfg.to_dict()["seed_generator"] is None


def test_structure_parameter_counts():
    assert structure_parameter_count("redfield_kite", 4) == 48
    assert structure_parameter_count("redfield_kite", 4, detailed_balance=False) == 81
    assert structure_parameter_count("full_symmetric", 4) == 120
    assert structure_parameter_count("none", 4) == 225
    assert structure_parameter_count("none", 4, border_identity_row=False) == 240
    assert structure_parameter_count("full_symmetric", 2) == 6


def test_kite_parameterization_round_trip():
    g = random_kite_generator(0.3, seed=4)
    param = Parameterization("redfield_kite", 4)
    r = g.relaxation_part
    assert_allclose(param.to_relaxation(param.from_relaxation(r)), r, atol=1e-12)


def test_parameterization_is_trace_preserving_and_symmetric(rng):
    param = Parameterization("full_symmetric", 4)
    x = rng.standard_normal(param.n_params)
    m = param.to_matrix(x)
    assert np.array_equal(m, m.T)
    r = param.to_relaxation(x)
    g = Supergenerator.from_hamiltonian(None, r)
    assert g.trace_violation() < 1e-12


def test_initial_simplex():
    simplex = initial_simplex(np.array([1.0, 0.0]))
    assert simplex.shape == (3, 2)
    assert_allclose(simplex[1] - simplex[0], [0.05, 0.0])
    assert_allclose(simplex[2] - simplex[0], [0.0, 1e-3])


def test_registry():
    assert set(ESTIMATORS) == {"logm", "richardson", "eiglog", "cpfit", "lsfit"}
    info = get_estimator("cpfit").get_info()
    assert info["name"] == "cpfit"
    with pytest.raises(InputError):
        get_estimator("bayes")


# --- naive logarithm ----------------------------------------------------------------------


def test_naive_log_recovers_small_generator():
    g = random_cp_generator(2, 3, 0.5, seed=1)
    ds = simulate_propagators(g, [0.1])
    estimate = naive_log_estimate(ds)
    assert_allclose(estimate.relaxation_part, g.relaxation_part, atol=1e-8)


def test_naive_log_of_identity():
    ds = TomographyDataset(2, [1.0], np.zeros((2, 2)), propagators=[np.eye(4)])
    assert np.allclose(naive_log_estimate(ds).relaxation_part, 0)
    with pytest.raises(InputError):
        naive_log_estimate(ds, index=3)


def test_naive_log_fails_where_richardson_succeeds(reference_hamiltonian):
    truth = random_secular_generator(reference_hamiltonian, 0.3, seed=8)
    ds = simulate_propagators(truth, REFERENCE_TIMES)
    naive = get_estimator("logm").estimate(ds)
    rich = richardson_estimate(ds)
    assert relaxation_error(naive.estimate, truth) > 10 * relaxation_error(rich, truth)
    assert any("alias" in w for w in run_logger.warnings())


# --- Richardson -------------------------------------------------------------------------------


def test_romberg_tableau_cancels_even_powers():
    f = lambda h: 1.0 + 2.0 * h ** 2 + 3.0 * h ** 4
    table = romberg_tableau([np.array([[f(h)]]) for h in (0.4, 0.2, 0.1)])
    assert table[-1][-1][0, 0] == pytest.approx(1.0, abs=1e-12)


def test_richardson_commuting_generator(reference_hamiltonian):
    truth = random_secular_generator(reference_hamiltonian, 0.3, seed=3)
    ds = simulate_propagators(truth, doubling(0.05, 4))
    assert relaxation_error(richardson_estimate(ds), truth) < 1e-8


def test_richardson_pure_unitary(reference_hamiltonian):
    g = Supergenerator.from_hamiltonian(reference_hamiltonian, np.zeros((16, 16)))
    ds = simulate_propagators(g, doubling(0.05, 3))
    assert np.abs(richardson_estimate(ds).relaxation_part).max() < 1e-9


def test_richardson_single_level_gives_positive_decay():
    g = unital_qubit_generator()
    ds = simulate_propagators(g, [0.01])
    rates = np.real(np.diag(richardson_estimate(ds).in_basis("cartesian").relaxation_part))
    assert np.all(rates[1:] > 0)
    assert rates[0] == pytest.approx(0.0, abs=1e-12)


def test_richardson_convergence_order(reference_hamiltonian):
    truth = random_secular_generator(reference_hamiltonian, 0.3, seed=21)
    errors = []
    for t1 in (0.4, 0.2, 0.1):
        ds = simulate_propagators(truth, doubling(t1, 2))
        errors.append(relaxation_error(richardson_estimate(ds), truth))
    orders = [np.log2(a / b) for a, b in zip(errors, errors[1:])]
    for order in orders:
        assert 3.5 <= order <= 4.5
    fine = simulate_propagators(truth, doubling(0.0125, 2))
    assert relaxation_error(richardson_estimate(fine), truth) <= 1e-6


def test_richardson_requires_doubling_grid():
    ds = simulate_propagators(unital_qubit_generator(), [0.1, 0.3])
    with pytest.raises(InputError, match="doubling"):
        get_estimator("richardson").estimate(ds)


# --- eigenvalue logarithm ---------------------------------------------------------------------


def test_eigenlog_commuting_generator(reference_hamiltonian):
    truth = random_secular_generator(reference_hamiltonian, 0.3, seed=5)
    ds = simulate_propagators(truth, REFERENCE_TIMES)
    assert relaxation_error(eigenlog_average_estimate(ds), truth) < 1e-6


def test_eigenlog_unitary_data(reference_hamiltonian):
    g = Supergenerator.from_hamiltonian(reference_hamiltonian, np.zeros((16, 16)))
    ds = simulate_propagators(g, REFERENCE_TIMES)
    assert np.abs(eigenlog_average_estimate(ds).relaxation_part).max() < 1e-9


def test_eigenlog_agrees_with_cp_fit():
    h = np.pi * 3.0 * PAULI["Z"]
    truth = random_secular_generator(h, 0.5, seed=9)
    ds = add_noise(simulate_propagators(truth, REFERENCE_TIMES), NoiseSpec(sigma=0.01, seed=2))
    eig_r = eigenlog_average_estimate(ds).in_basis("cartesian").relaxation_part
    fit = get_estimator("cpfit", FitConfig(structure="none", max_iterations=5000)).estimate(ds)
    fit_r = fit.estimate.in_basis("cartesian").relaxation_part
    corr = np.corrcoef(np.real(eig_r).ravel(), np.real(fit_r).ravel())[0, 1]
    assert corr >= 0.8


# --- least-squares fits -----------------------------------------------------------------------


def test_chi_squared_at_truth():
    truth = unital_qubit_generator(hamiltonian=np.pi * 2 * PAULI["Z"])
    ds = simulate_propagators(truth, REFERENCE_TIMES)
    scale = sum(np.linalg.norm(p) ** 2 for p in ds.propagators)
    assert chi_squared(truth, ds) <= 1e-18 * scale


def test_cp_fit_seeded_at_truth():
    truth = unital_qubit_generator(hamiltonian=np.pi * 2 * PAULI["Z"])
    ds = simulate_propagators(truth, REFERENCE_TIMES)
    cfg = FitConfig(structure="full_symmetric", seed_generator=truth)
    report = cp_constrained_fit(ds, cfg)
    assert report.chi_squared < 1e-20
    assert report.converged
    assert report.penalty_at_solution <= 10 * cfg.simplex_tolerance
    assert report.estimate.trace_violation() < 1e-8
    assert report.diagnostics["n_parameters"] == 6


def test_cp_fit_reports_iteration_cap():
    truth = unital_qubit_generator(hamiltonian=np.pi * 2 * PAULI["Z"])
    ds = simulate_propagators(truth, REFERENCE_TIMES)
    seed = unital_qubit_generator(rates=(0.6, 0.2, 1.0), hamiltonian=np.pi * 2 * PAULI["Z"])
    report = cp_constrained_fit(ds, FitConfig(structure="full_symmetric", seed_generator=seed,
                                              max_iterations=5, restarts=0))
    assert not report.converged
    assert report.iterations <= 5
    assert any("iteration cap" in w for w in run_logger.warnings())


def test_cp_fit_reports_overflow():
    truth = unital_qubit_generator()
    ds = simulate_propagators(truth, REFERENCE_TIMES)
    seed = truth.with_relaxation(-1e4 * truth.relaxation_part)
    cfg = FitConfig(structure="full_symmetric", seed_generator=seed, max_iterations=50, restarts=0)
    with pytest.raises(NonConvergenceError) as info:
        cp_constrained_fit(ds, cfg)
    assert len(info.value.parameters) == 6


def test_fit_needs_seed():
    ds = simulate_propagators(unital_qubit_generator(), REFERENCE_TIMES)
    with pytest.raises(InputError):
        cp_constrained_fit(ds, FitConfig())


def test_estimators_preserve_trace():
    truth = random_cp_generator(2, 2, 0.4, seed=6, hamiltonian=np.pi * PAULI["X"])
    ds = simulate_propagators(truth, REFERENCE_TIMES)
    for method in ("logm", "richardson", "eiglog"):
        report = get_estimator(method).estimate(ds)
        assert report.estimate.trace_violation() < 1e-8, method
        assert report.chi_squared >= 0


def test_lsfit_skips_penalty():
    truth = unital_qubit_generator(hamiltonian=np.pi * 2 * PAULI["Z"])
    ds = simulate_propagators(truth, REFERENCE_TIMES)
    report = get_estimator("lsfit", FitConfig(structure="full", max_iterations=2000)).estimate(ds)
    assert report.method == "lsfit"
    assert report.diagnostics["penalty_weight"] == 0.0


@pytest.mark.slow
def test_noiseless_kite_recovery():
    truth = random_kite_generator(0.3, seed=17)
    ds = simulate_propagators(truth, REFERENCE_TIMES)
    cfg = FitConfig(structure="kite", max_iterations=200000, restarts=6, simplex_tolerance=1e-10)
    report = get_estimator("cpfit", cfg).estimate(ds)
    param = Parameterization("redfield_kite", 4)
    x_fit = param.from_relaxation(report.estimate.in_basis("zeeman").relaxation_part)
    x_true = param.from_relaxation(truth.relaxation_part)
    assert np.abs(x_fit - x_true).max() <= 1e-4
    assert report.chi_squared <= 1e-12


@pytest.mark.slow
def test_cp_constraint_reduces_error_on_noisy_state_data(reference_hamiltonian):
    cfg = dict(structure="kite", max_iterations=4000, restarts=1, simplex_tolerance=1e-8)
    constrained, unconstrained, left_cp_set = [], [], []
    for trial in range(40):
        truth = random_kite_generator(0.3, seed=500 + trial, hamiltonian=reference_hamiltonian, num_dephasing=1)
        clean = simulate_state_dataset(truth, REFERENCE_TIMES, transition_basis())
        ds = add_noise(clean, NoiseSpec(sigma=0.02, seed=trial, target="density_matrices"))
        cp = get_estimator("cpfit", FitConfig(**cfg)).estimate(ds)
        ls = get_estimator("lsfit", FitConfig(**cfg)).estimate(ds)
        constrained.append(relaxation_error(cp.estimate, truth))
        unconstrained.append(relaxation_error(ls.estimate, truth))
        left_cp_set.append(ls.penalty_at_solution > 1e-8)

    outside = [i for i, flag in enumerate(left_cp_set) if flag]
    assert len(outside) >= 10
    wins = sum(constrained[i] < unconstrained[i] for i in outside)
    assert wins >= 0.7 * len(outside)
    assert np.median(constrained) <= np.median(unconstrained)
