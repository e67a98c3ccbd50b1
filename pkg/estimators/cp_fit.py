import logging
from typing import Any, Dict, List, Optional

import numpy as np
from scipy.optimize import minimize

from core.config import DEFAULT_PENALTY_SCALE, RESTART_STEP_RATIO, SIMPLEX_ABS_STEP, SIMPLEX_REL_STEP
from core.cp import Supergenerator, cp_filter_generator, cp_penalty, cp_penalty_of_relaxation
from core.errors import InputError, NonConvergenceError
from core.matfuncs import expm
from utils.logger import run_logger

from .base import BaseEstimator, FitConfig, FitReport, residuals
from .dataset import TomographyDataset
from .eigenlog import eigenlog_average_estimate
from .richardson import richardson_estimate
from .structures import Parameterization

logger = logging.getLogger(f"lindblad_fit.{__name__}")


def initial_simplex(x: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """Seed plus one vertex per coordinate, offset by 5% (1e-3 floor)"""
    step = np.maximum(SIMPLEX_REL_STEP * np.abs(x), SIMPLEX_ABS_STEP) * scale
    return np.vstack([x] + [x + step[i] * np.eye(len(x))[i] for i in range(len(x))])


class _Objective:
    """chi^2 + weight * CP penalty, with a record of non-finite evaluations"""

    def __init__(self, ds: TomographyDataset, param: Parameterization, enforce_cp: bool):
        self.param = param
        self.enforce_cp = enforce_cp
        self.hc_part = 1j * ds.commutator()
        self.times = list(ds.times)
        self.props = ds.superpropagators()
        self.weight = 0.0
        self.evaluations = 0
        self.nonfinite: List[List[float]] = []

    def chi_squared(self, r: np.ndarray) -> float:
        g = self.hc_part + r
        total = 0.0
        # fixed summation order
        for t, p in zip(self.times, self.props):
            d = expm(g, -t) - p
            total += float(np.vdot(d, d).real)
        return total

    def penalty(self, r: np.ndarray) -> float:
        return cp_penalty_of_relaxation(r) if self.enforce_cp else 0.0

    def __call__(self, x: np.ndarray) -> float:
        self.evaluations += 1
        r = self.param.to_relaxation(x)
        with np.errstate(all="ignore"):
            try:
                value = self.chi_squared(r) + self.weight * self.penalty(r)
            except (np.linalg.LinAlgError, ValueError, OverflowError):
                value = float("nan")
        if not np.isfinite(value):
            if len(self.nonfinite) < 10:
                self.nonfinite.append([float(v) for v in x])
            return float("inf")
        return value


def default_penalty_weight(chi0: float, pen0: float) -> float:
    return max(DEFAULT_PENALTY_SCALE * chi0 / (pen0 + 1e-6), 1.0)


def cp_constrained_fit(ds: TomographyDataset, cfg: FitConfig) -> FitReport:
    """Nelder-Mead minimisation of chi^2 + weight * CP penalty over the structured parameters"""
    if cfg.seed_generator is None:
        raise InputError("cp_constrained_fit needs a seed generator", hint="seed with richardson_estimate")
    param = Parameterization(cfg.structure, ds.n, cfg.detailed_balance, cfg.border_identity_row)
    objective = _Objective(ds, param, cfg.enforce_cp)

    x = param.from_relaxation(cfg.seed_generator.in_basis("zeeman").relaxation_part)
    r0 = param.to_relaxation(x)
    if cfg.enforce_cp:
        objective.weight = cfg.penalty_weight or default_penalty_weight(
            objective.chi_squared(r0), objective.penalty(r0)
        )
    best = objective(x)
    logger.info(f"fit start: {param.n_params} parameters, objective {best:.6e}, weight {objective.weight:.3e}")

    iterations = 0
    converged = False
    runs = 0
    tol = cfg.simplex_tolerance
    for restart in range(cfg.restarts + 1):
        remaining = cfg.max_iterations - iterations
        if remaining <= 0:
            break
        res = minimize(
            objective,
            x,
            method="Nelder-Mead",
            options={
                "initial_simplex": initial_simplex(x, RESTART_STEP_RATIO ** restart),
                "xatol": tol,
                "fatol": tol,
                "maxiter": remaining,
                "adaptive": False,
            },
        )
        runs += 1
        iterations += int(res.nit)
        improvement = best - float(res.fun)
        if float(res.fun) <= best:
            x, best = np.asarray(res.x), float(res.fun)
        converged = bool(res.success)
        logger.debug(f"simplex run {runs}: objective {res.fun:.6e}, {res.nit} iterations, {res.message}")
        if restart > 0 and improvement <= tol:
            break

    if not np.isfinite(best):
        offending = objective.nonfinite[0] if objective.nonfinite else list(map(float, x))
        raise NonConvergenceError(
            "objective is non-finite at every simplex vertex (matrix exponential overflow)",
            parameters=offending,
        )

    g = Supergenerator.from_hamiltonian(ds.hamiltonian, param.to_relaxation(x))
    removed = 0.0
    if cfg.final_filter:
        g, removed = cp_filter_generator(g)
    res_per_time = residuals(g, ds)
    chi2 = float(sum(r * r for r in res_per_time))
    penalty = cp_penalty(g)
    if not converged:
        run_logger.log_warning(f"simplex stopped at the iteration cap ({iterations}); best point returned")
    if converged and cfg.enforce_cp and penalty > 10 * tol:
        converged = False
        run_logger.log_warning(f"fit converged with CP penalty {penalty:.3e} above tolerance")

    diagnostics: Dict[str, Any] = {
        "structure": cfg.structure,
        "n_parameters": param.n_params,
        "penalty_weight": objective.weight,
        "objective": best,
        "evaluations": objective.evaluations,
        "simplex_runs": runs,
        "nonfinite_evaluations": len(objective.nonfinite),
        "filtered_mass": removed,
    }
    if objective.nonfinite:
        diagnostics["nonfinite_parameters"] = objective.nonfinite[0]
    return FitReport(
        estimate=g,
        chi_squared=chi2,
        penalty_at_solution=penalty,
        iterations=iterations,
        method="cpfit" if cfg.enforce_cp else "lsfit",
        residual_per_time=res_per_time,
        converged=converged,
        diagnostics=diagnostics,
    )


def default_seed(ds: TomographyDataset) -> Supergenerator:
    if ds.is_doubling_grid():
        return richardson_estimate(ds)
    run_logger.log_warning("time grid is not doubling; seeding the fit with the eigenvalue-log estimate")
    return eigenlog_average_estimate(ds)


class CPFitEstimator(BaseEstimator):
    name = "cpfit"
    description = "Nelder-Mead least squares with the projected-Choi penalty"
    enforce_cp = True

    def estimate(self, ds: TomographyDataset) -> FitReport:
        cfg = FitConfig(**{**self.config.__dict__, "enforce_cp": self.enforce_cp})
        if cfg.seed_generator is None:
            cfg.seed_generator = default_seed(ds)
        report = cp_constrained_fit(ds, cfg)
        run_logger.log_step(
            self.name,
            {"structure": cfg.structure, "times": len(ds.times)},
            summary=f"chi2={report.chi_squared:.3e} penalty={report.penalty_at_solution:.3e}",
        )
        return report


class LSFitEstimator(CPFitEstimator):
    name = "lsfit"
    description = "Nelder-Mead least squares without the CP penalty"
    enforce_cp = False
