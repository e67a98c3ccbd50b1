from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from core.config import (
    DEFAULT_MAX_ITERATIONS,
    DEFAULT_RESTARTS,
    DEFAULT_SIMPLEX_TOL,
)
from core.cp import Supergenerator, cp_penalty
from core.errors import InputError, InvariantError
from core.matfuncs import expm

from .dataset import TomographyDataset

STRUCTURES = ("full_symmetric", "redfield_kite", "none")
STRUCTURE_ALIASES = {"full": "full_symmetric", "kite": "redfield_kite"}


@dataclass
class FitConfig:
    penalty_weight: Optional[float] = None  # None: scaled from the seed's chi^2 and penalty
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    simplex_tolerance: float = DEFAULT_SIMPLEX_TOL
    structure: str = "full_symmetric"
    detailed_balance: bool = True
    border_identity_row: bool = True
    seed_generator: Optional[Supergenerator] = None
    restarts: int = DEFAULT_RESTARTS
    enforce_cp: bool = True
    final_filter: bool = False

    def __post_init__(self):
        self.structure = STRUCTURE_ALIASES.get(self.structure, self.structure)
        self.validate()

    def validate(self):
        if self.structure not in STRUCTURES:
            raise InputError(f"unknown structure '{self.structure}'", hint="use full, kite or none")
        if self.penalty_weight is not None and self.penalty_weight <= 0:
            raise InputError(f"penalty_weight must be > 0, got {self.penalty_weight}")
        if self.simplex_tolerance <= 0:
            raise InputError(f"simplex_tolerance must be > 0, got {self.simplex_tolerance}")
        if self.max_iterations < 1:
            raise InputError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.restarts < 0:
            raise InputError(f"restarts must be >= 0, got {self.restarts}")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "FitConfig":
        known = {k: v for k, v in (data or {}).items() if k in cls.__dataclass_fields__ and k != "seed_generator"}
        return cls(**known)

    def to_dict(self) -> Dict[str, Any]:
        out = {k: v for k, v in asdict(self).items() if k != "seed_generator"}
        out["seed_generator"] = None if self.seed_generator is None else "provided"
        return out


@dataclass
class FitReport:
    estimate: Supergenerator
    chi_squared: float
    penalty_at_solution: float
    iterations: int
    method: str
    residual_per_time: List[float]
    converged: bool = True
    diagnostics: Dict[str, Any] = field(default_factory=dict)


def residuals(g: Supergenerator, ds: TomographyDataset) -> List[float]:
    """Frobenius distance between exp(-G t_m) and P_m for every time"""
    zee = g.in_basis("zeeman").generator()
    return [
        float(np.linalg.norm(expm(zee, -t) - p))
        for t, p in zip(ds.times, ds.superpropagators())
    ]


def chi_squared(g: Supergenerator, ds: TomographyDataset) -> float:
    total = 0.0
    for r in residuals(g, ds):
        total += r * r
    return total


def safe_penalty(g: Supergenerator, diagnostics: Dict[str, Any]) -> float:
    """cp_penalty, or NaN when the estimate is not trace preserving"""
    try:
        return cp_penalty(g)
    except InvariantError:
        diagnostics["trace_violation"] = g.trace_violation()
        return float("nan")


def make_report(g: Supergenerator, ds: TomographyDataset, method: str, **diagnostics) -> FitReport:
    res = residuals(g, ds)
    penalty = safe_penalty(g, diagnostics)
    return FitReport(
        estimate=g,
        chi_squared=float(sum(r * r for r in res)),
        penalty_at_solution=penalty,
        iterations=0,
        method=method,
        residual_per_time=res,
        converged=True,
        diagnostics=diagnostics,
    )


class BaseEstimator(ABC):
    """Abstract base class for every supergenerator estimator"""

    name = "base"
    description = ""

    def __init__(self, config: Optional[FitConfig] = None):
        self.config = config or FitConfig()

    @abstractmethod
    def estimate(self, ds: TomographyDataset) -> FitReport:
        """
        Estimate the supergenerator of a dataset
        Args:
            ds: time-stamped propagators or state pairs
        Returns: FitReport with the estimate and diagnostics
        """
        pass

    def check(self, ds: TomographyDataset):
        """Method-specific preconditions; raise InputError with a hint"""
        pass

    def get_info(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "description": self.description,
            "config": self.config.to_dict(),
        }
