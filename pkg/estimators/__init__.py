from typing import Dict, Optional, Type

from core.errors import InputError

from .base import BaseEstimator, FitConfig, FitReport
from .cp_fit import CPFitEstimator, LSFitEstimator, cp_constrained_fit
from .dataset import TomographyDataset, propagator_from_state_pairs
from .eigenlog import EigenLogEstimator, eigenlog_average_estimate
from .naive_log import NaiveLogEstimator, naive_log_estimate
from .richardson import RichardsonEstimator, richardson_estimate

ESTIMATORS: Dict[str, Type[BaseEstimator]] = {
    "logm": NaiveLogEstimator,
    "richardson": RichardsonEstimator,
    "eiglog": EigenLogEstimator,
    "cpfit": CPFitEstimator,
    "lsfit": LSFitEstimator,
}


def get_estimator(method: str, config: Optional[FitConfig] = None) -> BaseEstimator:
    if method not in ESTIMATORS:
        raise InputError(f"unknown method '{method}'", hint=f"choose one of {', '.join(ESTIMATORS)}")
    return ESTIMATORS[method](config)
