import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).parent.parent
sys.path.insert(0, str(ROOT))

from core.config import REFERENCE_J_HZ, REFERENCE_NU1_HZ  # noqa: E402
from core.io import load_fixtures  # noqa: E402
from core.liouville import TwoSpinHamiltonian  # noqa: E402
from utils.logger import run_logger  # noqa: E402


@pytest.fixture(scope="session")
def dbt():
    return load_fixtures(str(ROOT / "data" / "dibromothiophene.yaml"))


@pytest.fixture
def reference_hamiltonian():
    return TwoSpinHamiltonian(REFERENCE_NU1_HZ, REFERENCE_J_HZ).matrix()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(autouse=True)
def clean_run_log():
    run_logger.clear_log()
    yield
    run_logger.clear_log()


def random_density(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def random_hermitian(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (a + a.conj().T)
