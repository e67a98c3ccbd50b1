import os
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

VERSION = "0.3.0"

# Config file and log file
DEFAULT_CONFIG_FILE = os.getenv("LINDBLAD_FIT_CONFIG", "fit.yaml")
DEFAULT_LOG_FILE = os.getenv("LINDBLAD_FIT_LOG_FILE", "lindblad_fit.log")

# Logging
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
LOG_LEVEL = os.getenv("LINDBLAD_FIT_LOG_LEVEL", "INFO")
MAX_LOG_ENTRIES = 200

# Tolerances
HERMITIAN_TOL = 1e-9          # relative to the Frobenius norm
TRACE_TOL = 1e-8              # trace preservation of generators
BRANCH_CUT_TOL = 1e-10        # distance of an eigenvalue from the negative real axis
SINGULAR_TOL = 1e-12
DENSITY_TOL = 1e-8            # unit trace / PSD of density matrices
DOUBLING_TOL = 1e-9           # relative, Richardson time grids
IMAG_RESIDUE_TOL = 1e-6       # imaginary residue tolerated in real blocks
EIGEN_CUT_REL = 1e-8          # eigenvalue cut relative to trace of projected Choi

# Nelder-Mead
DEFAULT_PENALTY_SCALE = 1e3
DEFAULT_MAX_ITERATIONS = 20000
DEFAULT_SIMPLEX_TOL = 1e-9
DEFAULT_RESTARTS = 2
SIMPLEX_REL_STEP = 0.05
SIMPLEX_ABS_STEP = 1e-3
RESTART_STEP_RATIO = 0.1

# Hadamard pipeline
DEFAULT_MERGE_TOL = 0.05      # relative spread for merging degenerate rates

# Reference two-spin system (2,3-dibromothiophene in acetone)
REFERENCE_NU1_HZ = 161.63
REFERENCE_J_HZ = 5.77
REFERENCE_TIMES = [0.4, 0.8, 1.6, 3.2]

# Output
MATRIX_DECIMALS = 4
