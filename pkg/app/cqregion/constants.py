"""
Central constants for cqregion.
"""
from __future__ import annotations

# Numerical tolerances
HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-10
TRACE_TOL = 1e-10
EIGEN_ZERO = 1e-12
CPTP_TOL = 1e-9
PROB_PRUNE = 1e-12
ENVELOPE_TIE = 1e-9
ENVELOPE_MERGE = 1e-6
DEGRADABLE_CERT = 1e-8

# Optimizer defaults
DEFAULT_RESTARTS = 32
DEFAULT_SEED = 0
DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITERS = 2000
DEFAULT_FD_STEP = 1e-5
DEFAULT_STALL_WINDOW = 25
DEFAULT_DEGRADABILITY_RESTARTS = 20
DEFAULT_LAMBDA_GRID = (1.0, 1.1, 1.25, 1.5, 2.0, 3.0, 5.0, 9.0, 17.0, 33.0, 65.0)
DEFAULT_MU_POINTS = 51
# Chord-slope refinement after the grid pass
DEFAULT_REFINE_ROUNDS = 3
REFINE_MIN_GAIN = 1e-6

# Flat-region search (depolarizing near the Q endpoint)
FLAT_REGION_SLACK = 1e-4
FLAT_REGION_MIN_R = 1e-3

# Output formats
CSV_SIG_DIGITS = 10
REPORT_SCHEMA = 1
CURVE_HEADER = ("lambda", "r", "R", "objective", "cardinality_used")
COMPARE_HEADER = ("r", "R_opt", "R_timeshare", "delta")
COMPARE_GRID_POINTS = 41

# Point tags
TAG_LAMBDA = "lambda"
TAG_HOLEVO = "holevo-endpoint"
TAG_Q1 = "q1-endpoint"
TAG_ANALYTIC = "analytic"
TAG_NEGATIVE_R = "negative-r"

CHANNEL_KINDS = frozenset(
    {
        "identity",
        "dephasing",
        "generalized_dephasing",
        "depolarizing",
        "erasure",
        "completely_dephasing",
        "trine",
        "kraus",
    }
)
