"""Numerical tolerances and hard limits shared by every module.

Values are defaults; functions that accept a tolerance argument fall back
to the entries below.
"""

# operator validation (max-entry deviations)
HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10
PROJECTOR_TOL = 1e-10
PROJECTOR_TRACE_TOL = 1e-8
STATE_NORM_TOL = 1e-10
DENSITY_TRACE_TOL = 1e-10
DENSITY_EIG_TOL = 1e-10
BATH_FACTOR_TOL = 1e-12

# capacity
MAX_DIM = 64
MAX_ENUM_STEPS = 14
MAX_SUM_TERMS = 2**20

# spectral clustering of unitary eigenphases
DEFAULT_GROUP_TOL = 1e-8
MIN_GROUP_TOL = 1e-10
MAX_GROUP_TOL = 1e-2

# principal-branch matrix logarithm: eigenphases closer than this to +-pi fail
LOG_BRANCH_TOL = 1e-6

# steering preconditions
INITIAL_SUPPORT_TOL = 1e-10
PULSE_WEIGHT_TOL = 1e-10

# Monte Carlo branch weights below this abort the trajectory (counted as failure)
RENORM_FLOOR = 1e-300

# convergence fits ignore values at or below roundoff level
FIT_FLOOR = 1e-11

# serialization
CSV_DIGITS = 17
BOUNDS_DIGITS = 12
SCHEMA_VERSION = 1
