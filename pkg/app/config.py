PARAM_KEYS = ("A", "epsilon", "a", "v", "mu", "delta", "b_I", "b_C")

# RK4
DEFAULT_H = 1e-3
DEFAULT_T_END = 2000.0
DEFAULT_RECORD_EVERY_TIME = 1.0
DEFAULT_TOL = 1e-3
DEFAULT_SEED = 0
DEFAULT_N_INIT = 5

# tolerances
RESIDUAL_RTOL = 1e-9
CLAMP_TOL = 1e-12
SYLVESTER_MARGIN = 1e-12
SYMMETRY_TOL = 1e-12
CONSISTENCY_RTOL = 1e-9

# diagonal certificate search
CERT_BUDGET = 100_000
CERT_BATCH = 10_000
CERT_LOG10_RANGE = (-4.0, 4.0)

SYSTEMS = ("full", "limit", "sir", "mir")
OUTPUT_FORMATS = ("csv", "json")
