"""Physical constants, unit scales and reusable phrases."""

# Magnetic flux quantum (Wb).
PHI0 = 2.067833848e-15

# Unit scales: external units -> SI.
PICO = 1e-12
MICRO = 1e-6

# Problem weights are numerators over this denominator.
WEIGHT_DENOMINATOR = 8
MAX_NUMERATOR = 8

BRUTE_FORCE_MAX_NODES = 24
ANNEAL_T_COLD = 1.0 / 64.0

# Reference processor.
REFERENCE_GRID = 8
REFERENCE_SHORE = 4

REPRODUCE_TITLE = "Control-plane reproduction checks"
STATUS_PASS = "PASS"
STATUS_FAIL = "FAIL"
ERROR_GENERIC = "An unexpected error occurred."

EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
