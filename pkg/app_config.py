import os
import logging

logging.basicConfig(format='%(levelname)s:%(message)s',
                    level=os.environ.get("ENMO_LOG_LEVEL", "INFO").upper())

root_dir = os.path.dirname(__file__)

TOOL_NAME = "enmo-cqnc"
VERSION = "0.1.0"

# Vacuum quadrature variance; every spectrum in the library uses this floor
SHOT_NOISE = 0.5

# |delta_a| / kappa_a required before the ancilla counts as a far-detuned oscillator
HIERARCHY_RATIO = 3.0
MATCH_REL_TOL = 0.05

# Half-width of the excluded region around omega_m, in mechanical linewidths
GUARD_BAND_LINEWIDTHS = 10.0

CONSISTENCY_SIGMAS = 2.0
PHYSICALITY_TOL = 1e-9
