from tentlablib.carleson import DELTA_EXPONENTS
from tentlablib.functionals import COMPACTNESS_RADII, REFINEMENT_RADII
from tentlablib.measures import DEFAULT_BUDGET, DEFAULT_TRUNCATION_LEVEL
from tentlablib.params import DEFAULT_APERTURE, DEFAULT_RADIUS
from tentlablib.sampling import THREADS_ENV

__all__ = [
    "DELTA_EXPONENTS",
    "COMPACTNESS_RADII",
    "REFINEMENT_RADII",
    "DEFAULT_BUDGET",
    "DEFAULT_TRUNCATION_LEVEL",
    "DEFAULT_APERTURE",
    "DEFAULT_RADIUS",
    "THREADS_ENV",
    "DEFAULT_OUT",
    "EXIT_OK",
    "EXIT_FAILURE",
    "EXIT_INCONCLUSIVE",
]

DEFAULT_OUT = "tentlab-report.json"

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INCONCLUSIVE = 2
