from abc import ABC
from enum import Enum
from typing import Any, Dict

VERSION = "0.1.0"


class ExperimentAction(Enum):
    Norm = "norm"
    Area = "area"
    Carleson = "carleson"
    EmbedCheck = "embed-check"
    Region = "region"
    Superposition = "superposition"
    Compactness = "compactness"
    Lattice = "lattice"
    Selftest = "selftest"
    Inclusion = "inclusion"
    Witness = "witness"


class ExperimentStrategy(ABC):
    """
    Abstract strategy for one experiment of the laboratory. It has a single setup step that validates and builds the
    inputs (measures, lattices, test functions), and then a run step that computes the results and returns them as a
    JSON-ready dictionary.
    """

    action: ExperimentAction

    async def setup(self):
        raise NotImplementedError

    async def run(self) -> Dict[str, Any]:
        raise NotImplementedError
