from typing import Sequence


class ContractViolation(ValueError):
    """A precondition of an operation does not hold."""


class InconclusiveResult(Exception):
    """A numerical decision could not be reached within the sampling error."""


class NumericalError(ArithmeticError):
    """An internal computation left its valid domain."""


class LatticeCoverageError(ContractViolation):
    """
    Raised when a lattice fails its covering check after all repair rounds.
    Attributes:
        witness: coordinates of the sampled point with no lattice point within delta
        distance: Bergman distance from the witness to the nearest lattice point
    """

    def __init__(self, witness: Sequence[complex], distance: float):
        self.witness = list(witness)
        self.distance = distance
        super().__init__(
            f"Lattice does not cover the sample point {self.witness} (nearest lattice point at distance {distance:.6g})"
        )
