from dataclasses import dataclass, field
from typing import Any, Dict, Tuple


@dataclass(frozen=True)
class IntegralEstimate:
    """
    Result of a quadrature or Monte-Carlo estimate.

    levels holds the cumulative value at each truncation level (innermost shell first) so that callers can
    inspect how the estimate moves as the truncation radius approaches the boundary.
    """

    value: float
    std_error: float = 0.0
    samples_used: int = 0
    truncation_radius: float = 1.0
    diverged: bool = False
    exact: bool = False
    levels: Tuple[float, ...] = ()
    flags: Tuple[str, ...] = ()
    details: Dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "value": self.value,
            "std_error": "exact" if self.exact else self.std_error,
            "diverged": self.diverged,
            "samples_used": self.samples_used,
            "truncation_radius": self.truncation_radius,
        }
        if self.flags:
            data["flags"] = list(self.flags)
        if self.details:
            data["details"] = self.details
        return data


def exact_estimate(value: float, **kwargs) -> IntegralEstimate:
    return IntegralEstimate(value=float(value), std_error=0.0, exact=True, levels=(float(value),), **kwargs)
