import math
from enum import Enum
from typing import Any, Dict, Union

from .errors import ContractViolation

DEFAULT_APERTURE = 2.0
DEFAULT_RADIUS = 0.5


class Endpoint(Enum):
    """The infinite exponent of sequence tent spaces."""

    INFINITY = "inf"


INF = Endpoint.INFINITY

Exponent = Union[float, Endpoint]


def parse_exponent(value: Any) -> Exponent:
    if isinstance(value, Endpoint):
        return value
    if isinstance(value, str) and value.strip().lower() in ("inf", "infinity", "∞"):
        return INF
    number = float(value)
    if math.isinf(number) and number > 0:
        return INF
    if not number > 0:
        raise ContractViolation(f"Exponents must be positive, got {value}")
    return number


def reciprocal(value: Exponent) -> float:
    return 0.0 if value is INF else 1.0 / float(value)  # type: ignore[arg-type]


class TentParams:
    """
    Class representing the exponents of an embedding problem between tent spaces.
    Attributes:
        p, q, alpha: Exponents of the source space HT^p_{q,alpha}
        s, t: Exponents of the area operator A_{mu,s} into L^t
        beta: Weight exponent of the target space, when one is involved
        n: Dimension
        gamma: Aperture of the Koranyi regions
        r: Radius of the Bergman balls in mu_hat
    """

    def __init__(
        self,
        p: float,
        q: float,
        s: float,
        t: float,
        alpha: float = 0.0,
        beta: float = 0.0,
        n: int = 1,
        gamma: float = DEFAULT_APERTURE,
        r: float = DEFAULT_RADIUS,
    ):
        for name, value in (("p", p), ("q", q), ("s", s), ("t", t)):
            if not (isinstance(value, (int, float)) and value > 0 and math.isfinite(value)):
                raise ContractViolation(f"Exponent {name} must be a positive real, got {value}")
        if int(n) != n or n < 1:
            raise ContractViolation(f"Dimension must be a positive integer, got {n}")
        if not alpha > -n - 1 or not beta > -n - 1:
            raise ContractViolation(f"Weights must exceed -n-1 = {-n - 1}, got alpha={alpha}, beta={beta}")
        if not gamma > 1:
            raise ContractViolation(f"Aperture must exceed 1, got {gamma}")
        if not 0 < r < 1:
            raise ContractViolation(f"Radius r must lie in (0, 1), got {r}")
        self.p = float(p)
        self.q = float(q)
        self.s = float(s)
        self.t = float(t)
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.n = int(n)
        self.gamma = float(gamma)
        self.r = float(r)

    @property
    def source_index(self) -> float:
        """(n+1+alpha)/q, the exponent of (1 - |a|^2) carried by point evaluations in L^q(dv_alpha)."""
        return (self.n + 1 + self.alpha) / self.q

    @property
    def g_exponent(self) -> float:
        """Exponent of (1 - |z|^2) in the Case1 functional."""
        return (self.q - self.s) * self.source_index + self.n * self.s * (1.0 / self.t - 1.0 / self.p)

    @property
    def eta_exponent(self) -> float:
        return (self.q - self.s) * self.source_index

    @property
    def lattice_mass_exponent(self) -> float:
        """Exponent of (1 - |a_k|^2) in lattice masses whose Case1 functional stays of constant size."""
        return 2 * self.n + 1 + self.alpha - self.g_exponent

    def require_q_above_s(self) -> None:
        if not self.q > self.s:
            raise ContractViolation(f"This functional needs q > s, got q={self.q}, s={self.s}")

    def require_p_above_t(self) -> None:
        if not self.p > self.t:
            raise ContractViolation(f"This functional needs p > t, got p={self.p}, t={self.t}")

    def replace(self, **changes: Any) -> "TentParams":
        data = self.to_json()
        data.update(changes)
        return TentParams(**data)

    def to_json(self) -> Dict[str, Any]:
        return {
            "p": self.p,
            "q": self.q,
            "s": self.s,
            "t": self.t,
            "alpha": self.alpha,
            "beta": self.beta,
            "n": self.n,
            "gamma": self.gamma,
            "r": self.r,
        }

    def __repr__(self) -> str:
        return f"TentParams({self.to_json()})"


class CaseTag(Enum):
    """The four parameter regimes that select the embedding criterion."""

    CASE1 = "case1"
    CASE2 = "case2"
    CASE3 = "case3"
    CASE4 = "case4"


def case_dispatch(p: float, q: float, s: float, t: float) -> CaseTag:
    """Case1: p < t, or p = t and q <= s. Case2: p = t, q > s. Case3: p > t, q > s. Case4: p > t, q <= s."""
    for name, value in (("p", p), ("q", q), ("s", s), ("t", t)):
        if not value > 0:
            raise ContractViolation(f"Exponent {name} must be positive, got {value}")
    if p < t or (p == t and q <= s):
        return CaseTag.CASE1
    if p == t:
        return CaseTag.CASE2
    return CaseTag.CASE3 if q > s else CaseTag.CASE4
