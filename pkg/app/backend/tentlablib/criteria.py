"""
Embedding verdicts and the closed-form inclusion and superposition predicates.

Predicates run in exact rational arithmetic on the decimal values of their arguments, so boundary cases such as
equality in a non-strict inequality are decided exactly.
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, Optional, Sequence, Union

import numpy as np

from .decisions import Bounded, grows_by, refinement_decision, trend_decision
from .errors import ContractViolation
from .functionals import (
    COMPACTNESS_RADII,
    DEFAULT_XI_COUNT,
    G_statistic,
    U_statistic,
    V_statistic,
    compactness_evaluators,
    nu_statistic,
)
from .functions import BoundaryKernel, boundary_kernel_window, superpose
from .geometry import SpherePoint
from .measures import DEFAULT_BUDGET, Measure, WeightedVolume
from .norms import tent_norm, xi_sample
from .params import DEFAULT_APERTURE, CaseTag, TentParams, case_dispatch
from .sampling import SphereSample

logger = logging.getLogger("tentlab")

INCONCLUSIVE = "inconclusive"
# Offsets of the target weight from the source weight, scanned from the top.
WITNESS_BETA_OFFSETS = (2.0, 1.5, 1.0, 0.5, 0.0, -0.5, -1.0, -1.5)
WITNESS_OUTSIDE_MARGIN = 0.75
WITNESS_LEVELS = (10, 14, 18)

__all__ = [
    "CaseTag",
    "Verdict",
    "case_dispatch",
    "embedding_verdict",
    "refinement_verdict",
    "inclusion_region",
    "inclusion_margin",
    "compact_inclusion_region",
    "superposition_degree",
    "monomial_admissible",
    "superposition_admissible",
    "bergman_superposition_degree",
    "point_evaluation_exponent",
    "operator_norm_estimate",
    "compactness_verdict",
    "witness_targets",
    "superposition_witness",
]


def refinement_verdict(values: Sequence[float]) -> Union[bool, str]:
    """True / False / "inconclusive" from a refinement trace."""
    return _bounded(refinement_decision(values))


def _bounded(decision: Bounded) -> Union[bool, str]:
    if decision is Bounded.FINITE:
        return True
    if decision is Bounded.INFINITE:
        return False
    return INCONCLUSIVE


@dataclass
class Verdict:
    """
    Class representing the outcome of an embedding check.
    Attributes:
        bounded: True, False or "inconclusive"
        functional_value (float): The case statistic
        case (CaseTag): The parameter regime that selected the statistic
        diagnostics (dict): Refinement trace and per-case details
    """

    bounded: Union[bool, str]
    functional_value: float
    case: CaseTag
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> Dict[str, Any]:
        return {
            "bounded": self.bounded,
            "functional_value": self.functional_value,
            "case": self.case.value,
            "diagnostics": self.diagnostics,
        }


def embedding_verdict(
    measure: Measure,
    params: TentParams,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    sphere_samples: int = 32,
    xi_count: int = DEFAULT_XI_COUNT,
    sample: Optional[SphereSample] = None,
) -> Verdict:
    """Whether the area operator A_{mu,s} maps HT^p_{q,alpha} boundedly into L^t, judged by the case functional."""
    if measure.n != params.n:
        raise ContractViolation(f"Measure in dimension {measure.n} but parameters in dimension {params.n}")
    case = case_dispatch(params.p, params.q, params.s, params.t)
    logger.info("Embedding check in %s for %s", case.value, params)
    if case is CaseTag.CASE1:
        statistic = G_statistic(measure, params, budget=budget, seed=seed, xi_count=xi_count)
    elif case is CaseTag.CASE2:
        statistic = nu_statistic(measure, params, budget, seed, xi_count)
    elif case is CaseTag.CASE3:
        statistic = U_statistic(measure, params, budget, seed, sphere_samples, sample=sample)
    else:
        statistic = V_statistic(measure, params, budget, seed, sphere_samples, sample=sample)
    decision = Bounded(statistic["decision"])
    value = float(statistic["value"])
    if not math.isfinite(value):
        decision = Bounded.INFINITE
    diagnostics = {"trace": statistic["values"], "params": params.to_json()}
    diagnostics.update({k: v for k, v in statistic.items() if k not in ("value", "values", "decision")})
    return Verdict(bounded=_bounded(decision), functional_value=value, case=case, diagnostics=diagnostics)


def operator_norm_estimate(verdict: Verdict, params: TentParams) -> float:
    """The operator norm up to constants: statistic^(1/s), or ||nu||_CM^((q-s)/(qs)) in Case2."""
    if verdict.case is CaseTag.CASE2:
        return verdict.functional_value ** ((params.q - params.s) / (params.q * params.s))
    return verdict.functional_value ** (1.0 / params.s)


def compactness_verdict(
    measure: Measure,
    params: TentParams,
    radii: Sequence[float] = COMPACTNESS_RADII,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    sphere_samples: int = 16,
) -> Dict[str, Any]:
    """
    Compactness of the embedding. Truncated statistics that fall by more than a factor 2 per step read as compact,
    growing ones as not compact. In Case3 compactness coincides with boundedness.
    """
    report = compactness_evaluators(measure, params, radii, budget, seed, sphere_samples)
    case = CaseTag(report["case"])
    if case is CaseTag.CASE3:
        verdict = embedding_verdict(measure, params, budget, seed, sphere_samples)
        report["compact"] = verdict.bounded
        return report
    trend = trend_decision(report["values"])
    report["compact"] = {"decreasing": True, "growing": False}.get(trend.value, INCONCLUSIVE)
    return report


def _exact(value: float) -> Fraction:
    return Fraction(str(value)) if isinstance(value, float) else Fraction(value)


def _check_weights(alpha: float, beta: float, n: int) -> None:
    if not alpha > -n - 1 or not beta > -n - 1:
        raise ContractViolation(f"Weights must exceed -n-1 = {-n - 1}, got alpha={alpha}, beta={beta}")
    if int(n) != n or n < 1:
        raise ContractViolation(f"Dimension must be a positive integer, got {n}")


def _indices(p, q, alpha, t, s, beta, n):
    _check_weights(alpha, beta, n)
    for name, value in (("p", p), ("q", q), ("t", t), ("s", s)):
        if not value > 0:
            raise ContractViolation(f"Exponent {name} must be positive, got {value}")
    p, q, t, s = _exact(p), _exact(q), _exact(t), _exact(s)
    a = (n + 1 + _exact(alpha)) / q
    b = (n + 1 + _exact(beta)) / s
    return p, q, t, s, a, b


def inclusion_region(p: float, q: float, alpha: float, t: float, s: float, beta: float, n: int) -> bool:
    """Whether HT^p_{q,alpha} is contained in HT^t_{s,beta}."""
    p, q, t, s, a, b = _indices(p, q, alpha, t, s, beta, n)
    if p >= t:
        return a < b if q > s else a <= b
    return a + n / p <= b + n / t


def inclusion_margin(p: float, q: float, alpha: float, t: float, s: float, beta: float, n: int) -> Dict[str, Any]:
    """Right side minus left side of the governing inclusion inequality, and whether that inequality is strict."""
    p, q, t, s, a, b = _indices(p, q, alpha, t, s, beta, n)
    if p >= t:
        return {"margin": float(b - a), "strict": bool(q > s)}
    return {"margin": float(b + n / t - a - n / p), "strict": False}


def compact_inclusion_region(p: float, q: float, alpha: float, t: float, s: float, beta: float, n: int) -> bool:
    """Whether the inclusion HT^p_{q,alpha} into HT^t_{s,beta} is compact."""
    p, q, t, s, a, b = _indices(p, q, alpha, t, s, beta, n)
    if p >= t:
        return a < b
    return a + n / p < b + n / t


def _largest_integer(bound: Fraction, strict: bool) -> int:
    if strict:
        return max(0, math.ceil(bound) - 1)
    return max(0, math.floor(bound))


def superposition_degree(p: float, q: float, alpha: float, t: float, s: float, beta: float, n: int) -> Dict[str, Any]:
    """
    The largest degree N of a polynomial symbol phi for which S_phi maps HT^p_{q,alpha} into HT^t_{s,beta}.
    strict marks the regime where N must stay strictly below the bound.
    """
    p, q, t, s, a, b = _indices(p, q, alpha, t, s, beta, n)
    if p * a < t * b:
        bound = p * (t * b + n) / (t * (p * a + n))
        strict = False
        regime = "i"
    else:
        bound = b / a
        strict = _exact(alpha) > _exact(beta)
        regime = "iii" if strict else "ii"
    return {"max_degree": _largest_integer(bound, strict), "strict": strict, "bound": float(bound), "regime": regime}


def monomial_admissible(N: int, p: float, q: float, alpha: float, t: float, s: float, beta: float, n: int) -> bool:
    """Whether z -> f(z)^N maps HT^p_{q,alpha} into HT^t_{s,beta}: the inclusion into HT^(Nt)_(Ns,beta)."""
    if int(N) != N or N < 0:
        raise ContractViolation(f"Degree must be a nonnegative integer, got {N}")
    if N == 0:
        _indices(p, q, alpha, t, s, beta, n)
        return True
    return inclusion_region(p, q, alpha, N * _exact(t), N * _exact(s), beta, n)


def superposition_admissible(
    coefficients: Sequence[complex], p: float, q: float, alpha: float, t: float, s: float, beta: float, n: int
) -> bool:
    """Whether the polynomial sum_k c_k w^k is an admissible symbol: its degree is at most the largest admissible."""
    degree = max((k for k, c in enumerate(coefficients) if c != 0), default=0)
    return degree <= superposition_degree(p, q, alpha, t, s, beta, n)["max_degree"]


def bergman_superposition_degree(p: float, alpha: float, q: float, beta: float, n: int) -> Dict[str, Any]:
    """The largest degree for symbols mapping A^p_alpha into A^q_beta (alpha, beta > -1)."""
    if not alpha > -1 or not beta > -1:
        raise ContractViolation(f"Bergman weights must exceed -1, got alpha={alpha}, beta={beta}")
    # A^p_alpha = HT^p_{p, alpha - n}
    return superposition_degree(p, p, _exact(alpha) - n, q, q, _exact(beta) - n, n)


def point_evaluation_exponent(t: float, s: float, beta: float, n: int) -> float:
    """(n + 1 + beta)/s + n/t: point evaluation at z on HT^t_{s,beta} has norm ~ (1 - |z|^2)^-exponent."""
    _check_weights(beta, beta, n)
    return (n + 1 + beta) / s + n / t


def witness_targets(p: float, q: float, alpha: float, n: int) -> Dict[str, Dict[str, float]]:
    """
    One target (t, s, beta) inside and one outside the inclusion region of HT^p_{q,alpha}, chosen by the predicate.

    Targets keep t = p, so the f_a norm ratio behaves like (1 - |a|^2)^margin. The inside target has the smallest
    nonnegative margin, which keeps the ratio flat; the outside target is the first one whose margin is at most
    -WITNESS_OUTSIDE_MARGIN, enough for the ratio to grow tenfold across |a| = 0.9, 0.99, 0.999.
    """
    _indices(p, q, alpha, p, q, alpha, n)
    inside: Optional[Dict[str, float]] = None
    outside: Optional[Dict[str, float]] = None
    for s in (2 * q, q, q / 2):
        for offset in WITNESS_BETA_OFFSETS:
            beta = alpha + offset
            if not beta > -n - 1 or (s == q and offset == 0):
                continue
            margin = inclusion_margin(p, q, alpha, p, s, beta, n)["margin"]
            target = {"t": p, "s": s, "beta": beta, "margin": margin}
            if inclusion_region(p, q, alpha, p, s, beta, n):
                if inside is None or margin < inside["margin"]:
                    inside = target
            elif outside is None and margin <= -WITNESS_OUTSIDE_MARGIN:
                outside = target
    if inside is None or outside is None:
        raise ContractViolation(f"No inside and outside targets around HT^{p}_({q},{alpha}) in dimension {n}")
    return {"inside": inside, "outside": outside}


def superposition_witness(
    p: float,
    q: float,
    alpha: float,
    t: float,
    s: float,
    beta: float,
    n: int,
    theta: Optional[float] = None,
    levels: Sequence[int] = WITNESS_LEVELS,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    sphere_samples: int = 16,
    gamma: float = DEFAULT_APERTURE,
) -> Dict[str, Any]:
    """
    Tent norms of g_zeta in HT^p_{q,alpha} and of g_zeta^(N+1) in HT^t_{s,beta}, N the largest admissible degree,
    along refining truncations 1 - 2^-k. The first converges and the second blows up.
    """
    degree = superposition_degree(p, q, alpha, t, s, beta, n)["max_degree"]
    low, high = boundary_kernel_window(p, q, alpha, n)
    theta = high - 0.1 if theta is None else theta
    if not 0 < theta < high:
        raise ContractViolation(f"g_zeta needs 0 < theta < {high} to lie in the source space, got {theta}")
    zeta = SpherePoint(np.eye(n, dtype=complex)[0])
    g = BoundaryKernel(zeta, theta)
    power = superpose([0.0] * (degree + 1) + [1.0], g)
    source, target = WeightedVolume(n + alpha, n), WeightedVolume(n + beta, n)
    g_norms, power_norms = [], []
    for k in levels:
        sample = xi_sample(n, sphere_samples, seed, g.focus, k)
        g_norms.append(tent_norm(g, source, p, q, gamma, budget, seed, truncation_level=k, sample=sample).value)
        power_norms.append(tent_norm(power, target, t, s, gamma, budget, seed, truncation_level=k, sample=sample).value)
    converges = refinement_decision(g_norms) is Bounded.FINITE
    grows = grows_by(power_norms)
    logger.info("Superposition witness: g norms %s, power %d norms %s", g_norms, degree + 1, power_norms)
    return {
        "passed": bool(converges and grows),
        "theta": theta,
        "window": [low, high],
        "max_degree": degree,
        "power": degree + 1,
        "power_outside": bool(theta * (degree + 1) >= point_evaluation_exponent(t, s, beta, n)),
        "levels": list(levels),
        "g_norms": g_norms,
        "power_norms": power_norms,
        "g_converges": converges,
        "power_grows": grows,
    }
