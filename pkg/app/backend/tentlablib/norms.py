"""
Tent quasi-norms, area operators and sequence tent norms.

Outer integrals over the sphere are importance-sampled averages. Two quantities that are compared with each other
are evaluated on the same xi sample and the same inner streams, so their ratio carries little sampling noise.
"""

import logging
import math
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .carleson import atomic_box_constant
from .errors import ContractViolation
from .estimate import IntegralEstimate, exact_estimate
from .functions import HoloFunction, rademacher_table
from .geometry import (
    BallPoint,
    Koranyi,
    SpherePoint,
    WholeBall,
    cap_measure_exact,
    one_minus_norm_squared,
    shadow_box,
)
from .lattice import Lattice
from .measures import DEFAULT_BUDGET, DEFAULT_TRUNCATION_LEVEL, Measure, WeightedVolume, integrate
from .params import DEFAULT_APERTURE, INF, Exponent, TentParams, parse_exponent, reciprocal
from .sampling import (
    STREAM_CONE,
    STREAM_SPHERE,
    SphereMixture,
    SphereSample,
    derive_seed,
    parallel_map,
    sample_sphere_array,
    stream,
)

logger = logging.getLogger("tentlab")

DEFAULT_SPHERE_SAMPLES = 64
DEFAULT_SEQUENCE_SAMPLES = 4096


class SeqCoefficients:
    """
    Class representing a coefficient sequence indexed by a lattice.
    Attributes:
        values (np.ndarray): Complex coefficients, one per lattice point
        lattice (Lattice): The indexing lattice
    """

    def __init__(self, values: Sequence[complex], lattice: Lattice):
        self.values = np.asarray(values, dtype=complex).reshape(-1)
        if self.values.shape[0] != len(lattice):
            raise ContractViolation(f"Expected {len(lattice)} coefficients, got {self.values.shape[0]}")
        if not np.all(np.isfinite(self.values)):
            raise ContractViolation("Sequence coefficients must be finite")
        self.lattice = lattice

    def __mul__(self, other: "SeqCoefficients") -> "SeqCoefficients":
        if other.lattice is not self.lattice and len(other.lattice) != len(self.lattice):
            raise ContractViolation("Cannot multiply sequences on different lattices")
        return SeqCoefficients(self.values * other.values, self.lattice)

    def scaled(self, factor: complex) -> "SeqCoefficients":
        return SeqCoefficients(self.values * factor, self.lattice)


def xi_sample(
    n: int,
    count: int,
    seed: int,
    focus: Optional[Sequence[np.ndarray]] = None,
    truncation_level: int = DEFAULT_TRUNCATION_LEVEL,
) -> SphereSample:
    """The outer sphere sample: uniform, or refined down to the truncation scale around focus points."""
    return sample_sphere_array(n, count, seed, focus or None, 2.0**-truncation_level)


def weighted_power_mean(values: np.ndarray, errors: np.ndarray, sample: SphereSample, power: float) -> Tuple[float, float]:
    """(estimate, std error) of the sigma-integral of values^power, folding in the errors of the values."""
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        terms = np.where(values > 0, values, 0.0) ** power * sample.weights
        spread = np.where(values > 0, power * values ** (power - 1.0) * errors, 0.0) * sample.weights
    m = sample.count
    mean = float(np.sum(terms) / m)
    variance = float(np.var(terms, ddof=1) / m) if m > 1 else 0.0
    variance += float(np.sum(spread**2)) / m**2
    return mean, math.sqrt(variance) if math.isfinite(variance) else math.inf


def root_of(mean: float, error: float, power: float) -> Tuple[float, float]:
    if mean <= 0.0:
        return 0.0, 0.0
    value = mean ** (1.0 / power)
    return value, value * error / (power * mean)


def cone_integrals(
    measure: Measure,
    integrand,
    xi: np.ndarray,
    gamma: float,
    budget: int,
    seed: int,
    truncation_level: int = DEFAULT_TRUNCATION_LEVEL,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, bool]:
    """
    Inner integrals of integrand(z) / (1 - |z|^2)^n over Gamma_gamma(xi) against measure, one per row of xi.
    Returns (values, std errors, cumulative values per truncation level, diverged).
    """
    n = measure.n
    if measure.atomic:
        points, weights = measure.atoms()
        if points.shape[0] == 0:
            zero = np.zeros(xi.shape[0])
            return zero, zero, zero[:, None], False
        omz2 = one_minus_norm_squared(points)
        with np.errstate(over="ignore", invalid="ignore"):
            atom_values = weights * np.asarray(integrand(points, omz2), dtype=float) / omz2**n
        inside = np.abs(1.0 - points @ np.conj(xi).T).T < 0.5 * gamma * omz2
        with np.errstate(invalid="ignore"):
            values = np.where(inside, atom_values[None, :], 0.0).sum(axis=1)
        return values, np.zeros_like(values), values[:, None], bool(np.any(~np.isfinite(values)))

    def weighted(points, omz2):
        return np.asarray(integrand(points, omz2), dtype=float) / omz2**n

    def inner(i: int) -> IntegralEstimate:
        return integrate(
            measure,
            Koranyi(SpherePoint(xi[i]), gamma),
            weighted,
            budget,
            derive_seed(seed, STREAM_CONE, i),
            truncation_level,
        )

    estimates = parallel_map(inner, list(range(xi.shape[0])))
    values = np.array([e.value for e in estimates])
    errors = np.array([e.std_error for e in estimates])
    levels = np.array([e.levels for e in estimates])
    return values, errors, levels, any(e.diverged for e in estimates)


def tent_norm(
    f: HoloFunction,
    measure: Measure,
    p: float,
    q: float,
    gamma: float = DEFAULT_APERTURE,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    sphere_samples: int = DEFAULT_SPHERE_SAMPLES,
    truncation_level: int = DEFAULT_TRUNCATION_LEVEL,
    sample: Optional[SphereSample] = None,
) -> IntegralEstimate:
    """
    ||f||_{T^p_q(mu)} = ( integral over the sphere of ( integral over Gamma(xi) of |f|^q dmu / (1 - |z|^2)^n )^(p/q) )^(1/p).

    levels holds the norm computed with each truncation radius of the inner integrals.
    """
    if not p > 0 or not q > 0:
        raise ContractViolation(f"Tent norms need p, q > 0, got p={p}, q={q}")
    if not gamma > 1:
        raise ContractViolation(f"Aperture must exceed 1, got {gamma}")
    if f.n != measure.n:
        raise ContractViolation(f"Function in dimension {f.n} but measure in dimension {measure.n}")
    if sample is None:
        sample = xi_sample(f.n, sphere_samples, seed, f.focus, truncation_level)
    values, errors, levels, diverged = cone_integrals(
        measure, f.modulus_power(q), sample.points, gamma, budget, seed, truncation_level
    )
    mean, error = weighted_power_mean(values, errors, sample, p / q)
    norm, norm_error = root_of(mean, error, p)
    level_norms = tuple(
        root_of(weighted_power_mean(levels[:, j], np.zeros(sample.count), sample, p / q)[0], 0.0, p)[0]
        for j in range(levels.shape[1])
    )
    if error > 0 and norm_error > 0.5 * norm:
        logger.warning("tent_norm standard error %.3g exceeds half the estimate %.3g", norm_error, norm)
    return IntegralEstimate(
        value=norm,
        std_error=norm_error,
        samples_used=sample.count,
        truncation_radius=1.0 - 2.0**-truncation_level,
        diverged=diverged or not math.isfinite(norm),
        exact=False,
        levels=level_norms,
        flags=("wide_error",) if error > 0 and norm_error > 0.5 * norm else (),
        details={"p": p, "q": q, "gamma": gamma, "sphere_samples": sample.count},
    )


def area_operator(
    f: HoloFunction,
    measure: Measure,
    s: float,
    xi: SpherePoint,
    gamma: float = DEFAULT_APERTURE,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
) -> float:
    """A_{mu,s} f(xi) = ( integral over Gamma(xi) of |f|^s dmu / (1 - |z|^2)^n )^(1/s)."""
    if not s > 0:
        raise ContractViolation(f"Area operator needs s > 0, got {s}")
    values, _, _, _ = cone_integrals(measure, f.modulus_power(s), xi.coords[None, :], gamma, budget, seed)
    return float(max(values[0], 0.0) ** (1.0 / s))


def area_operator_norm(
    f: HoloFunction,
    measure: Measure,
    s: float,
    t: float,
    gamma: float = DEFAULT_APERTURE,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    sphere_samples: int = DEFAULT_SPHERE_SAMPLES,
    sample: Optional[SphereSample] = None,
) -> IntegralEstimate:
    """||A_{mu,s} f||_{L^t(sigma)}, evaluating the area operator pointwise on the sphere sample."""
    if not t > 0:
        raise ContractViolation(f"L^t norm needs t > 0, got {t}")
    if sample is None:
        sample = xi_sample(f.n, sphere_samples, seed, f.focus)

    values, errors, _, _ = cone_integrals(measure, f.modulus_power(s), sample.points, gamma, budget, seed)
    mean, error = weighted_power_mean(values, errors, sample, t / s)
    norm, norm_error = root_of(mean, error, t)
    return IntegralEstimate(value=norm, std_error=norm_error, samples_used=sample.count, details={"s": s, "t": t})


def bergman_norm(
    f: HoloFunction, t: float, lam: float, budget: int = DEFAULT_BUDGET, seed: int = 0
) -> IntegralEstimate:
    """||f||_{A^t_lam} = ( integral of |f|^t dv_lam )^(1/t)."""
    estimate = integrate(WeightedVolume(lam, f.n), WholeBall(), f.modulus_power(t), budget, seed, focus=f.focus)
    norm, error = root_of(estimate.value, estimate.std_error, t)
    return IntegralEstimate(
        value=norm,
        std_error=error,
        samples_used=estimate.samples_used,
        truncation_radius=estimate.truncation_radius,
        diverged=estimate.diverged,
        levels=tuple(root_of(level, 0.0, t)[0] for level in estimate.levels),
    )


def hardy_tent_measure(params: TentParams) -> WeightedVolume:
    """dv_{n+alpha}, the measure whose tent space over holomorphic functions is HT^p_{q,alpha}."""
    return WeightedVolume(params.n + params.alpha, params.n)


def inclusion_exponents(p: float, q: float, alpha: float, t: float, n: int) -> Tuple[float, float]:
    """Bergman weights of the forward inclusion into A^t and the reverse inclusion from A^p (p < t)."""
    forward = (t / p - 1.0) * n - 1.0 + t * (n + 1 + alpha) / q
    reverse = (p / t - 1.0) * n - 1.0 + p * (n + 1 + alpha) / q
    return forward, reverse


def inclusion_check(
    f: HoloFunction,
    params: TentParams,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    sphere_samples: int = DEFAULT_SPHERE_SAMPLES,
) -> Dict[str, Any]:
    """
    Ratios for the two bounded inclusions HT^p_{q,alpha} into A^t_{forward} and A^p_{reverse} into HT^t_{q,alpha}, p < t.
    """
    p, q, t, alpha, n = params.p, params.q, params.t, params.alpha, params.n
    if not p < t:
        raise ContractViolation(f"Inclusions between tent and Bergman spaces need p < t, got p={p}, t={t}")
    forward, reverse = inclusion_exponents(p, q, alpha, t, n)
    measure = hardy_tent_measure(params)
    sample = xi_sample(n, sphere_samples, seed, f.focus)
    source = tent_norm(f, measure, p, q, params.gamma, budget, seed, sample=sample)
    target = tent_norm(f, measure, t, q, params.gamma, budget, seed, sample=sample)
    report: Dict[str, Any] = {
        "forward_weight": forward,
        "reverse_weight": reverse,
        "tent_source": source.to_json(),
        "tent_target": target.to_json(),
    }
    if forward > -1:
        bergman_target = bergman_norm(f, t, forward, budget, seed)
        report["bergman_target"] = bergman_target.to_json()
        report["forward_ratio"] = bergman_target.value / source.value if source.value > 0 else None
    if reverse > -1:
        bergman_source = bergman_norm(f, p, reverse, budget, seed)
        report["bergman_source"] = bergman_source.to_json()
        report["reverse_ratio"] = target.value / bergman_source.value if bergman_source.value > 0 else None
    return report


def fubini_ratio(
    phi,
    measure: Measure,
    gamma: float = DEFAULT_APERTURE,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    sphere_samples: int = DEFAULT_SPHERE_SAMPLES,
) -> Dict[str, Any]:
    """Integral of phi against a finite measure over the sphere average of its cone integrals."""
    volume = integrate(measure, WholeBall(), phi, budget, seed)
    sample = xi_sample(measure.n, sphere_samples, seed)
    values, errors, _, _ = cone_integrals(measure, phi, sample.points, gamma, budget, seed)
    cones, cones_error = weighted_power_mean(values, errors, sample, 1.0)
    return {
        "volume_integral": volume.to_json(),
        "cone_integral": {"value": cones, "std_error": cones_error},
        "ratio": volume.value / cones if cones > 0 else math.inf,
    }


def sequence_sample(lattice: Lattice, gamma: float, count: int, seed: int) -> SphereSample:
    boxes = [box for box in (shadow_box(a, gamma) for a in lattice.points) if box is not None and not box.whole]
    return SphereMixture(lattice.n, boxes).sample(stream(seed, STREAM_SPHERE, 2), count)


def cone_membership(lattice: Lattice, xi: np.ndarray, gamma: float) -> np.ndarray:
    return np.abs(1.0 - lattice.points @ np.conj(xi).T).T < 0.5 * gamma * lattice.omz2


def carleson_sequence_norm(c: SeqCoefficients, q: float, directions_count: int = 256, seed: int = 0) -> IntegralEstimate:
    """||c||_{T^inf_q(Z)} through the Carleson constant of mu_c = sum |c_k|^q (1 - |a_k|^2)^n delta_{a_k}."""
    lattice = c.lattice
    weights = np.abs(c.values) ** q * lattice.omz2**lattice.n
    keep = weights > 0
    if not keep.any():
        return exact_estimate(0.0)
    points = lattice.points[keep]
    norms = np.linalg.norm(points, axis=1)
    directions = [xi_sample(lattice.n, directions_count, seed).points]
    if np.any(norms > 0):
        directions.append(points[norms > 0] / norms[norms > 0, None])
    box = atomic_box_constant(points, weights[keep], np.concatenate(directions))
    return exact_estimate(box["value"] ** (1.0 / q), details={"carleson_constant": box["value"]})


def seq_tent_norm(
    c: SeqCoefficients,
    p: Exponent,
    q: Exponent,
    gamma: float = DEFAULT_APERTURE,
    sphere_budget: int = DEFAULT_SEQUENCE_SAMPLES,
    seed: int = 0,
    sample: Optional[SphereSample] = None,
) -> IntegralEstimate:
    p, q = parse_exponent(p), parse_exponent(q)
    if p is INF and q is INF:
        raise ContractViolation("T^inf_inf(Z) is not one of the sequence tent spaces")
    if not np.any(c.values):
        return exact_estimate(0.0)
    if p is INF:
        return carleson_sequence_norm(c, float(q), seed=seed)  # type: ignore[arg-type]
    lattice = c.lattice
    if sample is None:
        sample = sequence_sample(lattice, gamma, sphere_budget, seed)
    inside = cone_membership(lattice, sample.points, gamma)
    moduli = np.abs(c.values)
    if q is INF:
        masked = np.where(inside, moduli[None, :], 0.0)
        inner = masked.max(axis=1) if masked.shape[1] else np.zeros(sample.count)
        vacuous = float(np.mean(~inside.any(axis=1)))
        if vacuous > 0:
            logger.warning("%.1f%% of sampled cones contain no lattice point", 100 * vacuous)
        mean, error = weighted_power_mean(inner, np.zeros_like(inner), sample, float(p))  # type: ignore[arg-type]
        value, value_error = root_of(mean, error, float(p))  # type: ignore[arg-type]
        return IntegralEstimate(
            value=value,
            std_error=value_error,
            samples_used=sample.count,
            details={"vacuous_fraction": vacuous},
        )
    inner = inside @ moduli ** float(q)  # type: ignore[arg-type]
    mean, error = weighted_power_mean(inner, np.zeros_like(inner), sample, float(p) / float(q))  # type: ignore[arg-type]
    value, value_error = root_of(mean, error, float(p))  # type: ignore[arg-type]
    return IntegralEstimate(value=value, std_error=value_error, samples_used=sample.count)


def pairing(c: SeqCoefficients, d: SeqCoefficients) -> complex:
    """<c, d> = sum c_k conj(d_k) (1 - |a_k|^2)^n."""
    if c.values.shape != d.values.shape:
        raise ContractViolation(f"Pairing needs aligned sequences, got {c.values.shape[0]} and {d.values.shape[0]}")
    lattice = c.lattice
    return complex(np.sum(c.values * np.conj(d.values) * lattice.omz2**lattice.n))


def pairing_constant(lattice: Lattice, gamma: float = DEFAULT_APERTURE) -> float:
    """
    C with |<c, d>| <= C ||c||_{T^p_q} ||d||_{T^p'_q'} by Hoelder: max_k (1 - |a_k|^2)^n / sigma(I(a_k)).
    Lattice points with an empty shadow are excluded; sequences supported there are not controlled.
    """
    ratios = []
    for a, omega in zip(lattice.points, lattice.omz2):
        cap = cap_measure_exact(BallPoint(a), gamma)
        if cap > 0:
            ratios.append(omega**lattice.n / cap)
    return max(ratios) if ratios else math.inf


def _validate_factorization(exponents: Sequence[Tuple[Exponent, Exponent]]) -> List[Tuple[Exponent, Exponent]]:
    if len(exponents) != 3:
        raise ContractViolation(f"Expected three exponent pairs (p_j, q_j), got {len(exponents)}")
    parsed = [(parse_exponent(p), parse_exponent(q)) for p, q in exponents]
    for j, (p, q) in enumerate(parsed):
        if p is INF and q is INF and j != 2:
            raise ContractViolation(f"Exponent pair {j} is (inf, inf); only the unit factor may be")
    (p0, q0), (p1, q1), (p2, q2) = parsed
    if not math.isclose(reciprocal(p1) + reciprocal(p2), reciprocal(p0), rel_tol=1e-12, abs_tol=1e-12):
        raise ContractViolation(f"Need 1/p1 + 1/p2 = 1/p0, got p = {p0}, {p1}, {p2}")
    if not math.isclose(reciprocal(q1) + reciprocal(q2), reciprocal(q0), rel_tol=1e-12, abs_tol=1e-12):
        raise ContractViolation(f"Need 1/q1 + 1/q2 = 1/q0, got q = {q0}, {q1}, {q2}")
    if p0 is INF and q0 is INF:
        raise ContractViolation("The product space cannot be T^inf_inf")
    return parsed


def product_inequality_check(
    c: SeqCoefficients,
    d: SeqCoefficients,
    exponents: Sequence[Tuple[Exponent, Exponent]],
    gamma: float = DEFAULT_APERTURE,
    sphere_budget: int = DEFAULT_SEQUENCE_SAMPLES,
    seed: int = 0,
) -> Dict[str, Any]:
    """
    Both sides of ||c d||_{T^p0_q0} <= C ||c||_{T^p1_q1} ||d||_{T^p2_q2}. The pair (inf, inf) is accepted for d only,
    as the unit factor with norm sup_k |d_k|.
    """
    (p0, q0), (p1, q1), (p2, q2) = _validate_factorization(exponents)
    sample = sequence_sample(c.lattice, gamma, sphere_budget, seed)

    def norm(sequence: SeqCoefficients, p: Exponent, q: Exponent) -> float:
        if p is INF and q is INF:
            return float(np.max(np.abs(sequence.values))) if sequence.values.size else 0.0
        return seq_tent_norm(sequence, p, q, gamma, sphere_budget, seed, sample=sample).value

    lhs = norm(c * d, p0, q0)
    rhs = norm(c, p1, q1) * norm(d, p2, q2)
    ratio = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else math.inf)
    return {"lhs": lhs, "rhs_product": rhs, "ratio": ratio}


def khinchine_ratio(c: Sequence[complex], p: float, level: Optional[int] = None) -> float:
    """
    Dyadic tau-average of |sum c_k r_k(tau)|^p over (sum |c_k|^2)^(p/2). The midpoint grid of level K makes the
    average exact for the first K Rademacher functions.
    """
    c = np.asarray(c, dtype=complex)
    level = len(c) if level is None else level
    if len(c) > level:
        raise ContractViolation(f"Got {len(c)} coefficients for dyadic level {level}")
    if not p > 0:
        raise ContractViolation(f"Khinchine exponent must be positive, got {p}")
    energy = float(np.sum(np.abs(c) ** 2))
    if energy == 0.0:
        return 1.0
    table = rademacher_table(level)[:, : len(c)]
    average = float(np.mean(np.abs(table @ c) ** p))
    return average / energy ** (p / 2)


def forelli_rudin_check(
    u: BallPoint,
    z: BallPoint,
    s_exp: float,
    r_exp: float,
    t_exp: float,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
) -> Dict[str, Any]:
    """
    The integral of (1 - |w|^2)^s / (|1 - <u, w>|^r |1 - <z, w>|^t) dv(w) against |1 - <z, u>|^-(r + t - s - n - 1).
    """
    n = u.n
    if z.n != n:
        raise ContractViolation(f"Dimension mismatch: u in dimension {n}, z in dimension {z.n}")
    if not (s_exp > -1 and r_exp > 0 and t_exp > 0):
        raise ContractViolation(f"Need s > -1 and r, t > 0, got s={s_exp}, r={r_exp}, t={t_exp}")
    if not (r_exp + t_exp > s_exp + n + 1 > max(r_exp, t_exp)):
        raise ContractViolation(f"Need r + t > s + n + 1 > r, t, got s={s_exp}, r={r_exp}, t={t_exp}, n={n}")

    def integrand(points, omz2):
        return 1.0 / (np.abs(1.0 - points @ np.conj(u.coords)) ** r_exp * np.abs(1.0 - points @ np.conj(z.coords)) ** t_exp)

    focus = [p.coords / p.norm for p in (u, z) if p.norm > 0]
    estimate = integrate(WeightedVolume(s_exp, n), WholeBall(), integrand, budget, seed, focus=focus or None)
    gap = r_exp + t_exp - s_exp - n - 1
    bound = abs(1.0 - complex(np.vdot(u.coords, z.coords))) ** -gap
    return {
        "integral": estimate.value,
        "std_error": estimate.std_error,
        "bound": bound,
        "ratio": estimate.value / bound,
    }


def aperture_ratio(
    f: HoloFunction,
    measure: Measure,
    p: float,
    q: float,
    gammas: Tuple[float, float] = (2.0, 4.0),
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    sphere_samples: int = DEFAULT_SPHERE_SAMPLES,
) -> float:
    sample = xi_sample(f.n, sphere_samples, seed, f.focus)
    narrow = tent_norm(f, measure, p, q, gammas[0], budget, seed, sample=sample).value
    wide = tent_norm(f, measure, p, q, gammas[1], budget, seed, sample=sample).value
    return wide / narrow if narrow > 0 else math.inf
