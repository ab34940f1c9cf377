"""
The characterizing functionals of area-operator embeddings HT^p_{q,alpha} -> L^t(sigma), one per parameter case,
with their truncated versions for compactness and the discrete eta sequences that control them.

Every statistic comes with a refinement trace: its values along a sequence of boundary refinements, from which
decisions.refinement_decision reads off a finite / infinite / inconclusive answer.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from .carleson import carleson_constant, measure_directions, nu_measure, vanishing_carleson
from .decisions import Bounded, refinement_decision, spread_of, trend_decision
from .errors import ContractViolation
from .functions import lattice_kernel, randomized, test_function
from .geometry import Annulus, BallPoint, Koranyi, SpherePoint, one_minus_norm_squared
from .lattice import Lattice
from .measures import DEFAULT_BUDGET, DEFAULT_TRUNCATION_LEVEL, Measure, MuHatProfile, Restricted, ball_masses, mu_hat_array
from .norms import (
    SeqCoefficients,
    area_operator_norm,
    carleson_sequence_norm,
    cone_integrals,
    cone_membership,
    hardy_tent_measure,
    root_of,
    seq_tent_norm,
    sequence_sample,
    tent_norm,
    weighted_power_mean,
    xi_sample,
)
from .params import CaseTag, TentParams, case_dispatch
from .sampling import STREAM_CONE, STREAM_TAU, SphereSample, sphere_array, stream

logger = logging.getLogger("tentlab")

REFINEMENT_RADII = (0.5, 0.9, 0.99, 0.999)
COMPACTNESS_RADII = (0.9, 0.99, 0.999)
KERNEL_RADII = (0.5, 0.9, 0.99)
# Truncation levels whose statistics form the refinement trace of Case3 and Case4.
TRACE_LEVELS = (11, 14, 17, 20)
CONE_POINTS_PER_LEVEL = 16
DEFAULT_XI_COUNT = 8


def mu_hat_profile(measure: Measure, r: float, budget: int = DEFAULT_BUDGET, seed: int = 0) -> Optional[MuHatProfile]:
    """A tabulated mu(D(z, r)) for radial continuous measures, None otherwise."""
    if measure.radial and not measure.atomic:
        return MuHatProfile.build(measure, r, budget, seed)
    return None


def sample_directions(measure: Measure, count: int = DEFAULT_XI_COUNT, seed: int = 0) -> np.ndarray:
    """Boundary directions along which a functional is sampled: one axis for radial measures, atom directions plus a
    uniform sample otherwise."""
    n = measure.n
    if measure.radial and not measure.atomic:
        return np.eye(n, dtype=complex)[:1]
    rows = [sphere_array(stream(seed, STREAM_CONE, 0), count, n)]
    atoms = measure_directions(measure)
    if atoms is not None:
        rows.append(atoms)
    return np.concatenate(rows)


def _atoms(measure: Measure) -> np.ndarray:
    if not measure.atomic:
        return np.zeros((0, measure.n), dtype=complex)
    return measure.atoms()[0]


def G_functional(
    measure: Measure,
    z: BallPoint,
    params: TentParams,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    profile: Optional[MuHatProfile] = None,
) -> float:
    """G(z) = mu_hat_r(z) (1 - |z|^2)^((q - s)(n + 1 + alpha)/q + n s (1/t - 1/p))."""
    return float(G_array(measure, z.coords[None, :], params, budget, seed, profile)[0])


def G_array(
    measure: Measure,
    points: np.ndarray,
    params: TentParams,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    profile: Optional[MuHatProfile] = None,
) -> np.ndarray:
    if measure.n != params.n:
        raise ContractViolation(f"Measure in dimension {measure.n} but parameters in dimension {params.n}")
    values = mu_hat_array(measure, points, params.r, params.alpha, budget, seed, profile)
    return values * one_minus_norm_squared(points) ** params.g_exponent


def G_statistic(
    measure: Measure,
    params: TentParams,
    radii: Sequence[float] = REFINEMENT_RADII,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    xi_count: int = DEFAULT_XI_COUNT,
) -> Dict[str, Any]:
    """
    sup G over the sample points with |z| <= rho, for each rho of the refining grid. Atoms of an atomic measure are
    sample points as well, binned by their modulus.
    """
    directions = sample_directions(measure, xi_count, seed)
    profile = mu_hat_profile(measure, params.r, budget, seed)
    points = np.concatenate([rho * directions for rho in radii] + [_atoms(measure)])
    values = G_array(measure, points, params, budget, seed, profile)
    moduli = np.linalg.norm(points, axis=1)
    trace = []
    for rho in radii:
        inside = moduli <= rho + 1e-12
        trace.append(float(values[inside].max()) if inside.any() else 0.0)
    beyond = moduli > radii[-1] + 1e-12
    if beyond.any():
        trace[-1] = max(trace[-1], float(values[beyond].max()))
    return {"radii": list(radii), "values": trace, "value": max(trace), "decision": refinement_decision(trace).value}


def nu_statistic(
    measure: Measure, params: TentParams, budget: int = DEFAULT_BUDGET, seed: int = 0, xi_count: int = DEFAULT_XI_COUNT
) -> Dict[str, Any]:
    """Carleson constant of nu = mu_hat_r^(q/(q-s)) dv_(alpha+n), with a decision read off its delta profile."""
    params.require_q_above_s()
    nu = nu_measure(measure, params, budget, seed)
    directions = measure_directions(measure)
    estimate = carleson_constant(nu, budget, seed, xi_count=xi_count, directions=directions)
    profile = estimate.details.get("delta_profile", [estimate.value])
    tail = list(np.maximum.accumulate(profile[-4:]))
    decision = Bounded.INCONCLUSIVE if estimate.diverged else refinement_decision(tail)
    return {"value": estimate.value, "estimate": estimate.to_json(), "values": tail, "decision": decision.value}


def cone_sample(xi: SpherePoint, gamma: float, levels: int, per_level: int, rng: np.random.Generator) -> np.ndarray:
    """Points of Gamma_gamma(xi) on the shells 1 - |z|^2 = 2^-j, j = 0..levels, plus the radius through xi."""
    region = Koranyi(xi, gamma)
    rows = []
    for j in range(levels + 1):
        omega = 2.0**-j
        rho = math.sqrt(1.0 - omega)
        directions = region.angular_box(rho).sample(rng, per_level)
        candidates = np.concatenate([rho * xi.coords[None, :], rho * directions])
        rows.append(candidates[region.contains(candidates)])
    return np.concatenate(rows)


def V_functional(
    measure: Measure,
    xi: SpherePoint,
    params: TentParams,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    rho: float = 0.0,
    profile: Optional[MuHatProfile] = None,
    levels: int = DEFAULT_TRUNCATION_LEVEL,
) -> float:
    """V(xi) = sup over z in Gamma(xi) with |z| > rho of mu_hat_r(z) (1 - |z|^2)^((q - s)(n + 1 + alpha)/q)."""
    return float(_V_trace(measure, xi, params, budget, seed, rho, profile, levels)[-1])


def _V_trace(
    measure: Measure,
    xi: SpherePoint,
    params: TentParams,
    budget: int,
    seed: int,
    rho: float,
    profile: Optional[MuHatProfile],
    levels: int,
) -> np.ndarray:
    """Running sup of the V integrand over shells 0..levels of the cone."""
    rng = stream(seed, STREAM_CONE, 1)
    points = cone_sample(xi, params.gamma, levels, CONE_POINTS_PER_LEVEL, rng)
    atoms = _atoms(measure)
    if atoms.shape[0]:
        points = np.concatenate([points, atoms[Koranyi(xi, params.gamma).contains(atoms)]])
    points = points[np.linalg.norm(points, axis=1) > rho]
    trace = np.zeros(levels + 1)
    if points.shape[0] == 0:
        return trace
    omz2 = one_minus_norm_squared(points)
    values = mu_hat_array(measure, points, params.r, params.alpha, budget, seed, profile) * omz2**params.eta_exponent
    shells = np.clip(np.floor(-np.log2(omz2)).astype(int), 0, levels)
    np.maximum.at(trace, shells, values)
    return np.maximum.accumulate(trace)


def U_functional(
    measure: Measure,
    xi: SpherePoint,
    params: TentParams,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    rho: float = 0.0,
    profile: Optional[MuHatProfile] = None,
) -> float:
    """U(xi) = ( integral over Gamma(xi) with |z| > rho of mu_hat_r^(q/(q-s)) dv_alpha )^((q-s)/q)."""
    params.require_q_above_s()
    values, _, _, _ = _U_cones(measure, xi.coords[None, :], params, budget, seed, rho, profile)
    return float(max(values[0], 0.0) ** ((params.q - params.s) / params.q))


def _U_cones(
    measure: Measure,
    xi: np.ndarray,
    params: TentParams,
    budget: int,
    seed: int,
    rho: float,
    profile: Optional[MuHatProfile],
):
    power = params.q / (params.q - params.s)

    def integrand(points, omz2):
        return mu_hat_array(measure, points, params.r, params.alpha, budget, seed, profile) ** power

    base: Measure = hardy_tent_measure(params)
    if rho > 0:
        base = Restricted(base, Annulus(rho))
    # dv_alpha = dv_(n+alpha) / (1 - |z|^2)^n, the cone weight
    return cone_integrals(base, integrand, xi, params.gamma, budget, seed)


def lebesgue_exponent(params: TentParams) -> float:
    """pt / (s (p - t)), the Lebesgue exponent of the Case3 and Case4 statistics."""
    params.require_p_above_t()
    return params.p * params.t / (params.s * (params.p - params.t))


def U_statistic(
    measure: Measure,
    params: TentParams,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    sphere_samples: int = 32,
    rho: float = 0.0,
    sample: Optional[SphereSample] = None,
    profile: Optional[MuHatProfile] = None,
) -> Dict[str, Any]:
    """||U||_{L^(pt/(s(p-t)))(sigma)} with its trace over the truncation levels of the cone integrals."""
    params.require_q_above_s()
    exponent = lebesgue_exponent(params)
    if sample is None:
        sample = xi_sample(params.n, sphere_samples, seed)
    if profile is None:
        profile = mu_hat_profile(measure, params.r, budget, seed)
    values, errors, levels, diverged = _U_cones(measure, sample.points, params, budget, seed, rho, profile)
    power = exponent * (params.q - params.s) / params.q
    mean, error = weighted_power_mean(values, errors, sample, power)
    norm, norm_error = root_of(mean, error, exponent)
    trace = []
    for level in TRACE_LEVELS:
        column = levels[:, min(level, levels.shape[1]) - 1]
        trace.append(root_of(weighted_power_mean(column, np.zeros_like(column), sample, power)[0], 0.0, exponent)[0])
    decision = refinement_decision(trace)
    if diverged and decision is Bounded.FINITE:
        decision = Bounded.INCONCLUSIVE
    return {
        "value": norm,
        "std_error": norm_error,
        "values": trace,
        "decision": decision.value,
        "exponent": exponent,
        "diverged": diverged,
    }


def V_statistic(
    measure: Measure,
    params: TentParams,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    sphere_samples: int = 32,
    rho: float = 0.0,
    sample: Optional[SphereSample] = None,
    profile: Optional[MuHatProfile] = None,
) -> Dict[str, Any]:
    """||V||_{L^(pt/(s(p-t)))(sigma)} with its trace over the cone depth."""
    exponent = lebesgue_exponent(params)
    if sample is None:
        sample = xi_sample(params.n, sphere_samples, seed)
    if profile is None:
        profile = mu_hat_profile(measure, params.r, budget, seed)
    traces = np.array(
        [
            _V_trace(measure, SpherePoint(xi), params, budget, seed, rho, profile, DEFAULT_TRUNCATION_LEVEL)
            for xi in sample.points
        ]
    )
    zeros = np.zeros(sample.count)
    mean, error = weighted_power_mean(traces[:, -1], zeros, sample, exponent)
    norm, norm_error = root_of(mean, error, exponent)
    trace = [
        root_of(weighted_power_mean(traces[:, level], zeros, sample, exponent)[0], 0.0, exponent)[0]
        for level in TRACE_LEVELS
    ]
    return {
        "value": norm,
        "std_error": norm_error,
        "values": trace,
        "decision": refinement_decision(trace).value,
        "exponent": exponent,
    }


@dataclass
class EtaSequence:
    """
    Class representing eta_k = mu_hat_delta(a_k) (1 - |a_k|^2)^((q - s)(n + 1 + alpha)/q) on a lattice.
    """

    values: np.ndarray
    delta: float
    lattice: Lattice
    params: Dict[str, Any] = field(default_factory=dict)

    def sequence(self) -> SeqCoefficients:
        return SeqCoefficients(self.values, self.lattice)

    def to_json(self) -> Dict[str, Any]:
        return {"delta": self.delta, "values": [float(v) for v in self.values], "params": self.params}


def eta_sequence(
    measure: Measure, lattice: Lattice, delta: float, params: TentParams, budget: int = DEFAULT_BUDGET, seed: int = 0
) -> EtaSequence:
    if lattice.n != measure.n:
        raise ContractViolation(f"Lattice in dimension {lattice.n} but measure in dimension {measure.n}")
    if not delta > 0:
        raise ContractViolation(f"eta needs a positive Bergman radius, got {delta}")
    masses = ball_masses(measure, lattice.points, delta, budget, seed)
    omega = lattice.omz2
    values = masses / omega ** (2 * params.n + 1 + params.alpha) * omega**params.eta_exponent
    return EtaSequence(values=np.maximum(values, 0.0), delta=delta, lattice=lattice, params=params.to_json())


def default_theta(params: TentParams) -> float:
    """A kernel exponent large enough for lattice sums over T^p_q(Z) to land in HT^p_{q,alpha}."""
    n, p, q = params.n, params.p, params.q
    return n * max(1.0, q / p, 1.0 / p, 1.0 / q) + 1.0


def necessity_test(
    measure: Measure,
    lattice: Lattice,
    lam: Sequence[complex],
    params: TentParams,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    tau_count: int = 4,
    sphere_samples: int = 16,
    sequence_samples: int = 4096,
) -> Dict[str, Any]:
    """
    Compare the lattice sum integral of (sum over a_k in Gamma(xi) of |lam_k|^s eta_k^(2r))^(t/s) with
    ||lam||^t_{T^p_q(Z)} times an operator-norm estimate, the largest ||A_{mu,s} F_tau|| / ||F_tau|| over
    Rademacher-randomized lattice sums F_tau.
    """
    coefficients = SeqCoefficients(lam, lattice)
    eta = eta_sequence(measure, lattice, 2 * params.r, params, budget, seed)
    sample = sequence_sample(lattice, params.gamma, sequence_samples, seed)
    inside = cone_membership(lattice, sample.points, params.gamma)
    inner = inside @ (np.abs(coefficients.values) ** params.s * eta.values)
    lhs, lhs_error = weighted_power_mean(inner, np.zeros_like(inner), sample, params.t / params.s)
    lam_norm = seq_tent_norm(coefficients, params.p, params.q, params.gamma, sequence_samples, seed, sample=sample).value

    theta = default_theta(params)
    base = lattice_kernel(lattice, coefficients.values, theta, params.alpha, params.q)
    source_measure = hardy_tent_measure(params)
    taus = stream(seed, STREAM_TAU).random(tau_count)
    ratios: List[float] = []
    for tau in taus:
        f = randomized(base, float(tau))
        xi = xi_sample(params.n, sphere_samples, seed, f.focus)
        image = area_operator_norm(f, measure, params.s, params.t, params.gamma, budget, seed, sample=xi).value
        source = tent_norm(f, source_measure, params.p, params.q, params.gamma, budget, seed, sample=xi).value
        ratios.append(image / source if source > 0 else 0.0)
    operator = max(ratios) if ratios else 0.0
    rhs = lam_norm**params.t * operator**params.t
    ratio = 0.0 if lhs == 0 else (lhs / rhs if rhs > 0 else math.inf)
    return {
        "lhs": lhs,
        "lhs_std_error": lhs_error,
        "sequence_norm": lam_norm,
        "operator_estimate": operator,
        "rhs": rhs,
        "ratio": ratio,
        "theta": theta,
        "taus": [float(t) for t in taus],
    }


def kernel_necessity(
    measure: Measure,
    params: TentParams,
    radii: Sequence[float] = KERNEL_RADII,
    theta: float = 1.0,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    sphere_samples: int = 16,
) -> Dict[str, Any]:
    """
    ||A_{mu,s} f_a||_{L^t} against G(a)^(1/s) along a = |a| e_1. A bounded Case1 embedding keeps the quotients c(a)
    within a fixed bracket; spread is max c / min c.
    """
    axis = np.eye(params.n, dtype=complex)[0]
    profile = mu_hat_profile(measure, params.r, budget, seed)
    rows = []
    for radius in radii:
        a = BallPoint(radius * axis)
        f = test_function(a, theta, params.p, params.q, params.alpha)
        sample = xi_sample(params.n, sphere_samples, seed, f.focus)
        image = area_operator_norm(f, measure, params.s, params.t, params.gamma, budget, seed, sample=sample).value
        g = G_functional(measure, a, params, budget, seed, profile)
        quotient = _safe_ratio(image, g ** (1.0 / params.s))
        rows.append({"radius": radius, "image": image, "G": g, "quotient": quotient})
    quotients = [row["quotient"] for row in rows]
    return {"rows": rows, "quotients": quotients, "spread": spread_of(quotients), "theta": theta}


def discretization_check(
    measure: Measure,
    lattice: Lattice,
    params: TentParams,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    xi_count: int = 20,
) -> Dict[str, Any]:
    """
    The chain ||eta^(r/2)||_{T^inf} <~ ||nu||_CM^((q-s)/q) <~ ||eta^(2r)||_{T^inf} (q > s), and per-xi comparisons of
    cone functionals of mu_hat_r with their lattice sums over mu_hat_2r.
    """
    r = params.r
    report: Dict[str, Any] = {}
    if params.q > params.s:
        power = params.q / (params.q - params.s)
        small = eta_sequence(measure, lattice, r / 2, params, budget, seed)
        large = eta_sequence(measure, lattice, 2 * r, params, budget, seed)
        eta_small = carleson_sequence_norm(small.sequence(), power, seed=seed).value
        eta_large = carleson_sequence_norm(large.sequence(), power, seed=seed).value
        nu = carleson_constant(nu_measure(measure, params, budget, seed), budget, seed, directions=measure_directions(measure))
        nu_value = nu.value ** (1.0 / power)
        report["carleson_chain"] = {
            "eta_half": eta_small,
            "nu": nu_value,
            "eta_double": eta_large,
            "lower_ratio": _safe_ratio(nu_value, eta_small),
            "upper_ratio": _safe_ratio(eta_large, nu_value),
        }

    directions = sphere_array(stream(seed, STREAM_CONE, 2), xi_count, params.n)
    profile = mu_hat_profile(measure, r, budget, seed)
    double = ball_masses(measure, lattice.points, 2 * r, budget, seed)
    omega = lattice.omz2
    hat_double = double / omega ** (2 * params.n + 1 + params.alpha)
    inside = cone_membership(lattice, directions, params.gamma)
    sup_rows = []
    for i, xi in enumerate(directions):
        lhs = V_functional(measure, SpherePoint(xi), params, budget, seed, profile=profile)
        members = inside[i]
        rhs = float((hat_double[members] * omega[members] ** params.eta_exponent).max()) if members.any() else 0.0
        sup_rows.append(_safe_ratio(lhs, rhs))
    report["sup_ratios"] = sup_rows
    report["sup_ratio_max"] = max(sup_rows) if sup_rows else 0.0
    if params.q > params.s:
        power = params.q / (params.q - params.s)
        values, _, _, _ = _U_cones(measure, directions, params, budget, seed, 0.0, profile)
        sums = inside @ (hat_double**power * omega ** (params.n + 1 + params.alpha))
        integral_rows = [_safe_ratio(v, s) for v, s in zip(values, sums)]
        report["integral_ratios"] = integral_rows
        report["integral_ratio_max"] = max(integral_rows) if integral_rows else 0.0
    return report


def _safe_ratio(numerator: float, denominator: float) -> float:
    if numerator == 0:
        return 0.0
    return numerator / denominator if denominator > 0 else math.inf


def compactness_evaluators(
    measure: Measure,
    params: TentParams,
    radii: Sequence[float] = COMPACTNESS_RADII,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    sphere_samples: int = 16,
    case: Optional[str] = None,
) -> Dict[str, Any]:
    """
    Truncated versions of the case functional along rho -> 1: sup of G beyond rho (Case1), Carleson constants of
    chi_{(rho B)^c} nu (Case2), L-norms of U_rho (Case3) and V_rho (Case4), with a trend verdict.
    """
    if list(radii) != sorted(radii) or not all(0 < rho < 1 for rho in radii):
        raise ContractViolation(f"Compactness radii must increase inside (0, 1), got {list(radii)}")
    tag = CaseTag(case) if case is not None else case_dispatch(params.p, params.q, params.s, params.t)
    values: List[float]
    if tag is CaseTag.CASE1:
        directions = sample_directions(measure, DEFAULT_XI_COUNT, seed)
        profile = mu_hat_profile(measure, params.r, budget, seed)
        values = []
        for rho in radii:
            shells = [1.0 - (1.0 - rho) * 2.0**-k for k in range(0, 9)]
            points = np.concatenate([rr * directions for rr in shells] + [_atoms(measure)])
            points = points[np.linalg.norm(points, axis=1) >= rho]
            values.append(float(G_array(measure, points, params, budget, seed, profile).max()) if len(points) else 0.0)
    elif tag is CaseTag.CASE2:
        nu = nu_measure(measure, params, budget, seed)
        values = vanishing_carleson(nu, radii, budget, seed, directions=measure_directions(measure))["values"]
    else:
        sample = xi_sample(params.n, sphere_samples, seed)
        profile = mu_hat_profile(measure, params.r, budget, seed)
        statistic = U_statistic if tag is CaseTag.CASE3 else V_statistic
        values = [statistic(measure, params, budget, seed, rho=rho, sample=sample, profile=profile)["value"] for rho in radii]
    trend = trend_decision(values)
    logger.info("Compactness statistics for %s: %s (%s)", tag.value, values, trend.value)
    return {
        "case": tag.value,
        "radii": list(radii),
        "values": values,
        "trend": trend.value,
        "verdict": f"compactness criterion trend: {trend.value}",
    }
