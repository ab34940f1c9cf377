"""
Carleson constants of measures on the ball.

The box form is sup over xi and delta of mu(B_delta(xi)) / delta^n; the integral form is
sup over a of the integral of (1 - |a|^2)^theta / |1 - <z, a>|^(n + theta) dmu(z). For atomic measures the box form
is exact for every candidate xi; for continuous measures both forms are evaluated on grids.
"""

import logging
import math
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from .decisions import trend_decision
from .errors import ContractViolation
from .estimate import IntegralEstimate
from .geometry import Annulus, BallPoint, NonisotropicBall, SpherePoint, WholeBall, one_minus_norm_squared
from .measures import (
    DEFAULT_BUDGET,
    DensityMeasure,
    Measure,
    MuHatProfile,
    Restricted,
    integrate,
    mu_hat_array,
)
from .params import TentParams
from .sampling import STREAM_CAP, derive_seed, parallel_map, sphere_array, stream

logger = logging.getLogger("tentlab")

DELTA_EXPONENTS = tuple(range(0, 13))
VANISHING_RADII = (0.9, 0.99, 0.999)
INTEGRAL_THETA = 1.0
INTEGRAL_DEPTHS = tuple(range(0, 13))
CHUNK = 256


def _candidate_directions(measure: Measure, count: int, seed: int) -> np.ndarray:
    n = measure.n
    directions = [sphere_array(stream(seed, STREAM_CAP, 1), count, n)] if count else []
    if measure.atomic:
        atoms = measure.atoms()[0]
        norms = np.linalg.norm(atoms, axis=1)
        if np.any(norms > 0):
            directions.append(atoms[norms > 0] / norms[norms > 0, None])
    if not directions:
        return np.eye(n, dtype=complex)[:1]
    return np.concatenate(directions)


def atomic_box_constant(points: np.ndarray, weights: np.ndarray, directions: np.ndarray) -> Dict[str, Any]:
    """
    sup over the given xi and all delta > 0 of mu(B_delta(xi)) / delta^n for mu = sum w_k delta_{a_k}.
    For one xi the supremum is approached as delta decreases to a distance d_k, giving
    (mass of atoms with d_j <= d_k) / d_k^n.
    """
    n = points.shape[1] if points.size else directions.shape[1]
    best = {"value": 0.0, "xi": None, "delta": None}
    if points.shape[0] == 0:
        return best
    for start in range(0, directions.shape[0], CHUNK):
        xi = directions[start : start + CHUNK]
        distances = np.abs(1.0 - points @ np.conj(xi).T).T
        order = np.argsort(distances, axis=1, kind="stable")
        sorted_d = np.take_along_axis(distances, order, axis=1)
        masses = np.cumsum(weights[order], axis=1)
        with np.errstate(divide="ignore"):
            ratios = masses / sorted_d**n
        row, col = np.unravel_index(int(np.argmax(ratios)), ratios.shape)
        if ratios[row, col] > best["value"]:
            best = {"value": float(ratios[row, col]), "xi": xi[row], "delta": float(sorted_d[row, col])}
    return best


def atomic_integral_constant(points: np.ndarray, weights: np.ndarray, candidates: np.ndarray, theta: float) -> float:
    """sup over candidate a of sum w_k (1 - |a|^2)^theta / |1 - <a_k, a>|^(n + theta)."""
    if points.shape[0] == 0:
        return 0.0
    n = points.shape[1]
    best = 0.0
    for start in range(0, candidates.shape[0], CHUNK):
        a = candidates[start : start + CHUNK]
        kernel = one_minus_norm_squared(a)[:, None] ** theta / np.abs(1.0 - a @ np.conj(points).T) ** (n + theta)
        best = max(best, float((kernel @ weights).max()))
    return best


def _integral_candidates(directions: np.ndarray, extra: Optional[np.ndarray] = None) -> np.ndarray:
    rows = [np.zeros((1, directions.shape[1]), dtype=complex)]
    for depth in INTEGRAL_DEPTHS[1:]:
        rows.append((1.0 - 2.0**-depth) * directions)
    if extra is not None and extra.shape[0]:
        rows.append(extra)
    return np.concatenate(rows)


def carleson_constant(
    measure: Measure,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    xi_count: int = 16,
    directions: Optional[np.ndarray] = None,
    theta: float = INTEGRAL_THETA,
) -> IntegralEstimate:
    """
    Both forms of the Carleson constant. value is the box form; details carries the integral form and their ratio.
    """
    n = measure.n
    if directions is None:
        directions = np.eye(n, dtype=complex)[:1] if measure.radial and not measure.atomic else None
    if directions is None:
        directions = _candidate_directions(measure, xi_count, seed)
    if measure.atomic:
        points, weights = measure.atoms()
        box = atomic_box_constant(points, weights, directions)
        integral = atomic_integral_constant(points, weights, _integral_candidates(directions, points), theta)
        details = {
            "integral_form": integral,
            "theta": theta,
            "xi": None if box["xi"] is None else SpherePoint(box["xi"]).to_json(),
            "delta": box["delta"],
        }
        return IntegralEstimate(value=box["value"], exact=True, samples_used=directions.shape[0], details=details)
    return _continuous_constant(measure, directions, budget, seed, theta)


def _continuous_constant(
    measure: Measure, directions: np.ndarray, budget: int, seed: int, theta: float
) -> IntegralEstimate:
    n = measure.n
    jobs = [(i, j) for i in range(directions.shape[0]) for j in DELTA_EXPONENTS]

    def box(job):
        i, j = job
        delta = 2.0**-j
        estimate = integrate(measure, NonisotropicBall(SpherePoint(directions[i]), delta), None, budget, derive_seed(seed, i, j))
        return estimate, delta

    results = parallel_map(box, jobs)
    ratios = [(est.value / delta**n, est.std_error / delta**n, job, est) for (est, delta), job in zip(results, jobs)]
    value, error, (i_best, j_best), _ = max(ratios, key=lambda item: item[0])
    diverged = any(est.diverged for _, _, _, est in ratios)
    profile = [max(r for r, _, (_, j), _ in ratios if j == level) for level in DELTA_EXPONENTS]

    def kernel_job(job):
        i, depth = job
        a = (1.0 - 2.0**-depth) * directions[i] if depth else np.zeros(n, dtype=complex)
        omega = 1.0 - float(np.vdot(a, a).real)

        def integrand(points, omz2):
            return omega**theta / np.abs(1.0 - points @ np.conj(a)) ** (n + theta)

        focus = [directions[i]] if depth else None
        return integrate(measure, WholeBall(), integrand, budget, derive_seed(seed, i, 100 + depth), focus=focus)

    kernel_jobs = [(i, d) for i in range(directions.shape[0]) for d in INTEGRAL_DEPTHS]
    kernels = parallel_map(kernel_job, kernel_jobs)
    integral = max(est.value for est in kernels)
    diverged = diverged or any(est.diverged for est in kernels)
    details = {
        "integral_form": integral,
        "theta": theta,
        "xi": SpherePoint(directions[i_best]).to_json(),
        "delta": 2.0**-j_best,
        "delta_profile": profile,
    }
    return IntegralEstimate(
        value=value,
        std_error=error,
        samples_used=sum(est.samples_used for est, _ in results) + sum(est.samples_used for est in kernels),
        diverged=diverged,
        details=details,
    )


def nu_density(measure: Measure, z: BallPoint, params: TentParams, budget: int = DEFAULT_BUDGET, seed: int = 0) -> float:
    """mu_hat_r(z)^(q/(q-s)) (1 - |z|^2)^(alpha+n)."""
    params.require_q_above_s()
    value = mu_hat_array(measure, z.coords[None, :], params.r, params.alpha, budget, seed)[0]
    return float(value ** (params.q / (params.q - params.s)) * z.one_minus_norm_squared ** (params.alpha + params.n))


def nu_measure(measure: Measure, params: TentParams, budget: int = DEFAULT_BUDGET, seed: int = 0) -> DensityMeasure:
    """d nu = mu_hat_r^(q/(q-s)) dv_(alpha+n)."""
    params.require_q_above_s()
    power = params.q / (params.q - params.s)
    profile = None
    if measure.radial and not measure.atomic:
        profile = MuHatProfile.build(measure, params.r, budget, seed)

    def density(points, omz2):
        return mu_hat_array(measure, points, params.r, params.alpha, budget, seed, profile) ** power

    return DensityMeasure(
        measure.n,
        density,
        base_exponent=params.alpha + params.n,
        radial=measure.radial and not measure.atomic,
        label=f"nu[{measure.variant}]",
    )


def measure_directions(measure: Measure) -> Optional[np.ndarray]:
    """Directions of the atoms of an atomic measure, used as Carleson candidates for derived measures."""
    base = measure.base if isinstance(measure, Restricted) else measure
    if not base.atomic:
        return None
    atoms = base.atoms()[0]
    norms = np.linalg.norm(atoms, axis=1)
    keep = norms > 0
    if not keep.any():
        return None
    return atoms[keep] / norms[keep, None]


def vanishing_carleson(
    measure: Measure,
    radii: Sequence[float] = VANISHING_RADII,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    directions: Optional[np.ndarray] = None,
) -> Dict[str, Any]:
    """Carleson constants of chi_{(rho B)^c} mu along increasing rho, with a trend verdict."""
    if list(radii) != sorted(radii) or not all(0 < rho < 1 for rho in radii):
        raise ContractViolation(f"Truncation radii must increase inside (0, 1), got {list(radii)}")
    constants: List[IntegralEstimate] = []
    for rho in radii:
        logger.info("Carleson constant outside radius %s", rho)
        constants.append(carleson_constant(Restricted(measure, Annulus(rho)), budget, seed, directions=directions))
    values = [c.value for c in constants]
    return {
        "radii": list(radii),
        "constants": [c.to_json() for c in constants],
        "values": values,
        "trend": trend_decision(values).value,
        "diverged": any(c.diverged for c in constants),
    }


def carleson_ratio(estimate: IntegralEstimate) -> float:
    """Box form over integral form."""
    integral = estimate.details.get("integral_form", 0.0)
    if integral == 0.0:
        return 1.0 if estimate.value == 0.0 else math.inf
    return estimate.value / integral
