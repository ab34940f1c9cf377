"""
Desk-scale acceptance suite.

Every check returns a dict with a boolean "passed" and the numbers it judged. The suite only covers properties that
hold with margin at small budgets; the slower witness experiments run through their own subcommands.
"""

import logging
import math
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .criteria import (
    bergman_superposition_degree,
    inclusion_region,
    monomial_admissible,
    superposition_degree,
    superposition_witness,
)
from .functions import Polynomial, linear_monomial
from .geometry import BallPoint, bergman_metric_to, moebius
from .lattice import build_lattice
from .measures import WeightedVolume
from .norms import area_operator_norm, bergman_norm, forelli_rudin_check, khinchine_ratio, tent_norm, xi_sample
from .reporting import phase_csv_text
from .sampling import ball_array, derive_seed, stream

logger = logging.getLogger("tentlab")

SELFTEST_BUDGET = 2000
INVARIANCE_TOLERANCE = 1e-9
SPREAD_LIMIT = 10.0
NORM_SPHERE_SAMPLES = 16

Check = Callable[[int], Dict[str, Any]]


def check_moebius_invariance(seed: int, triples: int = 1000) -> Dict[str, Any]:
    """beta(phi_a z, phi_a w) = beta(z, w), plus symmetry and the triangle inequality, on random triples."""
    rng = stream(seed, 101)
    a, z, w = (ball_array(rng, triples, 2, radius=0.9) for _ in range(3))
    d = bergman_metric_to(z, w)
    moved = bergman_metric_to(moebius(a, z), moebius(a, w))
    invariance = float(np.max(np.abs(moved - d) / np.maximum(1.0, d)))
    symmetry = float(np.max(np.abs(bergman_metric_to(w, z) - d)))
    slack = float(np.min(bergman_metric_to(z, a) + bergman_metric_to(a, w) - d))
    return {
        "passed": invariance <= INVARIANCE_TOLERANCE and symmetry <= INVARIANCE_TOLERANCE and slack >= -1e-12,
        "invariance_error": invariance,
        "symmetry_error": symmetry,
        "triangle_slack": slack,
    }


def check_lattice(seed: int) -> Dict[str, Any]:
    lattice = build_lattice(1, 0.5, 2.0, seed, samples=4000)
    report = lattice.report
    return {
        "passed": bool(report["covering_ok"] and report["separation_ok"] and lattice.overlap_bound >= 1),
        "points": len(lattice),
        "overlap_bound": lattice.overlap_bound,
        "min_pairwise_separation": report["min_pairwise_separation"],
    }


def check_khinchine(seed: int) -> Dict[str, Any]:
    rng = stream(seed, 102)
    errors = []
    for size in range(1, 13):
        c = rng.standard_normal(size) + 1j * rng.standard_normal(size)
        errors.append(abs(khinchine_ratio(c, 2.0) - 1.0))
    quartic = khinchine_ratio([1.0, 1.0], 4.0)
    return {
        "passed": max(errors) <= 1e-12 and abs(quartic - 2.0) <= 1e-12,
        "max_p2_error": max(errors),
        "p4_pair": quartic,
    }


def _random_tuple(rng: np.random.Generator) -> Tuple[float, ...]:
    n = int(rng.integers(1, 3))
    p, q, t, s = (round(float(v), 2) for v in rng.uniform(0.25, 4.0, 4))
    alpha, beta = (round(float(v), 2) for v in rng.uniform(-n - 0.9, 2.0, 2))
    return (p, q, alpha, t, s, beta, n)


def check_predicates(seed: int, tuples: int = 500) -> Dict[str, Any]:
    """Monomial admissibility through the inclusion predicate agrees with the closed-form degree."""
    rng = stream(seed, 103)
    mismatches: List[Dict[str, Any]] = []
    for _ in range(tuples):
        args = _random_tuple(rng)
        degree = superposition_degree(*args)["max_degree"]
        for N in range(1, 7):
            if monomial_admissible(N, *args) != (N <= degree):
                mismatches.append({"args": list(args), "degree": N, "max_degree": degree})
    bergman = bergman_superposition_degree(2.0, 0.0, 1.0, 0.0, 1)["max_degree"]
    return {"passed": not mismatches and bergman == 2, "mismatches": mismatches[:5], "bergman_example": bergman}


def check_forelli_rudin(seed: int, budget: int = SELFTEST_BUDGET) -> Dict[str, Any]:
    radii = (0.0, 0.5, 0.8, 0.9, 0.95)
    ratios = []
    for i, ru in enumerate(radii):
        for j, rz in enumerate(radii):
            u = BallPoint([ru])
            z = BallPoint([rz * complex(math.cos(1.0), math.sin(1.0))])
            ratios.append(forelli_rudin_check(u, z, 0.0, 1.6, 1.6, budget, seed + 5 * i + j)["ratio"])
    spread = max(ratios) / min(ratios)
    return {"passed": spread <= SPREAD_LIMIT, "spread": spread, "min_ratio": min(ratios), "max_ratio": max(ratios)}


def check_norm_consistency(seed: int, budget: int = SELFTEST_BUDGET) -> Dict[str, Any]:
    """||A_{mu,s} f||_{L^t} against ||f||_{T^t_s(mu)}, each side on its own boundary sample and streams."""
    rows = []
    for k, (s, t) in enumerate(((2.0, 2.0), (1.0, 3.0), (3.0, 1.5), (2.0, 1.0), (1.5, 2.5))):
        f = linear_monomial(1.0, 1)
        mu = WeightedVolume(0.5 * k, 1)
        area_seed, tent_seed = derive_seed(seed, 2 * k), derive_seed(seed, 2 * k + 1)
        area_sample = xi_sample(1, NORM_SPHERE_SAMPLES, area_seed)
        tent_sample = xi_sample(1, NORM_SPHERE_SAMPLES, tent_seed)
        area = area_operator_norm(f, mu, s, t, budget=budget, seed=area_seed, sample=area_sample)
        tent = tent_norm(f, mu, t, s, budget=budget, seed=tent_seed, sample=tent_sample)
        combined = math.hypot(area.std_error, tent.std_error)
        rows.append({"area": area.value, "tent": tent.value, "gap": abs(area.value - tent.value), "combined": combined})
    return {"passed": all(r["gap"] <= 3 * r["combined"] + 1e-12 * r["tent"] for r in rows), "rows": rows}


def check_hardy_bergman(seed: int, budget: int = SELFTEST_BUDGET, count: int = 20) -> Dict[str, Any]:
    """HT^2_{2,0} against A^2_{1} in dimension one on random polynomials."""
    rng = stream(seed, 104)
    ratios = []
    for _ in range(count):
        degree = int(rng.integers(0, 5))
        coefficients = {(k,): complex(*rng.standard_normal(2)) for k in range(degree + 1)}
        f = Polynomial(coefficients, 1)
        tent = tent_norm(f, WeightedVolume(1.0, 1), 2.0, 2.0, budget=budget, seed=seed, sphere_samples=16).value
        bergman = bergman_norm(f, 2.0, 1.0, budget, seed).value
        ratios.append(tent / bergman)
    spread = max(ratios) / min(ratios)
    return {"passed": spread <= SPREAD_LIMIT, "spread": spread, "ratios": ratios}


def check_superposition_witness(seed: int, budget: int = SELFTEST_BUDGET) -> Dict[str, Any]:
    """g_zeta with theta = 1.4 stays in HT^2_{2,0} while its square, one past the largest degree, blows up."""
    witness = superposition_witness(2.0, 2.0, 0.0, 2.0, 2.0, 0.0, 1, theta=1.4, budget=budget, seed=seed)
    return dict(witness, passed=bool(witness["passed"] and witness["max_degree"] == 1))


def check_region_grid(seed: int) -> Dict[str, Any]:
    """A 16 x 16 grid over (s, t) gives 256 verdicts and a 257-line CSV."""
    values = [float(v) for v in np.linspace(0.5, 4.0, 16)]
    rows = []
    for s in values:
        for t in values:
            rows.append((s, t, inclusion_region(2.0, 2.0, 0.0, t, s, 0.0, 1), 0.0, False))
    lines = phase_csv_text(rows).count("\n")
    return {"passed": len(rows) == 256 and lines == 257, "rows": len(rows), "csv_lines": lines}


CHECKS: Sequence[Tuple[str, Check]] = (
    ("moebius_invariance", check_moebius_invariance),
    ("lattice", check_lattice),
    ("khinchine", check_khinchine),
    ("predicates", check_predicates),
    ("forelli_rudin", check_forelli_rudin),
    ("norm_consistency", check_norm_consistency),
    ("hardy_bergman", check_hardy_bergman),
    ("superposition_witness", check_superposition_witness),
    ("region_grid", check_region_grid),
)


def run_selftest(seed: int, names: Optional[Sequence[str]] = None) -> Dict[str, Any]:
    selected = [(name, check) for name, check in CHECKS if names is None or name in names]
    results = []
    for name, check in selected:
        logger.info("Selftest '%s'", name)
        outcome = check(seed)
        if not outcome["passed"]:
            logger.warning("Selftest '%s' failed: %s", name, outcome)
        results.append(dict(outcome, name=name))
    return {"passed": all(r["passed"] for r in results), "checks": results}
