import logging
import math
from typing import Any, Dict, List, Optional, Type

import numpy as np
from tqdm import tqdm

from .carleson import carleson_constant, carleson_ratio, measure_directions, vanishing_carleson
from .configschema import ExperimentConfig
from .criteria import (
    INCONCLUSIVE,
    bergman_superposition_degree,
    compact_inclusion_region,
    compactness_verdict,
    embedding_verdict,
    inclusion_margin,
    inclusion_region,
    monomial_admissible,
    operator_norm_estimate,
    superposition_degree,
    superposition_witness,
    witness_targets,
)
from .decisions import grows_by, spread_of
from .errors import ContractViolation
from .functionals import COMPACTNESS_RADII, discretization_check, kernel_necessity, necessity_test
from .functions import HoloFunction, test_function
from .geometry import BallPoint
from .lattice import Lattice
from .measures import Measure, WeightedVolume
from .norms import area_operator_norm, inclusion_check, tent_norm, xi_sample
from .params import CaseTag, TentParams
from .reporting import GridRow, csv_path_for, emit_phase_csv
from .selftest import run_selftest
from .strategy import ExperimentAction, ExperimentStrategy

logger = logging.getLogger("tentlab")

STATUS_OK = "ok"
STATUS_INCONCLUSIVE = "inconclusive"
STATUS_FAILED = "failed"

INCLUSION_RADII = (0.5, 0.9, 0.99)
WITNESS_RADII = (0.9, 0.99, 0.999)
WITNESS_SOURCE = (2.0, 2.0)
WITNESS_SPREAD = 10.0
# Order of the inclusion predicate arguments.
GRID_KEYS = ("p", "q", "alpha", "t", "s", "beta", "n")


def status_of(*verdicts: Any) -> str:
    return STATUS_INCONCLUSIVE if any(v == INCONCLUSIVE for v in verdicts) else STATUS_OK


def radial_point(n: int, radius: float) -> BallPoint:
    coords = np.zeros(n, dtype=complex)
    coords[0] = radius
    return BallPoint(coords)


class ConfiguredStrategy(ExperimentStrategy):
    """Base for strategies driven by a validated ExperimentConfig."""

    def __init__(self, config: ExperimentConfig, out_path: Optional[str] = None, progress: bool = False):
        self.config = config
        self.out_path = out_path
        self.progress = progress

    def require_function(self) -> HoloFunction:
        if self.config.function is None:
            raise ContractViolation(f"{self.action.value} needs a function")
        return self.config.function.build()

    def require_measure(self) -> Measure:
        if self.config.measure is None:
            raise ContractViolation(f"{self.action.value} needs a measure")
        return self.config.measure.build()

    def require_lattice(self) -> Lattice:
        if self.config.lattice is None:
            raise ContractViolation(f"{self.action.value} needs lattice parameters")
        return self.config.lattice.build(self.config.seed, self.config.params.r)


class NormStrategy(ConfiguredStrategy):
    """||f||_{T^p_q(mu)}; mu defaults to dv_{n+alpha}, giving the HT^p_{q,alpha} norm."""

    action = ExperimentAction.Norm

    async def setup(self):
        self.config.params.require("p", "q")
        self.f = self.require_function()
        params = self.config.params
        if self.config.measure:
            self.measure = self.config.measure.build()
        else:
            self.measure = WeightedVolume(params.n + params.alpha, params.n)
        if self.measure.n != self.f.n:
            raise ContractViolation(f"Function in dimension {self.f.n} but measure in dimension {self.measure.n}")

    async def run(self) -> Dict[str, Any]:
        params = self.config.params
        estimate = tent_norm(
            self.f,
            self.measure,
            params.p,
            params.q,
            params.gamma,
            self.config.budget,
            self.config.seed,
            self.config.sphere_samples,
        )
        return {"status": STATUS_OK, "tent_norm": estimate}


class AreaStrategy(ConfiguredStrategy):
    """||A_{mu,s} f||_{L^t} next to ||f||_{T^t_s(mu)}, which it equals."""

    action = ExperimentAction.Area

    async def setup(self):
        self.config.params.require("s", "t")
        self.f = self.require_function()
        self.measure = self.require_measure()

    async def run(self) -> Dict[str, Any]:
        params, config = self.config.params, self.config
        sample = xi_sample(self.f.n, config.sphere_samples, config.seed, self.f.focus)
        area = area_operator_norm(
            self.f, self.measure, params.s, params.t, params.gamma, config.budget, config.seed, sample=sample
        )
        tent = tent_norm(
            self.f, self.measure, params.t, params.s, params.gamma, config.budget, config.seed, sample=sample
        )
        combined = math.hypot(area.std_error, tent.std_error)
        gap = abs(area.value - tent.value)
        return {
            "status": STATUS_OK,
            "area_norm": area,
            "tent_norm": tent,
            "combined_std_errors": gap / combined if combined > 0 else (0.0 if gap == 0 else math.inf),
        }


class CarlesonStrategy(ConfiguredStrategy):
    """Carleson constant of mu in box and integral form, and the vanishing trend when radii are given."""

    action = ExperimentAction.Carleson

    async def setup(self):
        self.measure = self.require_measure()

    async def run(self) -> Dict[str, Any]:
        config = self.config
        constant = carleson_constant(self.measure, config.budget, config.seed, xi_count=config.xi_count)
        results: Dict[str, Any] = {
            "status": STATUS_OK,
            "carleson": constant,
            "box_over_integral": carleson_ratio(constant),
        }
        if config.radii:
            directions = measure_directions(self.measure)
            results["vanishing"] = vanishing_carleson(
                self.measure, sorted(config.radii), config.budget, config.seed, directions=directions
            )
        return results


class EmbedCheckStrategy(ConfiguredStrategy):
    """
    The embedding verdict for A_{mu,s}: HT^p_{q,alpha} -> L^t. In Case1 the run also compares ||A_{mu,s} f_a|| with
    G(a)^(1/s). With lattice parameters it adds the discretization chain, and in Case1 the lattice-sum necessity
    comparison.
    """

    action = ExperimentAction.EmbedCheck

    async def setup(self):
        self.params: TentParams = self.config.params.to_params()
        self.measure = self.require_measure()
        self.lattice = self.require_lattice() if self.config.lattice else None

    async def run(self) -> Dict[str, Any]:
        config = self.config
        verdict = embedding_verdict(
            self.measure, self.params, config.budget, config.seed, config.sphere_samples, config.xi_count
        )
        results: Dict[str, Any] = {
            "status": status_of(verdict.bounded),
            "verdict": verdict,
            "operator_norm_estimate": operator_norm_estimate(verdict, self.params),
        }
        if verdict.case is CaseTag.CASE1:
            results["kernel_necessity"] = kernel_necessity(
                self.measure,
                self.params,
                theta=config.theta,
                budget=config.budget,
                seed=config.seed,
                sphere_samples=config.sphere_samples,
            )
        if self.lattice is not None:
            results["discretization"] = discretization_check(
                self.measure, self.lattice, self.params, config.budget, config.seed
            )
            if verdict.case is CaseTag.CASE1:
                lam = np.ones(len(self.lattice))
                results["necessity"] = necessity_test(
                    self.measure, self.lattice, lam, self.params, config.budget, config.seed
                )
        return results


class RegionStrategy(ConfiguredStrategy):
    """Inclusion verdicts over a two-parameter grid, written as a phase CSV."""

    action = ExperimentAction.Region

    async def setup(self):
        base = {k: v for k, v in self.config.params.model_dump().items() if k in GRID_KEYS}
        base.update(self.config.fixed)
        self.first, self.second = self.config.vary
        swept = {self.first.name, self.second.name}
        missing = [k for k in GRID_KEYS if k not in swept and base.get(k) is None]
        if missing:
            raise ContractViolation(f"region needs fixed values for {', '.join(missing)}")
        self.base = base

    async def run(self) -> Dict[str, Any]:
        rows: List[GridRow] = []
        compact = 0
        points = [(u, v) for u in self.first.values() for v in self.second.values()]
        for u, v in tqdm(points, desc="region", disable=not self.progress):
            values = dict(self.base, **{self.first.name: u, self.second.name: v})
            args = tuple(values[k] for k in GRID_KEYS[:-1]) + (int(values["n"]),)
            inside = inclusion_region(*args)
            margin = inclusion_margin(*args)
            compact += compact_inclusion_region(*args)
            rows.append((u, v, inside, margin["margin"], margin["strict"]))
        results: Dict[str, Any] = {
            "status": STATUS_OK,
            "axes": [self.first.name, self.second.name],
            "points": len(rows),
            "inside": sum(1 for row in rows if row[2]),
            "compact": compact,
        }
        if self.out_path:
            path = csv_path_for(self.out_path)
            results["csv"] = path
            results["csv_lines"] = emit_phase_csv(rows, path)
        return results


class SuperpositionStrategy(ConfiguredStrategy):
    """
    Largest admissible degree of polynomial symbols, with the monomial cross-check around it. With witness set, the
    run adds the boundary kernel g_zeta, whose power one past that degree leaves the target space.
    """

    action = ExperimentAction.Superposition

    async def setup(self):
        params = self.config.params
        if self.config.bergman:
            params.require("p", "t")
            n = params.n
            # A^p_alpha -> A^t_beta as HT^p_{p, alpha - n} -> HT^t_{t, beta - n}
            self.tuple = (params.p, params.p, params.alpha - n, params.t, params.t, params.beta - n, n)
        else:
            params.require("p", "q", "s", "t")
            self.tuple = (params.p, params.q, params.alpha, params.t, params.s, params.beta, params.n)

    async def run(self) -> Dict[str, Any]:
        params = self.config.params
        if self.config.bergman:
            degree = bergman_superposition_degree(params.p, params.alpha, params.t, params.beta, params.n)
        else:
            degree = superposition_degree(*self.tuple)
        monomials = [
            {"degree": N, "admissible": monomial_admissible(N, *self.tuple)} for N in range(degree["max_degree"] + 2)
        ]
        logger.info("Largest admissible degree %d (%s regime)", degree["max_degree"], degree["regime"])
        results: Dict[str, Any] = {
            "status": STATUS_OK,
            "bergman": self.config.bergman,
            "superposition": degree,
            "monomials": monomials,
        }
        if self.config.witness:
            config = self.config
            theta = config.theta if "theta" in config.model_fields_set else None
            witness = superposition_witness(
                *self.tuple, theta=theta, budget=config.budget, seed=config.seed, sphere_samples=config.sphere_samples
            )
            results["witness"] = witness
            results["status"] = STATUS_OK if witness["passed"] else STATUS_INCONCLUSIVE
        return results


class CompactnessStrategy(ConfiguredStrategy):
    """Truncated case statistics along rho -> 1 and whether they decay (compact embedding)."""

    action = ExperimentAction.Compactness

    async def setup(self):
        self.params = self.config.params.to_params()
        self.measure = self.require_measure()

    async def run(self) -> Dict[str, Any]:
        config = self.config
        radii = sorted(config.radii) if config.radii else COMPACTNESS_RADII
        report = compactness_verdict(
            self.measure, self.params, radii, config.budget, config.seed, config.sphere_samples
        )
        return {"status": status_of(report["compact"]), "compactness": report}


class LatticeStrategy(ConfiguredStrategy):
    """Builds and verifies a truncated delta-lattice; the JSON output can feed lattice measures and sums."""

    action = ExperimentAction.Lattice

    async def setup(self):
        if self.config.lattice is None:
            raise ContractViolation("lattice needs lattice parameters")

    async def run(self) -> Dict[str, Any]:
        lattice = self.require_lattice()
        return {
            "status": STATUS_OK,
            "size": len(lattice),
            "overlap_bound": lattice.overlap_bound,
            "verification": lattice.report,
            "lattice": lattice,
        }


class InclusionStrategy(ConfiguredStrategy):
    """Tent-to-Bergman inclusion ratios on the f_a family."""

    action = ExperimentAction.Inclusion

    async def setup(self):
        self.config.params.require("p", "q", "t")
        params = self.config.params
        self.params = TentParams(
            p=params.p,
            q=params.q,
            s=params.s or params.q,
            t=params.t,
            alpha=params.alpha,
            n=params.n,
            gamma=params.gamma,
        )
        self.radii = self.config.radii or list(INCLUSION_RADII)

    async def run(self) -> Dict[str, Any]:
        config, params = self.config, self.params
        rows = []
        for radius in self.radii:
            f = test_function(radial_point(params.n, radius), config.theta, params.p, params.q, params.alpha)
            check = inclusion_check(f, params, config.budget, config.seed, config.sphere_samples)
            rows.append(dict(check, radius=radius))
        forward = [row["forward_ratio"] for row in rows if row.get("forward_ratio") is not None]
        reverse = [row["reverse_ratio"] for row in rows if row.get("reverse_ratio") is not None]
        return {
            "status": STATUS_OK,
            "rows": rows,
            "forward_spread": max(forward) / min(forward) if forward and min(forward) > 0 else None,
            "reverse_spread": max(reverse) / min(reverse) if reverse and min(reverse) > 0 else None,
        }


class WitnessStrategy(ConfiguredStrategy):
    """
    Norms of the f_a family as |a| grows, in HT^p_{q,alpha} and in two targets that the inclusion predicate places
    inside and outside the region. Inside, the target to source ratio stays within a tenfold bracket; outside, it
    grows at least tenfold. The source norms themselves stay bounded. p and q default to 2.
    """

    action = ExperimentAction.Witness

    async def setup(self):
        params = self.config.params
        self.p = params.p if params.p is not None else WITNESS_SOURCE[0]
        self.q = params.q if params.q is not None else WITNESS_SOURCE[1]
        self.targets = witness_targets(self.p, self.q, params.alpha, params.n)
        self.radii = sorted(self.config.radii) if self.config.radii else list(WITNESS_RADII)

    async def run(self) -> Dict[str, Any]:
        config, params = self.config, self.config.params
        n, alpha, budget, seed = params.n, params.alpha, config.budget, config.seed
        source_measure = WeightedVolume(n + alpha, n)
        rows = []
        for radius in tqdm(self.radii, disable=not self.progress):
            f = test_function(radial_point(n, radius), config.theta, self.p, self.q, alpha)
            sample = xi_sample(n, config.sphere_samples, seed, f.focus)
            source = tent_norm(f, source_measure, self.p, self.q, params.gamma, budget, seed, sample=sample)
            row: Dict[str, Any] = {"radius": radius, "source": source}
            for side, target in self.targets.items():
                measure = WeightedVolume(n + target["beta"], n)
                norm = tent_norm(f, measure, target["t"], target["s"], params.gamma, budget, seed, sample=sample)
                row[side] = norm
                row[f"{side}_ratio"] = norm.value / source.value if source.value > 0 else math.inf
            rows.append(row)
        inside = [row["inside_ratio"] for row in rows]
        outside = [row["outside_ratio"] for row in rows]
        source_spread = spread_of([row["source"].value for row in rows])
        inside_spread = spread_of(inside)
        outside_growth = outside[-1] / outside[0] if outside[0] > 0 else math.inf
        outside_grows = grows_by(outside, WITNESS_SPREAD)
        passed = inside_spread <= WITNESS_SPREAD and source_spread <= WITNESS_SPREAD and outside_grows
        if not passed:
            logger.warning(
                "Witness not separated: inside spread %.3g, outside growth %.3g, source spread %.3g",
                inside_spread,
                outside_growth,
                source_spread,
            )
        first, last = 1.0 - self.radii[0] ** 2, 1.0 - self.radii[-1] ** 2
        return {
            "status": STATUS_OK if passed else STATUS_INCONCLUSIVE,
            "source": {"p": self.p, "q": self.q, "alpha": alpha},
            "targets": self.targets,
            "predicted_growth": (first / last) ** -self.targets["outside"]["margin"],
            "inside_spread": inside_spread,
            "outside_growth": outside_growth,
            "outside_monotone": outside_grows,
            "source_spread": source_spread,
            "rows": rows,
        }


class SelftestStrategy(ConfiguredStrategy):
    """The acceptance suite at desk scale."""

    action = ExperimentAction.Selftest

    async def setup(self):
        pass

    async def run(self) -> Dict[str, Any]:
        report = run_selftest(self.config.seed)
        return {"status": STATUS_OK if report["passed"] else STATUS_FAILED, "selftest": report}


STRATEGIES: Dict[ExperimentAction, Type[ConfiguredStrategy]] = {
    cls.action: cls
    for cls in (
        NormStrategy,
        AreaStrategy,
        CarlesonStrategy,
        EmbedCheckStrategy,
        RegionStrategy,
        SuperpositionStrategy,
        CompactnessStrategy,
        LatticeStrategy,
        SelftestStrategy,
        InclusionStrategy,
        WitnessStrategy,
    )
}
