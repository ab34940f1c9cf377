"""
Parametric positive measures on the ball and the quadrature engine that integrates against them.

Continuous measures are integrated over dyadic radial shells |z| in [1 - 2^-j, 1 - 2^-(j+1)] in the variable
t = 1 - |z|^2, with the normalized volume written as dv = n (1 - t)^(n-1) dt dsigma. Bergman balls are
integrated in Moebius coordinates instead. Point and lattice masses are summed exactly.
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import beta as beta_function
from scipy.special import betainc

from .errors import ContractViolation
from .estimate import IntegralEstimate, exact_estimate
from .geometry import (
    Annulus,
    BallPoint,
    BergmanBall,
    CenteredBall,
    Intersection,
    Region,
    SpherePoint,
    WholeBall,
    bergman_distance_matrix,
    coords_from_json,
    coords_to_json,
    moebius,
    moebius_one_minus,
    one_minus_norm_squared,
    region_from_json,
)
from .lattice import CHUNK, Lattice
from .sampling import (
    STREAM_MOEBIUS,
    STREAM_SHELL,
    STREAM_SPHERE,
    SphereMixture,
    focused_boxes,
    parallel_map,
    sphere_array,
    stream,
)

logger = logging.getLogger("tentlab")

DEFAULT_TRUNCATION_LEVEL = 20
DEFAULT_BUDGET = 20000
MIN_BUDGET = 1000
MOEBIUS_STRATA = 8
GROWTH_FACTOR = 2.0
GROWTH_STEPS = 3

Integrand = Callable[[np.ndarray, np.ndarray], np.ndarray]
Density = Callable[[np.ndarray, np.ndarray], np.ndarray]


class Measure(ABC):
    """
    A positive Borel measure on the ball.

    Atomic measures implement atoms(). Continuous measures are sums of c (1 - |z|^2)^beta dv, listed by
    terms(), optionally multiplied by a pointwise density().
    """

    variant = ""
    atomic = False
    radial = True
    n: int = 0

    def atoms(self) -> Tuple[np.ndarray, np.ndarray]:
        raise ContractViolation(f"{self.variant} is not an atomic measure")

    def terms(self) -> List[Tuple[float, float]]:
        raise ContractViolation(f"{self.variant} is not a continuous measure")

    def density(self, points: np.ndarray, omz2: np.ndarray) -> Optional[np.ndarray]:
        return None

    @abstractmethod
    def to_json(self) -> Dict[str, Any]:
        pass


class PointMasses(Measure):
    """Finitely many Dirac masses. With no atoms this is the zero measure."""

    variant = "point_masses"
    atomic = True

    def __init__(self, points: Sequence[BallPoint], weights: Sequence[float], n: Optional[int] = None):
        if len(points) != len(weights):
            raise ContractViolation(f"Got {len(points)} points but {len(weights)} weights")
        if not points and n is None:
            raise ContractViolation("An empty point-mass measure needs its dimension")
        self.n = points[0].n if points else int(n)  # type: ignore[arg-type]
        for point in points:
            if point.n != self.n:
                raise ContractViolation(f"Point {point} does not live in dimension {self.n}")
        self._points = np.array([p.coords for p in points], dtype=complex).reshape(-1, self.n)
        self._weights = np.array(weights, dtype=float)
        if np.any(~(self._weights > 0)) or not np.all(np.isfinite(self._weights)):
            raise ContractViolation(f"Point-mass weights must be positive and finite, got {list(weights)}")

    @classmethod
    def from_arrays(cls, points: np.ndarray, weights: np.ndarray) -> "PointMasses":
        return cls([BallPoint(row) for row in np.asarray(points)], list(np.asarray(weights, dtype=float)), points.shape[1])

    @classmethod
    def zero(cls, n: int) -> "PointMasses":
        return cls([], [], n)

    def atoms(self):
        return self._points, self._weights

    def to_json(self):
        return {
            "variant": self.variant,
            "n": self.n,
            "masses": [{"point": coords_to_json(p), "weight": float(w)} for p, w in zip(self._points, self._weights)],
        }


class LatticeMasses(Measure):
    """Mass c (1 - |a_k|^2)^exponent at every point a_k of a lattice."""

    variant = "lattice_masses"
    atomic = True

    def __init__(self, lattice: Lattice, exponent: float, coefficient: float = 1.0):
        if not coefficient > 0:
            raise ContractViolation(f"Lattice-mass coefficient must be positive, got {coefficient}")
        self.lattice = lattice
        self.exponent = float(exponent)
        self.coefficient = float(coefficient)
        self.n = lattice.n

    def atoms(self):
        return self.lattice.points, self.coefficient * self.lattice.omz2**self.exponent

    def to_json(self):
        return {
            "variant": self.variant,
            "lattice": self.lattice.to_json(),
            "exponent": self.exponent,
            "coefficient": self.coefficient,
        }


class WeightedVolume(Measure):
    """dv_beta = (1 - |z|^2)^beta dv with v the normalized volume."""

    variant = "weighted_volume"

    def __init__(self, beta: float, n: int):
        if not beta > -1:
            raise ContractViolation(f"Weighted volume needs beta > -1, got {beta}")
        if n < 1:
            raise ContractViolation(f"Dimension must be positive, got {n}")
        self.beta = float(beta)
        self.n = int(n)

    def terms(self):
        return [(1.0, self.beta)]

    def to_json(self):
        return {"variant": self.variant, "n": self.n, "beta": self.beta}


class RadialDensity(Measure):
    """sum_i c_i (1 - |z|^2)^beta_i dv."""

    variant = "radial_density"

    def __init__(self, terms: Sequence[Tuple[float, float]], n: int):
        if not terms:
            raise ContractViolation("A radial density needs at least one term")
        for coefficient, exponent in terms:
            if not coefficient > 0 or not exponent > -1:
                raise ContractViolation(f"Radial density terms need c > 0 and beta > -1, got ({coefficient}, {exponent})")
        self._terms = [(float(c), float(b)) for c, b in terms]
        self.n = int(n)

    def terms(self):
        return list(self._terms)

    def to_json(self):
        return {
            "variant": self.variant,
            "n": self.n,
            "terms": [{"coefficient": c, "exponent": b} for c, b in self._terms],
        }


class DensityMeasure(Measure):
    """scale * density(z) (1 - |z|^2)^base_exponent dv for a pointwise nonnegative density."""

    variant = "density"

    def __init__(
        self,
        n: int,
        density: Density,
        base_exponent: float = 0.0,
        scale: float = 1.0,
        radial: bool = False,
        label: str = "",
    ):
        self.n = int(n)
        self._density = density
        self.base_exponent = float(base_exponent)
        self.scale = float(scale)
        self.radial = radial
        self.label = label

    def terms(self):
        return [(self.scale, self.base_exponent)]

    def density(self, points, omz2):
        return np.asarray(self._density(points, omz2), dtype=float)

    def to_json(self):
        return {"variant": self.variant, "n": self.n, "label": self.label, "base_exponent": self.base_exponent}


class Restricted(Measure):
    """chi_E mu for a region E."""

    variant = "restricted"

    def __init__(self, base: Measure, region: Region):
        region.check(base.n)
        self.base = base
        self.region = region
        self.n = base.n
        self.atomic = base.atomic
        self.radial = base.radial and isinstance(region, (Annulus, CenteredBall, WholeBall))

    def atoms(self):
        points, weights = self.base.atoms()
        inside = self.region.contains(points, one_minus_norm_squared(points)) if points.size else np.zeros(0, bool)
        return points[inside], weights[inside]

    def terms(self):
        return self.base.terms()

    def density(self, points, omz2):
        return self.base.density(points, omz2)

    def to_json(self):
        return {"variant": self.variant, "measure": self.base.to_json(), "region": self.region.to_json()}


def measure_from_json(data: Dict[str, Any]) -> Measure:
    variant = data.get("variant")
    if variant == "point_masses":
        masses = data.get("masses", [])
        points = [BallPoint(coords_from_json(m["point"])) for m in masses]
        return PointMasses(points, [m["weight"] for m in masses], data.get("n"))
    if variant == "lattice_masses":
        return LatticeMasses(Lattice.from_json(data["lattice"]), data["exponent"], data.get("coefficient", 1.0))
    if variant == "weighted_volume":
        return WeightedVolume(data["beta"], data["n"])
    if variant == "radial_density":
        return RadialDensity([(t["coefficient"], t["exponent"]) for t in data["terms"]], data["n"])
    if variant == "restricted":
        return Restricted(measure_from_json(data["measure"]), region_from_json(data["region"]))
    raise ContractViolation(f"Unknown measure variant {variant!r}")


def restrict(measure: Measure, region: Region) -> Measure:
    return Restricted(measure, region)


def scaled(measure: Measure, factor: float) -> Measure:
    """factor * measure."""
    if not factor > 0:
        raise ContractViolation(f"Scaling factor must be positive, got {factor}")
    if isinstance(measure, PointMasses):
        points, weights = measure.atoms()
        return PointMasses([BallPoint(p) for p in points], list(weights * factor), measure.n)
    if isinstance(measure, LatticeMasses):
        return LatticeMasses(measure.lattice, measure.exponent, measure.coefficient * factor)
    if isinstance(measure, (WeightedVolume, RadialDensity)):
        return RadialDensity([(c * factor, b) for c, b in measure.terms()], measure.n)
    if isinstance(measure, DensityMeasure):
        return DensityMeasure(
            measure.n, measure._density, measure.base_exponent, measure.scale * factor, measure.radial, measure.label
        )
    if isinstance(measure, Restricted):
        return Restricted(scaled(measure.base, factor), measure.region)
    raise ContractViolation(f"Cannot scale a {measure.variant} measure")


def radial_mass(terms: Sequence[Tuple[float, float]], n: int, t_lo: float, t_hi: float) -> float:
    """Mass of sum c (1 - |z|^2)^beta dv over the shell 1 - |z|^2 in [t_lo, t_hi]."""
    total = 0.0
    for coefficient, exponent in terms:
        scale = n * beta_function(exponent + 1.0, n)
        total += coefficient * scale * (betainc(exponent + 1.0, n, t_hi) - betainc(exponent + 1.0, n, t_lo))
    return float(total)


def total_mass(measure: Measure, budget: int = DEFAULT_BUDGET, seed: int = 0) -> float:
    if measure.atomic:
        return float(np.sum(measure.atoms()[1]))
    if isinstance(measure, (WeightedVolume, RadialDensity)):
        return radial_mass(measure.terms(), measure.n, 0.0, 1.0)
    if isinstance(measure, Restricted) and isinstance(measure.base, (WeightedVolume, RadialDensity)):
        if isinstance(measure.region, Annulus):
            return radial_mass(measure.terms(), measure.n, 0.0, 1.0 - measure.region.rho**2)
        if isinstance(measure.region, CenteredBall):
            return radial_mass(measure.terms(), measure.n, 1.0 - measure.region.rho**2, 1.0)
    return integrate(measure, WholeBall(), None, budget, seed).value


def _unwrap(measure: Measure, region: Region) -> Tuple[Measure, Region]:
    while isinstance(measure, Restricted):
        region = Intersection([measure.region, region])
        measure = measure.base
    return measure, region


def _flatten(region: Region) -> List[Region]:
    if isinstance(region, Intersection):
        return [leaf for part in region.parts for leaf in _flatten(part)]
    return [region]


def _evaluate(integrand: Optional[Integrand], points: np.ndarray, omz2: np.ndarray) -> np.ndarray:
    if points.shape[0] == 0:
        return np.zeros(0)
    if integrand is None:
        return np.ones(points.shape[0])
    values = np.broadcast_to(np.asarray(integrand(points, omz2), dtype=float), (points.shape[0],))
    bad = np.isnan(values) | (values < 0)
    if bad.any():
        index = int(np.argmax(bad))
        raise ContractViolation(f"Integrand returned {values[index]} at z={points[index].tolist()}")
    return values


def _density(measure: Measure, points: np.ndarray, omz2: np.ndarray) -> np.ndarray:
    base = np.zeros(points.shape[0])
    for coefficient, exponent in measure.terms():
        base += coefficient * omz2**exponent
    extra = measure.density(points, omz2)
    return base if extra is None else base * extra


def integrate(
    measure: Measure,
    region: Region,
    integrand: Optional[Integrand] = None,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    truncation_level: int = DEFAULT_TRUNCATION_LEVEL,
    focus: Optional[Sequence[np.ndarray]] = None,
) -> IntegralEstimate:
    """
    Integrate integrand(z, 1 - |z|^2) against measure over region.

    focus lists sphere points near which the integrand concentrates; continuous quadrature then refines the
    angular sampling there when the region itself gives no angular bound.
    """
    region.check(measure.n)
    if budget < MIN_BUDGET:
        raise ContractViolation(f"Quadrature budget must be at least {MIN_BUDGET}, got {budget}")
    measure, region = _unwrap(measure, region)
    if measure.atomic:
        return _integrate_atoms(measure, region, integrand)
    parts = _flatten(region)
    balls = [part for part in parts if isinstance(part, BergmanBall)]
    if balls:
        rest = [part for part in parts if part is not balls[0]]
        return _integrate_moebius(measure, balls[0], rest, integrand, budget, seed)
    return _integrate_shells(measure, region, integrand, budget, seed, truncation_level, focus)


def _integrate_atoms(measure: Measure, region: Region, integrand: Optional[Integrand]) -> IntegralEstimate:
    points, weights = measure.atoms()
    if points.shape[0] == 0:
        return exact_estimate(0.0)
    omz2 = one_minus_norm_squared(points)
    inside = region.contains(points, omz2)
    values = _evaluate(integrand, points[inside], omz2[inside])
    with np.errstate(invalid="ignore", over="ignore"):
        total = float(np.sum(weights[inside] * values))
    return exact_estimate(total, samples_used=int(inside.sum()), diverged=not math.isfinite(total))


def _integrate_moebius(
    measure: Measure,
    ball: BergmanBall,
    rest: List[Region],
    integrand: Optional[Integrand],
    budget: int,
    seed: int,
) -> IntegralEstimate:
    n = measure.n
    center = ball.center.coords
    radius = math.tanh(ball.r)
    per_stratum = max(8, budget // MOEBIUS_STRATA)
    volume = radius ** (2 * n) / MOEBIUS_STRATA
    scale = ball.center.one_minus_norm_squared

    def stratum(k: int) -> Tuple[float, float]:
        rng = stream(seed, STREAM_MOEBIUS, k)
        fraction = (k + rng.random(per_stratum)) / MOEBIUS_STRATA
        u = (radius * fraction ** (1.0 / (2 * n)))[:, None] * sphere_array(rng, per_stratum, n)
        z = moebius(center, u)
        omz2 = moebius_one_minus(center, u)
        inside = np.ones(per_stratum, dtype=bool)
        for part in rest:
            inside &= part.contains(z, omz2)
        g = np.zeros(per_stratum)
        if inside.any():
            zi, ti, ui = z[inside], omz2[inside], u[inside]
            jacobian = (scale / np.abs(1.0 - ui @ np.conj(center)) ** 2) ** (n + 1)
            with np.errstate(invalid="ignore", over="ignore"):
                g[inside] = _density(measure, zi, ti) * _evaluate(integrand, zi, ti) * jacobian
        return volume * float(np.mean(g)), volume**2 * float(np.var(g, ddof=1)) / per_stratum

    results = parallel_map(stratum, list(range(MOEBIUS_STRATA)))
    value = float(sum(v for v, _ in results))
    variance = float(sum(s for _, s in results))
    diverged = not math.isfinite(value)
    return IntegralEstimate(
        value=value,
        std_error=math.sqrt(variance) if math.isfinite(variance) else math.inf,
        samples_used=per_stratum * MOEBIUS_STRATA,
        diverged=diverged,
        levels=(value,),
    )


@dataclass(frozen=True)
class _Shell:
    index: int
    t_lo: float
    t_hi: float
    count: int


def shell_edges(truncation_level: int) -> List[float]:
    return [0.0] + [1.0 - 2.0**-j for j in range(1, truncation_level + 1)]


def growth_diverged(levels: Sequence[float]) -> bool:
    """True when each of the last three truncation levels grows by more than a factor 2."""
    if len(levels) < GROWTH_STEPS + 1:
        return False
    tail = levels[-(GROWTH_STEPS + 1) :]
    return all(prev > 0 and nxt > GROWTH_FACTOR * prev for prev, nxt in zip(tail, tail[1:]))


def _integrate_shells(
    measure: Measure,
    region: Region,
    integrand: Optional[Integrand],
    budget: int,
    seed: int,
    truncation_level: int,
    focus: Optional[Sequence[np.ndarray]],
) -> IntegralEstimate:
    n = measure.n
    edges = shell_edges(truncation_level)
    truncation = edges[-1]
    rho_lo, rho_hi = region.radial_bounds()
    rho_hi = min(rho_hi, truncation)
    terms = measure.terms()

    candidates = []
    for j in range(truncation_level):
        a, b = max(edges[j], rho_lo), min(edges[j + 1], rho_hi)
        if a >= b:
            continue
        t_lo, t_hi = 1.0 - b * b, 1.0 - a * a
        box = region.angular_box(a)
        weight = radial_mass(terms, n, t_lo, t_hi) * (box.mass if box is not None else 1.0)
        candidates.append((j, t_lo, t_hi, weight))
    total_weight = sum(w for *_, w in candidates)
    floor = max(8, budget // (4 * truncation_level))
    shells = [
        _Shell(j, t_lo, t_hi, max(floor, int(round(budget * w / total_weight)) if total_weight > 0 else floor))
        for j, t_lo, t_hi, w in candidates
    ]

    def evaluate_shell(shell: _Shell) -> Tuple[float, float]:
        rng = stream(seed, STREAM_SHELL, shell.index)
        m = shell.count
        t = rng.uniform(shell.t_lo, shell.t_hi, m)
        box = region.angular_box(math.sqrt(1.0 - shell.t_hi))
        if box is not None:
            directions = box.sample(rng, m)
            angular = np.full(m, box.mass)
        elif focus:
            mixture = SphereMixture(n, focused_boxes(focus, max(shell.t_lo, 2.0**-truncation_level)))
            sample = mixture.sample(rng, m)
            directions, angular = sample.points, sample.weights
        else:
            directions = sphere_array(rng, m, n)
            angular = np.ones(m)
        z = np.sqrt(1.0 - t)[:, None] * directions
        inside = region.contains(z, t)
        g = np.zeros(m)
        if inside.any():
            zi, ti = z[inside], t[inside]
            with np.errstate(invalid="ignore", over="ignore"):
                g[inside] = (
                    n * (1.0 - ti) ** (n - 1) * _density(measure, zi, ti) * _evaluate(integrand, zi, ti) * angular[inside]
                )
        length = shell.t_hi - shell.t_lo
        with np.errstate(invalid="ignore", over="ignore"):
            return length * float(np.mean(g)), length**2 * float(np.var(g, ddof=1)) / m

    results = dict(zip((s.index for s in shells), parallel_map(evaluate_shell, shells)))
    levels: List[float] = []
    running = 0.0
    variance = 0.0
    for j in range(truncation_level):
        value, var = results.get(j, (0.0, 0.0))
        running += value
        variance += var
        levels.append(running)
    diverged = not math.isfinite(running) or growth_diverged(levels)
    if diverged:
        logger.warning("Quadrature flagged as divergent at truncation radius %s", truncation)
    return IntegralEstimate(
        value=float(running),
        std_error=math.sqrt(variance) if math.isfinite(variance) else math.inf,
        samples_used=sum(s.count for s in shells),
        truncation_radius=truncation,
        diverged=diverged,
        levels=tuple(levels),
        flags=("growth",) if diverged and math.isfinite(running) else (),
    )


def ball_masses(
    measure: Measure,
    points: np.ndarray,
    r: float,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    profile: Optional["MuHatProfile"] = None,
) -> np.ndarray:
    """mu(D(z, r)) for every row z of points."""
    if not r > 0:
        raise ContractViolation(f"Bergman radius must be positive, got {r}")
    points = np.asarray(points, dtype=complex).reshape(-1, measure.n)
    if measure.atomic:
        atoms, weights = measure.atoms()
        masses = np.zeros(points.shape[0])
        if atoms.shape[0] == 0:
            return masses
        for start in range(0, points.shape[0], CHUNK):
            block = bergman_distance_matrix(points[start : start + CHUNK], atoms)
            masses[start : start + block.shape[0]] = (block < r) @ weights
        return masses
    if measure.radial:
        profile = profile if profile is not None and profile.r == r else MuHatProfile.build(measure, r, budget, seed)
        return profile.masses_at(one_minus_norm_squared(points))
    return np.array([integrate(measure, BergmanBall(BallPoint(z), r), None, budget, seed).value for z in points])


def _check_mu_hat(n: int, r: float, alpha: float) -> None:
    if not 0 < r < 1:
        raise ContractViolation(f"mu_hat radius must lie in (0, 1), got {r}")
    if not alpha > -n - 1:
        raise ContractViolation(f"mu_hat needs alpha > -n-1, got {alpha}")


def mu_hat(measure: Measure, z: BallPoint, r: float, alpha: float, budget: int = DEFAULT_BUDGET, seed: int = 0) -> float:
    """mu(D(z, r)) / (1 - |z|^2)^(2n+1+alpha)."""
    _check_mu_hat(z.n, r, alpha)
    if measure.atomic:
        mass = float(ball_masses(measure, z.coords[None, :], r)[0])
    else:
        mass = integrate(measure, BergmanBall(z, r), None, budget, seed).value
    return mass / z.one_minus_norm_squared ** (2 * z.n + 1 + alpha)


def mu_hat_array(
    measure: Measure,
    points: np.ndarray,
    r: float,
    alpha: float,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    profile: Optional["MuHatProfile"] = None,
) -> np.ndarray:
    n = measure.n
    _check_mu_hat(n, r, alpha)
    points = np.asarray(points, dtype=complex).reshape(-1, n)
    return ball_masses(measure, points, r, budget, seed, profile) / one_minus_norm_squared(points) ** (2 * n + 1 + alpha)


@dataclass(frozen=True)
class MuHatProfile:
    """
    mu(D(z, r)) of a radial measure tabulated against log(1 - |z|^2), interpolated log-log between nodes
    and extrapolated along the end slopes. All nodes share one random stream.
    """

    r: float
    log_t: np.ndarray
    masses: np.ndarray

    @classmethod
    def build(cls, measure: Measure, r: float, budget: int = DEFAULT_BUDGET, seed: int = 0, nodes: int = 48):
        if not measure.radial or measure.atomic:
            raise ContractViolation(f"Profiles need a radial continuous measure, got {measure.variant}")
        log_t = np.linspace(math.log(2.0 ** -(DEFAULT_TRUNCATION_LEVEL + 4)), 0.0, nodes)
        axis = np.eye(measure.n, dtype=complex)[0]
        per_node = max(MIN_BUDGET, budget // 8)
        masses = np.array(
            [
                integrate(measure, BergmanBall(BallPoint(math.sqrt(-math.expm1(lt)) * axis), r), None, per_node, seed).value
                for lt in log_t
            ]
        )
        return cls(r=r, log_t=log_t, masses=masses)

    def masses_at(self, omz2: np.ndarray) -> np.ndarray:
        x = np.log(np.asarray(omz2, dtype=float))
        if not np.all(self.masses > 0):
            return np.interp(x, self.log_t, self.masses)
        y = np.log(self.masses)
        values = np.interp(x, self.log_t, y)
        low = x < self.log_t[0]
        if low.any():
            slope = (y[1] - y[0]) / (self.log_t[1] - self.log_t[0])
            values[low] = y[0] + slope * (x[low] - self.log_t[0])
        return np.exp(values)


def sample_sphere(n: int, count: int, seed: int) -> List[SpherePoint]:
    if count < 1:
        raise ContractViolation(f"sample_sphere needs count >= 1, got {count}")
    return [SpherePoint(row) for row in sphere_array(stream(seed, STREAM_SPHERE), count, n)]
