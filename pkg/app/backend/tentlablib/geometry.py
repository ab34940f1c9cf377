import logging
import math
from abc import ABC, abstractmethod
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import quad
from scipy.stats import unitary_group

from .errors import ContractViolation, NumericalError
from .estimate import IntegralEstimate, exact_estimate
from .sampling import STREAM_APERTURE, STREAM_CAP, CapBox, ball_array, stream

logger = logging.getLogger("tentlab")

BALL_TOLERANCE = 1e-15
SPHERE_TOLERANCE = 1e-12

ArrayLike = Union[Sequence[complex], np.ndarray]


def coords_from_json(data: Sequence[Any]) -> np.ndarray:
    """Parse a JSON array of [re, im] pairs (bare numbers are read as real coordinates)."""
    values = []
    for entry in data:
        if isinstance(entry, (list, tuple)):
            if len(entry) != 2:
                raise ContractViolation(f"Expected an [re, im] pair, got {entry}")
            values.append(complex(float(entry[0]), float(entry[1])))
        else:
            values.append(complex(entry))
    return np.array(values, dtype=complex)


def coords_to_json(coords: np.ndarray) -> List[List[float]]:
    return [[float(c.real), float(c.imag)] for c in np.asarray(coords, dtype=complex)]


class BallPoint:
    """
    Class representing a point of the open unit ball of C^n.
    Attributes:
        coords (np.ndarray): The n complex coordinates
        n (int): The dimension
    """

    def __init__(self, coords: ArrayLike):
        self.coords = np.array(coords, dtype=complex).reshape(-1)
        self.n = self.coords.shape[0]
        if self.n < 1:
            raise ContractViolation("A ball point needs at least one coordinate")
        if not np.all(np.isfinite(self.coords)):
            raise ContractViolation(f"Ball point has non-finite coordinates {self.coords}")
        if self.norm >= 1.0 - BALL_TOLERANCE:
            raise ContractViolation(f"Point {self.coords} is not inside the unit ball (|z| = {self.norm!r})")
        self.coords.setflags(write=False)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.coords))

    @property
    def one_minus_norm_squared(self) -> float:
        return float(1.0 - np.vdot(self.coords, self.coords).real)

    def to_json(self) -> List[List[float]]:
        return coords_to_json(self.coords)

    @classmethod
    def from_json(cls, data: Sequence[Any]) -> "BallPoint":
        return cls(coords_from_json(data))

    @classmethod
    def origin(cls, n: int) -> "BallPoint":
        return cls(np.zeros(n, dtype=complex))

    def __repr__(self) -> str:
        return f"BallPoint({self.coords.tolist()})"


class SpherePoint:
    """
    Class representing a point of the unit sphere. The input is normalized once here.
    Attributes:
        coords (np.ndarray): The n complex coordinates, of norm one
        n (int): The dimension
    """

    def __init__(self, coords: ArrayLike):
        raw = np.array(coords, dtype=complex).reshape(-1)
        length = float(np.linalg.norm(raw))
        if raw.shape[0] < 1 or not math.isfinite(length) or length == 0.0:
            raise ContractViolation(f"Cannot place {raw} on the unit sphere")
        self.coords = raw / length
        self.n = self.coords.shape[0]
        if abs(float(np.linalg.norm(self.coords)) - 1.0) > SPHERE_TOLERANCE:
            raise NumericalError(f"Normalization of {raw} left the sphere")
        self.coords.setflags(write=False)

    def to_json(self) -> List[List[float]]:
        return coords_to_json(self.coords)

    @classmethod
    def from_json(cls, data: Sequence[Any]) -> "SpherePoint":
        return cls(coords_from_json(data))

    @classmethod
    def basis(cls, n: int, index: int = 0) -> "SpherePoint":
        return cls(np.eye(n, dtype=complex)[index])

    def __repr__(self) -> str:
        return f"SpherePoint({self.coords.tolist()})"


def _coords(point: Union[BallPoint, SpherePoint, ArrayLike]) -> np.ndarray:
    if isinstance(point, (BallPoint, SpherePoint)):
        return point.coords
    return np.asarray(point, dtype=complex)


def check_dimension(n: int, *points: Union[BallPoint, SpherePoint]) -> None:
    for point in points:
        if point.n != n:
            raise ContractViolation(f"Dimension mismatch: expected n={n}, got a point with n={point.n}")


def inner(z: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Hermitian inner product <z, w> = sum z_j conj(w_j) over the last axis."""
    return np.sum(np.asarray(z) * np.conj(np.asarray(w)), axis=-1)


def one_minus_norm_squared(z: np.ndarray) -> np.ndarray:
    return 1.0 - np.sum(np.abs(z) ** 2, axis=-1)


def moebius(a: np.ndarray, z: np.ndarray) -> np.ndarray:
    """
    The involution phi_a(z) = (a - P_a z - s_a Q_a z) / (1 - <z, a>), broadcast over leading axes.
    P_a is the orthogonal projection onto the line through a and s_a = sqrt(1 - |a|^2).
    """
    a = np.asarray(a, dtype=complex)
    z = np.asarray(z, dtype=complex)
    aa = np.sum(np.abs(a) ** 2, axis=-1)[..., None]
    za = inner(z, a)[..., None]
    projection = np.divide(za * a, aa, out=np.zeros(np.broadcast(za * a, aa).shape, dtype=complex), where=aa > 0)
    return (a - projection - np.sqrt(1.0 - aa) * (z - projection)) / (1.0 - za)


def moebius_one_minus(a: np.ndarray, z: np.ndarray) -> np.ndarray:
    """1 - |phi_a(z)|^2 from the product formula, accurate near the sphere."""
    za = inner(np.asarray(z, dtype=complex), np.asarray(a, dtype=complex))
    return one_minus_norm_squared(a) * one_minus_norm_squared(z) / np.abs(1.0 - za) ** 2


def involution(a: BallPoint, z: BallPoint) -> BallPoint:
    check_dimension(a.n, z)
    image = moebius(a.coords, z.coords)
    if float(np.linalg.norm(image)) >= 1.0:
        raise NumericalError(f"Involution phi_{a.coords.tolist()} sent {z.coords.tolist()} outside the ball")
    return BallPoint(image)


def _metric_from_parts(x: np.ndarray, one_minus: np.ndarray) -> np.ndarray:
    # artanh(x) written as log1p(x) - log(1 - x^2)/2 with 1 - x^2 taken from the product formula
    with np.errstate(divide="ignore"):
        return np.maximum(np.log1p(x) - 0.5 * np.log(one_minus), 0.0)


def bergman_metric(z: BallPoint, w: BallPoint) -> float:
    check_dimension(z.n, w)
    x = np.linalg.norm(moebius(z.coords, w.coords))
    return float(_metric_from_parts(x, moebius_one_minus(z.coords, w.coords)))


def bergman_metric_to(center: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Bergman distance from one center to each row of points."""
    center = np.asarray(center, dtype=complex)
    x = np.linalg.norm(moebius(center, points), axis=-1)
    return _metric_from_parts(x, moebius_one_minus(center, points))


def bergman_distance_matrix(first: np.ndarray, second: np.ndarray) -> np.ndarray:
    """Pairwise Bergman distances between the rows of two point arrays."""
    first = np.asarray(first, dtype=complex)
    second = np.asarray(second, dtype=complex)
    gram = first @ np.conj(second).T
    one_minus = np.outer(one_minus_norm_squared(first), one_minus_norm_squared(second)) / np.abs(1.0 - gram) ** 2
    one_minus = np.clip(one_minus, 0.0, 1.0)
    return _metric_from_parts(np.sqrt(1.0 - one_minus), one_minus)


def radius_from_origin(distance: float) -> float:
    """Euclidean radius of the Bergman sphere of the given radius around 0."""
    return math.tanh(distance)


def distance_from_origin(radius: float) -> float:
    return math.atanh(radius)


def unitary(n: int, seed: int) -> np.ndarray:
    """A Haar-random unitary n x n matrix."""
    rng = stream(seed, STREAM_CAP, n)
    if n == 1:
        return np.array([[np.exp(1j * rng.uniform(-math.pi, math.pi))]])
    return unitary_group.rvs(n, random_state=rng)


def rotate(point: Union[BallPoint, SpherePoint], matrix: np.ndarray):
    image = np.asarray(matrix, dtype=complex) @ point.coords
    return type(point)(image)


class Region(ABC):
    """
    A region of the ball over which measures are integrated.
    Subclasses evaluate their defining strict inequality on arrays of points and give the radial
    and angular bounds that the quadrature engine uses to place samples.
    """

    kind = ""
    n: Optional[int] = None

    @abstractmethod
    def contains(self, points: np.ndarray, omz2: Optional[np.ndarray] = None) -> np.ndarray:
        """Membership of each row of points. omz2, when given, is 1 - |z|^2 computed by the caller."""

    def radial_bounds(self) -> Tuple[float, float]:
        """Euclidean radii (lo, hi) such that every member has lo <= |z| <= hi."""
        return 0.0, 1.0

    def angular_box(self, rho_lo: float) -> Optional[CapBox]:
        """A box holding the directions z/|z| of all members with |z| >= rho_lo, if one is known."""
        return None

    @abstractmethod
    def to_json(self) -> Dict[str, Any]:
        pass

    def check(self, n: int) -> None:
        if self.n is not None and self.n != n:
            raise ContractViolation(f"Region {self.kind} lives in dimension {self.n}, not {n}")

    @staticmethod
    def _omz2(points: np.ndarray, omz2: Optional[np.ndarray]) -> np.ndarray:
        return one_minus_norm_squared(points) if omz2 is None else omz2


class WholeBall(Region):
    kind = "whole_ball"

    def contains(self, points, omz2=None):
        return np.ones(np.asarray(points).shape[0], dtype=bool)

    def to_json(self):
        return {"kind": self.kind}


class Koranyi(Region):
    """The approach region {|1 - <z, xi>| < (gamma/2)(1 - |z|^2)}."""

    kind = "koranyi"

    def __init__(self, xi: SpherePoint, gamma: float):
        if not gamma > 1:
            raise ContractViolation(f"Koranyi aperture must exceed 1, got {gamma}")
        self.xi = xi
        self.gamma = float(gamma)
        self.n = xi.n

    def contains(self, points, omz2=None):
        omz2 = self._omz2(points, omz2)
        return np.abs(1.0 - points @ np.conj(self.xi.coords)) < 0.5 * self.gamma * omz2

    def radial_bounds(self):
        return max(0.0, 2.0 / self.gamma - 1.0), 1.0

    def angular_box(self, rho_lo):
        return CapBox(self.xi.coords, 0.5 * self.gamma * (1.0 - rho_lo**2) + 1.0 - rho_lo)

    def to_json(self):
        return {"kind": self.kind, "xi": self.xi.to_json(), "gamma": self.gamma}


class NonisotropicBall(Region):
    """B_delta(xi) = {|1 - <z, xi>| < delta}."""

    kind = "nonisotropic_ball"

    def __init__(self, xi: SpherePoint, delta: float):
        if not delta > 0:
            raise ContractViolation(f"Nonisotropic radius must be positive, got {delta}")
        self.xi = xi
        self.delta = float(delta)
        self.n = xi.n

    def contains(self, points, omz2=None):
        return np.abs(1.0 - points @ np.conj(self.xi.coords)) < self.delta

    def radial_bounds(self):
        return max(0.0, 1.0 - self.delta), 1.0

    def angular_box(self, rho_lo):
        return CapBox(self.xi.coords, self.delta + 1.0 - rho_lo)

    def to_json(self):
        return {"kind": self.kind, "xi": self.xi.to_json(), "delta": self.delta}


class Tent(Region):
    """Q(u) = {|1 - <z, u/|u|>| < 1 - |u|^2}, with Q(0) the whole ball."""

    kind = "tent"

    def __init__(self, u: BallPoint):
        self.u = u
        self.n = u.n
        if u.norm == 0.0:
            self.base: Optional[NonisotropicBall] = None
        else:
            self.base = NonisotropicBall(SpherePoint(u.coords), u.one_minus_norm_squared)

    def contains(self, points, omz2=None):
        if self.base is None:
            return np.ones(np.asarray(points).shape[0], dtype=bool)
        return self.base.contains(points, omz2)

    def radial_bounds(self):
        return (0.0, 1.0) if self.base is None else self.base.radial_bounds()

    def angular_box(self, rho_lo):
        return None if self.base is None else self.base.angular_box(rho_lo)

    def to_json(self):
        return {"kind": self.kind, "u": self.u.to_json()}


class BergmanBall(Region):
    """D(center, r) = {beta(z, center) < r}."""

    kind = "bergman_ball"

    def __init__(self, center: BallPoint, r: float):
        if not r > 0:
            raise ContractViolation(f"Bergman ball radius must be positive, got {r}")
        self.center = center
        self.r = float(r)
        self.n = center.n

    def contains(self, points, omz2=None):
        return bergman_metric_to(self.center.coords, points) < self.r

    def radial_bounds(self):
        d = distance_from_origin(self.center.norm)
        return math.tanh(max(0.0, d - self.r)), math.tanh(d + self.r)

    def to_json(self):
        return {"kind": self.kind, "center": self.center.to_json(), "r": self.r}


class Annulus(Region):
    """The complement (rho B)^c = {|z| > rho}."""

    kind = "annulus"

    def __init__(self, rho: float):
        if not 0 <= rho < 1:
            raise ContractViolation(f"Annulus radius must lie in [0, 1), got {rho}")
        self.rho = float(rho)

    def contains(self, points, omz2=None):
        return np.linalg.norm(points, axis=-1) > self.rho

    def radial_bounds(self):
        return self.rho, 1.0

    def to_json(self):
        return {"kind": self.kind, "rho": self.rho}


class CenteredBall(Region):
    """rho B = {|z| < rho}."""

    kind = "centered_ball"

    def __init__(self, rho: float):
        if not 0 < rho <= 1:
            raise ContractViolation(f"Centered ball radius must lie in (0, 1], got {rho}")
        self.rho = float(rho)

    def contains(self, points, omz2=None):
        return np.linalg.norm(points, axis=-1) < self.rho

    def radial_bounds(self):
        return 0.0, self.rho

    def to_json(self):
        return {"kind": self.kind, "rho": self.rho}


class Intersection(Region):
    kind = "intersection"

    def __init__(self, parts: Sequence[Region]):
        if not parts:
            raise ContractViolation("An intersection needs at least one region")
        self.parts = list(parts)
        dimensions = {part.n for part in self.parts if part.n is not None}
        if len(dimensions) > 1:
            raise ContractViolation(f"Cannot intersect regions of dimensions {sorted(dimensions)}")
        self.n = dimensions.pop() if dimensions else None

    def contains(self, points, omz2=None):
        omz2 = self._omz2(points, omz2)
        inside = np.ones(np.asarray(points).shape[0], dtype=bool)
        for part in self.parts:
            inside &= part.contains(points, omz2)
        return inside

    def radial_bounds(self):
        bounds = [part.radial_bounds() for part in self.parts]
        return max(lo for lo, _ in bounds), min(hi for _, hi in bounds)

    def angular_box(self, rho_lo):
        boxes = [box for box in (part.angular_box(rho_lo) for part in self.parts) if box is not None]
        return min(boxes, key=lambda box: box.mass) if boxes else None

    def to_json(self):
        return {"kind": self.kind, "regions": [part.to_json() for part in self.parts]}


def region_from_json(data: Dict[str, Any]) -> Region:
    kind = data.get("kind")
    if kind == "whole_ball":
        return WholeBall()
    if kind == "koranyi":
        return Koranyi(SpherePoint.from_json(data["xi"]), data.get("gamma", 2.0))
    if kind == "nonisotropic_ball":
        return NonisotropicBall(SpherePoint.from_json(data["xi"]), data["delta"])
    if kind == "tent":
        return Tent(BallPoint.from_json(data["u"]))
    if kind == "bergman_ball":
        return BergmanBall(BallPoint.from_json(data["center"]), data["r"])
    if kind == "annulus":
        return Annulus(data["rho"])
    if kind == "centered_ball":
        return CenteredBall(data["rho"])
    if kind == "intersection":
        return Intersection([region_from_json(part) for part in data["regions"]])
    raise ContractViolation(f"Unknown region kind {kind!r}")


def in_region(z: BallPoint, region: Region) -> bool:
    region.check(z.n)
    return bool(region.contains(z.coords[None, :], np.array([z.one_minus_norm_squared]))[0])


def shadow_box(z: np.ndarray, gamma: float) -> Optional[CapBox]:
    """
    A box around z/|z| holding the shadow I(z) = {xi : z in Gamma_gamma(xi)}.
    Returns None when I(z) is empty (z = 0 and gamma <= 2).
    """
    z = np.asarray(z, dtype=complex)
    rho = float(np.linalg.norm(z))
    if rho == 0.0:
        return CapBox(np.eye(z.shape[0], dtype=complex)[0], 1.0) if gamma > 2 else None
    return CapBox(z / rho, 0.5 * gamma * (1.0 - rho**2) + 1.0 - rho)


def cap_measure(z: BallPoint, samples: int, seed: int, gamma: float = 2.0) -> IntegralEstimate:
    """Monte-Carlo estimate of sigma(I(z)), sampling inside a box that contains the shadow."""
    if samples < 1000:
        raise ContractViolation(f"cap_measure needs at least 1000 samples, got {samples}")
    if not gamma > 1:
        raise ContractViolation(f"Koranyi aperture must exceed 1, got {gamma}")
    box = shadow_box(z.coords, gamma)
    if box is None:
        return exact_estimate(0.0)
    if z.norm == 0.0:
        return exact_estimate(1.0)
    rng = stream(seed, STREAM_CAP)
    xi = box.sample(rng, samples)
    hits = np.abs(1.0 - xi @ np.conj(z.coords)) < 0.5 * gamma * z.one_minus_norm_squared
    fraction = float(np.mean(hits))
    flags: Tuple[str, ...] = ()
    if not hits.any():
        logger.warning("cap_measure found no hits at |z|=%s with %d samples", z.norm, samples)
        flags = ("zero_hits",)
    return IntegralEstimate(
        value=box.mass * fraction,
        std_error=box.mass * math.sqrt(fraction * (1.0 - fraction) / samples),
        samples_used=samples,
        flags=flags,
    )


def cap_measure_exact(z: BallPoint, gamma: float = 2.0) -> float:
    """
    sigma(I(z)) by one-dimensional quadrature. With w = <xi, z/|z|> = s e^{i phi}, membership only
    constrains phi, and s has density 2(n-1)s(1-s^2)^(n-2) on [0, 1] (a point mass at 1 when n = 1).
    """
    rho = z.norm
    if rho == 0.0:
        return 1.0 if gamma > 2 else 0.0
    c = 0.5 * gamma * (1.0 - rho**2)

    def arc(s: float) -> float:
        if s == 0.0:
            return 1.0 if c > 1.0 else 0.0
        return math.acos(min(1.0, max(-1.0, (1.0 + (rho * s) ** 2 - c**2) / (2.0 * rho * s)))) / math.pi

    if z.n == 1:
        return arc(1.0)
    n = z.n
    value, _ = quad(lambda s: arc(s) * 2.0 * (n - 1) * s * (1.0 - s * s) ** (n - 2), 0.0, 1.0, limit=200)
    return float(value)


def widen_aperture(gamma: float, r: float, n: int, samples: int, seed: int, max_doublings: int = 30) -> float:
    """
    An aperture gamma' such that every Bergman ball D(z, r) with z in Gamma_gamma(xi) lies in Gamma_gamma'(xi),
    found by doubling until all sampled witnesses are inside.
    """
    if not gamma > 1 or not r > 0:
        raise ContractViolation(f"widen_aperture needs gamma > 1 and r > 0, got gamma={gamma}, r={r}")
    rng = stream(seed, STREAM_APERTURE)
    xi = SpherePoint.basis(n)
    cone = Koranyi(xi, gamma)
    bases: List[np.ndarray] = []
    collected = 0
    for _ in range(100):
        t = 10.0 ** (-6.0 * rng.random(samples))
        rho = np.sqrt(1.0 - t)
        directions = np.empty((samples, n), dtype=complex)
        for i, rho_i in enumerate(rho):
            directions[i] = cone.angular_box(float(rho_i)).sample(rng, 1)[0]
        candidates = rho[:, None] * directions
        inside = candidates[cone.contains(candidates, t)]
        bases.append(inside)
        collected += inside.shape[0]
        if collected >= samples:
            break
    if collected == 0:
        raise NumericalError(f"Could not sample the cone of aperture {gamma}")
    z = np.concatenate(bases)[:samples]
    u = ball_array(rng, z.shape[0], n, radius=math.tanh(r))
    witnesses = moebius(z, u)
    omz2 = moebius_one_minus(z, u)
    wide = gamma
    for _ in range(max_doublings):
        if np.all(Koranyi(xi, wide).contains(witnesses, omz2)):
            logger.info("Aperture %s widened to %s for Bergman radius %s", gamma, wide, r)
            return wide
        wide *= 2.0
    raise NumericalError(f"No aperture up to {wide} contains the {r}-neighbourhood of the cone of aperture {gamma}")
