"""
Random streams and samplers for the unit sphere.

Every random draw in the package comes from `stream(seed, *counters)`. The counters form the spawn key of a
numpy SeedSequence, so each (seed, counters) pair names one independent, reproducible stream. Callers reserve
the first counter for the purpose (see the STREAM_* constants) and use the remaining counters as indices.
"""

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, TypeVar

import numpy as np

from .errors import ContractViolation

logger = logging.getLogger("tentlab")

THREADS_ENV = "TENTLAB_THREADS"

STREAM_SPHERE = 1
STREAM_SHELL = 2
STREAM_MOEBIUS = 3
STREAM_LATTICE = 4
STREAM_VERIFY = 5
STREAM_CAP = 6
STREAM_APERTURE = 7
STREAM_TAU = 8
STREAM_CONE = 9

# Nonisotropic caps at or above this radius are replaced by the whole sphere.
WHOLE_SPHERE_RADIUS = 0.5

T = TypeVar("T")
R = TypeVar("R")


def stream(seed: int, *counters: int) -> np.random.Generator:
    if not 0 <= int(seed) < 2**64:
        raise ContractViolation(f"Seed must be an unsigned 64-bit integer, got {seed}")
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(c) for c in counters)))


def derive_seed(seed: int, *counters: int) -> int:
    """A 64-bit seed for a sub-computation that runs its own streams."""
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(c) for c in counters))
    return int(sequence.generate_state(1, np.uint64)[0])


def worker_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return 1
    try:
        workers = int(raw)
    except ValueError:
        logger.warning("Ignoring %s=%r, expected a positive integer", THREADS_ENV, raw)
        return 1
    if workers < 1:
        logger.warning("Ignoring %s=%r, expected a positive integer", THREADS_ENV, raw)
        return 1
    return workers


def parallel_map(func: Callable[[T], R], items: Sequence[T], workers: Optional[int] = None) -> List[R]:
    """Map func over items, preserving order. Results do not depend on the worker count."""
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(func, items))


def sphere_array(rng: np.random.Generator, count: int, n: int) -> np.ndarray:
    """Draw count points from the normalized surface measure of the unit sphere in C^n."""
    g = rng.standard_normal((count, 2 * n))
    z = g[:, :n] + 1j * g[:, n:]
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def ball_array(rng: np.random.Generator, count: int, n: int, radius: float = 1.0) -> np.ndarray:
    """Draw count points uniformly (for normalized volume) from the ball of the given radius."""
    directions = sphere_array(rng, count, n)
    radii = radius * rng.random(count) ** (1.0 / (2 * n))
    return directions * radii[:, None]


class CapBox:
    """
    A polar box around a point of the sphere that contains the nonisotropic cap
    {xi : |1 - <xi, center>| < eps}. In terms of w = <xi, center> the box is
    {|w| >= 1 - eps, |arg w| <= arcsin(eps / (1 - eps))}, whose measure is known in closed form.
    For eps >= 1/2 the box is the whole sphere.
    """

    def __init__(self, center: np.ndarray, eps: float):
        self.center = np.asarray(center, dtype=complex)
        self.n = self.center.shape[0]
        self.eps = float(eps)
        self.whole = self.eps >= WHOLE_SPHERE_RADIUS
        if self.whole:
            self.modulus_floor = 0.0
            self.angle_limit = math.pi
            self.mass = 1.0
        else:
            self.modulus_floor = 1.0 - self.eps
            self.angle_limit = math.asin(self.eps / (1.0 - self.eps))
            self.mass = (1.0 - self.modulus_floor**2) ** (self.n - 1) * self.angle_limit / math.pi

    def contains(self, points: np.ndarray) -> np.ndarray:
        if self.whole:
            return np.ones(points.shape[0], dtype=bool)
        w = points @ np.conj(self.center)
        return (np.abs(w) >= self.modulus_floor) & (np.abs(np.angle(w)) <= self.angle_limit)

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        if self.whole:
            return sphere_array(rng, count, self.n)
        phase = rng.uniform(-self.angle_limit, self.angle_limit, count)
        if self.n == 1:
            return (np.exp(1j * phase) * self.center[0])[:, None]
        # 1 - |w|^2 has density proportional to x^(n-2) on the sphere
        x_max = 1.0 - self.modulus_floor**2
        x = x_max * rng.random(count) ** (1.0 / (self.n - 1))
        w = np.sqrt(1.0 - x) * np.exp(1j * phase)
        g = rng.standard_normal((count, self.n)) + 1j * rng.standard_normal((count, self.n))
        g -= (g @ np.conj(self.center))[:, None] * self.center[None, :]
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        return w[:, None] * self.center[None, :] + np.sqrt(x)[:, None] * g


@dataclass(frozen=True)
class SphereSample:
    """Points on the sphere with importance weights: the integral of F against sigma is mean(F * weights)."""

    points: np.ndarray
    weights: np.ndarray

    @property
    def count(self) -> int:
        return self.points.shape[0]

    def estimate(self, values: np.ndarray):
        """Return (estimate, standard error) of the sigma-integral of the sampled values."""
        terms = np.asarray(values, dtype=float) * self.weights
        mean = float(np.sum(terms) / self.count)
        if self.count < 2 or not np.all(np.isfinite(terms)):
            return mean, 0.0 if np.isfinite(mean) else math.inf
        return mean, float(np.std(terms, ddof=1) / math.sqrt(self.count))


class SphereMixture:
    """
    Deterministic mixture of polar boxes (and optionally the uniform law) on the sphere. Samples are
    allocated evenly across components and weighted by the balance heuristic, which keeps the estimator
    unbiased while concentrating samples where the boxes are.
    """

    def __init__(self, n: int, boxes: Sequence[CapBox], uniform: bool = True):
        self.n = n
        self.components: List[CapBox] = []
        if uniform:
            self.components.append(CapBox(np.eye(n, dtype=complex)[0], 1.0))
        self.components.extend(box for box in boxes if not (box.whole and uniform))
        if not self.components:
            self.components.append(CapBox(np.eye(n, dtype=complex)[0], 1.0))

    def allocation(self, count: int) -> List[int]:
        m = len(self.components)
        return [count // m + (1 if i < count % m else 0) for i in range(m)]

    def density(self, points: np.ndarray, allocation: Sequence[int]) -> np.ndarray:
        total = float(sum(allocation))
        q = np.zeros(points.shape[0])
        for box, share in zip(self.components, allocation):
            if share:
                q += (share / total) * box.contains(points) / box.mass
        return q

    def sample(self, rng: np.random.Generator, count: int) -> SphereSample:
        allocation = self.allocation(count)
        parts = [box.sample(rng, share) for box, share in zip(self.components, allocation) if share]
        points = np.concatenate(parts, axis=0)
        return SphereSample(points=points, weights=1.0 / self.density(points, allocation))


def focused_boxes(centers: Sequence[np.ndarray], finest: float) -> List[CapBox]:
    """Dyadic boxes of radius 1/4, 1/8, ... down to `finest` around every center."""
    boxes: List[CapBox] = []
    levels = max(2, int(math.ceil(-math.log2(max(finest, 1e-300)))))
    for center in centers:
        for m in range(2, levels + 1):
            boxes.append(CapBox(center, 2.0**-m))
    return boxes


def sample_sphere_array(
    n: int, count: int, seed: int, centers: Optional[Sequence[np.ndarray]] = None, finest: float = 2.0**-20
) -> SphereSample:
    """Sample the sphere uniformly, or with dyadic refinement around the given centers."""
    rng = stream(seed, STREAM_SPHERE)
    if not centers:
        points = sphere_array(rng, count, n)
        return SphereSample(points=points, weights=np.ones(count))
    return SphereMixture(n, focused_boxes(centers, finest)).sample(rng, count)
