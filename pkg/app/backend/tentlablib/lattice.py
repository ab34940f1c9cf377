"""
Truncated delta-lattices in the Bergman metric.

A lattice is built as a greedy maximal delta/2-separated subset of a radial-angular mesh of the Bergman ball
{beta(0, z) <= r_max}, scanned in increasing |z| from the origin. Covering is then checked on random points of
{beta(0, z) <= r_max - delta}; uncovered witnesses are fed back to the greedy pass for a few repair rounds.

Neighbour searches go through a k-d tree on real coordinates. A Bergman ball D(z, d) sits inside the Euclidean
ball of radius euclidean_reach(z, d) around z, so tree hits are a superset that the exact metric then filters.
"""

import logging
import math
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import ndtri
from scipy.stats import qmc

from .errors import ContractViolation, LatticeCoverageError
from .geometry import bergman_distance_matrix, coords_from_json, coords_to_json, one_minus_norm_squared
from .sampling import STREAM_LATTICE, STREAM_VERIFY, sphere_array, stream

logger = logging.getLogger("tentlab")

MAX_TRUNCATION = 12.0
REPAIR_ROUNDS = 3
MESH_FRACTION = 8
HIGHER_MESH_FRACTION = 4
MAX_MESH_POINTS = 2**24
DENSE_LIMIT = 1024
CHUNK = 1024
REACH_SLACK = 1.0 + 1e-9


class Lattice:
    """
    Class representing a finite truncated delta-lattice.
    Attributes:
        points (np.ndarray): Lattice points a_k as rows, the origin first
        delta (float): Lattice parameter
        r_max (float): Bergman radius of the truncation around the origin
        overlap_bound (int): Observed maximum number of balls D(a_k, 4 delta) containing one point
        report (dict): Output of verify_lattice
    """

    def __init__(
        self,
        points: np.ndarray,
        delta: float,
        r_max: float,
        overlap_bound: int = 0,
        report: Optional[Dict[str, Any]] = None,
    ):
        self.points = np.array(points, dtype=complex)
        if self.points.ndim != 2 or self.points.shape[0] == 0:
            raise ContractViolation("A lattice needs a nonempty two-dimensional array of points")
        self.points.setflags(write=False)
        self.n = self.points.shape[1]
        self.delta = float(delta)
        self.r_max = float(r_max)
        self.overlap_bound = int(overlap_bound)
        self.report = dict(report or {})

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def omz2(self) -> np.ndarray:
        return one_minus_norm_squared(self.points)

    def without(self, indices) -> "Lattice":
        return Lattice(np.delete(self.points, indices, axis=0), self.delta, self.r_max)

    def to_json(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "delta": self.delta,
            "r_max": self.r_max,
            "overlap_bound": self.overlap_bound,
            "points": [coords_to_json(row) for row in self.points],
            "report": self.report,
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "Lattice":
        points = np.array([coords_from_json(row) for row in data["points"]], dtype=complex)
        return cls(points, data["delta"], data["r_max"], data.get("overlap_bound", 0), data.get("report"))



def lattice_size_bound(n: int, delta: float, r_max: float) -> float:
    """Lower bound on the size of a maximal delta/2-separated set in {beta(0, z) <= r_max}.

    Its delta/2-balls cover the truncation, and the invariant volume of D(0, r) is proportional to sinh(r)^(2n).
    """
    return (math.sinh(r_max) / math.sinh(delta / 2)) ** (2 * n)


def _real(points: np.ndarray) -> np.ndarray:
    return np.concatenate([points.real, points.imag], axis=1)


def euclidean_reach(points: np.ndarray, distance: float) -> np.ndarray:
    """Euclidean radius around each row that contains its Bergman ball of the given radius."""
    rho = math.tanh(distance)
    omz2 = one_minus_norm_squared(points)
    scale = omz2 if points.shape[1] == 1 else np.sqrt(omz2)
    return REACH_SLACK * rho * scale / (1.0 - rho * np.linalg.norm(points, axis=1))


def _mesh_step(n: int, delta: float) -> float:
    return delta / (MESH_FRACTION if n == 1 else HIGHER_MESH_FRACTION)


def _sphere_mesh(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    if n == 1:
        return np.exp(2j * math.pi * np.arange(count) / count)[:, None]
    sobol = qmc.Sobol(d=2 * n, scramble=True, seed=rng)
    u = sobol.random_base2(int(math.ceil(math.log2(max(count, 2)))))
    g = ndtri(np.clip(u, 1e-12, 1 - 1e-12))
    z = g[:, :n] + 1j * g[:, n:]
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def _mesh_levels(n: int, delta: float, r_max: float) -> List[Tuple[float, int]]:
    step = _mesh_step(n, delta)
    levels = []
    for j in range(1, int(math.ceil(r_max / step)) + 1):
        rho = math.tanh(min(j * step, r_max))
        tangential = 2 * math.pi * rho / (1 - rho * rho) / step
        count = int(math.ceil(tangential * (rho / math.sqrt(1 - rho * rho) / step) ** (2 * n - 2)))
        if n > 1:
            # Sobol sizes are powers of two
            count = 2 ** int(math.ceil(math.log2(max(count, 2))))
        levels.append((rho, count))
    return levels


def mesh_candidates(n: int, delta: float, r_max: float, seed: int) -> np.ndarray:
    """Mesh of the Bergman ball of radius r_max, ordered by increasing |z|."""
    levels = _mesh_levels(n, delta, r_max)
    total = 1 + sum(count for _, count in levels)
    if total > MAX_MESH_POINTS:
        raise ContractViolation(
            f"A {delta}-lattice of Bergman radius {r_max} in dimension {n} needs {total} mesh candidates "
            f"(limit {MAX_MESH_POINTS}) and at least {lattice_size_bound(n, delta, r_max):.3g} points"
        )
    rng = stream(seed, STREAM_LATTICE)
    mesh = [np.zeros((1, n), dtype=complex)]
    mesh.extend(rho * _sphere_mesh(n, count, rng) for rho, count in levels)
    return np.concatenate(mesh)


def _block(
    tree: cKDTree, candidates: np.ndarray, centers: np.ndarray, separation: float, blocked: np.ndarray
) -> None:
    hits = tree.query_ball_point(_real(centers), euclidean_reach(centers, separation))
    for center, found in zip(centers, hits):
        if found:
            found = np.asarray(found)
            close = bergman_distance_matrix(candidates[found], center[None, :])[:, 0] < separation
            blocked[found[close]] = True


def greedy_separated(candidates: np.ndarray, accepted: Optional[np.ndarray], separation: float) -> np.ndarray:
    """Append to accepted every candidate, in order, whose distance to all accepted points is >= separation."""
    n = candidates.shape[1]
    chosen: List[np.ndarray] = [] if accepted is None else list(accepted)
    if candidates.shape[0]:
        tree = cKDTree(_real(candidates))
        blocked = np.zeros(candidates.shape[0], dtype=bool)
        if chosen:
            _block(tree, candidates, np.array(chosen, dtype=complex), separation, blocked)
        for i in range(candidates.shape[0]):
            if blocked[i]:
                continue
            chosen.append(candidates[i])
            _block(tree, candidates, candidates[i : i + 1], separation, blocked)
    return np.array(chosen, dtype=complex).reshape(-1, n)


def covering_sample(n: int, radius: float, samples: int, rng: np.random.Generator) -> np.ndarray:
    """Points of {beta(0, z) <= radius} drawn from the invariant measure restricted to that ball."""
    b = np.arcsinh(rng.random(samples) ** (1.0 / (2 * n)) * math.sinh(max(radius, 0.0)))
    return np.tanh(b)[:, None] * sphere_array(rng, samples, n)


def _nearby(
    tree: cKDTree, points: np.ndarray, queries: np.ndarray, distance: float, skip_self: bool = False
) -> Tuple[np.ndarray, np.ndarray]:
    """Nearest Bergman distance to points and the count closer than distance, per query row.

    Only points inside the Euclidean reach are examined, so a query with nothing in reach reports inf.
    """
    nearest = np.full(queries.shape[0], math.inf)
    counts = np.zeros(queries.shape[0], dtype=int)
    hits = tree.query_ball_point(_real(queries), euclidean_reach(queries, distance))
    for i, found in enumerate(hits):
        if skip_self:
            found = [j for j in found if j != i]
        if not found:
            continue
        d = bergman_distance_matrix(points[found], queries[i : i + 1])[:, 0]
        nearest[i] = float(d.min())
        counts[i] = int((d < distance).sum())
    return nearest, counts


def _min_separation(lattice: Lattice, tree: cKDTree) -> float:
    if len(lattice) < 2:
        return math.inf
    if len(lattice) <= DENSE_LIMIT:
        block = bergman_distance_matrix(lattice.points, lattice.points)
        np.fill_diagonal(block, math.inf)
        return float(block.min())
    return float(_nearby(tree, lattice.points, lattice.points, 2 * lattice.delta, skip_self=True)[0].min())


def _verify(lattice: Lattice, samples: int, seed: int) -> Tuple[Dict[str, Any], np.ndarray]:
    tree = cKDTree(_real(lattice.points))
    separation = _min_separation(lattice, tree)
    rng = stream(seed, STREAM_VERIFY)
    zs = covering_sample(lattice.n, lattice.r_max - lattice.delta, samples, rng)
    nearest, counts = _nearby(tree, lattice.points, zs, 4 * lattice.delta)
    uncovered = np.flatnonzero(nearest >= lattice.delta)
    report: Dict[str, Any] = {
        "covering_ok": bool(uncovered.size == 0),
        "min_pairwise_separation": separation if math.isfinite(separation) else None,
        "separation_ok": bool(separation >= lattice.delta / 2),
        "max_overlap_observed": int(counts.max()) if samples else 0,
        "uncovered": int(uncovered.size),
        "samples": samples,
        "points": len(lattice),
    }
    if uncovered.size:
        worst = int(uncovered[np.argmax(nearest[uncovered])])
        report["witness"] = coords_to_json(zs[worst])
        report["witness_distance"] = float(nearest[worst]) if math.isfinite(nearest[worst]) else None
    return report, zs[uncovered]


def verify_lattice(lattice: Lattice, samples: int = 10000, seed: int = 0) -> Dict[str, Any]:
    """Check separation, covering and overlap of a lattice. Failures are recorded, never raised."""
    return _verify(lattice, samples, seed)[0]


def build_lattice(n: int, delta: float, r_max: float, seed: int, samples: int = 10000) -> Lattice:
    if n < 1:
        raise ContractViolation(f"Dimension must be positive, got {n}")
    if not 0 < delta < 1:
        raise ContractViolation(f"Lattice delta must lie in (0, 1), got {delta}")
    if not 0 < r_max <= MAX_TRUNCATION:
        raise ContractViolation(f"Lattice truncation must lie in (0, {MAX_TRUNCATION}], got {r_max}")
    candidates = mesh_candidates(n, delta, r_max, seed)
    logger.info("Building %s-lattice in dimension %d from %d mesh candidates", delta, n, candidates.shape[0])
    points = greedy_separated(candidates, None, delta / 2)
    for repair in range(REPAIR_ROUNDS + 1):
        report, witnesses = _verify(Lattice(points, delta, r_max), samples, seed + repair)
        if report["covering_ok"]:
            break
        if repair == REPAIR_ROUNDS:
            raise LatticeCoverageError(report["witness"], report["witness_distance"] or math.inf)
        logger.info("Lattice repair round %d: %d uncovered witnesses", repair + 1, report["uncovered"])
        witnesses = witnesses[np.argsort(np.linalg.norm(witnesses, axis=1), kind="stable")]
        points = greedy_separated(witnesses, points, delta / 2)
    logger.info("Lattice has %d points, observed overlap %d", points.shape[0], report["max_overlap_observed"])
    return Lattice(points, delta, r_max, max(1, report["max_overlap_observed"]), report)
