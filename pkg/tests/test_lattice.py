import numpy as np
import pytest

from tentlablib.errors import ContractViolation
from tentlablib.geometry import bergman_distance_matrix
from tentlablib.lattice import (
    Lattice,
    build_lattice,
    euclidean_reach,
    greedy_separated,
    lattice_size_bound,
    mesh_candidates,
    verify_lattice,
)


def test_lattice_is_separated_and_covering(small_lattice):
    report = small_lattice.report
    assert report["covering_ok"]
    assert report["separation_ok"]
    assert small_lattice.overlap_bound >= 1
    assert np.all(np.linalg.norm(small_lattice.points, axis=1) < 1.0)


def test_lattice_origin_first(small_lattice):
    assert np.allclose(small_lattice.points[0], 0.0)


def test_lattice_separation_is_delta_over_two(small_lattice):
    distances = bergman_distance_matrix(small_lattice.points, small_lattice.points)
    np.fill_diagonal(distances, np.inf)
    assert distances.min() >= small_lattice.delta / 2 - 1e-12


def test_lattice_json_keeps_points(small_lattice):
    restored = Lattice.from_json(small_lattice.to_json())
    assert len(restored) == len(small_lattice)
    assert np.allclose(restored.points, small_lattice.points)
    assert restored.overlap_bound == small_lattice.overlap_bound


def test_lattice_reports_missing_points(small_lattice):
    sparse = small_lattice.without(list(range(1, len(small_lattice))))
    report = verify_lattice(sparse, samples=2000, seed=1)
    assert not report["covering_ok"]
    assert report["uncovered"] > 0


@pytest.mark.parametrize("kwargs", [{"delta": 1.0, "r_max": 2.0}, {"delta": 0.5, "r_max": 13.0}])
def test_lattice_rejects_bad_parameters(kwargs):
    with pytest.raises(ContractViolation):
        build_lattice(1, seed=0, **kwargs)


def test_lattice_needs_points():
    with pytest.raises(ContractViolation):
        Lattice(np.zeros((0, 1)), 0.5, 2.0)


@pytest.mark.parametrize("delta", [0.2, 0.5])
def test_lattice_reaches_bergman_radius_four(delta):
    lattice = build_lattice(1, delta, 4.0, seed=3, samples=4000)
    report = lattice.report
    assert report["covering_ok"]
    assert report["separation_ok"]
    assert len(lattice) >= 0.5 * lattice_size_bound(1, delta, 4.0)
    assert np.max(np.linalg.norm(lattice.points, axis=1)) > np.tanh(4.0 - delta)


def test_lattice_mesh_is_not_capped():
    candidates = mesh_candidates(1, 0.2, 4.0, seed=0)
    outer = np.isclose(np.linalg.norm(candidates, axis=1), np.tanh(4.0))
    # every ring keeps its full angular resolution
    assert outer.sum() > 100000


def test_lattice_greedy_pass_keeps_separation_and_order():
    candidates = mesh_candidates(1, 0.5, 2.0, seed=0)
    points = greedy_separated(candidates, None, 0.25)
    assert np.allclose(points[0], 0.0)
    distances = bergman_distance_matrix(points, points)
    np.fill_diagonal(distances, np.inf)
    assert distances.min() >= 0.25 - 1e-12
    nearest = bergman_distance_matrix(candidates, points).min(axis=1)
    assert nearest.max() < 0.25


def test_lattice_euclidean_reach_contains_bergman_ball():
    rng = np.random.default_rng(5)
    for n in (1, 2):
        z = 0.95 * rng.random((200, 1)) * np.exp(2j * np.pi * rng.random((200, n))) / np.sqrt(n)
        w = 0.999 * rng.random((200, 1)) * np.exp(2j * np.pi * rng.random((200, n))) / np.sqrt(n)
        inside = np.diag(bergman_distance_matrix(z, w)) < 3.0
        assert inside.any()
        gap = np.linalg.norm(z - w, axis=1)
        assert np.all(gap[inside] <= euclidean_reach(z, 3.0)[inside])


def test_lattice_two_dimensional_radius_four_is_refused():
    assert lattice_size_bound(2, 0.5, 4.0) > 1e8
    with pytest.raises(ContractViolation, match="at least"):
        build_lattice(2, 0.5, 4.0, seed=0)
