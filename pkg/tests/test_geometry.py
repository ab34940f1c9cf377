import math

import numpy as np
import pytest

from tentlablib.errors import ContractViolation
from tentlablib.geometry import (
    Annulus,
    BallPoint,
    BergmanBall,
    Koranyi,
    SpherePoint,
    bergman_metric,
    bergman_metric_to,
    cap_measure,
    cap_measure_exact,
    in_region,
    involution,
    moebius,
    region_from_json,
    rotate,
    unitary,
    widen_aperture,
)
from tentlablib.sampling import ball_array, stream


def test_geometry_ball_point_rejects_boundary():
    with pytest.raises(ContractViolation):
        BallPoint([1.0])
    with pytest.raises(ContractViolation):
        BallPoint([0.8, 0.7])


def test_geometry_sphere_point_normalizes():
    xi = SpherePoint([3.0, 4.0j])
    assert np.linalg.norm(xi.coords) == pytest.approx(1.0)
    assert xi.coords[0] == pytest.approx(0.6)
    with pytest.raises(ContractViolation):
        SpherePoint([0.0, 0.0])


def test_geometry_moebius_fixes_and_swaps():
    a = np.array([0.3 + 0.2j, -0.1j])
    assert np.allclose(moebius(a, np.zeros(2)), a)
    assert np.allclose(moebius(a, a), 0.0)
    assert np.allclose(moebius(np.zeros(2), a), -a)


def test_geometry_moebius_is_an_involution():
    rng = stream(3, 1)
    a = ball_array(rng, 50, 2, radius=0.9)
    z = ball_array(rng, 50, 2, radius=0.9)
    assert np.allclose(moebius(a, moebius(a, z)), z, atol=1e-10)
    point = involution(BallPoint(a[0]), BallPoint(z[0]))
    assert np.allclose(point.coords, moebius(a[0], z[0]))


def test_geometry_metric_from_origin():
    z = BallPoint([0.6, 0.0])
    assert bergman_metric(BallPoint.origin(2), z) == pytest.approx(math.atanh(0.6))


def test_geometry_metric_is_moebius_invariant():
    rng = stream(5, 2)
    a, z, w = (ball_array(rng, 200, 2, radius=0.95) for _ in range(3))
    before = bergman_metric_to(z, w)
    after = bergman_metric_to(moebius(a, z), moebius(a, w))
    assert np.allclose(before, after, rtol=1e-8, atol=1e-8)


def test_geometry_metric_is_unitarily_invariant():
    u = unitary(2, 11)
    assert np.allclose(u @ np.conj(u).T, np.eye(2))
    z, w = BallPoint([0.2, 0.5j]), BallPoint([-0.4, 0.1])
    assert bergman_metric(rotate(z, u), rotate(w, u)) == pytest.approx(bergman_metric(z, w))


def test_geometry_koranyi_membership():
    region = Koranyi(SpherePoint([1.0]), 2.0)
    assert in_region(BallPoint([0.3]), region)
    assert in_region(BallPoint([0.99]), region)
    assert not in_region(BallPoint([-0.5]), region)
    with pytest.raises(ContractViolation):
        Koranyi(SpherePoint([1.0]), 1.0)


def test_geometry_region_from_json():
    region = region_from_json({"kind": "annulus", "rho": 0.5})
    assert isinstance(region, Annulus)
    assert in_region(BallPoint([0.7]), region)
    assert not in_region(BallPoint([0.2]), region)
    with pytest.raises(ContractViolation):
        region_from_json({"kind": "square"})


def test_geometry_annulus_rejects_radius_one():
    with pytest.raises(ContractViolation):
        Annulus(1.0)


def test_geometry_cap_measure_exact_closed_form():
    rho = 0.5
    expected = math.acos(rho * (3 - rho**2) / 2) / math.pi
    assert cap_measure_exact(BallPoint([rho]), 2.0) == pytest.approx(expected)
    assert cap_measure_exact(BallPoint([0.0]), 2.0) == 0.0
    assert cap_measure_exact(BallPoint([0.0]), 3.0) == 1.0


def test_geometry_cap_measure_agrees_with_quadrature():
    z = BallPoint([0.6, 0.3j])
    estimate = cap_measure(z, 20000, seed=4)
    exact = cap_measure_exact(z)
    assert abs(estimate.value - exact) <= 4 * estimate.std_error + 1e-3


def test_geometry_cap_measure_needs_samples():
    with pytest.raises(ContractViolation):
        cap_measure(BallPoint([0.5]), 10, seed=0)


def test_geometry_bergman_balls_are_nested():
    rng = stream(8, 1)
    center = BallPoint([0.4, -0.3j])
    points = ball_array(rng, 2000, 2, radius=0.99)
    small = BergmanBall(center, 0.5).contains(points)
    large = BergmanBall(center, 1.2).contains(points)
    assert small.any()
    assert np.all(large[small])
    assert large.sum() > small.sum()


def test_geometry_koranyi_regions_grow_with_aperture():
    rng = stream(8, 2)
    z = ball_array(rng, 1000, 2)
    xi = rng.standard_normal((1000, 2)) + 1j * rng.standard_normal((1000, 2))
    xi /= np.linalg.norm(xi, axis=1, keepdims=True)
    gap = np.abs(1.0 - np.sum(z * np.conj(xi), axis=1))
    omz2 = 1.0 - np.linalg.norm(z, axis=1) ** 2
    for gamma, wider in ((1.5, 2.0), (2.0, 3.0), (3.0, 8.0)):
        narrow_in = gap < 0.5 * gamma * omz2
        assert np.all((gap < 0.5 * wider * omz2)[narrow_in])


def test_geometry_koranyi_two_sided_comparability():
    rng = stream(8, 3)
    xi = SpherePoint([1.0, 0.0])
    z = ball_array(rng, 20000, 2)
    z = z[Koranyi(xi, 2.0).contains(z)]
    assert z.shape[0] > 100
    gap = np.abs(1.0 - z[:, 0])
    omz2 = 1.0 - np.linalg.norm(z, axis=1) ** 2
    assert np.all(gap < omz2)
    assert np.all(omz2 <= 2.0 * gap)


def test_geometry_cap_measure_is_rotation_invariant():
    z = BallPoint([0.6, 0.3j])
    moved = rotate(z, unitary(2, 3))
    first, second = cap_measure(z, 20000, seed=1), cap_measure(moved, 20000, seed=2)
    assert abs(first.value - second.value) <= 4 * math.hypot(first.std_error, second.std_error)
    assert cap_measure_exact(moved) == pytest.approx(cap_measure_exact(z))


def test_geometry_cap_measure_is_comparable_to_the_scale():
    quotients = []
    for rho in (0.5, 0.9, 0.99):
        z = BallPoint([rho])
        quotients.append(cap_measure(z, 20000, seed=5).value / z.one_minus_norm_squared)
    assert min(quotients) > 0
    assert max(quotients) / min(quotients) <= 10.0


def test_geometry_widen_aperture_contains_neighbourhoods():
    wide = widen_aperture(2.0, 0.5, 1, samples=2000, seed=1)
    assert wide > 2.0
    rng = stream(8, 4)
    xi = SpherePoint([1.0])
    z = ball_array(rng, 40000, 1)
    z = z[Koranyi(xi, 2.0).contains(z)]
    u = ball_array(rng, z.shape[0], 1, radius=math.tanh(0.5))
    inside = Koranyi(xi, wide).contains(moebius(z, u))
    assert inside.mean() >= 0.99


def test_geometry_widen_aperture_rejects_bad_input():
    with pytest.raises(ContractViolation):
        widen_aperture(1.0, 0.5, 1, samples=100, seed=0)
