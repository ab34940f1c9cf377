import math

import numpy as np
import pytest

from tentlablib.errors import ContractViolation
from tentlablib.functionals import (
    G_functional,
    G_statistic,
    U_functional,
    V_functional,
    compactness_evaluators,
    discretization_check,
    eta_sequence,
    kernel_necessity,
    necessity_test,
    nu_statistic,
)
from tentlablib.geometry import BallPoint, SpherePoint
from tentlablib.lattice import build_lattice
from tentlablib.measures import LatticeMasses, PointMasses, scaled
from tentlablib.norms import SeqCoefficients, seq_tent_norm, sequence_sample
from tentlablib.params import TentParams

PARAMS = TentParams(p=2, q=2, s=2, t=2)
SUB_QUADRATIC = TentParams(p=3, q=2, s=2, t=2)
Q_ABOVE_S = TentParams(p=3, q=2, s=1, t=2)


@pytest.fixture(scope="module")
def deep_lattice():
    return build_lattice(1, 0.4, 3.5, seed=11, samples=2000)


@pytest.fixture(scope="module")
def tiny_lattice():
    return build_lattice(1, 0.5, 1.0, seed=5, samples=1000)


def _atoms():
    return PointMasses([BallPoint([0.6]), BallPoint([0.4j]), BallPoint([-0.3 + 0.3j])], [1.0, 0.5, 2.0])


def test_functionals_zero_measure_is_finite(zero_measure):
    statistic = G_statistic(zero_measure, PARAMS, budget=1000, xi_count=4)
    assert statistic["values"] == [0.0, 0.0, 0.0, 0.0]
    assert statistic["decision"] == "finite"


def test_functionals_atom_at_origin():
    measure = PointMasses([BallPoint.origin(1)], [1.0])
    statistic = G_statistic(measure, PARAMS, budget=1000, xi_count=4)
    assert statistic["values"] == pytest.approx([1.0, 1.0, 1.0, 1.0])
    assert statistic["value"] == pytest.approx(1.0)


def test_functionals_compactness_of_interior_atom():
    measure = PointMasses([BallPoint.origin(1)], [1.0])
    report = compactness_evaluators(measure, PARAMS, budget=1000)
    assert report["case"] == "case1"
    assert report["values"] == [0.0, 0.0, 0.0]
    assert report["trend"] == "decreasing"


def test_functionals_compactness_radii_must_increase(zero_measure):
    with pytest.raises(ContractViolation):
        compactness_evaluators(zero_measure, PARAMS, radii=(0.9, 0.5))


def test_functionals_V_sees_atoms_in_the_cone_only():
    measure = PointMasses([BallPoint([0.6])], [1.0])
    # eta exponent vanishes for q = s, so the atom contributes mu_hat = 1 / 0.64^3 at itself
    inside = V_functional(measure, SpherePoint([1.0]), SUB_QUADRATIC, seed=1)
    assert inside >= 1.0 / 0.64**3
    assert V_functional(measure, SpherePoint([-1.0]), SUB_QUADRATIC, seed=1) == 0.0


def test_functionals_V_is_linear_and_monotone(zero_measure):
    xi = SpherePoint([1.0])
    measure = _atoms()
    base = V_functional(measure, xi, SUB_QUADRATIC, seed=2)
    assert V_functional(zero_measure, xi, SUB_QUADRATIC, seed=2) == 0.0
    assert V_functional(scaled(measure, 3.0), xi, SUB_QUADRATIC, seed=2) == pytest.approx(3.0 * base, rel=1e-12)
    fewer = PointMasses([BallPoint([0.6])], [1.0])
    assert V_functional(fewer, xi, SUB_QUADRATIC, seed=2) <= base


def test_functionals_U(zero_measure):
    xi = SpherePoint([1.0])
    measure = _atoms()
    assert U_functional(zero_measure, xi, Q_ABOVE_S, budget=1000, seed=3) == 0.0
    base = U_functional(measure, xi, Q_ABOVE_S, budget=1000, seed=3)
    assert base > 0
    assert U_functional(scaled(measure, 2.0), xi, Q_ABOVE_S, budget=1000, seed=3) == pytest.approx(2.0 * base, rel=1e-9)
    with pytest.raises(ContractViolation):
        U_functional(measure, xi, PARAMS, budget=1000)


def test_functionals_eta_sequence(small_lattice, zero_measure):
    assert not np.any(eta_sequence(zero_measure, small_lattice, 0.5, PARAMS).values)
    # every lattice ball holds its own atom of mass (1 - |a_k|^2)^3
    eta = eta_sequence(LatticeMasses(small_lattice, 3.0), small_lattice, 0.5, PARAMS)
    assert np.all(eta.values >= 1.0 - 1e-12)
    assert len(eta.sequence().values) == len(small_lattice)
    with pytest.raises(ContractViolation):
        eta_sequence(zero_measure, small_lattice, 0.0, PARAMS)
    with pytest.raises(ContractViolation):
        eta_sequence(PointMasses.zero(2), small_lattice, 0.5, PARAMS)


def test_functionals_necessity_test_zero_measure(small_lattice, zero_measure):
    result = necessity_test(
        zero_measure, small_lattice, np.ones(len(small_lattice)), PARAMS, budget=1000, tau_count=2, sphere_samples=4
    )
    assert result["lhs"] == 0.0
    assert result["ratio"] == 0.0


def test_functionals_necessity_lhs_of_a_unit_sequence(small_lattice):
    measure = LatticeMasses(small_lattice, 3.0)
    j = int(np.argmin(small_lattice.omz2))
    lam = np.zeros(len(small_lattice))
    lam[j] = 1.0
    result = necessity_test(
        measure, small_lattice, lam, PARAMS, budget=1000, seed=4, tau_count=2, sphere_samples=4, sequence_samples=2048
    )
    eta = eta_sequence(measure, small_lattice, 2 * PARAMS.r, PARAMS, seed=4).values
    sample = sequence_sample(small_lattice, PARAMS.gamma, 2048, seed=4)
    weighted = SeqCoefficients(np.sqrt(eta) * lam, small_lattice)
    expected = seq_tent_norm(weighted, 2, 2, sample=sample).value ** 2
    assert result["lhs"] == pytest.approx(expected, rel=1e-9)
    assert result["sequence_norm"] > 0


def test_functionals_necessity_ratio_is_finite(small_lattice):
    measure = LatticeMasses(small_lattice, 3.0)
    result = necessity_test(
        measure, small_lattice, np.ones(len(small_lattice)), PARAMS, budget=1000, seed=5, tau_count=2, sphere_samples=4
    )
    assert result["lhs"] > 0
    assert 0 < result["ratio"] < math.inf
    assert len(result["taus"]) == 2


def test_functionals_kernel_necessity_constant_is_stable(deep_lattice):
    params = TentParams(p=2, q=2, s=2, t=2, r=0.8)
    measure = LatticeMasses(deep_lattice, params.lattice_mass_exponent)
    result = kernel_necessity(measure, params, budget=2000, seed=6)
    assert [row["radius"] for row in result["rows"]] == [0.5, 0.9, 0.99]
    assert all(0 < c < math.inf for c in result["quotients"])
    assert result["spread"] <= 10.0


def test_functionals_discretization_is_stable_across_profiles(tiny_lattice):
    rng = np.random.default_rng(12)
    lower, upper = [], []
    for _ in range(10):
        weights = tiny_lattice.omz2**3 * rng.uniform(0.5, 2.0, len(tiny_lattice))
        measure = PointMasses.from_arrays(tiny_lattice.points, weights)
        report = discretization_check(measure, tiny_lattice, Q_ABOVE_S, budget=1000, seed=7, xi_count=4)
        chain = report["carleson_chain"]
        lower.append(chain["lower_ratio"])
        upper.append(chain["upper_ratio"])
    for ratios in (lower, upper):
        assert all(0 < r < math.inf for r in ratios)
        assert max(ratios) / min(ratios) <= 10.0


def test_functionals_discretization_of_zero_measure(tiny_lattice, zero_measure):
    report = discretization_check(zero_measure, tiny_lattice, Q_ABOVE_S, budget=1000, seed=8, xi_count=4)
    chain = report["carleson_chain"]
    assert chain["eta_half"] == chain["nu"] == chain["eta_double"] == 0.0
    assert report["sup_ratio_max"] == 0.0


def test_functionals_scale_with_the_measure():
    measure = _atoms()
    z = BallPoint([0.5])
    assert G_functional(scaled(measure, 3.0), z, PARAMS) == pytest.approx(3.0 * G_functional(measure, z, PARAMS))
    # nu = mu_hat^(q/(q-s)) dv, so its Carleson constant picks up c^2 here
    base = nu_statistic(measure, Q_ABOVE_S, budget=1000, seed=9, xi_count=4)["value"]
    tripled = nu_statistic(scaled(measure, 3.0), Q_ABOVE_S, budget=1000, seed=9, xi_count=4)["value"]
    assert tripled == pytest.approx(9.0 * base, rel=1e-6)
