import math

import numpy as np
import pytest

from tentlablib.errors import ContractViolation
from tentlablib.functions import Polynomial, linear_monomial
from tentlablib.geometry import BallPoint, SpherePoint, cap_measure_exact
from tentlablib.measures import PointMasses
from tentlablib.norms import (
    SeqCoefficients,
    aperture_ratio,
    area_operator,
    area_operator_norm,
    forelli_rudin_check,
    fubini_ratio,
    hardy_tent_measure,
    inclusion_check,
    khinchine_ratio,
    pairing,
    product_inequality_check,
    seq_tent_norm,
    sequence_sample,
    tent_norm,
    xi_sample,
)
from tentlablib.params import TentParams


def test_norms_atom_inside_every_cone():
    # with aperture 3 the origin lies in every Koranyi region
    measure = PointMasses([BallPoint.origin(1)], [1.0])
    norm = tent_norm(Polynomial.constant(1.0, 1), measure, 2.0, 2.0, gamma=3.0, sphere_samples=8)
    assert norm.value == pytest.approx(1.0)


def test_norms_zero_measure(zero_measure):
    assert tent_norm(linear_monomial(1.0, 1), zero_measure, 2.0, 2.0, sphere_samples=4).value == 0.0


def test_norms_are_homogeneous(volume):
    sample = xi_sample(1, 8, seed=2)
    one = tent_norm(linear_monomial(1.0, 1), volume, 2.0, 2.0, budget=1000, seed=2, sample=sample)
    two = tent_norm(linear_monomial(2.0, 1), volume, 2.0, 2.0, budget=1000, seed=2, sample=sample)
    assert two.value == pytest.approx(2.0 * one.value, rel=1e-9)


def test_norms_area_operator_matches_tent_norm_on_shared_sample(volume):
    sample = xi_sample(1, 8, seed=5)
    f = linear_monomial(1.0, 1)
    area = area_operator_norm(f, volume, 2.0, 3.0, budget=1000, seed=5, sample=sample)
    tent = tent_norm(f, volume, 3.0, 2.0, budget=1000, seed=5, sample=sample)
    assert area.value == pytest.approx(tent.value, rel=1e-9)


def test_norms_reject_bad_exponents(volume):
    with pytest.raises(ContractViolation):
        tent_norm(linear_monomial(1.0, 1), volume, 0.0, 2.0)
    with pytest.raises(ContractViolation):
        tent_norm(linear_monomial(1.0, 2), volume, 2.0, 2.0)


def test_norms_khinchine_ratio():
    rng = np.random.default_rng(0)
    c = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    assert khinchine_ratio(c, 2.0) == pytest.approx(1.0, abs=1e-12)
    assert khinchine_ratio([1.0, 1.0], 4.0) == pytest.approx(2.0)
    assert khinchine_ratio([0.0, 0.0], 3.0) == 1.0
    with pytest.raises(ContractViolation):
        khinchine_ratio([1.0, 1.0, 1.0], 2.0, level=2)


def test_norms_forelli_rudin_preconditions():
    u, z = BallPoint([0.2]), BallPoint([0.5j])
    with pytest.raises(ContractViolation):
        forelli_rudin_check(u, z, 0.0, 1.0, 1.0)
    with pytest.raises(ContractViolation):
        forelli_rudin_check(u, BallPoint([0.1, 0.1]), 0.0, 1.6, 1.6)


def test_norms_forelli_rudin_ratio_is_moderate():
    result = forelli_rudin_check(BallPoint([0.5]), BallPoint([0.8j]), 0.0, 1.6, 1.6, budget=2000, seed=1)
    assert result["bound"] > 0
    assert 0.05 < result["ratio"] < 20


def test_norms_hardy_tent_measure():
    measure = hardy_tent_measure(TentParams(p=2, q=2, s=2, t=2, n=2, alpha=0.5))
    assert measure.beta == 2.5 and measure.n == 2


def test_norms_inclusion_check_needs_p_below_t():
    with pytest.raises(ContractViolation):
        inclusion_check(linear_monomial(1.0, 1), TentParams(p=2, q=2, s=2, t=2))


def test_norms_area_operator_single_atom():
    # one atom at 1/2 with weight 0.3, f = z_1, s = 2
    measure = PointMasses([BallPoint([0.5])], [0.3])
    f = linear_monomial(1.0, 1)
    inside = area_operator(f, measure, 2.0, SpherePoint([1.0]))
    assert inside == pytest.approx(0.5 * math.sqrt(0.3 / 0.75), rel=1e-12)
    assert area_operator(f, measure, 2.0, SpherePoint([-1.0])) == 0.0
    with pytest.raises(ContractViolation):
        area_operator(f, measure, 0.0, SpherePoint([1.0]))


def test_norms_fubini_ratio_for_a_single_atom():
    measure = PointMasses([BallPoint([0.5])], [1.0])
    result = fubini_ratio(lambda points, omz2: np.ones(points.shape[0]), measure, seed=4, sphere_samples=1024)
    expected = 0.75 / cap_measure_exact(BallPoint([0.5]))
    assert result["ratio"] == pytest.approx(expected, rel=0.2)


def test_norms_wider_aperture_never_shrinks_the_norm():
    measure = PointMasses([BallPoint([0.5]), BallPoint([0.5j]), BallPoint([-0.7])], [1.0, 1.0, 1.0])
    ratio = aperture_ratio(linear_monomial(1.0, 1), measure, 2.0, 2.0, seed=3, sphere_samples=64)
    assert ratio >= 1.0


def _sequence(lattice, seed):
    rng = np.random.default_rng(seed)
    return SeqCoefficients(rng.standard_normal(len(lattice)) + 1j * rng.standard_normal(len(lattice)), lattice)


def test_norms_sequence_zero_and_forbidden_pair(small_lattice):
    zero = SeqCoefficients(np.zeros(len(small_lattice)), small_lattice)
    assert seq_tent_norm(zero, 2, 2).value == 0.0
    with pytest.raises(ContractViolation):
        seq_tent_norm(_sequence(small_lattice, 1), "inf", "inf")
    with pytest.raises(ContractViolation):
        SeqCoefficients(np.ones(len(small_lattice) + 1), small_lattice)


def test_norms_sequence_norm_is_homogeneous_and_monotone(small_lattice):
    c = _sequence(small_lattice, 2)
    sample = sequence_sample(small_lattice, 2.0, 2048, seed=5)
    base = seq_tent_norm(c, 2, 3, sample=sample).value
    assert seq_tent_norm(c.scaled(2.0), 2, 3, sample=sample).value == pytest.approx(2.0 * base, rel=1e-12)
    smaller = SeqCoefficients(0.5 * np.abs(c.values), small_lattice)
    assert seq_tent_norm(smaller, 2, 3, sample=sample).value <= base


def test_norms_sequence_sup_norm_reports_empty_cones(small_lattice):
    result = seq_tent_norm(_sequence(small_lattice, 3), 2, "inf", sphere_budget=1024, seed=6)
    assert result.value > 0
    assert 0.0 <= result.details["vacuous_fraction"] <= 1.0


def test_norms_sequence_single_entry_matches_its_shadow(small_lattice):
    j = int(np.argmin(small_lattice.omz2))
    values = np.zeros(len(small_lattice), dtype=complex)
    values[j] = 3.0
    c = SeqCoefficients(values, small_lattice)
    estimate = seq_tent_norm(c, 1, 2, sphere_budget=40000, seed=8)
    expected = 3.0 * cap_measure_exact(BallPoint(small_lattice.points[j]))
    assert estimate.value == pytest.approx(expected, rel=0.3)


def test_norms_pairing(small_lattice):
    c, d = _sequence(small_lattice, 4), _sequence(small_lattice, 5)
    assert pairing(c, d) == pytest.approx(np.conj(pairing(d, c)), rel=1e-12)
    energy = float(np.sum(np.abs(c.values) ** 2 * small_lattice.omz2))
    assert pairing(c, c) == pytest.approx(energy, rel=1e-12)
    shorter = small_lattice.without([0])
    with pytest.raises(ContractViolation):
        pairing(c, SeqCoefficients(np.ones(len(shorter)), shorter))


def test_norms_product_with_the_unit_factor(small_lattice):
    c = _sequence(small_lattice, 6)
    ones = SeqCoefficients(np.ones(len(small_lattice)), small_lattice)
    result = product_inequality_check(c, ones, ((2, 2), (2, 2), ("inf", "inf")), sphere_budget=1024, seed=2)
    assert result["ratio"] == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(ContractViolation):
        product_inequality_check(c, ones, ((2, 2), ("inf", "inf"), (2, 2)))
    with pytest.raises(ContractViolation):
        product_inequality_check(c, ones, ((2, 2), (3, 3), (3, 3)))
