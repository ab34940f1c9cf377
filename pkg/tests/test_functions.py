import numpy as np
import pytest

from tentlablib.errors import ContractViolation
from tentlablib.functions import (
    Polynomial,
    boundary_kernel_window,
    cauchy_riemann_residual,
    evaluate,
    function_from_json,
    linear_monomial,
    rademacher,
    rademacher_table,
    superpose,
    test_function,
)
from tentlablib.geometry import BallPoint


def test_functions_polynomial_evaluation():
    f = Polynomial({(2, 0): 1.0, (0, 1): 2j}, 2)
    assert f.degree == 2
    assert evaluate(f, BallPoint([0.5, 0.25])) == pytest.approx(0.25 + 0.5j)


def test_functions_polynomial_rejects_bad_index():
    with pytest.raises(ContractViolation):
        Polynomial({(1,): 1.0}, 2)


def test_functions_evaluate_dimension_mismatch():
    with pytest.raises(ContractViolation):
        evaluate(linear_monomial(1.0, 2), BallPoint([0.5]))


def test_functions_superposition_of_monomial():
    f = superpose([0.0, 0.0, 1.0], linear_monomial(2.0, 1))
    assert f.degree == 2
    assert evaluate(f, BallPoint([0.25])) == pytest.approx(0.25)


def test_functions_kernel_power_at_center():
    a = BallPoint([0.5])
    f = test_function(a, 1.0, 2.0, 2.0, 0.0)
    assert f.exponent == pytest.approx(1.0 + 1.0 + 0.5)
    # (1 - |a|^2)^theta / (1 - |a|^2)^exponent
    assert evaluate(f, a) == pytest.approx(0.75 ** (1.0 - 2.5))


def test_functions_are_holomorphic():
    f = test_function(BallPoint([0.3, 0.4j]), 0.5, 2.0, 2.0, 0.0)
    assert cauchy_riemann_residual(f, BallPoint([0.1, -0.2])) < 1e-6


def test_functions_from_json():
    f = function_from_json({"variant": "boundary_kernel_g", "zeta": [[1.0, 0.0]], "theta": 1.0})
    assert evaluate(f, BallPoint([0.5])) == pytest.approx(2.0)
    g = function_from_json({"variant": "polynomial", "n": 1, "coefficients": [[[1], [3.0, 0.0]]]})
    assert evaluate(g, BallPoint([0.5])) == pytest.approx(1.5)
    with pytest.raises(ContractViolation):
        function_from_json({"variant": "gaussian"})


def test_functions_boundary_kernel_window():
    assert boundary_kernel_window(2.0, 2.0, 0.0, 1) == (1.0, 1.5)


def test_functions_rademacher_signs():
    assert rademacher(1, 0.25) == 1
    assert rademacher(1, 0.75) == -1
    table = rademacher_table(3)
    assert table.shape == (16, 3)
    # the midpoint grid balances every sign pattern
    assert np.allclose(table.mean(axis=0), 0.0)
    with pytest.raises(ContractViolation):
        rademacher(0, 0.5)
