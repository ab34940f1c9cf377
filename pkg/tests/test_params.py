import numpy as np
import pytest

from tentlablib.errors import ContractViolation
from tentlablib.params import INF, CaseTag, TentParams, case_dispatch, parse_exponent, reciprocal


def test_params_source_index_and_exponents():
    params = TentParams(p=2, q=3, s=1, t=4, n=1, alpha=0)
    assert params.source_index == pytest.approx(2 / 3)
    assert params.eta_exponent == pytest.approx(4 / 3)
    assert params.g_exponent == pytest.approx(4 / 3 - 0.25)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"p": 0, "q": 2, "s": 2, "t": 2},
        {"p": 2, "q": -1, "s": 2, "t": 2},
        {"p": 2, "q": 2, "s": 2, "t": 2, "alpha": -2.0},
        {"p": 2, "q": 2, "s": 2, "t": 2, "gamma": 1.0},
        {"p": 2, "q": 2, "s": 2, "t": 2, "r": 1.0},
        {"p": 2, "q": 2, "s": 2, "t": 2, "n": 0},
    ],
)
def test_params_rejects_invalid(kwargs):
    with pytest.raises(ContractViolation):
        TentParams(**kwargs)


def test_params_replace_keeps_other_fields():
    params = TentParams(p=2, q=2, s=1, t=2, n=2, beta=0.5)
    changed = params.replace(p=3.0)
    assert changed.p == 3.0
    assert changed.beta == 0.5 and changed.n == 2
    assert params.p == 2.0


@pytest.mark.parametrize(
    "p,q,s,t,expected",
    [
        (1, 1, 1, 2, CaseTag.CASE1),
        (2, 1, 1, 2, CaseTag.CASE1),
        (2, 3, 1, 2, CaseTag.CASE2),
        (3, 3, 1, 2, CaseTag.CASE3),
        (3, 1, 2, 2, CaseTag.CASE4),
    ],
)
def test_params_case_dispatch(p, q, s, t, expected):
    assert case_dispatch(p, q, s, t) is expected


def test_params_case_dispatch_rejects_nonpositive():
    with pytest.raises(ContractViolation):
        case_dispatch(0, 1, 1, 1)


def test_params_parse_exponent():
    assert parse_exponent("inf") is INF
    assert parse_exponent(float("inf")) is INF
    assert parse_exponent("2.5") == 2.5
    assert reciprocal(INF) == 0.0
    assert reciprocal(4.0) == 0.25
    with pytest.raises(ContractViolation):
        parse_exponent(0)


def test_params_case_dispatch_is_total_and_exclusive():
    rng = np.random.default_rng(17)
    # a coarse grid makes p = t and q = s ties frequent
    grid = np.array([0.5, 1.0, 1.5, 2.0, 3.0])
    for p, q, s, t in rng.choice(grid, size=(2000, 4)):
        matches = [
            p < t or (p == t and q <= s),
            p == t and q > s,
            p > t and q > s,
            p > t and q <= s,
        ]
        assert sum(matches) == 1
        assert case_dispatch(p, q, s, t) is list(CaseTag)[matches.index(True)]


def test_params_lattice_mass_exponent_cancels_the_case1_weight():
    params = TentParams(p=2, q=2, s=2, t=2, n=1)
    assert params.lattice_mass_exponent == pytest.approx(3.0)
    skewed = TentParams(p=2, q=3, s=1, t=4, n=1, alpha=0)
    assert skewed.lattice_mass_exponent + skewed.g_exponent == pytest.approx(3.0)
