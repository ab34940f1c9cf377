from tentlablib.selftest import (
    CHECKS,
    check_khinchine,
    check_norm_consistency,
    check_predicates,
    check_region_grid,
    check_superposition_witness,
    run_selftest,
)


def test_selftest_fast_checks_pass():
    report = run_selftest(0, names=["khinchine", "predicates", "region_grid", "moebius_invariance"])
    assert report["passed"]
    assert [check["name"] for check in report["checks"]] == [
        "moebius_invariance",
        "khinchine",
        "predicates",
        "region_grid",
    ]


def test_selftest_region_grid_line_count():
    assert check_region_grid(0) == {"passed": True, "rows": 256, "csv_lines": 257}


def test_selftest_predicates_agree_for_other_seeds():
    result = check_predicates(123, tuples=200)
    assert result["mismatches"] == []
    assert result["bergman_example"] == 2


def test_selftest_khinchine():
    result = check_khinchine(5)
    assert result["passed"]
    assert result["p4_pair"] == 2.0


def test_selftest_names_are_unique():
    names = [name for name, _ in CHECKS]
    assert len(names) == len(set(names)) == 9


def test_selftest_norm_consistency_compares_independent_estimates():
    result = check_norm_consistency(0)
    assert result["passed"]
    # separate streams, so the two sides never coincide
    assert all(row["gap"] > 0 for row in result["rows"])
    assert all(row["combined"] > 0 for row in result["rows"])


def test_selftest_superposition_witness():
    result = check_superposition_witness(0)
    assert result["passed"]
    assert result["power"] == 2
    assert result["power_outside"]
