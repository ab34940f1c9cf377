import pytest

from tentlab import main, setup_strategy
from tentlablib.configschema import ExperimentConfig
from tentlablib.errors import ContractViolation
from tentlablib.experiments import STRATEGIES, RegionStrategy, SuperpositionStrategy, WitnessStrategy
from tentlablib.strategy import ExperimentAction, ExperimentStrategy


def config_for(**data):
    return ExperimentConfig.model_validate(dict({"seed": 1}, **data))


@pytest.mark.asyncio
async def test_strategy_base_is_abstract():
    strategy = ExperimentStrategy()
    with pytest.raises(NotImplementedError):
        await strategy.setup()
    with pytest.raises(NotImplementedError):
        await strategy.run()


def test_strategy_every_action_has_a_strategy():
    assert set(STRATEGIES) == set(ExperimentAction)
    for action, cls in STRATEGIES.items():
        assert cls.action is action
        assert cls.__doc__


@pytest.mark.asyncio
async def test_strategy_superposition():
    config = config_for(subcommand="superposition", params={"p": 2, "q": 2, "s": 1, "t": 1})
    strategy = setup_strategy(config, None)
    assert isinstance(strategy, SuperpositionStrategy)
    results = await main(strategy)
    assert results["superposition"]["max_degree"] == 2
    assert [m["admissible"] for m in results["monomials"]] == [True, True, True, False]


@pytest.mark.asyncio
async def test_strategy_superposition_needs_exponents():
    strategy = setup_strategy(config_for(subcommand="superposition", params={"p": 2}), None)
    with pytest.raises(ContractViolation):
        await main(strategy)


@pytest.mark.asyncio
async def test_strategy_region_counts(tmp_path):
    config = config_for(
        subcommand="region",
        vary=[{"name": "s", "lo": 1, "hi": 2, "count": 2}, {"name": "t", "lo": 2, "hi": 4, "count": 2}],
        fixed={"p": 2, "q": 2, "alpha": 0, "beta": 0, "n": 1},
    )
    out = tmp_path / "region.json"
    strategy = setup_strategy(config, str(out))
    assert isinstance(strategy, RegionStrategy)
    results = await main(strategy)
    assert results["points"] == 4
    assert results["inside"] == 3
    assert results["compact"] == 2
    assert results["csv_lines"] == 5
    assert (tmp_path / "region.csv").read_text().splitlines()[4] == "2.0,4.0,false,-0.25,false"


@pytest.mark.asyncio
async def test_strategy_region_needs_fixed_values():
    config = config_for(
        subcommand="region",
        vary=[{"name": "s", "lo": 1, "hi": 2, "count": 2}, {"name": "t", "lo": 2, "hi": 4, "count": 2}],
        fixed={"p": 2, "q": 2},
    )
    with pytest.raises(ContractViolation):
        await main(setup_strategy(config, None))


@pytest.mark.asyncio
async def test_strategy_embed_check_zero_measure():
    config = config_for(
        subcommand="embed-check",
        params={"p": 2, "q": 2, "s": 2, "t": 2},
        measure={"variant": "point_masses", "n": 1, "masses": []},
        budget=1000,
        xi_count=4,
    )
    results = await main(setup_strategy(config, None))
    assert results["status"] == "ok"
    assert results["verdict"].bounded is True
    assert results["operator_norm_estimate"] == 0.0
    assert results["kernel_necessity"]["quotients"] == [0.0, 0.0, 0.0]


@pytest.mark.asyncio
async def test_strategy_embed_check_compares_kernels_with_G():
    config = config_for(
        subcommand="embed-check",
        params={"p": 2, "q": 2, "s": 2, "t": 2},
        measure={"variant": "weighted_volume", "n": 1, "beta": 1},
        budget=2000,
        sphere_samples=16,
    )
    results = await main(setup_strategy(config, None))
    assert results["verdict"].bounded is True
    necessity = results["kernel_necessity"]
    assert [row["radius"] for row in necessity["rows"]] == [0.5, 0.9, 0.99]
    assert all(c > 0 for c in necessity["quotients"])
    assert necessity["spread"] <= 10.0


@pytest.mark.asyncio
async def test_strategy_witness_separates_inside_from_outside():
    config = config_for(subcommand="witness", seed=3, budget=4000, sphere_samples=16)
    strategy = setup_strategy(config, None)
    assert isinstance(strategy, WitnessStrategy)
    results = await main(strategy)
    assert results["source"] == {"p": 2.0, "q": 2.0, "alpha": 0.0}
    assert results["targets"]["inside"]["beta"] == 2.0
    assert results["targets"]["outside"]["margin"] <= -0.75
    assert results["inside_spread"] <= 10.0
    assert results["outside_monotone"]
    assert results["outside_growth"] >= 10.0
    assert results["source_spread"] <= 10.0
    assert results["status"] == "ok"
    assert [row["radius"] for row in results["rows"]] == [0.9, 0.99, 0.999]


@pytest.mark.asyncio
async def test_strategy_superposition_witness():
    config = config_for(
        subcommand="superposition",
        params={"p": 2, "q": 2, "s": 2, "t": 2},
        theta=1.4,
        witness=True,
        budget=2000,
        sphere_samples=16,
    )
    results = await main(setup_strategy(config, None))
    witness = results["witness"]
    assert witness["theta"] == 1.4 and witness["power"] == 2
    assert witness["passed"]
    assert results["status"] == "ok"
