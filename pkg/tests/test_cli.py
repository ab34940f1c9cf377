import json

import tentlab

REGION_ARGS = [
    "region",
    "--vary",
    "s:0.5..4:16",
    "--vary",
    "t:0.5..4:16",
    "--fixed",
    "p=2,q=2,alpha=0,beta=0,n=1",
    "--seed",
    "1",
]


def test_cli_region_writes_phase_csv(tmp_path):
    out = tmp_path / "out" / "region.json"
    assert tentlab.run(REGION_ARGS + ["--out", str(out)]) == 0
    lines = (tmp_path / "out" / "region.csv").read_text().splitlines()
    assert len(lines) == 257
    assert lines[0] == "param1,param2,verdict,statistic,strict"
    report = json.loads(out.read_text())
    assert report["results"]["points"] == 256
    assert report["results"]["csv_lines"] == 257
    assert report["config"]["seed"] == 1
    assert report["config"]["vary"][0] == {"name": "s", "lo": 0.5, "hi": 4.0, "count": 16}


def test_cli_bergman_superposition(tmp_path, snapshot):
    out = tmp_path / "superposition.json"
    argv = ["superposition", "--bergman", "--p", "2", "--t", "1", "--alpha", "0", "--beta", "0", "--n", "1"]
    assert tentlab.run(argv + ["--seed", "0", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["results"]["superposition"]["max_degree"] == 2
    snapshot.assert_match(json.dumps(report["results"], indent=2, sort_keys=True), "results.json")


def test_cli_missing_seed(tmp_path, capsys):
    out = tmp_path / "carleson.json"
    measure = '{"variant": "weighted_volume", "n": 1, "beta": 0}'
    assert tentlab.run(["carleson", "--measure", measure, "--out", str(out)]) == 1
    error = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert error["path"] == "seed"
    assert not out.exists()


def test_cli_malformed_config(tmp_path, capsys):
    config = tmp_path / "config.json"
    config.write_text("{ seed: 1 ")
    assert tentlab.run(["norm", "--config", str(config)]) == 1
    error = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert error["error_type"] == "ContractViolation"


def test_cli_malformed_inline_json(capsys):
    assert tentlab.run(["carleson", "--seed", "1", "--measure", "{variant"]) == 1
    assert "Not valid JSON" in capsys.readouterr().err


def test_cli_contract_violation(tmp_path, capsys):
    out = tmp_path / "lattice.json"
    assert tentlab.run(["lattice", "--seed", "1", "--out", str(out)]) == 1
    assert "lattice needs lattice parameters" in capsys.readouterr().err


def test_cli_parse_errors():
    assert tentlab.run(["--help"]) == 0
    assert tentlab.run(["unknown"]) == 1
    assert tentlab.run([]) == 1


def test_cli_embed_check_zero_measure(tmp_path):
    out = tmp_path / "embed.json"
    argv = ["embed-check", "--p", "2", "--q", "2", "--s", "2", "--t", "2", "--seed", "3", "--budget", "1000"]
    argv += ["--xi-count", "4", "--measure", '{"variant": "point_masses", "n": 1, "masses": []}', "--out", str(out)]
    assert tentlab.run(argv) == 0
    verdict = json.loads(out.read_text())["results"]["verdict"]
    assert verdict["bounded"] is True
    assert verdict["case"] == "case1"


def test_cli_selftest_defaults_seed():
    parser = tentlab.build_parser()
    overrides = tentlab.overrides_from(parser.parse_args(["selftest"]))
    assert overrides == {"subcommand": "selftest", "seed": 0}
    overrides = tentlab.overrides_from(parser.parse_args(["selftest", "--seed", "9"]))
    assert overrides["seed"] == 9


def test_cli_superposition_witness(tmp_path):
    out = tmp_path / "witness.json"
    argv = ["superposition", "--witness", "--p", "2", "--q", "2", "--s", "2", "--t", "2", "--theta", "1.4"]
    argv += ["--seed", "1", "--budget", "2000", "--sphere-samples", "16", "--out", str(out)]
    assert tentlab.run(argv) == 0
    results = json.loads(out.read_text())["results"]
    assert results["superposition"]["max_degree"] == 1
    assert results["witness"]["power"] == 2
    assert results["witness"]["passed"] is True
