import csv
import json

import pytest

from btre import cli
from btre.config import ConfigError, parse_config, spec_from_dict

CUTOFF_CONFIG = """
experiment: theorem3
model: {kind: pointmass, value: 1}
n_grid: [2000]
seed: 7
"""


def test_parse_minimal_cutoff_config():
    spec = parse_config(CUTOFF_CONFIG)
    assert spec.alpha == 0.0
    assert spec.theta_u == 0.25
    assert spec.replicates == 1000 and spec.workers == "auto" and spec.format == "csv"
    assert spec.sweep == (0.25, 0.5, 1.0, 1.5, 2.0)


def test_alpha_on_unbounded_model_names_support_max():
    text = "experiment: theorem2\nmodel: {kind: exponential, rate: 1, alpha: 0.5}\nn_grid: [10]\nseed: 1\n"
    with pytest.raises(ConfigError, match="support_max"):
        parse_config(text)


def test_missing_seed_rejected():
    with pytest.raises(ConfigError, match="^seed"):
        parse_config("experiment: schedule\nn_grid: [4]\n")


@pytest.mark.parametrize("doc,path", [
    ({"experiment": "schedule", "n_grid": [4], "seed": 1, "replicats": 5}, "replicats"),
    ({"experiment": "simulate", "model": {"kind": "beta", "a": 1, "c": 2}, "n_grid": [4], "seed": 1},
     "model.c"),
    ({"experiment": "theorem2", "model": {"kind": "exponential"}, "n_grid": [4], "seed": 1},
     "model.alpha"),
    ({"experiment": "schedule", "n_grid": [4, 2], "seed": 1}, "n_grid"),
    ({"experiment": "schedule", "n_grid": [4], "seed": 1, "replicates": 0}, "replicates"),
    ({"experiment": "schedule", "n_grid": [4], "seed": -1}, "seed"),
    ({"experiment": "theorem3", "model": {"kind": "pointmass"}, "n_grid": [4], "seed": 1,
      "sweep": [1, 0.5]}, "sweep"),
    ({"experiment": "nonsense", "n_grid": [4], "seed": 1}, "experiment"),
    ({"experiment": "schedule", "n_grid": [4], "seed": 1, "format": "xml"}, "format"),
])
def test_errors_carry_field_path(doc, path):
    with pytest.raises(ConfigError) as info:
        spec_from_dict(doc)
    assert str(info.value).startswith(path)


def test_echo_is_plain_data():
    echo = parse_config(CUTOFF_CONFIG).echo()
    json.dumps(echo)
    assert echo["model"] == {"kind": "pointmass", "value": 1}
    assert echo["model_resolved"]["alpha"] == 0.0


def test_format_value():
    assert cli.format_value(0.1) == "0.10000000000000001"
    assert cli.format_value(True) == "1"
    assert cli.format_value(None) == ""
    assert float(cli.format_value(1 / 3)) == 1 / 3


def test_schedule_run_writes_six_rows(tmp_path):
    spec = spec_from_dict({"experiment": "schedule", "n_grid": [4], "seed": 0})
    res = cli.run(spec, tmp_path, workers=1)
    assert res.exit_code == 0
    rows = list(csv.DictReader((tmp_path / "schedule.csv").open()))
    assert len(rows) == 6
    assert sorted((r["player_a"], r["player_b"]) for r in rows) == sorted(
        (str(a), str(b)) for a in range(1, 5) for b in range(a + 1, 5))
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["spec"]["experiment"] == "schedule"
    assert manifest["results"] == ["schedule.csv"]


def test_schedule_stdout(capsys):
    assert cli.main(["schedule", "--n", "3"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "round,player_a,player_b"
    assert len(lines) == 7
    assert sum(line.endswith(",") for line in lines) == 3


def test_oracle_equal_three(tmp_path):
    assert cli.main(["oracle", "--strengths", "1,1,1", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "oracle.json").read_text())
    assert doc[0]["exact"] is True
    assert doc[0]["unique_win"] == [0.25, 0.25, 0.25]


def test_repeat_runs_are_byte_identical(tmp_path):
    cfg = tmp_path / "sim.yaml"
    cfg.write_text("experiment: simulate\nmodel: {kind: exponential, rate: 1}\n"
                   "n_grid: [5, 12]\nreplicates: 40\nseed: 99\nv_tagged: 1.5\n")
    for name in ("a", "b"):
        assert cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path / name),
                         "--workers", "1"]) == 0
    assert (tmp_path / "a" / "simulate.csv").read_bytes() == (tmp_path / "b" / "simulate.csv").read_bytes()
    rows = list(csv.DictReader((tmp_path / "a" / "simulate.csv").open()))
    assert len(rows) == 80 and rows[0].keys() == set(cli.SCHEMAS["simulate"])


def test_simulate_flags_and_jsonl(tmp_path):
    assert cli.main(["simulate", "--model", "beta:a=1,b=0.5", "--n", "6", "--replicates", "5",
                     "--seed", "3", "--out", str(tmp_path)]) == 0
    assert len((tmp_path / "simulate.csv").read_text().splitlines()) == 6
    spec = spec_from_dict({"experiment": "simulate", "model": {"kind": "uniform01"},
                           "n_grid": [4], "replicates": 3, "seed": 1, "format": "jsonl"})
    cli.run(spec, tmp_path / "j", workers=1)
    lines = (tmp_path / "j" / "simulate.jsonl").read_text().splitlines()
    assert [json.loads(x)["replicate_id"] for x in lines] == [0, 1, 2]


def test_exit_code_two_on_config_error(tmp_path, capsys):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("experiment: theorem3\nmodel: {kind: pointmass}\nn_grid: [10]\n")
    assert cli.main(["experiment", "--config", str(cfg)]) == 2
    assert "seed" in capsys.readouterr().err


def test_exit_code_two_on_io_error(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert cli.main(["schedule", "--n", "4", "--out", str(blocker / "sub")]) == 2


def test_exit_code_one_on_failed_verdict(tmp_path):
    # a two-point grid where the gain requirement cannot be met
    cfg = tmp_path / "t1.yaml"
    cfg.write_text("experiment: theorem1\nmodel: {kind: exponential, rate: 1}\n"
                   "n_grid: [20, 21]\nreplicates: 200\nseed: 5\n")
    assert cli.main(["experiment", "--config", str(cfg), "--out", str(tmp_path / "o"),
                     "--workers", "1"]) == 1
    manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert manifest["verdicts"]["gain_at_least_0.05"] is False


def test_cutoff_run_marks_c_one_unjudged(tmp_path):
    spec = spec_from_dict({"experiment": "theorem3", "model": {"kind": "pointmass"},
                           "n_grid": [50], "replicates": 30, "seed": 2})
    cli.run(spec, tmp_path, workers=1)
    rows = list(csv.DictReader((tmp_path / "theorem3.csv").open()))
    assert [r["judged"] for r in rows] == ["1", "1", "0", "1", "1"]


def test_real_columns_use_seventeen_digits(tmp_path):
    spec = spec_from_dict({"experiment": "theorem3", "model": {"kind": "pointmass"},
                           "n_grid": [50], "replicates": 30, "seed": 2, "sweep": [0.3]})
    cli.run(spec, tmp_path, workers=1)
    row = next(csv.DictReader((tmp_path / "theorem3.csv").open()))
    assert float(row["v_tagged"]) == 1 + 0.3 * float(row["epsilon_n"])
    assert len(row["epsilon_n"].replace(".", "").lstrip("0")) >= 16
