import json

import pytest

from neurocortex.harness.cli import EXIT_ASSERTION, EXIT_ERROR, EXIT_OK, build_parser, main


def test_parser_requires_command():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_simulate_passing(scenarios_dir, tmp_path, capsys):
    code = main(["--out-dir", str(tmp_path), "simulate", str(scenarios_dir / "cat_demo.scn")])
    assert code == EXIT_OK
    out = capsys.readouterr().out
    assert "sentence: this is cat" in out
    assert "cat_demo: passed" in out
    assert (tmp_path / "trace.csv").exists()


def test_simulate_jsonl(scenarios_dir, tmp_path):
    code = main(["--out-dir", str(tmp_path), "--trace-format", "jsonl", "simulate", str(scenarios_dir / "sequence_demo.scn")])
    assert code == EXIT_OK
    # 30 training episodes of 9 ticks, an 11-tick recall, then 12 free steps
    assert len((tmp_path / "trace.jsonl").read_text().splitlines()) == 30 * 9 + 11 + 12


def test_simulate_failing_assertion(tmp_path, capsys):
    path = tmp_path / "fail.scn"
    path.write_text("neuron a\nassert fired a\n")
    assert main(["--out-dir", str(tmp_path / "out"), "simulate", str(path)]) == EXIT_ASSERTION
    assert "FAILED" in capsys.readouterr().err


def test_simulate_parse_error(tmp_path, capsys):
    path = tmp_path / "bad.scn"
    path.write_text("neuron a\nwobble\n")
    assert main(["--out-dir", str(tmp_path / "out"), "simulate", str(path)]) == EXIT_ERROR
    error = json.loads(capsys.readouterr().err)
    assert error["error"]["type"] == "ScenarioParseError"
    assert error["error"]["details"]["line"] == 2


def test_simulate_missing_file(tmp_path):
    assert main(["--out-dir", str(tmp_path), "simulate", str(tmp_path / "nope.scn")]) == EXIT_ERROR


def test_missing_config_file(tmp_path, scenarios_dir):
    argv = ["--config", str(tmp_path / "none.conf"), "simulate", str(scenarios_dir / "cat_demo.scn")]
    assert main(argv) == EXIT_ERROR


def test_seed_is_recorded(scenarios_dir, tmp_path):
    main(["--seed", "9", "--out-dir", str(tmp_path), "simulate", str(scenarios_dir / "logic_demo.scn")])
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["seed"] == 9


def test_rules_truth_table(scenarios_dir, capsys):
    code = main(["rules", str(scenarios_dir / "nand.rules"), "--facts", "a", "--truth", "a,b", "--output", "out"])
    assert code == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert "a\t0" in lines
    assert "a b | out" in lines
    assert "1 1 | 0" in lines
    assert "0 0 | 1" in lines


def test_topology_ranking(scenarios_dir, capsys):
    assert main(["topo", str(scenarios_dir / "sandglass.topo"), "--top", "2"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("50 neurons")
    assert {line.split("\t")[0] for line in lines[1:3]} == {"L2_0", "L2_1"}


def test_snapshot_save_and_load(scenarios_dir, tmp_path, capsys):
    snap = tmp_path / "cat.ncs"
    out = tmp_path / "out"
    assert main(["--out-dir", str(out), "snapshot", "save", str(scenarios_dir / "cat_demo.scn"), str(snap)]) == EXIT_OK
    assert snap.exists()
    capsys.readouterr()
    assert main(["--out-dir", str(out), "snapshot", "load", str(snap), "--ticks", "5"]) == EXIT_OK
    printed = capsys.readouterr().out
    assert "format 1:" in printed
    assert len((out / "trace.csv").read_text().splitlines()) == 6


def test_snapshot_load_corrupt(tmp_path, capsys):
    snap = tmp_path / "junk.ncs"
    snap.write_bytes(b"not a snapshot at all")
    assert main(["snapshot", "load", str(snap)]) == EXIT_ERROR
    assert json.loads(capsys.readouterr().err)["error"]["type"] == "SnapshotError"
