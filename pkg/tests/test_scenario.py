import json

import pytest

from neurocortex.exceptions import ScenarioParseError
from neurocortex.harness.scenario import parse_assertion, parse_scenario, probe_columns, run_scenario
from neurocortex.harness.trace import read_trace


def _write(tmp_path, text, name="demo.scn"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestParsing:
    def test_metadata_and_steps(self):
        scenario = parse_scenario(
            "# comment\nname demo\nset net.c1 = 90\n\nneuron a b  # two\nstep 3\n", "x.scn"
        )
        assert scenario.name == "demo"
        assert scenario.overrides == {"net.c1": "90"}
        assert [s.command for s in scenario.steps] == ["neuron", "step"]
        assert scenario.steps[0].args == ["a", "b"]
        assert scenario.steps[1].line == 6

    def test_name_defaults_to_file_stem(self):
        assert parse_scenario("", "runs/my_run.scn").name == "my_run"

    def test_unknown_command_reports_line(self):
        with pytest.raises(ScenarioParseError) as info:
            parse_scenario("neuron a\n\nfrobnicate a\n")
        assert info.value.line == 3

    def test_set_after_step(self):
        with pytest.raises(ScenarioParseError):
            parse_scenario("neuron a\nset net.c1 = 50\n")

    @pytest.mark.parametrize(
        "line",
        ["step two", "synapse a", "train a b gap=x", "recall a colour=red", "rule IMP a", "probe sentence", 'assert "x'],
    )
    def test_malformed_statements(self, line):
        with pytest.raises(ScenarioParseError):
            parse_scenario(line)

    def test_hash_inside_quotes_is_kept(self):
        scenario = parse_scenario('assert sentence == "a # b"\n')
        assert scenario.steps[0].args == ['sentence == "a # b"']

    def test_assertion_forms(self):
        assert parse_assertion("weight a b >= 0.5", 1).args == ("a", "b")
        assert parse_assertion("derived lacks z", 1).op == "lacks"
        with pytest.raises(ScenarioParseError):
            parse_assertion("rate a >= lots", 4)

    def test_probe_columns(self):
        scenario = parse_scenario("neuron a b\nprobe rate a\nprobe weight a b\nprobe rate a\n")
        assert probe_columns(scenario.steps) == ["rate:a", "weight:a>b"]


class TestRunning:
    def test_cat_demo_passes(self, scenarios_dir, tmp_path, settings):
        summary = run_scenario(scenarios_dir / "cat_demo.scn", settings, out_dir=tmp_path)
        assert summary.exit_code == 0
        assert summary.status == "passed"
        assert "sentence: this is cat" in summary.outputs
        assert "sentence: this is UNKNOWN" in summary.outputs
        written = json.loads((tmp_path / "summary.json").read_text())
        assert written["status"] == "passed"

    def test_sequence_demo_traces_probes(self, scenarios_dir, tmp_path, settings):
        summary = run_scenario(scenarios_dir / "sequence_demo.scn", settings, out_dir=tmp_path)
        assert summary.exit_code == 0
        assert "recalled: a b c d e" in summary.outputs
        rows = read_trace(tmp_path / "trace.csv", "csv")
        assert len(rows) == 30 * 9 + 11 + 12
        assert summary.ticks == len(rows)
        assert list(rows[0].probes) == ["rate:a", "rate:e", "weight:a>b"]
        assert rows[0].fired == [0]

    def test_every_simulated_tick_is_traced(self, scenarios_dir, tmp_path, settings):
        summary = run_scenario(scenarios_dir / "cat_demo.scn", settings, out_dir=tmp_path)
        rows = read_trace(tmp_path / "trace.csv", "csv")
        # 20 learning episodes of 5 ticks and three 6-tick generations
        assert len(rows) == 20 * 5 + 3 * 6
        assert summary.ticks == len(rows)
        ticks = [row.tick for row in rows]
        assert ticks == sorted(set(ticks))

    def test_logic_demo_passes(self, scenarios_dir, tmp_path, settings):
        summary = run_scenario(scenarios_dir / "logic_demo.scn", settings, out_dir=tmp_path)
        assert summary.exit_code == 0
        assert any(line.startswith("shortcut: a -> c") for line in summary.outputs)

    def test_empty_scenario(self, tmp_path, settings):
        summary = run_scenario(_write(tmp_path, "# nothing here\n"), settings, out_dir=tmp_path / "out")
        assert summary.exit_code == 0
        assert summary.steps_executed == 0
        assert (tmp_path / "out" / "trace.csv").read_text() == "tick,fired\n"

    def test_failed_assertion_exits_one(self, tmp_path, settings):
        path = _write(tmp_path, "neuron a\ninject a strength=50\nstep 1\nassert silent a\n")
        summary = run_scenario(path, settings, out_dir=tmp_path / "out")
        assert summary.exit_code == 1
        assert summary.status == "failed"
        assert "silent a" in summary.failure
        assert summary.steps_executed == 3

    def test_runtime_error_exits_two(self, tmp_path, settings):
        summary = run_scenario(_write(tmp_path, "neuron a\nsynapse a ghost\n"), settings, out_dir=tmp_path / "out")
        assert summary.exit_code == 2
        assert summary.status == "error"
        assert summary.failure.startswith("step 1:")

    def test_parse_error_propagates(self, tmp_path, settings):
        with pytest.raises(ScenarioParseError):
            run_scenario(_write(tmp_path, "neuron a\nbogus\n"), settings, out_dir=tmp_path / "out")

    def test_missing_file(self, tmp_path, settings):
        with pytest.raises(ScenarioParseError):
            run_scenario(tmp_path / "absent.scn", settings, out_dir=tmp_path / "out")

    def test_set_overrides_apply(self, tmp_path, settings):
        path = _write(tmp_path, "set net.f_thr = 50\nneuron a\ninject a strength=30\nstep 1\nassert silent a\n")
        assert run_scenario(path, settings, out_dir=tmp_path / "out").exit_code == 0

    def test_train_grows_common_targets_when_enabled(self, tmp_path, settings):
        text = (
            "set plasticity.grow_new = true\nset plasticity.grow_threshold = 3\n"
            "neuron u v x\nsynapse u x weight=1.0 delay=2\ntrain u v gap=2 reps=5\n"
        )
        summary = run_scenario(_write(tmp_path, text), settings, out_dir=tmp_path / "out")
        assert summary.exit_code == 0
        assert "grown: 3" in summary.outputs

    def test_rules_file_relative_to_scenario(self, scenarios_dir, tmp_path, settings):
        path = _write(tmp_path, "rules nand.rules\ninfer a\nassert derived has out\ninfer a b\nassert derived lacks out\n")
        (tmp_path / "nand.rules").write_text((scenarios_dir / "nand.rules").read_text())
        assert run_scenario(path, settings, out_dir=tmp_path / "out").exit_code == 0

    def test_save_statement_writes_snapshot(self, tmp_path, settings):
        summary = run_scenario(_write(tmp_path, "neuron a b\nsynapse a b weight=0.4\nsave net.ncs\n"), settings, out_dir=tmp_path / "out")
        assert summary.exit_code == 0
        assert (tmp_path / "net.ncs").exists()

    @pytest.mark.parametrize("fmt", ["csv", "jsonl"])
    def test_runs_are_reproducible(self, scenarios_dir, tmp_path, settings, fmt):
        first = run_scenario(scenarios_dir / "sequence_demo.scn", settings, tmp_path / "one", fmt)
        second = run_scenario(scenarios_dir / "sequence_demo.scn", settings, tmp_path / "two", fmt)
        assert (tmp_path / "one" / f"trace.{fmt}").read_bytes() == (tmp_path / "two" / f"trace.{fmt}").read_bytes()
        assert first.edge_hash == second.edge_hash
