import errno
import io
import json
from pathlib import Path

import pytest

from neurocortex.exceptions import ConfigurationError, TraceError
from neurocortex.harness.trace import TraceWriter, emit_trace, read_trace
from neurocortex.models import TraceRow

ROWS = [
    TraceRow(tick=0, fired=[0], probes={"rate:a": 63.21205588285577, "weight:a>b": 0.25}),
    TraceRow(tick=1, fired=[], probes={"rate:a": 0.0, "weight:a>b": 0.2512}),
    TraceRow(tick=2, fired=[1, 4], probes={"rate:a": 1e-17, "weight:a>b": 1.0}),
]
PROBES = ["rate:a", "weight:a>b"]


def test_empty_csv_has_header_only(tmp_path):
    path = emit_trace([], "csv", tmp_path / "trace.csv")
    assert path.read_text() == "tick,fired\n"


def test_empty_jsonl_is_empty(tmp_path):
    path = emit_trace([], "jsonl", tmp_path / "trace.jsonl")
    assert path.read_text() == ""


def test_csv_layout(tmp_path):
    path = emit_trace(ROWS, "csv", tmp_path / "trace.csv", PROBES)
    lines = path.read_text().splitlines()
    assert lines[0] == "tick,fired,rate:a,weight:a>b"
    assert len(lines) == 4
    assert lines[3].startswith("2,1 4,")


def test_jsonl_layout(tmp_path):
    path = emit_trace(ROWS, "jsonl", tmp_path / "trace.jsonl", PROBES)
    records = [json.loads(line) for line in path.read_text().splitlines()]
    assert [r["tick"] for r in records] == [0, 1, 2]
    assert records[2]["fired"] == [1, 4]
    assert list(records[0]["probes"]) == PROBES


def test_formats_carry_identical_values(tmp_path):
    csv_path = emit_trace(ROWS, "csv", tmp_path / "trace.csv", PROBES)
    jsonl_path = emit_trace(ROWS, "jsonl", tmp_path / "trace.jsonl", PROBES)
    assert read_trace(csv_path, "csv") == read_trace(jsonl_path, "jsonl") == ROWS


def test_unknown_format(tmp_path):
    with pytest.raises(ConfigurationError):
        TraceWriter(tmp_path / "trace.xml", "xml")


def test_missing_probe_is_zero(tmp_path):
    with TraceWriter(tmp_path / "trace.csv", "csv", ["rate:z"]) as writer:
        writer.write(TraceRow(tick=0))
    assert writer.rows_written == 1
    assert read_trace(tmp_path / "trace.csv", "csv")[0].probes == {"rate:z": 0.0}


class _FullDisk(io.StringIO):
    """Takes the CSV header, then fails every row."""

    def write(self, text):
        if text.startswith("tick,"):
            return super().write(text)
        raise OSError(errno.ENOSPC, "No space left on device")


@pytest.mark.parametrize("fmt", ["csv", "jsonl"])
def test_failed_row_write_names_the_file(tmp_path, monkeypatch, fmt):
    monkeypatch.setattr(Path, "open", lambda self, *args, **kwargs: _FullDisk())
    writer = TraceWriter(tmp_path / f"trace.{fmt}", fmt)
    writer.open()
    with pytest.raises(TraceError) as info:
        writer.write(ROWS[0])
    assert info.value.details["path"] == str(tmp_path / f"trace.{fmt}")
    assert writer.rows_written == 0


def test_unwritable_location(tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    with pytest.raises(TraceError) as info:
        TraceWriter(blocker / "trace.csv", "csv").open()
    assert "blocker" in info.value.details["path"]
