"""Per-tick trace files in CSV or JSON Lines.

Columns are ``tick``, ``fired`` (space-separated neuron ids in CSV, a list in
JSONL), then one column per probe in declaration order. A CSV file always
has its header; a JSONL file with no ticks is empty.
"""

import csv
import logging
from pathlib import Path
from typing import IO, Iterable, List, Optional, Sequence, Union

from neurocortex.exceptions import ConfigurationError, TraceError
from neurocortex.models import TraceRow

logger = logging.getLogger(__name__)

TRACE_FORMATS = ("csv", "jsonl")


class TraceWriter:
    """Append-only writer; one instance per output file."""

    def __init__(self, path: Union[str, Path], fmt: str, probes: Sequence[str] = ()):
        if fmt not in TRACE_FORMATS:
            raise ConfigurationError(f"unknown trace format '{fmt}'", {"format": fmt, "supported": list(TRACE_FORMATS)})
        self.path = Path(path)
        self.fmt = fmt
        self.probes: List[str] = list(probes)
        self.rows_written = 0
        self._handle: Optional[IO[str]] = None
        self._csv = None

    @property
    def columns(self) -> List[str]:
        return ["tick", "fired", *self.probes]

    def __enter__(self) -> "TraceWriter":
        self.open()
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def open(self) -> None:
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._handle = self.path.open("w", encoding="utf-8", newline="")
            if self.fmt == "csv":
                self._csv = csv.writer(self._handle, lineterminator="\n")
                self._csv.writerow(self.columns)
        except OSError as exc:
            raise TraceError(f"cannot open trace file {self.path}", {"path": str(self.path)}) from exc

    def write(self, row: TraceRow) -> None:
        if self._handle is None:
            self.open()
        try:
            if self.fmt == "csv":
                values = [row.tick, " ".join(str(n) for n in row.fired)]
                values.extend(repr(float(row.probes.get(name, 0.0))) for name in self.probes)
                self._csv.writerow(values)
            else:
                ordered = TraceRow(tick=row.tick, fired=row.fired, probes={p: row.probes.get(p, 0.0) for p in self.probes})
                self._handle.write(ordered.model_dump_json() + "\n")
        except OSError as exc:
            raise TraceError(f"cannot write trace file {self.path}", {"path": str(self.path), "tick": row.tick}) from exc
        self.rows_written += 1

    def close(self) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None
            logger.info("wrote %d trace rows to %s", self.rows_written, self.path)


def emit_trace(rows: Iterable[TraceRow], fmt: str, path: Union[str, Path], probes: Sequence[str] = ()) -> Path:
    with TraceWriter(path, fmt, probes) as writer:
        for row in rows:
            writer.write(row)
    return writer.path


def read_trace(path: Union[str, Path], fmt: str) -> List[TraceRow]:
    """Parse a trace back into rows, for comparisons across formats."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if fmt == "jsonl":
        return [TraceRow.model_validate_json(line) for line in text.splitlines() if line.strip()]
    reader = csv.reader(text.splitlines())
    header = next(reader, None)
    if header is None:
        return []
    probes = header[2:]
    rows = []
    for record in reader:
        fired = [int(v) for v in record[1].split()] if record[1] else []
        rows.append(TraceRow(tick=int(record[0]), fired=fired, probes=dict(zip(probes, map(float, record[2:])))))
    return rows
