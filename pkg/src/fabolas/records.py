"""Line-delimited record files: one JSON object per evaluation, appended as
the run progresses so that interrupted runs stay analyzable."""

from __future__ import annotations

import json
import os

from .strategies import ExperimentRecord


def record_filename(strategy: str, seed: int) -> str:
    return f"{strategy}_seed{seed}.jsonl"


def serialize_row(row: dict) -> str:
    """Canonical one-line encoding; key order is fixed so identical runs
    produce byte-identical files."""
    return json.dumps(row, sort_keys=True)


class RecordWriter:
    """Crash-safe appender: each row is written and flushed as one full line."""

    def __init__(self, path):
        self.path = path
        self._fh = open(path, "a")

    def write_row(self, row: dict) -> None:
        self._fh.write(serialize_row(row) + "\n")
        self._fh.flush()
        os.fsync(self._fh.fileno())

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def load_record(path) -> ExperimentRecord:
    """Read one record file; trailing partial lines are ignored."""
    name = os.path.basename(str(path))
    stem = name.rsplit(".", 1)[0]
    strategy, _, seed_part = stem.rpartition("_seed")
    try:
        seed = int(seed_part)
    except ValueError:
        strategy, seed = stem, -1
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError:
                break  # partial last line from an interrupted run
    return ExperimentRecord(strategy=strategy or stem, seed=seed, rows=rows)


def save_record(record: ExperimentRecord, directory) -> str:
    path = os.path.join(directory, record_filename(record.strategy, record.seed))
    with open(path, "w") as fh:
        for row in record.rows:
            fh.write(serialize_row(row) + "\n")
    return path
