"""Artifact writing: canonical JSON, LF-terminated CSV, run manifests."""

from __future__ import annotations

import csv
import hashlib
import json
import platform
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

from . import __version__


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_json(path: str | Path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(canonical_json(obj), encoding="utf-8", newline="\n")
    return path


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


class CsvStream:
    """CSV writer that flushes every row, so partial results survive an abort."""

    def __init__(self, path: str | Path, header: Sequence[str]):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = self.path.open("w", encoding="utf-8", newline="")
        self._w = csv.writer(self._fh, lineterminator="\n")
        self._w.writerow(header)
        self._fh.flush()

    def write(self, row: Sequence) -> None:
        self._w.writerow(row)
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def file_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def config_digest(config: dict) -> str:
    return hashlib.sha256(json.dumps(config, sort_keys=True).encode()).hexdigest()


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    config: dict
    group_digest: str | None
    started: str = field(default_factory=_now)
    finished: str | None = None
    status: str = "running"
    outputs: dict = field(default_factory=dict)
    error: str | None = None

    def add_output(self, path: str | Path) -> None:
        path = Path(path)
        self.outputs[path.name] = file_digest(path)

    def finish(self, status: str, error: str | None = None) -> None:
        self.status = status
        self.error = error
        self.finished = _now()

    def as_dict(self) -> dict:
        return {
            "config": self.config,
            "config_digest": config_digest(self.config),
            "group_digest": self.group_digest,
            "tool": "raagkit",
            "version": __version__,
            "python": platform.python_version(),
            "started": self.started,
            "finished": self.finished,
            "status": self.status,
            "error": self.error,
            "outputs": dict(sorted(self.outputs.items())),
        }

    def write(self, path: str | Path) -> Path:
        return write_json(path, self.as_dict())
