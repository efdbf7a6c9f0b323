"""JSONL reading and writing with an optional provenance header.

Artifact files start with a single ``{"_meta": {...}}`` line carrying the
tool version, seed, and config hash of the run that produced them. Readers
skip it; files without one load fine.
"""

from __future__ import annotations

import json
from typing import Iterable

META_KEY = "_meta"


def dumps(record: dict) -> str:
    return json.dumps(record, ensure_ascii=False, sort_keys=True)


def write_jsonl(path: str, records: Iterable[dict], meta: dict | None = None) -> int:
    """Write records (plus an optional meta header); returns the record count."""
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        if meta is not None:
            handle.write(dumps({META_KEY: meta}) + "\n")
        for record in records:
            handle.write(dumps(record) + "\n")
            count += 1
    return count


def read_jsonl(path: str) -> tuple[dict | None, list[dict]]:
    """Read (meta, records), raising with the line number on bad JSON."""
    meta = None
    records = []
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            text = line.strip()
            if not text:
                continue
            try:
                obj = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{line_no}: invalid JSON: {exc.msg}") from exc
            if line_no == 1 and isinstance(obj, dict) and set(obj) == {META_KEY}:
                meta = obj[META_KEY]
                continue
            records.append(obj)
    return meta, records
