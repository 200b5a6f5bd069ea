"""Line-delimited JSON files: candidate streams, detection manifests and diagnostics."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Iterable

from pydantic import BaseModel, ValidationError

from Tracking.Domain.candidates import ResponseFrame
from Tracking.Domain.errors import StreamFormatError
from Tracking.Domain.mbpp import FrameObservation, StreamHeader
from Tracking.Domain.pairgen import DetectionRecord
from Tracking.Ports.Outbound.stream_interface import CandidateStream, StreamRecord

logger = logging.getLogger(__name__)


def read_jsonl(path: str) -> list[tuple[int, dict]]:
    """(line number, object) for every non-blank line."""
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise StreamFormatError(f"{path}:{lineno}: invalid JSON ({e.msg})") from e
            if not isinstance(obj, dict):
                raise StreamFormatError(f"{path}:{lineno}: expected an object")
            rows.append((lineno, obj))
    return rows


def write_jsonl(path: str, rows: Iterable[dict[str, Any]]) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")


class JsonlStreamAdapter(CandidateStream):
    """Header line, then one FrameObservation or ResponseFrame per line."""

    def read(self, path: str) -> tuple[StreamHeader, list[StreamRecord]]:
        rows = read_jsonl(path)
        if not rows:
            raise StreamFormatError(f"{path}: empty stream")

        lineno, head = rows[0]
        try:
            header = StreamHeader.model_validate(head)
            records: list[StreamRecord] = []
            for lineno, obj in rows[1:]:
                model = ResponseFrame if "entries" in obj else FrameObservation
                records.append(model.model_validate(obj))
        except ValidationError as e:
            first = e.errors()[0]
            where = ".".join(str(p) for p in first["loc"])
            raise StreamFormatError(f"{path}:{lineno}: {where}: {first['msg']}") from e

        logger.debug("read %d records of %s from %s", len(records), header.sequence, path)
        return header, records

    def write(self, path: str, header: StreamHeader, records: list[StreamRecord]) -> None:
        rows = [header.model_dump(mode="json")]
        rows.extend(r.model_dump(mode="json", by_alias=True) for r in records)
        write_jsonl(path, rows)


class JsonlManifestAdapter(BaseModel):
    """Detection manifests: one DetectionRecord per line."""

    def read_records(self, path: str) -> list[DetectionRecord]:
        records = []
        for lineno, obj in read_jsonl(path):
            try:
                records.append(DetectionRecord.model_validate(obj))
            except ValidationError as e:
                first = e.errors()[0]
                raise StreamFormatError(f"{path}:{lineno}: {first['msg']}") from e
        return records

    def write_records(self, path: str, records: Iterable[DetectionRecord]) -> None:
        write_jsonl(path, (r.to_wire() for r in records))
