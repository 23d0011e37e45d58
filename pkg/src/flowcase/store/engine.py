"""Embedded document store: append-only per-day JSONL logs + in-memory index.

Durability model: every indexed batch is appended to its day files and fsynced
before it becomes visible to queries; opening a store replays the logs. A
partial trailing line (crash mid-append) is truncated away on open. A batch
spanning several days that dies between file writes can leave earlier days'
lines durable; visibility stays atomic either way because the in-memory commit
happens only after all writes succeed.
"""

from __future__ import annotations

import errno
import json
import re
import threading
from datetime import datetime, timezone
from pathlib import Path

from ..errors import InvalidSpec, SchemaConflict, StorageFull, UnknownField
from ..locks import WriterLock
from .aggregate import StoreLimits, run_aggregation
from .documents import Document

_GENERIC_ID = re.compile(r"^g(\d{12})$")


def _day_of(doc: Document) -> str:
    if doc.types.get("day") == "string":
        return doc.fields["day"]
    stamps = [v for n, v in doc.fields.items() if doc.types[n] == "timestamp"]
    if stamps:
        earliest = min(stamps)
        return datetime.fromtimestamp(earliest // 1_000_000, tz=timezone.utc).date().isoformat()
    return "undated"


class Store:
    def __init__(self, root, limits: StoreLimits | None = None):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.limits = limits or StoreLimits()
        self._mutex = threading.RLock()
        self._days: dict[str, list[Document]] = {}
        self._schema: dict[str, dict] = {}
        self._total = 0
        self._generic_seq = 0
        self._replay()

    # -- load ---------------------------------------------------------------

    def _replay(self) -> None:
        for path in sorted(self.root.glob("*.jsonl")):
            good = 0
            with open(path, "rb") as fh:
                for line in fh:
                    try:
                        raw = json.loads(line)
                    except ValueError:
                        break  # crash tail; drop the rest of this file
                    doc = Document(
                        fields=raw["fields"],
                        types=raw["types"],
                        source_kind=raw["source_kind"],
                        doc_id=raw["doc_id"],
                        day=raw["day"],
                    )
                    self._admit(doc)
                    good += len(line)
            if good < path.stat().st_size:
                with open(path, "r+b") as fh:
                    fh.truncate(good)

    def _admit(self, doc: Document) -> None:
        self._days.setdefault(doc.day, []).append(doc)
        self._total += 1
        for name, ftype in doc.types.items():
            info = self._schema.setdefault(name, {"type": ftype, "count": 0})
            info["count"] += 1
        match = _GENERIC_ID.match(doc.doc_id or "")
        if match:
            self._generic_seq = max(self._generic_seq, int(match.group(1)) + 1)

    # -- write --------------------------------------------------------------

    def _write_day_file(self, path: Path, payload: bytes) -> None:
        with open(path, "ab") as fh:
            fh.write(payload)
            fh.flush()
            import os

            os.fsync(fh.fileno())

    def index_batch(self, docs: list[Document]) -> int:
        """Validate, persist and publish a batch atomically (all or nothing)."""
        with self._mutex, WriterLock(self.root):
            merged: dict[str, str] = {n: i["type"] for n, i in self._schema.items()}
            for doc in docs:
                for name, ftype in doc.types.items():
                    seen = merged.setdefault(name, ftype)
                    if seen != ftype:
                        raise SchemaConflict(
                            f"field {name!r} is {seen}, cannot also index it as {ftype}"
                        )

            seq = self._generic_seq
            stored: list[Document] = []
            for doc in docs:
                doc_id = doc.doc_id
                if doc_id is None:
                    doc_id = f"g{seq:012d}"
                    seq += 1
                copy = Document(
                    fields=dict(doc.fields),
                    types=dict(doc.types),
                    source_kind=doc.source_kind,
                    doc_id=doc_id,
                )
                copy.day = _day_of(copy)
                stored.append(copy)

            by_day: dict[str, list[bytes]] = {}
            for doc in stored:
                line = json.dumps(
                    {
                        "doc_id": doc.doc_id,
                        "source_kind": doc.source_kind,
                        "day": doc.day,
                        "fields": doc.fields,
                        "types": doc.types,
                    }
                )
                by_day.setdefault(doc.day, []).append(line.encode() + b"\n")
            try:
                for day, lines in by_day.items():
                    self._write_day_file(self.root / f"{day}.jsonl", b"".join(lines))
            except OSError as exc:
                if exc.errno == errno.ENOSPC:
                    raise StorageFull("no space left while appending day logs") from exc
                raise

            for doc in stored:
                self._admit(doc)
            self._generic_seq = max(self._generic_seq, seq)
            return len(stored)

    def cleanup(self, days: list[str] | None = None) -> int:
        """Drop whole day partitions (all of them when days is None)."""
        with self._mutex, WriterLock(self.root):
            targets = list(self._days) if days is None else [d for d in days if d in self._days]
            removed = 0
            for day in targets:
                removed += len(self._days.pop(day))
                (self.root / f"{day}.jsonl").unlink(missing_ok=True)
            self._rebuild_schema()
            self._total -= removed
            return removed

    def _rebuild_schema(self) -> None:
        self._schema = {}
        for docs in self._days.values():
            for doc in docs:
                for name, ftype in doc.types.items():
                    info = self._schema.setdefault(name, {"type": ftype, "count": 0})
                    info["count"] += 1

    # -- read ---------------------------------------------------------------

    def list_fields(self) -> dict[str, dict]:
        with self._mutex:
            return {name: dict(info) for name, info in self._schema.items()}

    @property
    def doc_count(self) -> int:
        return self._total

    @property
    def days(self) -> list[str]:
        with self._mutex:
            return sorted(self._days)

    def _check_filter(self, predicates) -> None:
        for p in predicates:
            if not isinstance(p, dict) or len(p) != 1:
                raise InvalidSpec("each predicate must be one of term/range/exists")
            kind, body = next(iter(p.items()))
            if kind not in ("term", "range", "exists") or not isinstance(body, dict):
                raise InvalidSpec(f"unknown predicate {kind!r}")
            fname = body.get("field")
            if not isinstance(fname, str) or not fname:
                raise InvalidSpec("predicate requires a 'field'")
            if self._total and fname not in self._schema:
                raise UnknownField(f"field {fname!r} is not indexed")

    def _matches(self, doc: Document, predicates) -> bool:
        for p in predicates:
            kind, body = next(iter(p.items()))
            fname = body["field"]
            if fname not in doc.fields:
                return False
            if kind == "term":
                if doc.fields[fname] != body.get("value"):
                    return False
            elif kind == "range":
                value = doc.fields[fname]
                lo, hi = body.get("lo"), body.get("hi")
                if self._schema.get(fname, {}).get("type") == "ip":
                    import ipaddress

                    value = ipaddress.ip_address(value)
                    lo = ipaddress.ip_address(lo) if lo is not None else None
                    hi = ipaddress.ip_address(hi) if hi is not None else None
                try:
                    if lo is not None and value < lo:
                        return False
                    if hi is not None and value > hi:
                        return False
                except TypeError:
                    return False
        return True

    def _filtered(self, predicates) -> list[Document]:
        if not predicates:
            return [doc for docs in self._days.values() for doc in docs]
        return [
            doc
            for docs in self._days.values()
            for doc in docs
            if self._matches(doc, predicates)
        ]

    def query(self, filter=None, limit: int | None = None, offset: int = 0) -> list[Document]:
        with self._mutex:
            predicates = filter or []
            self._check_filter(predicates)
            if not self._total:
                return []
            hits = self._filtered(predicates)
            hits.sort(key=lambda d: (d.day, d.doc_id))
            if offset:
                hits = hits[offset:]
            if limit is not None:
                hits = hits[:limit]
            return hits

    def aggregate(self, spec: dict, filter=None, limits: StoreLimits | None = None) -> dict:
        with self._mutex:
            predicates = filter or []
            self._check_filter(predicates)
            rows = [d.fields for d in self._filtered(predicates)] if self._total else []
            schema = self._schema if self._total else None
            return run_aggregation(rows, spec, schema, limits or self.limits)
