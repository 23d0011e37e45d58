"""Typed documents and type inference for the embedded store.

Field values are one of four types: string, integer, ip, timestamp. An ip is
stored as its address string; a timestamp is integer microseconds since the
epoch (UTC). Every document carries its own field->type map so a day log is
self-describing and replay needs no side schema file.
"""

from __future__ import annotations

import dataclasses
import ipaddress
import json
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone

from ..assembly import FlowRecord

FIELD_TYPES = ("string", "integer", "ip", "timestamp")

_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)
_US = timedelta(microseconds=1)


def _is_ip(value: str) -> bool:
    try:
        ipaddress.ip_address(value)
        return True
    except ValueError:
        return False


def _validate(fields: dict, types: dict) -> None:
    if set(fields) != set(types):
        raise ValueError("fields and types must declare the same names")
    for name, value in fields.items():
        if not name:
            raise ValueError("field names must be non-empty")
        ftype = types[name]
        if ftype == "string":
            ok = isinstance(value, str)
        elif ftype in ("integer", "timestamp"):
            ok = isinstance(value, int) and not isinstance(value, bool)
        elif ftype == "ip":
            ok = isinstance(value, str) and _is_ip(value)
        else:
            raise ValueError(f"unknown field type {ftype!r}")
        if not ok:
            raise ValueError(f"field {name!r} does not match declared type {ftype!r}")


@dataclass
class Document:
    fields: dict = field(default_factory=dict)
    types: dict = field(default_factory=dict)
    source_kind: str = "json"
    doc_id: str | None = None
    day: str | None = None  # assigned by the store at index time

    def __post_init__(self):
        _validate(self.fields, self.types)


_FLOW_TYPES = {
    "flow_id": "string",
    "orig_ip": "ip",
    "orig_port": "integer",
    "resp_ip": "ip",
    "resp_port": "integer",
    "proto": "string",
    "first_ts": "timestamp",
    "last_ts": "timestamp",
    "duration": "integer",
    "orig_bytes": "integer",
    "resp_bytes": "integer",
    "orig_pkts": "integer",
    "resp_pkts": "integer",
    "day": "string",
    "orig_name": "string",
    "resp_name": "string",
}


def flow_document(record: FlowRecord) -> Document:
    """A flow as a document: exactly the flow fields, unset names omitted."""
    fields = {k: v for k, v in dataclasses.asdict(record).items() if v is not None}
    return Document(
        fields=fields,
        types={k: _FLOW_TYPES[k] for k in fields},
        source_kind="flow",
        doc_id=record.flow_id,
    )


def _parse_timestamp(text: str) -> int | None:
    # Date-only strings stay strings so day columns partition by value.
    if "T" not in text:
        return None
    try:
        parsed = datetime.fromisoformat(text.replace("Z", "+00:00"))
    except ValueError:
        return None
    if parsed.tzinfo is None:
        parsed = parsed.replace(tzinfo=timezone.utc)
    return (parsed - _EPOCH) // _US


def _parse_integer(text: str) -> int | None:
    body = text[1:] if text[:1] in "+-" else text
    if body.isdigit():
        return int(text)
    return None


def infer_field(value) -> tuple[object, str] | None:
    """Map a raw CSV/JSON scalar to (stored value, type); None drops the field.

    Inference stays conservative: integers and RFC 3339 instants are promoted,
    everything else (floats, booleans, structures) becomes a string so mixed
    columns cannot trip a schema conflict by accident.
    """
    if value is None:
        return None
    if isinstance(value, bool):
        return ("true" if value else "false", "string")
    if isinstance(value, int):
        return (value, "integer")
    if isinstance(value, float):
        return (format(value, "g"), "string")
    if isinstance(value, str):
        as_int = _parse_integer(value)
        if as_int is not None:
            return (as_int, "integer")
        as_ts = _parse_timestamp(value)
        if as_ts is not None:
            return (as_ts, "timestamp")
        return (value, "string")
    return (json.dumps(value, sort_keys=True), "string")


def generic_document(raw: dict, source_kind: str, doc_id: str | None = None) -> Document:
    fields: dict = {}
    types: dict = {}
    for name, value in raw.items():
        inferred = infer_field(value)
        if inferred is None:
            continue
        fields[name], types[name] = inferred
    return Document(fields=fields, types=types, source_kind=source_kind, doc_id=doc_id)
