"""Classic packet-capture files: read, validate, repair, and time-merge.

One uniform time base downstream: record timestamps are widened to integer
microseconds since epoch (nanosecond captures truncate). Repair rewrites a
corrupted file so that it parses end to end; merge turns many files into a
single stream ordered by (timestamp, input index, record index).
"""

from __future__ import annotations

import heapq
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Iterable, Iterator, Sequence

from .errors import TruncatedRecord, UnknownMagic, Unrepairable, UnsupportedVersion

MAGIC_MICRO = 0xA1B2C3D4
MAGIC_NANO = 0xA1B23C4D

GLOBAL_HEADER_LEN = 24
RECORD_HEADER_LEN = 16

LINKTYPE_ETHERNET = 1

_GLOBAL_FMT = "IHHiIII"
_RECORD_FMT = "IIII"


@dataclass(frozen=True)
class CaptureHeader:
    magic: int
    version: tuple[int, int]
    snaplen: int
    linktype: int
    ts_resolution: str  # "micro" | "nano"
    byte_order: str  # "native" | "swapped"

    @property
    def endianness(self) -> str:
        return "<" if self.byte_order == "native" else ">"


@dataclass(frozen=True)
class PacketRecord:
    ts: int  # microseconds since epoch
    caplen: int
    origlen: int
    data: bytes


@dataclass
class RepairOutcome:
    repaired: bool
    records_kept: int
    records_dropped: int
    fixes: list[tuple[int, str]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "repaired": self.repaired,
            "records_kept": self.records_kept,
            "records_dropped": self.records_dropped,
            "fixes": [[off, kind] for off, kind in self.fixes],
        }


def parse_header(buf: bytes) -> CaptureHeader:
    """Decode the 24-byte global header; byte order and timestamp resolution
    follow from the magic alone."""
    if len(buf) < GLOBAL_HEADER_LEN:
        raise UnknownMagic("not a capture file: fewer than 24 header bytes")
    little = struct.unpack_from("<I", buf)[0]
    big = struct.unpack_from(">I", buf)[0]
    if little in (MAGIC_MICRO, MAGIC_NANO):
        end, magic, byte_order = "<", little, "native"
    elif big in (MAGIC_MICRO, MAGIC_NANO):
        end, magic, byte_order = ">", big, "swapped"
    else:
        raise UnknownMagic(f"not a capture file: magic 0x{little:08x}")
    _, vmaj, vmin, _zone, _sigfigs, snaplen, linktype = struct.unpack_from(
        end + _GLOBAL_FMT, buf
    )
    if (vmaj, vmin) != (2, 4):
        raise UnsupportedVersion(f"unsupported capture version {vmaj}.{vmin}")
    if snaplen == 0:
        raise UnsupportedVersion("capture header declares snaplen 0")
    resolution = "nano" if magic == MAGIC_NANO else "micro"
    return CaptureHeader(magic, (vmaj, vmin), snaplen, linktype, resolution, byte_order)


def _widen(ts_sec: int, ts_subsec: int, resolution: str) -> int:
    if resolution == "nano":
        return ts_sec * 1_000_000 + ts_subsec // 1000
    return ts_sec * 1_000_000 + ts_subsec


def read_packets(capture: BinaryIO, header: CaptureHeader) -> Iterator[PacketRecord]:
    """Yield records in file order; stops cleanly at end of file.

    Raises TruncatedRecord (with the record's byte offset) when the file ends
    mid-record; records already yielded stay valid.
    """
    fmt = header.endianness + _RECORD_FMT
    offset = capture.tell()
    while True:
        head = capture.read(RECORD_HEADER_LEN)
        if not head:
            return
        if len(head) < RECORD_HEADER_LEN:
            raise TruncatedRecord(offset)
        ts_sec, ts_sub, caplen, origlen = struct.unpack(fmt, head)
        data = capture.read(caplen)
        if len(data) < caplen:
            raise TruncatedRecord(offset)
        yield PacketRecord(_widen(ts_sec, ts_sub, header.ts_resolution), caplen, origlen, data)
        offset += RECORD_HEADER_LEN + caplen


def open_capture(path) -> tuple[CaptureHeader, Iterator[PacketRecord]]:
    """Open a capture file and return its header plus a lazy record stream."""
    f = open(path, "rb")
    try:
        header = parse_header(f.read(GLOBAL_HEADER_LEN))
    except Exception:
        f.close()
        raise

    def stream() -> Iterator[PacketRecord]:
        try:
            yield from read_packets(f, header)
        finally:
            f.close()

    return header, stream()


def repair(capture_in, capture_out) -> RepairOutcome:
    """Rewrite a capture so the output parses end to end.

    Fix classes, applied per record in this order: swapped caplen/origlen
    fields, truncated tail (caplen adjusted when at least one data byte
    remains, record dropped otherwise), caplen clamped to snaplen. Timestamp
    disorder is recorded as a fix but never reordered in place; merge owns
    ordering. Well-formed leading bytes are copied verbatim, so repairing an
    already-clean file is byte-identical.
    """
    buf = Path(capture_in).read_bytes()
    try:
        header = parse_header(buf[:GLOBAL_HEADER_LEN])
    except (UnknownMagic, UnsupportedVersion) as e:
        raise Unrepairable(f"{capture_in}: {e}") from e

    end = header.endianness
    rec_fmt = end + _RECORD_FMT
    out = bytearray(buf[:GLOBAL_HEADER_LEN])
    fixes: list[tuple[int, str]] = []
    kept = dropped = 0
    prev_ts: tuple[int, int] | None = None

    offset = GLOBAL_HEADER_LEN
    total = len(buf)
    while offset < total:
        if total - offset < RECORD_HEADER_LEN:
            fixes.append((offset, "truncated_tail"))
            dropped += 1
            break
        ts_sec, ts_sub, caplen, origlen, = struct.unpack_from(rec_fmt, buf, offset)
        data_start = offset + RECORD_HEADER_LEN
        avail = total - data_start

        if caplen > origlen:
            caplen, origlen = origlen, caplen
            fixes.append((offset, "length_swap"))

        consumed = caplen
        if caplen > avail:
            if avail == 0:
                fixes.append((offset, "truncated_tail"))
                dropped += 1
                break
            caplen = consumed = avail
            fixes.append((offset, "truncated_tail"))

        data = buf[data_start : data_start + caplen]
        if caplen > header.snaplen:
            caplen = header.snaplen
            data = data[:caplen]
            fixes.append((offset, "caplen_clamped"))

        if prev_ts is not None and (ts_sec, ts_sub) < prev_ts:
            fixes.append((offset, "ts_reordered"))
        prev_ts = (ts_sec, ts_sub)

        out += struct.pack(rec_fmt, ts_sec, ts_sub, caplen, origlen)
        out += data
        kept += 1
        offset = data_start + consumed

    Path(capture_out).write_bytes(bytes(out))
    return RepairOutcome(bool(fixes), kept, dropped, fixes)


def _attribute(path, exc: Exception) -> None:
    exc.args = (f"{path}: {exc}",)


def merge_tagged(
    captures: Sequence,
) -> Iterator[tuple[PacketRecord, CaptureHeader]]:
    """Merge several captures into one stream of (record, owning header).

    Timestamps are globally non-decreasing; ties break by (input index,
    record index). Files with internal disorder are sorted first, so the
    result equals a global sort by (ts, file, index).
    """
    runs = []
    headers = []
    for file_idx, path in enumerate(captures):
        header, stream = open_capture(path)
        headers.append(header)
        try:
            records = list(stream)
        except Exception as e:
            _attribute(path, e)
            raise
        keyed = [(rec.ts, file_idx, rec_idx, rec) for rec_idx, rec in enumerate(records)]
        keyed.sort(key=lambda item: (item[0], item[2]))
        runs.append(keyed)
    for _ts, file_idx, _rec_idx, rec in heapq.merge(*runs):
        yield rec, headers[file_idx]


def merge(captures: Sequence) -> Iterator[PacketRecord]:
    """Time-merge capture files into one ordered record stream."""
    for rec, _header in merge_tagged(captures):
        yield rec


def write_capture(
    path,
    records: Iterable[PacketRecord],
    *,
    snaplen: int = 65535,
    linktype: int = LINKTYPE_ETHERNET,
) -> int:
    """Encode records (microsecond timestamps) as a little-endian capture.

    Used by the repair pipeline's synthetic counterpart and the dataset
    generator; test fixtures use their own encoder.
    """
    count = 0
    with open(path, "wb") as f:
        f.write(
            struct.pack("<" + _GLOBAL_FMT, MAGIC_MICRO, 2, 4, 0, 0, snaplen, linktype)
        )
        for rec in records:
            if rec.caplen > snaplen:
                raise ValueError(f"record caplen {rec.caplen} exceeds snaplen {snaplen}")
            sec, usec = divmod(rec.ts, 1_000_000)
            f.write(struct.pack("<" + _RECORD_FMT, sec, usec, rec.caplen, rec.origlen))
            f.write(rec.data)
            count += 1
    return count
