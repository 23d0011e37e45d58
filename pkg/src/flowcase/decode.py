"""Ethernet/IP/transport header decode into 5-tuple packet metadata.

Total by contract: arbitrary bytes come back as PacketMeta or Undecodable,
never an exception, so callers can count failures and keep going. 802.1Q
(and QinQ) tags are skipped transparently. Only the first IPv4 fragment is
decoded; later fragments are reported as Undecodable("fragment").
"""

from __future__ import annotations

import ipaddress
import struct
from dataclasses import dataclass

from .pcapio import LINKTYPE_ETHERNET, PacketRecord

ETHERTYPE_IPV4 = 0x0800
ETHERTYPE_IPV6 = 0x86DD
_VLAN_TPIDS = (0x8100, 0x88A8)

_TCP_FLAG_BITS = (("FIN", 0x01), ("SYN", 0x02), ("RST", 0x04), ("ACK", 0x10))


@dataclass(frozen=True)
class PacketMeta:
    ts: int
    src_ip: str
    dst_ip: str
    src_port: int
    dst_port: int
    proto: str  # "tcp" | "udp" | "icmp" | "other:<n>"
    payload_bytes: int
    tcp_flags: frozenset[str] | None = None


@dataclass(frozen=True)
class Undecodable:
    reason: str  # non_ip_ethertype | header_truncated | unsupported_linktype | fragment


_TRUNCATED = Undecodable("header_truncated")


def _proto_name(num: int) -> str:
    if num == 6:
        return "tcp"
    if num == 17:
        return "udp"
    if num in (1, 58):
        return "icmp"
    return f"other:{num}"


def decode(record: PacketRecord, linktype: int) -> PacketMeta | Undecodable:
    if linktype != LINKTYPE_ETHERNET:
        return Undecodable("unsupported_linktype")
    data = record.data
    if len(data) < 14:
        return _TRUNCATED
    ethertype = int.from_bytes(data[12:14], "big")
    off = 14
    while ethertype in _VLAN_TPIDS:
        if len(data) < off + 4:
            return _TRUNCATED
        ethertype = int.from_bytes(data[off + 2 : off + 4], "big")
        off += 4

    if ethertype == ETHERTYPE_IPV4:
        return _decode_ipv4(record, data, off)
    if ethertype == ETHERTYPE_IPV6:
        return _decode_ipv6(record, data, off)
    return Undecodable("non_ip_ethertype")


def _decode_ipv4(record: PacketRecord, data: bytes, off: int) -> PacketMeta | Undecodable:
    if len(data) < off + 20:
        return _TRUNCATED
    first = data[off]
    if first >> 4 != 4:
        return _TRUNCATED
    hlen = (first & 0x0F) * 4
    if hlen < 20 or len(data) < off + hlen:
        return _TRUNCATED
    total_length, = struct.unpack_from(">H", data, off + 2)
    flags_frag, = struct.unpack_from(">H", data, off + 6)
    if flags_frag & 0x1FFF:
        return Undecodable("fragment")
    proto_num = data[off + 9]
    src = str(ipaddress.IPv4Address(data[off + 12 : off + 16]))
    dst = str(ipaddress.IPv4Address(data[off + 16 : off + 20]))
    ip_payload = max(0, total_length - hlen)
    return _decode_transport(record, data, off + hlen, proto_num, src, dst, ip_payload)


def _decode_ipv6(record: PacketRecord, data: bytes, off: int) -> PacketMeta | Undecodable:
    if len(data) < off + 40:
        return _TRUNCATED
    if data[off] >> 4 != 6:
        return _TRUNCATED
    payload_len, = struct.unpack_from(">H", data, off + 4)
    proto_num = data[off + 6]
    src = str(ipaddress.IPv6Address(data[off + 8 : off + 24]))
    dst = str(ipaddress.IPv6Address(data[off + 24 : off + 40]))
    return _decode_transport(record, data, off + 40, proto_num, src, dst, payload_len)


def _decode_transport(
    record: PacketRecord,
    data: bytes,
    toff: int,
    proto_num: int,
    src: str,
    dst: str,
    ip_payload: int,
) -> PacketMeta | Undecodable:
    proto = _proto_name(proto_num)
    src_port = dst_port = 0
    tcp_flags: frozenset[str] | None = None

    if proto == "tcp":
        if len(data) < toff + 20:
            return _TRUNCATED
        src_port, dst_port = struct.unpack_from(">HH", data, toff)
        thl = (data[toff + 12] >> 4) * 4
        if thl < 20:
            return _TRUNCATED
        bits = data[toff + 13]
        tcp_flags = frozenset(name for name, bit in _TCP_FLAG_BITS if bits & bit)
        payload = ip_payload - thl
    elif proto == "udp":
        if len(data) < toff + 8:
            return _TRUNCATED
        src_port, dst_port, udp_len = struct.unpack_from(">HHH", data, toff)
        payload = udp_len - 8
    elif proto == "icmp":
        if len(data) < toff + 4:
            return _TRUNCATED
        payload = ip_payload - 8
    else:
        payload = ip_payload

    payload = max(0, min(payload, record.origlen))
    return PacketMeta(record.ts, src, dst, src_port, dst_port, proto, payload, tcp_flags)
