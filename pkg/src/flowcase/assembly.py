"""Bidirectional flow assembly from a time-ordered packet stream.

Flows are keyed by the unordered 5-tuple; orientation (originator vs
responder) is tracked separately and pinned to the sender of the first pure
SYN when one is seen, otherwise to the first packet's sender. Flows close on
protocol idle timeout, or 5 s after FINs in both directions / any RST, so
back-to-back connections reusing a port do not glue together.
"""

from __future__ import annotations

import hashlib
import heapq
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterable, Iterator, Mapping

from .decode import PacketMeta
from .errors import OutOfOrderInput

# Packets may arrive slightly out of order (multi-interface captures); anything
# worse than this is treated as corrupt input rather than silently mis-binned.
REORDER_TOLERANCE_US = 1_000_000

TCP_CLOSE_LINGER_US = 5_000_000


@dataclass(frozen=True)
class AssemblyConfig:
    tcp_idle_timeout: float = 300.0
    udp_idle_timeout: float = 60.0
    other_idle_timeout: float = 60.0

    def __post_init__(self):
        for name in ("tcp_idle_timeout", "udp_idle_timeout", "other_idle_timeout"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")

    def idle_us(self, proto: str) -> int:
        if proto == "tcp":
            seconds = self.tcp_idle_timeout
        elif proto == "udp":
            seconds = self.udp_idle_timeout
        else:
            seconds = self.other_idle_timeout
        return int(seconds * 1_000_000)


@dataclass(frozen=True)
class FlowRecord:
    flow_id: str
    orig_ip: str
    orig_port: int
    resp_ip: str
    resp_port: int
    proto: str
    first_ts: int
    last_ts: int
    duration: int
    orig_bytes: int
    resp_bytes: int
    orig_pkts: int
    resp_pkts: int
    day: str
    orig_name: str | None = None
    resp_name: str | None = None


@dataclass
class _FlowState:
    key: tuple
    orig: tuple[str, int]
    resp: tuple[str, int]
    proto: str
    first_ts: int
    last_ts: int
    orig_bytes: int = 0
    resp_bytes: int = 0
    orig_pkts: int = 0
    resp_pkts: int = 0
    syn_pinned: bool = False
    fin_dirs: set[bool] = field(default_factory=set)
    rst_seen: bool = False

    def timeout_us(self, config: AssemblyConfig) -> int:
        if self.rst_seen or len(self.fin_dirs) == 2:
            return TCP_CLOSE_LINGER_US
        return config.idle_us(self.proto)

    def deadline(self, config: AssemblyConfig) -> int:
        return self.last_ts + self.timeout_us(config)

    def add(self, p: PacketMeta) -> None:
        from_orig = (p.src_ip, p.src_port) == self.orig
        if (
            not self.syn_pinned
            and not from_orig
            and p.tcp_flags is not None
            and "SYN" in p.tcp_flags
            and "ACK" not in p.tcp_flags
        ):
            # The true initiator showed up late (e.g. a retransmitted SYN
            # after its SYN-ACK): flip orientation and everything counted.
            self.orig, self.resp = self.resp, self.orig
            self.orig_bytes, self.resp_bytes = self.resp_bytes, self.orig_bytes
            self.orig_pkts, self.resp_pkts = self.resp_pkts, self.orig_pkts
            self.fin_dirs = {not d for d in self.fin_dirs}
            from_orig = True
        if p.tcp_flags is not None:
            if "SYN" in p.tcp_flags and "ACK" not in p.tcp_flags:
                self.syn_pinned = True
            if "FIN" in p.tcp_flags:
                self.fin_dirs.add(from_orig)
            if "RST" in p.tcp_flags:
                self.rst_seen = True
        if from_orig:
            self.orig_pkts += 1
            self.orig_bytes += p.payload_bytes
        else:
            self.resp_pkts += 1
            self.resp_bytes += p.payload_bytes
        self.first_ts = min(self.first_ts, p.ts)
        self.last_ts = max(self.last_ts, p.ts)

    def record(self, names: Mapping[str, str] | None) -> FlowRecord:
        digest = hashlib.blake2s(
            repr((self.key, self.first_ts)).encode(), digest_size=10
        ).hexdigest()
        day = datetime.fromtimestamp(self.first_ts / 1_000_000, tz=timezone.utc).date()
        names = names or {}
        return FlowRecord(
            flow_id=digest,
            orig_ip=self.orig[0],
            orig_port=self.orig[1],
            resp_ip=self.resp[0],
            resp_port=self.resp[1],
            proto=self.proto,
            first_ts=self.first_ts,
            last_ts=self.last_ts,
            duration=self.last_ts - self.first_ts,
            orig_bytes=self.orig_bytes,
            resp_bytes=self.resp_bytes,
            orig_pkts=self.orig_pkts,
            resp_pkts=self.resp_pkts,
            day=day.isoformat(),
            orig_name=names.get(self.orig[0]),
            resp_name=names.get(self.resp[0]),
        )


def _flow_key(p: PacketMeta) -> tuple:
    a = (p.src_ip, p.src_port)
    b = (p.dst_ip, p.dst_port)
    lo, hi = (a, b) if a <= b else (b, a)
    return (lo, hi, p.proto)


def assemble(
    packets: Iterable[PacketMeta],
    config: AssemblyConfig | None = None,
    names: Mapping[str, str] | None = None,
) -> Iterator[FlowRecord]:
    """Fold a non-decreasing packet stream into FlowRecords.

    Flows are yielded as soon as stream time passes their deadline, and the
    remainder at end of input. Raises OutOfOrderInput if a timestamp regresses
    by more than REORDER_TOLERANCE_US.
    """
    config = config or AssemblyConfig()
    active: dict[tuple, _FlowState] = {}
    # Lazy expiry heap: (deadline, seq, key, state). Entries go stale whenever
    # a flow gains a packet or is replaced; stale ones are skipped on pop.
    timers: list[tuple[int, int, tuple, _FlowState]] = []
    seq = 0
    clock: int | None = None

    def schedule(st: _FlowState) -> None:
        nonlocal seq
        seq += 1
        heapq.heappush(timers, (st.deadline(config), seq, st.key, st))

    for p in packets:
        if clock is not None and p.ts < clock - REORDER_TOLERANCE_US:
            raise OutOfOrderInput(
                f"timestamp {p.ts} is more than {REORDER_TOLERANCE_US} µs "
                f"behind the stream clock {clock}"
            )
        clock = p.ts if clock is None else max(clock, p.ts)

        while timers and timers[0][0] < clock:
            _, _, key, st = heapq.heappop(timers)
            if active.get(key) is st and st.deadline(config) < clock:
                del active[key]
                yield st.record(names)

        key = _flow_key(p)
        st = active.get(key)
        if st is not None and p.ts - st.last_ts > st.timeout_us(config):
            del active[key]
            yield st.record(names)
            st = None
        if st is None:
            st = _FlowState(
                key=key,
                orig=(p.src_ip, p.src_port),
                resp=(p.dst_ip, p.dst_port),
                proto=p.proto,
                first_ts=p.ts,
                last_ts=p.ts,
            )
            active[key] = st
        st.add(p)
        schedule(st)

    for st in active.values():
        yield st.record(names)


def load_name_table(path) -> dict[str, str]:
    """Parse an "ip<TAB>name" enrichment table; blank lines are skipped."""
    names: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            ip, _, name = line.partition("\t")
            if name:
                names[ip.strip()] = name.strip()
    return names
