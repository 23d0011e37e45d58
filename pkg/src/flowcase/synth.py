"""Two-day synthetic capture set: benign background plus two port sweeps.

Desk-scale stand-in for an operational network: dozens of hosts whose
sender/receiver pairs touch at most a handful of destination ports per day,
plus two insiders sweeping thousands of ports across many victims. Default
report thresholds (pair > 10, total > 500) must isolate exactly the two
insiders, ranked by their distinct sweep totals.
"""

from __future__ import annotations

import random
import struct
from pathlib import Path

from .pcapio import PacketRecord, write_capture

DAYS = (
    ("2021-06-15", 1_623_715_200_000_000),
    ("2021-06-16", 1_623_801_600_000_000),
)

BENIGN_SENDERS = [f"10.0.0.{i}" for i in range(1, 41)]
BENIGN_RECEIVERS = [f"10.1.0.{i}" for i in range(1, 21)]
SERVICE_PORTS = (22, 25, 53, 80, 110, 143, 389, 443, 445, 465, 587, 993, 995,
                 3306, 3389, 5432, 8080, 8443)

# Disjoint port slices per victim keep every probe a distinct flow and make
# the two sweep totals distinct, so the report ranking is deterministic.
SCANNERS = (
    {"ip": "10.9.0.1", "victims": [f"10.2.0.{i}" for i in range(1, 13)],
     "ports_per_victim": 900, "port_base": 1024},
    {"ip": "10.9.0.2", "victims": [f"10.3.0.{i}" for i in range(1, 11)],
     "ports_per_victim": 1010, "port_base": 20000},
)

_SYN = 0x02
_SYNACK = 0x12
_PSHACK = 0x18


def _ipv4(addr: str) -> bytes:
    return bytes(int(p) for p in addr.split("."))


def _frame(src_ip: str, dst_ip: str, sport: int, dport: int,
           flags: int, payload: bytes = b"") -> bytes:
    tcp = struct.pack(">HHIIBBHHH", sport, dport, 0, 0, 5 << 4, flags, 8192, 0, 0)
    tcp += payload
    ip = struct.pack(
        ">BBHHHBBH", 0x45, 0, 20 + len(tcp), 0x2222, 0x4000, 64, 6, 0
    ) + _ipv4(src_ip) + _ipv4(dst_ip) + tcp
    eth = bytes(6) + b"\x02\x00\x00\x00\x00\x01" + struct.pack(">H", 0x0800)
    return eth + ip


def _benign_plan(rng: random.Random) -> list[tuple[str, str, int]]:
    """(sender, receiver, port) triples; every pair stays at <= 8 unique ports."""
    plan = []
    for sender in BENIGN_SENDERS:
        receivers = rng.sample(BENIGN_RECEIVERS, rng.randint(2, 5))
        for receiver in receivers:
            for port in rng.sample(SERVICE_PORTS, rng.randint(1, 8)):
                plan.append((sender, receiver, port))
    return plan


def _day_events(rng: random.Random, day_base_us: int) -> list[tuple[int, bytes]]:
    events: list[tuple[int, bytes]] = []

    def stamp() -> int:
        # keep everything well inside the UTC day
        return day_base_us + rng.randrange(8 * 3600, 20 * 3600) * 1_000_000 \
            + rng.randrange(1_000_000)

    eph = 49_152
    for sender, receiver, port in _benign_plan(rng):
        t = stamp()
        eph = 49_152 + (eph - 49_151) % 16_000
        payload = bytes(rng.randrange(256) for _ in range(rng.randint(40, 400)))
        events.append((t, _frame(sender, receiver, eph, port, _SYN)))
        events.append((t + 1_500, _frame(receiver, sender, port, eph, _SYNACK)))
        events.append((t + 3_000, _frame(sender, receiver, eph, port, _PSHACK, payload)))

    for scanner in SCANNERS:
        seq = 0
        for vi, victim in enumerate(scanner["victims"]):
            base = scanner["port_base"] + vi * scanner["ports_per_victim"]
            for port in range(base, base + scanner["ports_per_victim"]):
                events.append(
                    (stamp(),
                     _frame(scanner["ip"], victim, 40_000 + seq % 20_000, port, _SYN))
                )
                seq += 1

    events.sort(key=lambda e: e[0])
    return events


def generate_replica(out_dir, seed: int = 7) -> dict:
    """Write one capture file per day; returns a manifest with ground truth."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(seed)

    files: dict[str, str] = {}
    packets = 0
    hosts: set[str] = set()
    for day, base_us in DAYS:
        path = out / f"replica-{day}.pcap"
        events = _day_events(rng, base_us)
        packets += write_capture(
            path, (PacketRecord(ts, len(d), len(d), d) for ts, d in events)
        )
        files[day] = str(path)

    hosts.update(BENIGN_SENDERS)
    hosts.update(BENIGN_RECEIVERS)
    for scanner in SCANNERS:
        hosts.add(scanner["ip"])
        hosts.update(scanner["victims"])

    return {
        "seed": seed,
        "days": [day for day, _ in DAYS],
        "files": files,
        "hosts": len(hosts),
        "packets": packets,
        "benign_senders": len(BENIGN_SENDERS),
        "scanners": {
            s["ip"]: {
                "victims": len(s["victims"]),
                "ports_per_victim": s["ports_per_victim"],
                "total_ports": len(s["victims"]) * s["ports_per_victim"],
            }
            for s in SCANNERS
        },
    }
