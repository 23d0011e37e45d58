"""Port-scan analytics tests against brute-force oracles."""

from __future__ import annotations

import random
import tempfile

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flowcase.assembly import FlowRecord
from flowcase.detection import (
    DetectionThresholds,
    daily_summary,
    interval_histogram,
    port_scan_report,
)
from flowcase.errors import TooManyBuckets
from flowcase.store import Store, StoreLimits, flow_document

DAY = "2021-06-15"
OTHER_DAY = "2021-06-16"
_DAY_US = {DAY: 1_623_715_200_000_000, OTHER_DAY: 1_623_801_600_000_000}


def mkrow(i, orig, resp, port, day=DAY, proto="tcp"):
    ts = _DAY_US[day] + (i % 86_400) * 1_000_000
    return {
        "i": i,
        "orig_ip": orig,
        "resp_ip": resp,
        "resp_port": port,
        "day": day,
        "ts": ts,
        "proto": proto,
    }


def flow_docs(rows):
    docs = []
    for r in rows:
        record = FlowRecord(
            flow_id=f"t{r['i']:06d}",
            orig_ip=r["orig_ip"],
            orig_port=30_000 + r["i"] % 20_000,
            resp_ip=r["resp_ip"],
            resp_port=r["resp_port"],
            proto=r["proto"],
            first_ts=r["ts"],
            last_ts=r["ts"] + 1000,
            duration=1000,
            orig_bytes=10,
            resp_bytes=5,
            orig_pkts=1,
            resp_pkts=1,
            day=r["day"],
        )
        docs.append(flow_document(record))
    return docs


def to_store(path, rows):
    store = Store(path)
    store.index_batch(flow_docs(rows))
    return store


# ---------------------------------------------------------------------------
# Oracles


def brute_pairs(rows, day):
    pairs = {}
    for r in rows:
        if r["day"] == day:
            pairs.setdefault((r["orig_ip"], r["resp_ip"]), set()).add(r["resp_port"])
    return pairs


def brute_report(rows, day, pair_min=10, sender_min=500):
    per_sender = {}
    for (sender, receiver), ports in brute_pairs(rows, day).items():
        if len(ports) > pair_min:
            per_sender.setdefault(sender, []).append((receiver, len(ports)))
    entries = []
    for sender, receivers in per_sender.items():
        total = sum(u for _, u in receivers)
        if total > sender_min:
            receivers.sort(key=lambda x: (-x[1], x[0]))
            entries.append(
                {
                    "sender_ip": sender,
                    "total_count": total,
                    "receivers": [
                        {"receiver_ip": r, "unique_ports": u} for r, u in receivers
                    ],
                }
            )
    entries.sort(key=lambda e: (-e["total_count"], e["sender_ip"]))
    return entries


def brute_totals(rows, day, floor=1):
    totals = {}
    for (sender, _), ports in brute_pairs(rows, day).items():
        if len(ports) >= floor:
            totals[sender] = totals.get(sender, 0) + len(ports)
    return {s: t for s, t in totals.items() if t >= 1}


def brute_bins(totals):
    edges = [(1, 10), (10, 100), (100, 1000), (1000, 10000), (10000, None)]
    counts = [0] * len(edges)
    for total in totals.values():
        for idx, (lo, hi) in enumerate(edges):
            if total >= lo and (hi is None or total < hi):
                counts[idx] += 1
                break
    return counts


# ---------------------------------------------------------------------------
# port_scan_report


def test_empty_day_reports_nothing(tmp_path):
    store = to_store(tmp_path, [mkrow(0, "10.0.0.1", "10.0.0.2", 80, day=OTHER_DAY)])
    report = port_scan_report(store, DAY)
    assert report.day == DAY
    assert report.entries == []


def test_empty_store_reports_nothing(tmp_path):
    assert port_scan_report(Store(tmp_path), DAY).entries == []


def sweep_fixture():
    rows = []
    i = 0
    for port in range(1, 601):  # insider sweeps ports 1-600 on one victim
        rows.append(mkrow(i, "10.0.9.9", "10.0.0.50", port))
        i += 1
    for sender in range(5):  # benign chatter: at most 8 ports per pair
        for port in range(8):
            rows.append(mkrow(i, f"10.0.1.{sender}", "10.0.0.50", 1000 + port))
            i += 1
    return rows


def test_single_insider_sweep(tmp_path):
    rows = sweep_fixture()
    store = to_store(tmp_path, rows)
    report = port_scan_report(store, DAY)
    assert [e for e in report.entries] == brute_report(rows, DAY)
    assert len(report.entries) == 1
    entry = report.entries[0]
    assert entry["sender_ip"] == "10.0.9.9"
    assert entry["total_count"] == 600
    assert entry["receivers"] == [{"receiver_ip": "10.0.0.50", "unique_ports": 600}]


def test_pair_threshold_is_strict(tmp_path):
    # 50 receivers at exactly 10 unique ports each: no pair is *higher than* 10.
    rows = []
    i = 0
    for recv in range(50):
        for port in range(10):
            rows.append(mkrow(i, "10.0.9.9", f"10.1.0.{recv}", 2000 + port))
            i += 1
    store = to_store(tmp_path, rows)
    assert port_scan_report(store, DAY).entries == []
    # One extra port on one pair pushes that pair over, but total 11 <= 500.
    rows.append(mkrow(i, "10.0.9.9", "10.1.0.0", 3000))
    assert brute_report(rows, DAY) == []


def test_sender_threshold_is_strict(tmp_path):
    # 25 receivers x 20 unique ports: every pair passes, total exactly 500.
    rows = []
    i = 0
    for recv in range(25):
        for port in range(20):
            rows.append(mkrow(i, "10.0.9.9", f"10.1.0.{recv}", 2000 + port))
            i += 1
    store = to_store(tmp_path, rows)
    assert port_scan_report(store, DAY).entries == []

    rows.append(mkrow(i, "10.0.9.9", "10.1.0.0", 3000))  # total 501
    store2 = to_store(tmp_path / "b", rows)
    report = port_scan_report(store2, DAY)
    assert len(report.entries) == 1
    assert report.entries[0]["total_count"] == 501
    assert report.entries == brute_report(rows, DAY)


def test_report_serialization(tmp_path):
    rows = sweep_fixture()
    store = to_store(tmp_path, rows)
    report = port_scan_report(store, DAY)
    as_dict = report.to_dict()
    assert as_dict["day"] == DAY
    assert as_dict["entries"] == report.entries
    assert report.csv_rows() == [("10.0.9.9", "10.0.0.50", 600)]
    tree = report.to_buckets()
    bucket = tree["buckets"][0]
    assert bucket["key"] == "10.0.9.9"
    assert bucket["total_count"] == {"value": 600}
    assert bucket["receivers"]["buckets"][0] == {
        "key": "10.0.0.50",
        "value": {"value": 600},
    }


def test_too_many_buckets_propagates(tmp_path):
    rows = sweep_fixture()
    store = to_store(tmp_path, rows)
    with pytest.raises(TooManyBuckets) as exc:
        port_scan_report(store, DAY, limits=StoreLimits(max_buckets=3))
    assert exc.value.required > 3
    assert "max_buckets" in str(exc.value)


# ---------------------------------------------------------------------------
# interval_histogram


def test_histogram_empty_day(tmp_path):
    hist = interval_histogram(Store(tmp_path), DAY)
    assert hist.day == DAY
    assert [b["sender_count"] for b in hist.bins] == [0, 0, 0, 0, 0]
    assert [(b["lo"], b["hi"]) for b in hist.bins] == [
        (1, 10),
        (10, 100),
        (100, 1000),
        (1000, 10000),
        (10000, None),
    ]


def test_histogram_isolates_large_scanner(tmp_path):
    rows = []
    i = 0
    # 6 modest senders: unique-port totals 3, 30, 30, 99, 100, 5
    shapes = {"10.2.0.1": 3, "10.2.0.2": 30, "10.2.0.3": 30, "10.2.0.4": 99, "10.2.0.6": 5}
    for sender, nports in shapes.items():
        for port in range(nports):
            rows.append(mkrow(i, sender, "10.3.0.1", 1000 + port))
            i += 1
    for port in range(100):
        rows.append(mkrow(i, "10.2.0.5", "10.3.0.1", 1000 + port))
        i += 1
    # scanner: 20,000 unique (receiver, port) pairs
    for recv in range(20):
        for port in range(1000):
            rows.append(mkrow(i, "10.9.9.9", f"10.4.{recv}.1", port))
            i += 1
    store = to_store(tmp_path, rows)
    hist = interval_histogram(store, DAY)
    totals = brute_totals(rows, DAY)
    assert totals["10.9.9.9"] == 20_000
    assert [b["sender_count"] for b in hist.bins] == brute_bins(totals)
    assert hist.bins[4]["sender_count"] == 1
    assert sum(b["sender_count"] for b in hist.bins) == len(totals)


def test_histogram_boundary_total_ten(tmp_path):
    rows = [mkrow(i, "10.0.0.1", "10.0.0.2", 100 + i) for i in range(10)]
    hist = interval_histogram(to_store(tmp_path, rows), DAY)
    assert [b["sender_count"] for b in hist.bins] == [0, 1, 0, 0, 0]


def test_histogram_pair_floor_is_inclusive(tmp_path):
    # sender A: pairs with 2 and 3 ports; sender B: one pair with 1 port.
    rows = (
        [mkrow(i, "10.0.0.1", "10.1.0.1", 100 + i) for i in range(2)]
        + [mkrow(10 + i, "10.0.0.1", "10.1.0.2", 200 + i) for i in range(3)]
        + [mkrow(20, "10.0.0.2", "10.1.0.3", 300)]
    )
    store = to_store(tmp_path, rows)
    # floor 2: pairs with >= 2 unique ports count, so A totals 5, B drops out.
    hist = interval_histogram(store, DAY, DetectionThresholds(pair_floor_for_histogram=2))
    assert sum(b["sender_count"] for b in hist.bins) == 1
    assert hist.bins[0]["sender_count"] == 1
    # default floor 1 keeps both senders.
    hist = interval_histogram(store, DAY)
    assert sum(b["sender_count"] for b in hist.bins) == 2


# ---------------------------------------------------------------------------
# daily_summary


def test_daily_summary_empty(tmp_path):
    assert daily_summary(Store(tmp_path)) == []


def test_daily_summary_matches_linear_scan(tmp_path):
    rng = random.Random(7)
    rows = [
        mkrow(
            i,
            f"10.0.0.{rng.randrange(30)}",
            f"10.1.0.{rng.randrange(40)}",
            rng.randrange(1, 2000),
            day=DAY if i % 3 else OTHER_DAY,
        )
        for i in range(1000)
    ]
    store = to_store(tmp_path, rows)
    summary = daily_summary(store)
    assert [row["day"] for row in summary] == [DAY, OTHER_DAY]
    for row in summary:
        day_rows = [r for r in rows if r["day"] == row["day"]]
        ips = {r["orig_ip"] for r in day_rows} | {r["resp_ip"] for r in day_rows}
        ports = {r["resp_port"] for r in day_rows} | {
            30_000 + r["i"] % 20_000 for r in day_rows
        }
        assert row["flows"] == len(day_rows)
        assert row["distinct_ips"] == len(ips)
        assert row["distinct_ports"] == len(ports)


# ---------------------------------------------------------------------------
# Properties


@st.composite
def _flow_rows(draw):
    n = draw(st.integers(min_value=0, max_value=120))
    rows = []
    for i in range(n):
        rows.append(
            mkrow(
                i,
                draw(st.sampled_from([f"10.0.0.{k}" for k in range(6)])),
                draw(st.sampled_from([f"10.1.0.{k}" for k in range(5)])),
                draw(st.integers(min_value=1, max_value=30)),
                day=draw(st.sampled_from([DAY, OTHER_DAY])),
            )
        )
    return rows


@given(_flow_rows(), st.integers(0, 4), st.integers(0, 12))
@settings(max_examples=60, deadline=None)
def test_report_equals_brute_force(rows, pair_min, sender_min):
    with tempfile.TemporaryDirectory() as root:
        store = to_store(root, rows)
        thresholds = DetectionThresholds(
            pair_min_unique_ports=pair_min, sender_min_total=sender_min
        )
        report = port_scan_report(store, DAY, thresholds)
    assert report.entries == brute_report(rows, DAY, pair_min, sender_min)


@given(_flow_rows(), st.integers(0, 3), st.integers(0, 8), st.integers(1, 3), st.integers(1, 6))
@settings(max_examples=40, deadline=None)
def test_threshold_monotonicity(rows, pair_min, sender_min, pair_bump, sender_bump):
    with tempfile.TemporaryDirectory() as root:
        store = to_store(root, rows)
        loose = port_scan_report(
            store, DAY, DetectionThresholds(pair_min, sender_min)
        ).entries
        tight = port_scan_report(
            store, DAY, DetectionThresholds(pair_min + pair_bump, sender_min + sender_bump)
        ).entries
    loose_by_sender = {e["sender_ip"]: e["total_count"] for e in loose}
    for entry in tight:
        assert entry["sender_ip"] in loose_by_sender
        assert entry["total_count"] <= loose_by_sender[entry["sender_ip"]]


@given(_flow_rows())
@settings(max_examples=40, deadline=None)
def test_zero_thresholds_conserve_pair_sums(rows):
    with tempfile.TemporaryDirectory() as root:
        store = to_store(root, rows)
        report = port_scan_report(store, DAY, DetectionThresholds(0, 0))
    expected = sum(len(ports) for ports in brute_pairs(rows, DAY).values())
    assert sum(e["total_count"] for e in report.entries) == expected


@given(_flow_rows(), st.randoms())
@settings(max_examples=30, deadline=None)
def test_report_invariant_under_insertion_order(rows, rng):
    shuffled = list(rows)
    rng.shuffle(shuffled)
    with tempfile.TemporaryDirectory() as root:
        a = port_scan_report(to_store(root + "/a", rows), DAY).entries
        b = port_scan_report(to_store(root + "/b", shuffled), DAY).entries
    assert a == b
