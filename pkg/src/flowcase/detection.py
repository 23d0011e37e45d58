"""Insider port-scan analytics over the document store.

The central metric is the number of distinct responder (destination) ports
each sender used against each receiver on a given day. The report keeps only
pairs strictly above the pair threshold, totals the surviving pairs per
sender, and keeps senders strictly above the total threshold, ranked by that
total. The histogram buckets every sender's total into decade intervals
instead of applying the report cutoffs.
"""

from __future__ import annotations

from dataclasses import dataclass

from .store import Store, StoreLimits

HISTOGRAM_EDGES = ((1, 10), (10, 100), (100, 1000), (1000, 10000), (10000, None))


@dataclass(frozen=True)
class DetectionThresholds:
    pair_min_unique_ports: int = 10  # strict: a pair must be higher than this
    sender_min_total: int = 500  # strict: a sender's total must be higher
    pair_floor_for_histogram: int = 1  # inclusive: pairs with at least this many

    def __post_init__(self):
        for name in (
            "pair_min_unique_ports",
            "sender_min_total",
            "pair_floor_for_histogram",
        ):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


@dataclass(frozen=True)
class DetectionReport:
    day: str
    entries: list  # [{sender_ip, total_count, receivers: [{receiver_ip, unique_ports}]}]

    def to_dict(self) -> dict:
        return {"day": self.day, "entries": self.entries}

    def csv_rows(self) -> list[tuple]:
        return [
            (e["sender_ip"], r["receiver_ip"], r["unique_ports"])
            for e in self.entries
            for r in e["receivers"]
        ]

    def to_buckets(self) -> dict:
        """The nested bucket shape the report was computed from."""
        return {
            "buckets": [
                {
                    "key": e["sender_ip"],
                    "total_count": {"value": e["total_count"]},
                    "receivers": {
                        "buckets": [
                            {"key": r["receiver_ip"], "value": {"value": r["unique_ports"]}}
                            for r in e["receivers"]
                        ]
                    },
                }
                for e in self.entries
            ]
        }


@dataclass(frozen=True)
class IntervalHistogram:
    day: str
    bins: list  # [{lo, hi, sender_count}], hi None for the open top bin

    def to_dict(self) -> dict:
        return {"day": self.day, "bins": self.bins}


def _pair_totals_spec(pair_gt: float) -> dict:
    return {
        "kind": "terms",
        "field": "orig_ip",
        "aggs": {
            "receivers": {
                "kind": "terms",
                "field": "resp_ip",
                "aggs": {"value": {"kind": "unique_count", "field": "resp_port"}},
                "having": {"metric": "value", "gt": pair_gt},
                "sort": {"by": "value", "descending": True},
            },
            "total_count": {"kind": "sum", "of": "receivers>value"},
        },
    }


def _day_filter(day: str) -> list:
    return [{"term": {"field": "day", "value": day}}]


def port_scan_report(
    store: Store,
    day: str,
    thresholds: DetectionThresholds | None = None,
    limits: StoreLimits | None = None,
) -> DetectionReport:
    t = thresholds or DetectionThresholds()
    spec = _pair_totals_spec(t.pair_min_unique_ports)
    spec["having"] = {"metric": "total_count", "gt": t.sender_min_total}
    spec["sort"] = {"by": "total_count", "descending": True}
    result = store.aggregate(spec, filter=_day_filter(day), limits=limits)
    entries = [
        {
            "sender_ip": b["key"],
            "total_count": b["total_count"]["value"],
            "receivers": [
                {"receiver_ip": rb["key"], "unique_ports": rb["value"]["value"]}
                for rb in b["receivers"]["buckets"]
            ],
        }
        for b in result["buckets"]
    ]
    return DetectionReport(day=day, entries=entries)


def interval_histogram(
    store: Store,
    day: str,
    thresholds: DetectionThresholds | None = None,
    limits: StoreLimits | None = None,
) -> IntervalHistogram:
    t = thresholds or DetectionThresholds()
    # ">= floor" expressed through the strict having: > floor-1 on integer counts
    spec = _pair_totals_spec(t.pair_floor_for_histogram - 1)
    result = store.aggregate(spec, filter=_day_filter(day), limits=limits)
    bins = [{"lo": lo, "hi": hi, "sender_count": 0} for lo, hi in HISTOGRAM_EDGES]
    for bucket in result["buckets"]:
        total = bucket["total_count"]["value"]
        if total < 1:
            continue
        for b in bins:
            if total >= b["lo"] and (b["hi"] is None or total < b["hi"]):
                b["sender_count"] += 1
                break
    return IntervalHistogram(day=day, bins=bins)


def daily_summary(store: Store) -> list[dict]:
    """Per-day flow count and distinct IP/port counts, exact."""
    per_day: dict[str, dict] = {}
    for doc in store.query():
        if doc.source_kind != "flow":
            continue
        fields = doc.fields
        row = per_day.setdefault(doc.day, {"flows": 0, "ips": set(), "ports": set()})
        row["flows"] += 1
        row["ips"].add(fields["orig_ip"])
        row["ips"].add(fields["resp_ip"])
        row["ports"].add(fields["orig_port"])
        row["ports"].add(fields["resp_port"])
    return [
        {
            "day": day,
            "flows": row["flows"],
            "distinct_ips": len(row["ips"]),
            "distinct_ports": len(row["ports"]),
        }
        for day, row in sorted(per_day.items())
    ]
