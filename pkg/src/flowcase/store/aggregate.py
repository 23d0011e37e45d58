"""Nested bucket aggregation: terms / unique_count / sum, having, bucket sort.

Spec nodes are plain dicts (JSON-shaped, so they travel over the API):

    {"kind": "terms", "field": f, "size": n, "aggs": {name: node, ...},
     "having": {"metric": m, "gt": x},
     "sort": {"by": m, "descending": true, "top": k}}
    {"kind": "unique_count", "field": f}
    {"kind": "sum", "of": "<sibling terms name>><metric name>"}

Evaluation order per terms node: group, order keys ascending by str, apply the
size cut, evaluate children for surviving buckets, resolve sums over the child
results, apply having (strictly greater), then bucket sort with top-k.
unique_count is exact. "doc_count" is always available as a metric name.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import InvalidSpec, TooManyBuckets, UnknownField


@dataclass(frozen=True)
class StoreLimits:
    max_buckets: int = 10_000

    def __post_init__(self):
        if self.max_buckets < 1:
            raise ValueError("max_buckets must be >= 1")


def _metric(bucket: dict, name: str):
    if name == "doc_count":
        return bucket["doc_count"]
    return bucket[name]["value"]


def _metric_names(aggs: dict) -> set[str]:
    names = {"doc_count"}
    names.update(n for n, c in aggs.items() if isinstance(c, dict) and c.get("kind") in ("unique_count", "sum"))
    return names


def validate_spec(spec, schema: dict | None, is_root: bool = True) -> None:
    """Shape-check a spec tree; field checks skipped when schema is None."""
    if not isinstance(spec, dict) or not isinstance(spec.get("kind"), str):
        raise InvalidSpec("aggregation node must be an object with a 'kind'")
    kind = spec["kind"]
    if kind == "sum":
        if is_root:
            raise InvalidSpec("sum must sit beside the terms aggregation it sums over")
        of = spec.get("of")
        if not isinstance(of, str) or ">" not in of:
            raise InvalidSpec("sum requires 'of' as '<sibling>><metric>'")
        return
    if kind not in ("terms", "unique_count"):
        raise InvalidSpec(f"unknown aggregation kind {kind!r}")
    fname = spec.get("field")
    if not isinstance(fname, str) or not fname:
        raise InvalidSpec(f"{kind} requires a 'field'")
    if schema is not None and fname not in schema:
        raise UnknownField(f"field {fname!r} is not indexed")
    if kind == "unique_count":
        return

    size = spec.get("size")
    if size is not None and (not isinstance(size, int) or isinstance(size, bool) or size < 1):
        raise InvalidSpec("terms size must be a positive integer")
    aggs = spec.get("aggs") or {}
    if not isinstance(aggs, dict):
        raise InvalidSpec("aggs must map names to nodes")
    for name, child in aggs.items():
        if not name or not isinstance(name, str):
            raise InvalidSpec("aggregation names must be non-empty strings")
        validate_spec(child, schema, is_root=False)
    for name, child in aggs.items():
        if child.get("kind") != "sum":
            continue
        sibling, _, metric = child["of"].partition(">")
        target = aggs.get(sibling)
        if not isinstance(target, dict) or target.get("kind") != "terms":
            raise InvalidSpec(f"sum {name!r} references {sibling!r}, which is not a sibling terms aggregation")
        if metric not in _metric_names(target.get("aggs") or {}):
            raise InvalidSpec(f"sum {name!r} references unknown metric {metric!r} of {sibling!r}")

    available = _metric_names(aggs)
    having = spec.get("having")
    if having is not None:
        if (
            not isinstance(having, dict)
            or having.get("metric") not in available
            or isinstance(having.get("gt"), bool)
            or not isinstance(having.get("gt"), (int, float))
        ):
            raise InvalidSpec("having requires a known 'metric' and numeric 'gt'")
    sort = spec.get("sort")
    if sort is not None:
        if not isinstance(sort, dict) or sort.get("by") not in available:
            raise InvalidSpec("sort requires 'by' naming a metric of this node")
        top = sort.get("top")
        if top is not None and (not isinstance(top, int) or isinstance(top, bool) or top < 1):
            raise InvalidSpec("sort top must be a positive integer")
        if not isinstance(sort.get("descending", True), bool):
            raise InvalidSpec("sort descending must be a boolean")


def _group(rows: list[dict], fname: str) -> dict:
    groups: dict = {}
    for row in rows:
        if fname in row:
            groups.setdefault(row[fname], []).append(row)
    return groups


def _kept_keys(groups: dict, spec: dict) -> list:
    keys = sorted(groups, key=str)
    size = spec.get("size")
    return keys if size is None else keys[:size]


def count_required_buckets(rows: list[dict], spec: dict) -> int:
    """Distinct keys every terms evaluation would materialize, summed.

    The size cut limits which buckets get children, but the keys of the cut
    evaluation itself were still materialized and all count.
    """
    if spec["kind"] != "terms":
        return 0
    groups = _group(rows, spec["field"])
    total = len(groups)
    children = [c for c in (spec.get("aggs") or {}).values() if c.get("kind") == "terms"]
    if children:
        for key in _kept_keys(groups, spec):
            for child in children:
                total += count_required_buckets(groups[key], child)
    return total


def evaluate(rows: list[dict], spec: dict) -> dict:
    if spec["kind"] == "unique_count":
        fname = spec["field"]
        return {"value": len({row[fname] for row in rows if fname in row})}

    groups = _group(rows, spec["field"])
    aggs = spec.get("aggs") or {}
    buckets = []
    for key in _kept_keys(groups, spec):
        members = groups[key]
        bucket = {"key": key, "doc_count": len(members)}
        sums = []
        for name, child in aggs.items():
            if child["kind"] == "sum":
                sums.append((name, child))
            else:
                bucket[name] = evaluate(members, child)
        for name, child in sums:
            sibling, _, metric = child["of"].partition(">")
            bucket[name] = {
                "value": sum(_metric(b, metric) for b in bucket[sibling]["buckets"])
            }
        buckets.append(bucket)

    having = spec.get("having")
    if having is not None:
        buckets = [b for b in buckets if _metric(b, having["metric"]) > having["gt"]]
    sort = spec.get("sort")
    if sort is not None:
        buckets.sort(key=lambda b: str(b["key"]))
        buckets.sort(key=lambda b: _metric(b, sort["by"]), reverse=sort.get("descending", True))
        if sort.get("top") is not None:
            buckets = buckets[: sort["top"]]
    return {"buckets": buckets}


def run_aggregation(rows: list[dict], spec: dict, schema: dict | None, limits: StoreLimits) -> dict:
    validate_spec(spec, schema)
    required = count_required_buckets(rows, spec)
    if required > limits.max_buckets:
        raise TooManyBuckets(required=required, limit=limits.max_buckets)
    return evaluate(rows, spec)
