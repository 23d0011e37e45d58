"""Embedded document store: typed documents, day-partitioned persistence,
filtered queries and nested bucket aggregations."""

from .aggregate import StoreLimits
from .documents import Document, flow_document, generic_document, infer_field
from .engine import Store

__all__ = [
    "Document",
    "Store",
    "StoreLimits",
    "flow_document",
    "generic_document",
    "infer_field",
]
