"""Network forensics engine: capture repair and merge, flow extraction,
indexed aggregation queries, and threshold-based port-scan analytics over
isolated, migratable cases."""

__version__ = "0.1.0"
