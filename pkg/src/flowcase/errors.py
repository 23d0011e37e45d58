"""Engine error hierarchy.

Every error the library raises derives from EngineError and carries a stable
machine code; the HTTP layer and the CLI map codes to status / exit codes
without inspecting messages.
"""


class EngineError(Exception):
    code = "engine_error"
    http_status = 400

    def detail(self) -> dict:
        """Extra machine-readable payload for API responses."""
        return {}


# capture-io
class CaptureError(EngineError):
    code = "capture_error"


class UnknownMagic(CaptureError):
    code = "unknown_magic"


class UnsupportedVersion(CaptureError):
    code = "unsupported_version"


class TruncatedRecord(CaptureError):
    code = "truncated_record"

    def __init__(self, offset: int, msg: str | None = None):
        self.offset = offset
        super().__init__(msg or f"record at byte offset {offset} extends past end of file")

    def detail(self) -> dict:
        return {"offset": self.offset}


class Unrepairable(CaptureError):
    code = "unrepairable"
    http_status = 422


# flow-assembly
class OutOfOrderInput(EngineError):
    code = "out_of_order_input"
    http_status = 422


# flowstore
class SchemaConflict(EngineError):
    code = "schema_conflict"
    http_status = 409


class StorageFull(EngineError):
    code = "storage_full"
    http_status = 507


class UnknownField(EngineError):
    code = "unknown_field"


class InvalidSpec(EngineError):
    code = "invalid_spec"


class TooManyBuckets(EngineError):
    code = "too_many_buckets"
    http_status = 422

    def __init__(self, required: int, limit: int):
        self.required = required
        self.limit = limit
        super().__init__(
            f"aggregation needs {required} buckets but max_buckets is {limit}; "
            f"retry with max_buckets >= {required}"
        )

    def detail(self) -> dict:
        return {"required": self.required, "limit": self.limit}


# ingest-pipeline
class UnknownFormat(EngineError):
    code = "unknown_format"


class CorruptArchive(EngineError):
    code = "corrupt_archive"


class UnsafePath(EngineError):
    code = "unsafe_path"


class PathOutsideCase(EngineError):
    code = "path_outside_case"


class NotFound(EngineError):
    code = "not_found"
    http_status = 404


# casework
class DuplicateId(EngineError):
    code = "duplicate_id"
    http_status = 409


class CaseBusy(EngineError):
    code = "case_busy"
    http_status = 409


class CaseStopped(EngineError):
    code = "case_stopped"
    http_status = 409


# service
class BindFailure(EngineError):
    code = "bind_failure"
    http_status = 500
