"""HTTP surface: one route per library interface, JSON bodies throughout.

Every module error carries a machine code and an HTTP status; the single
exception handler below is the only place errors become wire responses, so
API and library behavior cannot drift apart.
"""

from __future__ import annotations

import socket
import threading
import time
from pathlib import Path

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse

from .cases import CaseManager, ImportConfig, WatchConfig
from .detection import DetectionThresholds, interval_histogram, port_scan_report
from .errors import BindFailure, EngineError, InvalidSpec, NotFound
from .ingest import list_files, resolve_data_path, run_import, upload_file, watchdog_tick
from .store import StoreLimits

DEFAULT_HOST = "127.0.0.1"
DEFAULT_PORT = 8340


class WatchPoller(threading.Thread):
    """Drives watchdog ticks for every registered watch at its own interval."""

    daemon = True

    def __init__(self, manager: CaseManager, resolution: float = 1.0):
        super().__init__(name="flowcase-watch-poller")
        self.manager = manager
        self.resolution = resolution
        self._halt = threading.Event()
        self._last: dict[tuple[str, str], float] = {}

    def run(self) -> None:
        while not self._halt.wait(self.resolution):
            self.tick_all()

    def tick_all(self) -> None:
        try:
            case_ids = self.manager.list_cases()
        except OSError:
            return
        for case_id in case_ids:
            try:
                case = self.manager.get_case(case_id)
                for watch in case.watches():
                    key = (case_id, watch.watch_id)
                    now = time.monotonic()
                    if now - self._last.get(key, 0.0) < watch.poll_interval:
                        continue
                    self._last[key] = now
                    watchdog_tick(case, watch)
            except EngineError:
                continue  # e.g. case destroyed mid-scan; next pass recovers

    def stop(self) -> None:
        self._halt.set()


def _require(body: dict | None, key: str, kind=str):
    value = (body or {}).get(key)
    if not isinstance(value, kind):
        raise InvalidSpec(f"body field {key!r} ({kind.__name__}) is required")
    return value


def _parse_import_config(case, body: dict) -> ImportConfig:
    raw = body.get("config")
    if raw is not None:
        if not isinstance(raw, dict):
            raise InvalidSpec("config must be an object")
        try:
            return ImportConfig.from_dict(raw)
        except TypeError as e:
            raise InvalidSpec(f"bad import config: {e}") from None
    return case.get_import_config(body.get("config_id", "default"))


def create_app(data_root, poll_watches: bool = False) -> FastAPI:
    app = FastAPI(title="flowcase", docs_url=None, redoc_url=None)
    manager = CaseManager(data_root)
    app.state.manager = manager
    app.state.poller = None
    if poll_watches:
        app.state.poller = WatchPoller(manager)
        app.state.poller.start()

    @app.exception_handler(EngineError)
    async def engine_error(request: Request, exc: EngineError):
        return JSONResponse(
            status_code=exc.http_status,
            content={
                "error": {"code": exc.code, "message": str(exc), "detail": exc.detail()}
            },
        )

    @app.get("/health")
    def health():
        return {"status": "ok"}

    def _server_path(raw: str) -> Path:
        """Backup archives live under the data root unless given absolute."""
        p = Path(raw)
        return p if p.is_absolute() else manager.data_root / "backups" / p

    # -- case lifecycle -----------------------------------------------------

    @app.post("/cases", status_code=201)
    def create_case(body: dict):
        case = manager.create_case(_require(body, "case_id"))
        return {"case_id": case.case_id, "state": case.state, "created_us": case.created_us}

    @app.get("/cases")
    def list_cases():
        return {"cases": manager.status()}

    @app.post("/cases/restore")
    def restore_case(body: dict):
        archive = _require(body, "archive_path")
        case_id = _require(body, "case_id")
        case = manager.restore_case(_server_path(archive), case_id)
        return {"case_id": case.case_id, "state": case.state}

    @app.delete("/cases/{case_id}")
    def destroy_case(case_id: str):
        manager.destroy_case(case_id)
        return {"destroyed": case_id}

    @app.get("/cases/{case_id}/status")
    def case_status(case_id: str):
        return manager.status(case_id)

    @app.post("/cases/{case_id}/backup")
    def backup_case(case_id: str, body: dict):
        out = _server_path(_require(body, "out_path"))
        out.parent.mkdir(parents=True, exist_ok=True)
        size = manager.backup_case(case_id, out)
        return {"path": str(out), "bytes": size}

    # -- files ----------------------------------------------------------------

    @app.post("/cases/{case_id}/files", status_code=201)
    async def upload(case_id: str, request: Request, name: str = Query(...)):
        case = manager.get_case(case_id)
        data = await request.body()
        upload_file(case, name, data)
        return {"path": name, "size": len(data)}

    @app.get("/cases/{case_id}/files")
    def files(case_id: str):
        return {"files": list_files(manager.get_case(case_id))}

    # -- imports ----------------------------------------------------------------

    @app.post("/cases/{case_id}/imports", status_code=202)
    def start_import(case_id: str, body: dict, wait: bool = False):
        case = manager.get_case(case_id)
        config = _parse_import_config(case, body or {})
        inputs = (body or {}).get("inputs", [])
        if not isinstance(inputs, list):
            raise InvalidSpec("inputs must be a list of case-relative paths")
        paths = []
        for rel in inputs:
            p = resolve_data_path(case, rel)
            if not p.is_file():
                raise NotFound(f"input not found: {rel}")
            paths.append(p)
        import_id = case.begin_import()
        if wait:
            return run_import(case, paths, config, import_id=import_id).to_dict()

        def work():
            try:
                run_import(case, paths, config, import_id=import_id)
            except EngineError:
                pass  # precondition race; registry already cleaned up

        threading.Thread(target=work, name=f"import-{import_id}").start()
        return {"import_id": import_id}

    @app.get("/cases/{case_id}/imports")
    def import_history(case_id: str):
        return {"imports": manager.get_case(case_id).history()}

    # -- watches -----------------------------------------------------------------

    @app.put("/cases/{case_id}/watches/{watch_id}")
    def put_watch(case_id: str, watch_id: str, body: dict):
        case = manager.get_case(case_id)
        raw = dict(body or {})
        raw["watch_id"] = watch_id
        try:
            watch = WatchConfig.from_dict(raw)
        except TypeError as e:
            raise InvalidSpec(f"bad watch config: {e}") from None
        changed = case.put_watch(watch)
        return {"watch": watch.to_dict(), "changed": changed}

    @app.delete("/cases/{case_id}/watches/{watch_id}")
    def remove_watch(case_id: str, watch_id: str):
        manager.get_case(case_id).remove_watch(watch_id)
        return {"removed": watch_id}

    # -- query / aggregate ----------------------------------------------------------

    @app.post("/cases/{case_id}/query")
    def query(case_id: str, body: dict):
        case = manager.get_case(case_id)
        body = body or {}
        limit = body.get("limit")
        offset = body.get("offset", 0)
        if limit is not None and (not isinstance(limit, int) or isinstance(limit, bool)):
            raise InvalidSpec("limit must be an integer")
        if not isinstance(offset, int) or isinstance(offset, bool) or offset < 0:
            raise InvalidSpec("offset must be a non-negative integer")
        docs = case.store.query(body.get("filter"), limit=limit, offset=offset)
        return {
            "docs": [
                {
                    "doc_id": d.doc_id,
                    "day": d.day,
                    "source_kind": d.source_kind,
                    "fields": d.fields,
                }
                for d in docs
            ],
            "count": len(docs),
        }

    @app.post("/cases/{case_id}/aggregate")
    def aggregate(case_id: str, body: dict):
        case = manager.get_case(case_id)
        body = body or {}
        spec = _require(body, "spec", dict)
        limits = None
        if "max_buckets" in body:
            raw = body["max_buckets"]
            if not isinstance(raw, int) or isinstance(raw, bool) or raw < 1:
                raise InvalidSpec("max_buckets must be a positive integer")
            limits = StoreLimits(max_buckets=raw)
        return case.store.aggregate(spec, filter=body.get("filter"), limits=limits)

    # -- detection -------------------------------------------------------------------

    def _detect_limits(max_buckets: int | None) -> StoreLimits | None:
        if max_buckets is None:
            return None
        if max_buckets < 1:
            raise InvalidSpec("max_buckets must be a positive integer")
        return StoreLimits(max_buckets=max_buckets)

    @app.get("/cases/{case_id}/detect/portscan")
    def detect_portscan(
        case_id: str,
        day: str = Query(...),
        pair_min: int = Query(10),
        total_min: int = Query(500),
        max_buckets: int | None = Query(None),
    ):
        case = manager.get_case(case_id)
        try:
            thresholds = DetectionThresholds(
                pair_min_unique_ports=pair_min, sender_min_total=total_min
            )
        except ValueError as e:
            raise InvalidSpec(str(e)) from None
        report = port_scan_report(case.store, day, thresholds, _detect_limits(max_buckets))
        return {"day": report.day, **report.to_buckets()}

    @app.get("/cases/{case_id}/detect/histogram")
    def detect_histogram(
        case_id: str, day: str = Query(...), max_buckets: int | None = Query(None)
    ):
        case = manager.get_case(case_id)
        return interval_histogram(case.store, day, limits=_detect_limits(max_buckets)).to_dict()

    return app


def bind_socket(host: str, port: int) -> socket.socket:
    try:
        return socket.create_server((host, port))
    except OSError as e:
        raise BindFailure(f"cannot bind {host}:{port}: {e}") from None


def serve(host: str, port: int, data_root) -> None:
    """Bind, then serve until interrupted.

    The bind happens before uvicorn starts so an occupied port surfaces as
    BindFailure instead of a logged stack trace. Import worker threads are
    non-daemon, so in-flight imports finish during shutdown.
    """
    import uvicorn

    sock = bind_socket(host, port)
    app = create_app(data_root, poll_watches=True)
    try:
        uvicorn.Server(uvicorn.Config(app, log_level="warning")).run(sockets=[sock])
    finally:
        if app.state.poller is not None:
            app.state.poller.stop()
        sock.close()
