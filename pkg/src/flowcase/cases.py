"""Case lifecycle: isolated per-case roots, manifests, backup and restore.

A case is a directory. Everything an investigation produces (store
partitions, uploaded files, import scratch space, history) lives under that
one root, so destroy is a recursive delete and backup is a tar of the root.
"""

from __future__ import annotations

import io
import json
import os
import re
import shutil
import tarfile
import threading
import time
from dataclasses import asdict, dataclass, field
from datetime import date
from pathlib import Path

from .assembly import AssemblyConfig
from .errors import CorruptArchive, DuplicateId, InvalidSpec, NotFound
from .locks import WriterLock
from .store import Store

CASE_ID_RE = re.compile(r"^[a-z0-9][a-z0-9_-]{0,63}$")
MANIFEST_NAME = "case.json"
HISTORY_NAME = "history.jsonl"
WATCH_STATE_NAME = "watch-state.json"
FORMAT_VERSION = 1
BACKUP_FORMAT = "flowcase-backup"

SOURCE_KINDS = ("pcap", "csv", "json", "auto")
CASE_STATES = ("active", "stopped")

# Imports in flight, keyed by resolved case root. Shared across Case handles
# so status() sees imports started through any handle in this process.
_RUNNING: dict[str, list[str]] = {}
_RUNNING_MUTEX = threading.Lock()


def now_us() -> int:
    return time.time_ns() // 1000


@dataclass
class ImportConfig:
    """A reusable preprocessing recipe: detection, repair, assembly, naming."""

    config_id: str = "default"
    source_kind: str = "auto"
    repair_enabled: bool = True
    assembly: AssemblyConfig = field(default_factory=AssemblyConfig)
    enrichment_table: str | None = None
    target_day_override: str | None = None
    saved_name: str | None = None

    def __post_init__(self):
        if self.source_kind not in SOURCE_KINDS:
            raise InvalidSpec(f"source_kind must be one of {SOURCE_KINDS}")
        if not self.config_id:
            raise InvalidSpec("config_id must be non-empty")
        if self.target_day_override is not None:
            try:
                date.fromisoformat(self.target_day_override)
            except ValueError:
                raise InvalidSpec(
                    f"target_day_override must be YYYY-MM-DD, got {self.target_day_override!r}"
                ) from None

    def to_dict(self) -> dict:
        out = asdict(self)
        out["assembly"] = asdict(self.assembly)
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "ImportConfig":
        raw = dict(raw)
        raw["assembly"] = AssemblyConfig(**raw.get("assembly", {}))
        return cls(**raw)


@dataclass
class WatchConfig:
    """A polled drop directory bound to a saved import config."""

    watch_id: str
    directory: str
    poll_interval: int = 30
    config_id: str = "default"
    enabled: bool = True

    def __post_init__(self):
        if not self.watch_id:
            raise InvalidSpec("watch_id must be non-empty")
        if self.poll_interval < 1:
            raise InvalidSpec("poll_interval must be >= 1 second")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, raw: dict) -> "WatchConfig":
        return cls(**raw)


class Case:
    """Handle over one case root. Cheap to construct; state is on disk."""

    def __init__(self, root: Path, manifest: dict):
        self.root = Path(root)
        self._manifest = manifest
        self._store: Store | None = None
        self._key = str(self.root.resolve())

    # -- identity -------------------------------------------------------------

    @property
    def case_id(self) -> str:
        return self._manifest["case_id"]

    @property
    def state(self) -> str:
        return self._manifest["state"]

    @property
    def created_us(self) -> int:
        return self._manifest["created_us"]

    @property
    def data_dir(self) -> Path:
        return self.root / "data"

    @property
    def work_dir(self) -> Path:
        return self.root / "work"

    @property
    def store(self) -> Store:
        if self._store is None:
            self._store = Store(self.root / "store")
        return self._store

    def writer_lock(self) -> WriterLock:
        return WriterLock(self.root)

    def _save_manifest(self) -> None:
        tmp = self.root / (MANIFEST_NAME + ".tmp")
        tmp.write_text(json.dumps(self._manifest, indent=2) + "\n")
        os.replace(tmp, self.root / MANIFEST_NAME)

    # -- import history ---------------------------------------------------------

    def append_history(self, record: dict) -> None:
        with open(self.root / HISTORY_NAME, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record) + "\n")
            fh.flush()

    def history(self) -> list[dict]:
        path = self.root / HISTORY_NAME
        if not path.exists():
            return []
        with open(path, encoding="utf-8") as fh:
            return [json.loads(line) for line in fh if line.strip()]

    def begin_import(self) -> str:
        """Allocate the next import id and mark it running, atomically."""
        with _RUNNING_MUTEX:
            running = _RUNNING.setdefault(self._key, [])
            import_id = f"imp-{len(self.history()) + len(running) + 1:06d}"
            running.append(import_id)
            return import_id

    def end_import(self, import_id: str) -> None:
        with _RUNNING_MUTEX:
            active = _RUNNING.get(self._key, [])
            if import_id in active:
                active.remove(import_id)
            if not active:
                _RUNNING.pop(self._key, None)

    def running_imports(self) -> list[str]:
        with _RUNNING_MUTEX:
            return list(_RUNNING.get(self._key, []))

    # -- saved import configs -----------------------------------------------------

    def add_import_config(self, config: ImportConfig) -> None:
        self._manifest["import_configs"][config.config_id] = config.to_dict()
        self._save_manifest()

    def get_import_config(self, config_id: str) -> ImportConfig:
        raw = self._manifest["import_configs"].get(config_id)
        if raw is not None:
            return ImportConfig.from_dict(raw)
        if config_id == "default":
            return ImportConfig()
        raise NotFound(f"no saved import config {config_id!r}")

    def import_configs(self) -> list[ImportConfig]:
        return [
            ImportConfig.from_dict(raw)
            for _, raw in sorted(self._manifest["import_configs"].items())
        ]

    # -- watches ------------------------------------------------------------------

    def add_watch(self, watch: WatchConfig) -> None:
        if watch.watch_id in self._manifest["watches"]:
            raise DuplicateId(f"watch {watch.watch_id!r} already registered")
        self.put_watch(watch)

    def put_watch(self, watch: WatchConfig) -> bool:
        """Register or replace a watch. Returns False when nothing changed."""
        if not Path(watch.directory).is_dir():
            raise NotFound(f"watch directory does not exist: {watch.directory}")
        payload = watch.to_dict()
        if self._manifest["watches"].get(watch.watch_id) == payload:
            return False
        self._manifest["watches"][watch.watch_id] = payload
        self._save_manifest()
        return True

    def remove_watch(self, watch_id: str) -> None:
        if watch_id not in self._manifest["watches"]:
            raise NotFound(f"no watch {watch_id!r}")
        del self._manifest["watches"][watch_id]
        self._save_manifest()

    def watches(self) -> list[WatchConfig]:
        return [
            WatchConfig.from_dict(raw)
            for _, raw in sorted(self._manifest["watches"].items())
        ]

    def get_watch(self, watch_id: str) -> WatchConfig:
        raw = self._manifest["watches"].get(watch_id)
        if raw is None:
            raise NotFound(f"no watch {watch_id!r}")
        return WatchConfig.from_dict(raw)

    # -- watchdog bookkeeping -------------------------------------------------------

    def load_watch_state(self, watch_id: str) -> dict:
        path = self.root / WATCH_STATE_NAME
        if path.exists():
            all_state = json.loads(path.read_text())
        else:
            all_state = {}
        return all_state.get(watch_id, {"processed": {}, "pending": {}})

    def save_watch_state(self, watch_id: str, state: dict) -> None:
        path = self.root / WATCH_STATE_NAME
        all_state = json.loads(path.read_text()) if path.exists() else {}
        all_state[watch_id] = state
        tmp = self.root / (WATCH_STATE_NAME + ".tmp")
        tmp.write_text(json.dumps(all_state))
        os.replace(tmp, path)


class CaseManager:
    """Registry of cases under one data root; create/destroy are exclusive."""

    def __init__(self, data_root):
        self.data_root = Path(data_root)
        self.cases_dir = self.data_root / "cases"
        self.cases_dir.mkdir(parents=True, exist_ok=True)
        self._registry_mutex = threading.Lock()

    def _case_root(self, case_id: str) -> Path:
        return self.cases_dir / case_id

    def create_case(self, case_id: str) -> Case:
        if not isinstance(case_id, str) or not CASE_ID_RE.match(case_id):
            raise InvalidSpec(
                "case id must match [a-z0-9][a-z0-9_-]{0,63}"
            )
        with self._registry_mutex:
            root = self._case_root(case_id)
            if root.exists():
                raise DuplicateId(f"case {case_id!r} already exists")
            root.mkdir(parents=True)
            for sub in ("data", "work", "store"):
                (root / sub).mkdir()
            manifest = {
                "case_id": case_id,
                "created_us": now_us(),
                "state": "active",
                "format_version": FORMAT_VERSION,
                "import_configs": {},
                "watches": {},
            }
            case = Case(root, manifest)
            case._save_manifest()
        return case

    def get_case(self, case_id: str) -> Case:
        root = self._case_root(case_id)
        manifest_path = root / MANIFEST_NAME
        if not manifest_path.is_file():
            raise NotFound(f"no case {case_id!r}")
        return Case(root, json.loads(manifest_path.read_text()))

    def list_cases(self) -> list[str]:
        if not self.cases_dir.is_dir():
            return []
        return sorted(
            p.name for p in self.cases_dir.iterdir() if (p / MANIFEST_NAME).is_file()
        )

    def set_state(self, case_id: str, state: str) -> Case:
        if state not in CASE_STATES:
            raise InvalidSpec(f"state must be one of {CASE_STATES}")
        case = self.get_case(case_id)
        case._manifest["state"] = state
        case._save_manifest()
        return case

    def destroy_case(self, case_id: str) -> None:
        case = self.get_case(case_id)
        with self._registry_mutex:
            # quiesce writers, then remove the root wholesale
            with case.writer_lock():
                shutil.rmtree(case.root)

    # -- backup / restore -----------------------------------------------------

    def backup_case(self, case_id: str, out_path) -> int:
        case = self.get_case(case_id)
        out_path = Path(out_path)
        with case.writer_lock():
            stamp = json.dumps(
                {
                    "format": BACKUP_FORMAT,
                    "version": FORMAT_VERSION,
                    "case_id": case_id,
                    "created_us": now_us(),
                }
            ).encode()
            with tarfile.open(out_path, "w:gz") as tar:
                info = tarfile.TarInfo("meta.json")
                info.size = len(stamp)
                tar.addfile(info, io.BytesIO(stamp))
                for path in sorted(case.root.rglob("*")):
                    rel = path.relative_to(case.root)
                    if rel.name == ".writer.lock":
                        continue
                    tar.add(path, arcname=f"case/{rel}", recursive=False)
        return out_path.stat().st_size

    def restore_case(self, archive, new_case_id: str) -> Case:
        if not isinstance(new_case_id, str) or not CASE_ID_RE.match(new_case_id):
            raise InvalidSpec("case id must match [a-z0-9][a-z0-9_-]{0,63}")
        try:
            tar = tarfile.open(archive, "r:gz")
        except (tarfile.TarError, OSError) as e:
            raise CorruptArchive(f"unreadable backup archive: {e}") from None
        with tar:
            members = self._checked_members(tar)
            with self._registry_mutex:
                root = self._case_root(new_case_id)
                if root.exists():
                    raise DuplicateId(f"case {new_case_id!r} already exists")
                root.mkdir(parents=True)
            try:
                for m in members:
                    rel = Path(*Path(m.name).parts[1:])
                    dest = root / rel
                    if m.isdir():
                        dest.mkdir(parents=True, exist_ok=True)
                    else:
                        dest.parent.mkdir(parents=True, exist_ok=True)
                        src = tar.extractfile(m)
                        with src, open(dest, "wb") as out:
                            shutil.copyfileobj(src, out)
            except (tarfile.TarError, OSError) as e:
                shutil.rmtree(root, ignore_errors=True)
                raise CorruptArchive(f"archive extraction failed: {e}") from None

        manifest_path = root / MANIFEST_NAME
        if not manifest_path.is_file():
            shutil.rmtree(root, ignore_errors=True)
            raise CorruptArchive("backup lacks a case manifest")
        manifest = json.loads(manifest_path.read_text())
        manifest["case_id"] = new_case_id
        case = Case(root, manifest)
        case._save_manifest()
        for sub in ("data", "work", "store"):
            (root / sub).mkdir(exist_ok=True)
        return case

    @staticmethod
    def _checked_members(tar: tarfile.TarFile) -> list[tarfile.TarInfo]:
        """Validate the stamp and every member name before extracting anything."""
        try:
            stamp_member = tar.getmember("meta.json")
            stamp_file = tar.extractfile(stamp_member)
            stamp = json.loads(stamp_file.read()) if stamp_file else None
        except (KeyError, tarfile.TarError, ValueError):
            raise CorruptArchive("backup stamp missing or unreadable") from None
        if not isinstance(stamp, dict) or stamp.get("format") != BACKUP_FORMAT:
            raise CorruptArchive("not a case backup archive")
        if stamp.get("version") != FORMAT_VERSION:
            raise CorruptArchive(f"unsupported backup version {stamp.get('version')!r}")
        members = []
        for m in tar.getmembers():
            if m.name == "meta.json":
                continue
            parts = Path(m.name).parts
            if (
                not parts
                or parts[0] != "case"
                or ".." in parts
                or Path(m.name).is_absolute()
            ):
                raise CorruptArchive(f"unsafe member path {m.name!r}")
            if not (m.isfile() or m.isdir()):
                raise CorruptArchive(f"unsupported member type for {m.name!r}")
            if len(parts) > 1:
                members.append(m)
        return members

    # -- status ---------------------------------------------------------------

    def status(self, case_id: str | None = None):
        if case_id is None:
            return [self.status(cid) for cid in self.list_cases()]
        case = self.get_case(case_id)
        disk = 0
        for base, _dirs, files in os.walk(case.root):
            for name in files:
                try:
                    disk += os.path.getsize(os.path.join(base, name))
                except OSError:
                    pass
        store = case.store
        return {
            "case_id": case.case_id,
            "state": case.state,
            "created_us": case.created_us,
            "docs": store.doc_count,
            "days": store.days,
            "disk_bytes": disk,
            "running_imports": case.running_imports(),
            "watches": [w.to_dict() for w in case.watches()],
            "history_count": len(case.history()),
        }
