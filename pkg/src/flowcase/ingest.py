"""Import orchestration: detect, expand, repair, decode, assemble, index.

One run_import call is one history entry. Stage failures are recorded in
that entry rather than raised; only precondition violations (stopped case,
missing inputs) raise before any work starts.
"""

from __future__ import annotations

import csv
import json
import shutil
import struct
import tarfile
import zipfile
from dataclasses import asdict, dataclass, field
from pathlib import Path, PurePosixPath

from .assembly import assemble, load_name_table
from .cases import Case, ImportConfig, WatchConfig, now_us
from .decode import Undecodable, decode
from .errors import (
    CaseStopped,
    CorruptArchive,
    EngineError,
    NotFound,
    PathOutsideCase,
    UnknownFormat,
    UnsafePath,
)
from .pcapio import MAGIC_MICRO, MAGIC_NANO, merge_tagged, repair
from .store import Document, flow_document, generic_document
from .store.documents import _parse_integer, _parse_timestamp

MAX_ARCHIVE_DEPTH = 2


@dataclass
class ImportRecord:
    import_id: str
    started: int
    finished: int
    config_id: str
    inputs: list[str]
    docs_indexed: int = 0
    packets_undecodable: int = 0
    repair_outcomes: list = field(default_factory=list)
    status: str = "succeeded"
    error: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# Format detection


def detect_format(path) -> str:
    """Classify an input as pcap/csv/json: magic first, then extension+sniff."""
    path = Path(path)
    if not path.is_file():
        raise NotFound(f"input not found: {path}")
    with open(path, "rb") as fh:
        head = fh.read(4)
    if len(head) == 4:
        for end in ("<", ">"):
            if struct.unpack(end + "I", head)[0] in (MAGIC_MICRO, MAGIC_NANO):
                return "pcap"
    try:
        with open(path, encoding="utf-8") as fh:
            first = fh.readline()
    except (UnicodeDecodeError, OSError):
        raise UnknownFormat(f"cannot determine format of {path.name}") from None
    suffix = path.suffix.lower()
    if suffix == ".csv" and first.strip() and "\x00" not in first:
        return "csv"
    if suffix in (".json", ".jsonl", ".ndjson") and first.lstrip()[:1] in ("{", "["):
        return "json"
    raise UnknownFormat(f"cannot determine format of {path.name}")


def is_archive(path) -> bool:
    """Container check by content: ZIP or gzip-compressed tar."""
    path = Path(path)
    try:
        if zipfile.is_zipfile(path):
            return True
        with open(path, "rb") as fh:
            magic = fh.read(2)
        return magic == b"\x1f\x8b" and tarfile.is_tarfile(path)
    except OSError:
        return False


def _check_member_name(name: str) -> None:
    if name.startswith(("/", "\\")):
        raise UnsafePath(f"absolute member path {name!r}")
    if ".." in PurePosixPath(name).parts:
        raise UnsafePath(f"traversal in member path {name!r}")


def expand_archive(path, workdir) -> list[str]:
    """Extract a ZIP or TGZ under workdir, preserving member directories.

    Every member name is validated before anything is written.
    """
    path = Path(path)
    workdir = Path(workdir)
    out: list[str] = []
    if zipfile.is_zipfile(path):
        try:
            with zipfile.ZipFile(path) as z:
                infos = z.infolist()
                for info in infos:
                    _check_member_name(info.filename)
                workdir.mkdir(parents=True, exist_ok=True)
                for info in infos:
                    dest = workdir / PurePosixPath(info.filename)
                    if info.is_dir():
                        dest.mkdir(parents=True, exist_ok=True)
                        continue
                    dest.parent.mkdir(parents=True, exist_ok=True)
                    with z.open(info) as src, open(dest, "wb") as dst:
                        shutil.copyfileobj(src, dst)
                    out.append(str(dest))
        except zipfile.BadZipFile as e:
            raise CorruptArchive(f"bad zip {path.name}: {e}") from None
        return sorted(out)

    try:
        tar = tarfile.open(path, "r:*")
    except (tarfile.TarError, OSError) as e:
        raise CorruptArchive(f"unreadable archive {path.name}: {e}") from None
    with tar:
        try:
            members = tar.getmembers()
        except (tarfile.TarError, OSError) as e:
            raise CorruptArchive(f"bad archive {path.name}: {e}") from None
        for m in members:
            _check_member_name(m.name)
            if m.issym() or m.islnk():
                raise UnsafePath(f"link member {m.name!r}")
            if not (m.isfile() or m.isdir()):
                raise CorruptArchive(f"unsupported member type for {m.name!r}")
        workdir.mkdir(parents=True, exist_ok=True)
        for m in members:
            dest = workdir / PurePosixPath(m.name)
            if m.isdir():
                dest.mkdir(parents=True, exist_ok=True)
                continue
            dest.parent.mkdir(parents=True, exist_ok=True)
            src = tar.extractfile(m)
            with src, open(dest, "wb") as dst:
                shutil.copyfileobj(src, dst)
            out.append(str(dest))
    return sorted(out)


# ---------------------------------------------------------------------------
# Document builders for the generic routes


def _csv_documents(path: Path) -> list[Document]:
    """Rows to documents with per-column type inference over the whole file.

    A column is integer/timestamp only if every non-empty cell parses as one;
    otherwise it stays a string. Empty cells are omitted from the document.
    """
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        columns = [c for c in (reader.fieldnames or []) if c]
        rows = list(reader)
    kinds: dict[str, str] = {}
    for col in columns:
        cells = [r[col] for r in rows if r.get(col) not in (None, "")]
        if cells and all(_parse_integer(c) is not None for c in cells):
            kinds[col] = "integer"
        elif cells and all(_parse_timestamp(c) is not None for c in cells):
            kinds[col] = "timestamp"
        else:
            kinds[col] = "string"
    docs = []
    for row in rows:
        fields: dict = {}
        types: dict = {}
        for col in columns:
            raw = row.get(col)
            if raw in (None, ""):
                continue
            if kinds[col] == "integer":
                fields[col] = _parse_integer(raw)
            elif kinds[col] == "timestamp":
                fields[col] = _parse_timestamp(raw)
            else:
                fields[col] = raw
            types[col] = kinds[col]
        docs.append(Document(fields=fields, types=types, source_kind="csv"))
    return docs


def _flatten(obj: dict, prefix: str = "") -> dict:
    out: dict = {}
    for key, value in obj.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            out.update(_flatten(value, name + "."))
        else:
            out[name] = value
    return out


def _json_documents(path: Path) -> list[Document]:
    """One JSON object per non-blank line; nested objects get dot-joined keys."""
    docs = []
    with open(path, encoding="utf-8-sig") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except ValueError as e:
                raise UnknownFormat(f"line {lineno}: invalid json ({e})") from None
            if not isinstance(obj, dict):
                raise UnknownFormat(f"line {lineno}: expected a json object")
            docs.append(generic_document(_flatten(obj), "json"))
    return docs


def _apply_day_override(docs: list[Document], day: str) -> None:
    for doc in docs:
        doc.fields["day"] = day
        doc.types["day"] = "string"


# ---------------------------------------------------------------------------
# The import pipeline


def _import_pcaps(case: Case, paths: list[Path], cfg: ImportConfig, work: Path):
    """All capture inputs merge into one stream and index as one batch."""
    sources = list(paths)
    outcomes = []
    if cfg.repair_enabled:
        fixed = work / "repaired"
        fixed.mkdir(parents=True, exist_ok=True)
        sources = []
        for i, p in enumerate(paths):
            out = fixed / f"{i:03d}-{p.name}"
            try:
                result = repair(p, out)
            except EngineError as e:
                e.args = (f"{p.name}: {e}",)
                raise
            outcomes.append({"input": str(p), **result.to_dict()})
            sources.append(out)

    names = None
    if cfg.enrichment_table:
        try:
            names = load_name_table(cfg.enrichment_table)
        except OSError as e:
            raise NotFound(f"enrichment table unreadable: {e}") from None

    undecodable = 0

    def metas():
        nonlocal undecodable
        for rec, header in merge_tagged(sources):
            meta = decode(rec, header.linktype)
            if isinstance(meta, Undecodable):
                undecodable += 1
            else:
                yield meta

    docs = [flow_document(f) for f in assemble(metas(), cfg.assembly, names)]
    return docs, undecodable, outcomes


def _resolve_config(case: Case, config) -> ImportConfig:
    if config is None:
        return case.get_import_config("default")
    if isinstance(config, str):
        return case.get_import_config(config)
    return config


def run_import(case: Case, inputs, config=None, import_id: str | None = None) -> ImportRecord:
    """Index a set of inputs into the case, appending one history record.

    import_id may be preallocated with case.begin_import() by callers that
    need the id before the work starts (the async HTTP route).
    """
    try:
        if case.state != "active":
            raise CaseStopped(f"case {case.case_id!r} is stopped")
        cfg = _resolve_config(case, config)
        paths = [Path(p) for p in inputs]
        for p in paths:
            if not p.is_file():
                raise NotFound(f"input not found: {p}")
    except EngineError:
        if import_id is not None:
            case.end_import(import_id)
        raise
    if import_id is None:
        import_id = case.begin_import()

    record = ImportRecord(
        import_id=import_id,
        started=now_us(),
        finished=0,
        config_id=cfg.config_id,
        inputs=[str(p) for p in paths],
    )
    try:
        with case.writer_lock():
            _execute(case, paths, cfg, record)
    except EngineError as e:
        record.status = "failed"
        record.error = str(e)
    finally:
        record.finished = now_us()
        case.end_import(record.import_id)
        case.append_history(record.to_dict())
    return record


def _execute(case: Case, inputs: list[Path], cfg: ImportConfig, record: ImportRecord):
    work = case.work_dir / record.import_id
    failures: list[str] = []

    # expansion + detection; archives unfold breadth-first to a depth limit
    leaves: list[tuple[Path, str]] = []
    queue = [(p, 0) for p in inputs]
    expanded = 0
    while queue:
        path, depth = queue.pop(0)
        try:
            if depth < MAX_ARCHIVE_DEPTH and is_archive(path):
                expanded += 1
                sub = expand_archive(path, work / f"expand-{expanded:03d}")
                queue.extend((Path(s), depth + 1) for s in sub)
                continue
            kind = cfg.source_kind if cfg.source_kind != "auto" else detect_format(path)
            leaves.append((path, kind))
        except EngineError as e:
            failures.append(f"{path.name}: {e}")

    pcaps = [p for p, kind in leaves if kind == "pcap"]
    if pcaps:
        try:
            docs, undecodable, outcomes = _import_pcaps(case, pcaps, cfg, work)
            record.repair_outcomes.extend(outcomes)
            record.packets_undecodable += undecodable
            # flows always partition by first_ts; the override is for rows
            # that carry no usable timestamps
            record.docs_indexed += case.store.index_batch(docs)
        except EngineError as e:
            failures.append(str(e))

    for path, kind in leaves:
        if kind == "pcap":
            continue
        try:
            docs = _csv_documents(path) if kind == "csv" else _json_documents(path)
            if cfg.target_day_override:
                _apply_day_override(docs, cfg.target_day_override)
            record.docs_indexed += case.store.index_batch(docs)
        except EngineError as e:
            failures.append(f"{path.name}: {e}")

    if failures:
        record.status = "failed"
        record.error = "; ".join(failures)


# ---------------------------------------------------------------------------
# Watchdog


def watchdog_tick(case: Case, watch: WatchConfig) -> list[ImportRecord]:
    """Import files that are new and size-stable across two observations.

    Each ready file imports once, success or failure; a processed ledger in
    the case root prevents re-import. Per-file errors never abort the tick.
    """
    if not watch.enabled or case.state != "active":
        return []
    state = case.load_watch_state(watch.watch_id)
    processed, pending = state["processed"], state["pending"]
    records: list[ImportRecord] = []
    try:
        entries = sorted(Path(watch.directory).iterdir())
    except OSError:
        return []
    seen = set()
    for path in entries:
        if not path.is_file():
            continue
        name = path.name
        seen.add(name)
        if name in processed:
            continue
        st = path.stat()
        sig = [st.st_size, st.st_mtime_ns]
        if pending.get(name) == sig:
            try:
                records.append(run_import(case, [path], watch.config_id))
            except EngineError:
                continue  # e.g. file vanished mid-tick; retry next round
            processed[name] = sig
            pending.pop(name, None)
        else:
            pending[name] = sig
    for name in list(pending):
        if name not in seen:
            del pending[name]
    case.save_watch_state(watch.watch_id, state)
    return records


# ---------------------------------------------------------------------------
# Case-scoped file operations


def resolve_data_path(case: Case, rel) -> Path:
    """Map a client-supplied relative path into the case data root, safely."""
    base = case.data_dir.resolve()
    candidate = Path(str(rel))
    if candidate.is_absolute():
        raise PathOutsideCase(f"absolute path not allowed: {rel}")
    target = (base / candidate).resolve()
    if target != base and base not in target.parents:
        raise PathOutsideCase(f"path escapes the case data root: {rel}")
    return target


def list_files(case: Case) -> list[dict]:
    base = case.data_dir
    if not base.is_dir():
        return []
    return [
        {"path": str(p.relative_to(base)), "size": p.stat().st_size}
        for p in sorted(base.rglob("*"))
        if p.is_file()
    ]


def upload_file(case: Case, rel, data: bytes) -> str:
    dest = resolve_data_path(case, rel)
    if dest == case.data_dir.resolve():
        raise PathOutsideCase("upload target must be a file path")
    dest.parent.mkdir(parents=True, exist_ok=True)
    with open(dest, "wb") as fh:
        fh.write(data)
    return str(dest)


def move_file(case: Case, src, dst) -> str:
    source = resolve_data_path(case, src)
    dest = resolve_data_path(case, dst)
    if not source.is_file():
        raise NotFound(f"no such file: {src}")
    dest.parent.mkdir(parents=True, exist_ok=True)
    source.replace(dest)
    return str(dest)


def delete_file(case: Case, rel) -> None:
    target = resolve_data_path(case, rel)
    if not target.is_file():
        raise NotFound(f"no such file: {rel}")
    target.unlink()
