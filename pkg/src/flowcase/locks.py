"""Advisory per-directory writer lock.

flock gives cross-process exclusion; a process-local registry adds two things
flock alone cannot give us: reentrancy for the owning thread (an import holds
the case lock while the store's index_batch re-acquires it underneath) and
exclusion between threads of the same process (flock is per open file table,
so two threads sharing a process would otherwise both "win").
"""

from __future__ import annotations

import fcntl
import os
import threading

from .errors import CaseBusy

_registry: dict[str, list] = {}  # realpath -> [fd, owner thread id, depth]
_registry_mutex = threading.Lock()


class WriterLock:
    """Context manager: exclusive writer for a directory tree."""

    def __init__(self, root, name: str = ".writer.lock"):
        self.path = os.path.realpath(os.path.join(str(root), name))

    def acquire(self) -> "WriterLock":
        me = threading.get_ident()
        with _registry_mutex:
            entry = _registry.get(self.path)
            if entry is not None:
                if entry[1] != me:
                    raise CaseBusy(f"another writer is active under {os.path.dirname(self.path)}")
                entry[2] += 1
                return self
            fd = os.open(self.path, os.O_CREAT | os.O_RDWR, 0o644)
            try:
                fcntl.flock(fd, fcntl.LOCK_EX | fcntl.LOCK_NB)
            except OSError:
                os.close(fd)
                raise CaseBusy(
                    f"another process is writing under {os.path.dirname(self.path)}"
                ) from None
            _registry[self.path] = [fd, me, 1]
        return self

    def release(self) -> None:
        with _registry_mutex:
            entry = _registry.get(self.path)
            if entry is None or entry[1] != threading.get_ident():
                raise RuntimeError("releasing a writer lock this thread does not hold")
            entry[2] -= 1
            if entry[2] == 0:
                fcntl.flock(entry[0], fcntl.LOCK_UN)
                os.close(entry[0])
                del _registry[self.path]

    __enter__ = acquire

    def __exit__(self, *exc) -> None:
        self.release()
