"""Writer lock: reentrancy, thread exclusion, cross-process exclusion."""

import subprocess
import sys
import textwrap
import threading
import time

import pytest

from flowcase.errors import CaseBusy
from flowcase.locks import WriterLock


def test_reentrant_for_owning_thread(tmp_path):
    with WriterLock(tmp_path):
        with WriterLock(tmp_path):
            pass
        # still held by this thread after the inner release
        result = {}

        def try_steal():
            try:
                WriterLock(tmp_path).acquire()
                result["ok"] = True
            except CaseBusy:
                result["ok"] = False

        t = threading.Thread(target=try_steal)
        t.start()
        t.join()
        assert result["ok"] is False
    # fully released now
    with WriterLock(tmp_path):
        pass


def test_other_thread_gets_case_busy(tmp_path):
    lock = WriterLock(tmp_path).acquire()
    try:
        errors = []

        def contender():
            try:
                WriterLock(tmp_path).acquire()
            except CaseBusy as exc:
                errors.append(exc)

        t = threading.Thread(target=contender)
        t.start()
        t.join()
        assert len(errors) == 1
    finally:
        lock.release()


def test_release_by_non_owner_rejected(tmp_path):
    lock = WriterLock(tmp_path).acquire()
    try:
        failure = {}

        def bad_release():
            try:
                lock.release()
            except RuntimeError:
                failure["raised"] = True

        t = threading.Thread(target=bad_release)
        t.start()
        t.join()
        assert failure.get("raised")
    finally:
        lock.release()


def test_other_process_gets_case_busy(tmp_path):
    marker = tmp_path / "held"
    release = tmp_path / "release"
    child = subprocess.Popen(
        [
            sys.executable,
            "-c",
            textwrap.dedent(
                f"""
                import pathlib, time
                from flowcase.locks import WriterLock
                with WriterLock({str(tmp_path)!r}):
                    pathlib.Path({str(marker)!r}).touch()
                    while not pathlib.Path({str(release)!r}).exists():
                        time.sleep(0.02)
                """
            ),
        ]
    )
    try:
        deadline = time.monotonic() + 10
        while not marker.exists():
            assert time.monotonic() < deadline, "child never acquired the lock"
            time.sleep(0.02)
        with pytest.raises(CaseBusy):
            WriterLock(tmp_path).acquire()
    finally:
        release.touch()
        child.wait(timeout=10)
    # child exited, lock is free again
    with WriterLock(tmp_path):
        pass
