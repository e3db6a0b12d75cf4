"""Lock-based multi-word atomic cells: a per-cell spin lock and a
sequence lock.

Both are blocking: a writer descheduled inside its critical section stalls
every other operation on that cell.  The sequence lock at least lets
readers run lock-free when no writer is active, validating their copy
against the version counter.
"""

from __future__ import annotations

import time

from .words import (AtomicWord, as_payload, read_words, read_words_hooked,
                    write_words, write_words_hooked)

_BACKOFF_START = 1e-6
_BACKOFF_CAP = 1e-3


class LockPool:
    """Shared pool of lock words indexed by cell identity hash."""

    def __init__(self, size: int = 4096):
        self.size = size
        self._words = [AtomicWord(0) for _ in range(size)]

    def word_for(self, cell) -> AtomicWord:
        return self._words[(id(cell) >> 6) % self.size]


class SimpLockCell:
    """Big atomic guarded by a test-and-set spin lock on every operation."""

    PROGRESS = "blocking"
    SUPPORTS_STORE = True

    __slots__ = ("_lock_word", "_data", "_k", "_hook", "_backoff")

    def __init__(self, initial, *, lock_pool: LockPool | None = None,
                 hook=None, backoff: bool = False):
        payload = as_payload(initial)
        self._k = len(payload)
        self._data = list(payload)
        self._lock_word = (lock_pool.word_for(self) if lock_pool is not None
                           else AtomicWord(0))
        self._hook = hook
        self._backoff = backoff

    def _acquire(self, hook) -> None:
        word = self._lock_word
        delay = _BACKOFF_START
        while True:
            if hook is not None:
                hook("simplock.acquire")
            if word.cas(0, 1):
                return
            if self._backoff:
                time.sleep(delay)
                delay = min(delay * 2, _BACKOFF_CAP)

    def load(self) -> tuple:
        hook = self._hook
        self._acquire(hook)
        if hook is None:
            val = read_words(self._data)
        else:
            val = read_words_hooked(self._data, hook, "simplock.load.word")
            hook("simplock.release")
        self._lock_word.store(0)
        return val

    def store(self, desired) -> None:
        if len(desired) != self._k:
            raise ValueError("payload size mismatch")
        hook = self._hook
        self._acquire(hook)
        if hook is None:
            write_words(self._data, desired)
        else:
            write_words_hooked(self._data, desired, hook, "simplock.store.word")
            hook("simplock.release")
        self._lock_word.store(0)

    def cas(self, expected, desired) -> bool:
        if len(expected) != self._k or len(desired) != self._k:
            raise ValueError("payload size mismatch")
        expected = tuple(expected)
        desired = tuple(desired)
        hook = self._hook
        self._acquire(hook)
        cur = tuple(self._data)  # under the lock; no tearing possible
        ok = cur == expected
        if ok and expected != desired:
            if hook is None:
                write_words(self._data, desired)
            else:
                write_words_hooked(self._data, desired, hook, "simplock.cas.word")
        if hook is not None:
            hook("simplock.release")
        self._lock_word.store(0)
        return ok


class SeqLockCell:
    """Big atomic guarded by a version counter: odd means write-locked.

    Readers copy the words and validate that the version was even and
    unchanged around the copy; writers bump the version to odd, write, and
    bump back to even.  The data changes only while the version is odd.
    """

    PROGRESS = "blocking"
    SUPPORTS_STORE = True

    __slots__ = ("_version", "_data", "_k", "_hook", "_backoff")

    def __init__(self, initial, *, hook=None, backoff: bool = False):
        payload = as_payload(initial)
        self._k = len(payload)
        self._version = AtomicWord(0)
        self._data = list(payload)
        self._hook = hook
        self._backoff = backoff

    def load(self) -> tuple:
        version = self._version
        data = self._data
        hook = self._hook
        if hook is None:
            while True:
                v = version.load()
                if v & 1:
                    continue
                val = read_words(data)
                if version.load() == v:
                    return val
        while True:
            hook("seqlock.load.ver1")
            v = version.load()
            if v & 1:
                hook.note("seqlock.load.locked_retry")
                continue
            val = read_words_hooked(data, hook, "seqlock.load.word")
            hook("seqlock.load.ver2")
            if version.load() == v:
                return val
            hook.note("seqlock.load.version_retry")

    def _acquire(self, hook) -> int:
        """Spin until the version moves from even v to odd v+1; returns v."""
        version = self._version
        delay = _BACKOFF_START
        while True:
            if hook is not None:
                hook("seqlock.acquire")
            v = version.load()
            if not (v & 1) and version.cas(v, v + 1):
                return v
            if self._backoff:
                time.sleep(delay)
                delay = min(delay * 2, _BACKOFF_CAP)

    def store(self, desired) -> None:
        if len(desired) != self._k:
            raise ValueError("payload size mismatch")
        hook = self._hook
        v = self._acquire(hook)
        if hook is None:
            write_words(self._data, desired)
        else:
            write_words_hooked(self._data, desired, hook, "seqlock.store.word")
            hook("seqlock.release")
        self._version.store(v + 2)

    def cas(self, expected, desired) -> bool:
        if len(expected) != self._k or len(desired) != self._k:
            raise ValueError("payload size mismatch")
        expected = tuple(expected)
        desired = tuple(desired)
        hook = self._hook
        v = self._acquire(hook)
        cur = tuple(self._data)  # under the lock; no tearing possible
        ok = cur == expected
        if ok and expected != desired:
            if hook is None:
                write_words(self._data, desired)
            else:
                write_words_hooked(self._data, desired, hook, "seqlock.cas.word")
        # Release with +2 whether or not the compare succeeded.
        if hook is not None:
            hook("seqlock.release")
        self._version.store(v + 2)
        return ok
