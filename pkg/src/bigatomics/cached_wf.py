"""Wait-free load/CAS cell with an inline cache and an always-populated
backup node.

The cell keeps the value twice: inline (the cache) and in a heap node (the
backup).  The backup node always holds the current value; a mark on the
backup handle means the cache is stale.  Loads take a fast path that never
dereferences the node: read version, copy cache, read backup handle, and
re-read the version.  If the handle is unmarked and the version did not
move, the copy is consistent.  Otherwise the load falls back to a protected
read of the backup node.

A CAS installs a marked handle to a fresh node, then best-effort publishes
the value into the cache under a sequence-lock acquisition and unmarks the
handle.  Publication may be skipped under contention; the cell stays
correct with a stale cache, just slower.

There is no store operation; writability is layered on top by the
write-buffered cell.
"""

from __future__ import annotations

from .smr import Marked, default_registry, mark, node_of
from .words import (MAX_WORDS, AtomicWord, as_payload, read_words,
                    read_words_hooked, write_words, write_words_hooked)


class CachedWaitFreeCell:
    PROGRESS = "wait-free"
    SUPPORTS_STORE = False

    __slots__ = ("_version", "_backup", "_cache", "_k", "_registry", "_hook")

    def __init__(self, initial, *, registry=None, hook=None,
                 _max_words=None):
        # _max_words: the writable construction packs one extra metadata
        # word into its central cell, one past the public payload limit.
        payload = as_payload(initial, _max_words or MAX_WORDS)
        self._k = len(payload)
        self._registry = registry if registry is not None else default_registry()
        self._version = AtomicWord(0)
        self._backup = AtomicWord(self._registry.alloc_node(payload))
        self._cache = list(payload)
        self._hook = hook

    def load(self) -> tuple:
        hook = self._hook
        if hook is None:
            ver = self._version.load()
            val = read_words(self._cache)
            p = self._backup.load()
            if type(p) is not Marked and self._version.load() == ver:
                return val
        else:
            hook("cwf.load.ver1")
            ver = self._version.load()
            val = read_words_hooked(self._cache, hook, "cwf.load.word")
            hook("cwf.load.backup")
            p = self._backup.load()
            if type(p) is not Marked:
                hook("cwf.load.ver2")
                if self._version.load() == ver:
                    return val
        guard = self._registry.acquire_guard()
        try:
            if hook is not None:
                hook("cwf.load.protect")
            p = guard.protect(self._backup, hook)
            if hook is not None:
                hook("cwf.load.node")
            return node_of(p).value
        finally:
            guard.release()

    def cas(self, expected, desired) -> bool:
        if len(expected) != self._k or len(desired) != self._k:
            raise ValueError("payload size mismatch")
        expected = tuple(expected)
        desired = tuple(desired)
        reg = self._registry
        hook = self._hook
        guard = reg.acquire_guard()
        try:
            if hook is not None:
                hook("cwf.cas.ver1")
            ver = self._version.load()
            if hook is None:
                val = read_words(self._cache)
            else:
                val = read_words_hooked(self._cache, hook, "cwf.cas.word")
            # Protect before the equality tests: a successful install must
            # imply the protected node was never recycled (no ABA).
            if hook is not None:
                hook("cwf.cas.protect")
            p = guard.protect(self._backup, hook)
            stale = type(p) is Marked
            if not stale:
                if hook is not None:
                    hook("cwf.cas.ver2")
                stale = self._version.load() != ver
            if stale:
                if hook is not None:
                    hook("cwf.cas.node")
                val = node_of(p).value
            if val != expected:
                return False
            if expected == desired:
                return True  # value-preserving: nothing installed
            node = reg.alloc_node(desired)
            new_p = mark(node)
            old = p
            if hook is not None:
                hook("cwf.cas.install")
            ok, cur = self._backup.cas_strong(p, new_p)
            if ok and hook is not None:
                hook.note("installed", self, desired)
            if not ok and cur is node_of(old):
                # The incumbent validated (unmarked) the handle between our
                # read and the exchange; retry once against the validated
                # handle.
                if hook is not None:
                    hook("cwf.cas.install2")
                ok, cur = self._backup.cas_strong(cur, new_p)
                if ok and hook is not None:
                    hook.note("installed", self, desired)
                    hook.note("cwf.second_attempt_won", self)
            if not ok:
                reg.discard_node(node)
                return False
            if hook is not None:
                hook("cwf.cas.retire")
            reg.retire(node_of(old))
            # Best-effort cache publication: lock the version only if it is
            # even and unchanged since before the install, so a more recent
            # writer's cache is never overwritten.
            if hook is not None:
                hook("cwf.cas.lock")
            if not (ver & 1) and self._version.cas(ver, ver + 1):
                if hook is None:
                    write_words(self._cache, desired)
                else:
                    write_words_hooked(self._cache, desired, hook, "cwf.cas.cacheword")
                    hook("cwf.cas.unlock")
                self._version.store(ver + 2)
                if hook is not None:
                    hook("cwf.cas.validate")
                self._backup.cas(new_p, node)
            elif hook is not None:
                hook.note("cwf.publication_skipped", self)
            return True
        finally:
            guard.release()
