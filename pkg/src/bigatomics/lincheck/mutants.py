"""Deliberately broken cells that the probes must catch.

These exist to prove the harness bites: a probe or audit that passes a
mutant is not testing anything.
"""

from __future__ import annotations

from ..cached_wf import CachedWaitFreeCell
from ..locks import SeqLockCell
from ..smr import Marked, node_of
from ..words import read_words, read_words_hooked, write_words, write_words_hooked


class BrokenSeqLockCell(SeqLockCell):
    """Sequence lock whose load skips the version validation, so a copy
    racing a writer is returned torn."""

    __slots__ = ()

    def load(self) -> tuple:
        hook = self._hook
        if hook is None:
            return read_words(self._data)
        return read_words_hooked(self._data, hook, "seqlock.load.word")


class BrokenCachedWaitFreeCell(CachedWaitFreeCell):
    """Cache publication without the version re-check: the cache is
    overwritten regardless of concurrent writers, breaking the
    cache/backup agreement a validated handle promises."""

    __slots__ = ()

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
                return True
            node = reg.alloc_node(desired)
            new_p = Marked(node)
            old = p
            if hook is not None:
                hook("cwf.cas.install")
            ok, cur = self._backup.cas_strong(p, new_p)
            if ok and hook is not None:
                hook.note("installed", self, desired)
            if not ok and cur is node_of(old):
                if hook is not None:
                    hook("cwf.cas.install2")
                ok, cur = self._backup.cas_strong(cur, new_p)
                if ok and hook is not None:
                    hook.note("installed", self, desired)
            if not ok:
                reg.discard_node(node)
                return False
            if hook is not None:
                hook("cwf.cas.retire")
            reg.retire(node_of(old))
            # BROKEN: publish unconditionally, without checking that the
            # version is even and unchanged since before the install.
            if hook is not None:
                hook("cwf.cas.lock")
            self._version.store(ver + 1)
            if hook is None:
                write_words(self._cache, desired)
            else:
                write_words_hooked(self._cache, desired, hook, "cwf.cas.cacheword")
                hook("cwf.cas.unlock")
            self._version.store(ver + 2)
            if hook is not None:
                hook("cwf.cas.validate")
            self._backup.cas(new_p, node)
            return True
        finally:
            guard.release()
