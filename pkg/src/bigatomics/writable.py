"""Wait-free load/store/CAS built from a load/CAS cell plus a one-slot
write buffer.

The central cell Z holds a triple (value, seq, mark) packed into k+1 words;
the write buffer W holds a node handle carrying its own one-bit mark.  The
marks of W and Z mismatch exactly while a store sits buffered in W waiting
to be transferred into Z.  Everyone (stores and CASes) helps transfer the
pending write before making progress, and a pending write can be bypassed
by a successful CAS at most once, so trying the transfer twice always
drains it.  A store whose buffer install loses linearizes silently just
before the winning buffered value transfers.
"""

from __future__ import annotations

from .cached_wf import CachedWaitFreeCell
from .smr import Marked, default_registry, node_of
from .words import MAX_WORDS, AtomicWord, as_payload


def _pack_meta(seq: int, mark: int) -> int:
    return (seq << 1) | mark


def _wmark(handle) -> int:
    return 1 if type(handle) is Marked else 0


class WritableCell:
    PROGRESS = "wait-free"
    SUPPORTS_STORE = True

    __slots__ = ("_z", "_w", "_k", "_registry", "_hook")

    def __init__(self, initial, *, registry=None, hook=None):
        payload = as_payload(initial)
        self._k = len(payload)
        self._registry = registry if registry is not None else default_registry()
        self._z = CachedWaitFreeCell(payload + (_pack_meta(0, 0),),
                                     registry=self._registry, hook=hook,
                                     _max_words=MAX_WORDS + 1)
        self._w = AtomicWord(self._registry.alloc_node(payload))  # mark 0
        self._hook = hook

    def _read_z(self):
        z = self._z.load()
        meta = z[self._k]
        return z, z[:self._k], meta >> 1, meta & 1

    def load(self) -> tuple:
        hook = self._hook
        if hook is not None:
            hook("wr.load")
        return self._z.load()[:self._k]

    def store(self, desired) -> None:
        if len(desired) != self._k:
            raise ValueError("payload size mismatch")
        desired = tuple(desired)
        reg = self._registry
        hook = self._hook
        guard = reg.acquire_guard()
        try:
            if hook is not None:
                hook("wr.store.protectw")
            w = guard.protect(self._w, hook)
            if hook is not None:
                hook("wr.store.readz")
            _, zval, zseq, zmark = self._read_z()
            if zval == desired:
                return  # the cell already holds the value
            if zmark == _wmark(w):
                # No write pending: try to buffer ours with the opposite mark.
                node = reg.alloc_node(desired)
                new_w = node if zmark else Marked(node)
                if hook is not None:
                    hook("wr.store.install")
                if self._w.cas(w, new_w):
                    if hook is not None:
                        hook.note("winstalled", self, desired)
                    reg.retire(node_of(w))
                else:
                    reg.discard_node(node)
            if hook is not None:
                hook("wr.store.help1")
            if not self._help_write():
                if hook is not None:
                    hook("wr.store.help2")
                self._help_write()
        finally:
            guard.release()

    def cas(self, expected, desired) -> bool:
        if len(expected) != self._k or len(desired) != self._k:
            raise ValueError("payload size mismatch")
        expected = tuple(expected)
        desired = tuple(desired)
        hook = self._hook
        for attempt in (1, 2):
            if hook is not None:
                hook("wr.cas.readz")
            z, zval, zseq, zmark = self._read_z()
            if zval != expected:
                return False
            if expected == desired:
                return True
            if hook is not None:
                hook("wr.cas.help")
            self._help_write()
            if hook is not None:
                hook("wr.cas.zcas")
            if self._z.cas(z, desired + (_pack_meta(zseq + 1, zmark),)):
                if hook is not None:
                    hook.note("wr.cas_won", self, attempt)
                return True
        if hook is not None:
            hook.note("wr.cas_exhausted", self)
        return False

    def _help_write(self) -> bool:
        """Transfer the buffered value into Z if the marks mismatch."""
        hook = self._hook
        guard = self._registry.acquire_guard()
        try:
            if hook is not None:
                hook("wr.help.readz")
            z, zval, zseq, zmark = self._read_z()
            if hook is not None:
                hook("wr.help.protectw")
            w = guard.protect(self._w, hook)
            wm = _wmark(w)
            if zmark != wm:
                buffered = node_of(w).value
                if hook is not None:
                    hook("wr.help.transfer")
                ok = self._z.cas(z, buffered + (_pack_meta(zseq + 1, wm),))
                if ok and hook is not None:
                    hook.note("wtransferred", self, buffered)
                return ok
            return True
        finally:
            guard.release()
