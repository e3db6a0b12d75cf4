"""Classic indirection-based lock-free cell: a single-word slot holding a
handle to a heap node that contains the value.

Loads read through the handle under a hazard guard; CAS installs a fresh
node with a single-word CAS on the slot.  Store is an unconditional
exchange, which keeps all three operations individually linearizable for a
plain register.
"""

from __future__ import annotations

from .smr import default_registry
from .words import AtomicWord, as_payload


class IndirectCell:
    PROGRESS = "lock-free"
    SUPPORTS_STORE = True

    __slots__ = ("_current", "_k", "_registry", "_hook")

    def __init__(self, initial, *, registry=None, hook=None):
        payload = as_payload(initial)
        self._k = len(payload)
        self._registry = registry if registry is not None else default_registry()
        self._current = AtomicWord(self._registry.alloc_node(payload))
        self._hook = hook

    def load(self) -> tuple:
        hook = self._hook
        guard = self._registry.acquire_guard()
        try:
            if hook is not None:
                hook("indirect.load.protect")
            node = guard.protect(self._current, hook)
            if hook is not None:
                hook("indirect.load.read")
            return node.value
        finally:
            guard.release()

    def store(self, desired) -> None:
        if len(desired) != self._k:
            raise ValueError("payload size mismatch")
        reg = self._registry
        hook = self._hook
        node = reg.alloc_node(tuple(desired))
        if hook is not None:
            hook("indirect.store.swap")
        old = self._current.exchange(node)
        if hook is not None:
            hook.note("installed", self, node.value)
            hook("indirect.store.retire")
        reg.retire(old)

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
                hook("indirect.cas.protect")
            old = guard.protect(self._current, hook)
            if old.value != expected:
                return False
            if expected == desired:
                return True  # value-preserving: no new node is published
            node = reg.alloc_node(desired)
            if hook is not None:
                hook("indirect.cas.swap")
            if self._current.cas(old, node):
                if hook is not None:
                    hook.note("installed", self, desired)
                    hook("indirect.cas.retire")
                reg.retire(old)
                return True
            reg.discard_node(node)
            return False
        finally:
            guard.release()
