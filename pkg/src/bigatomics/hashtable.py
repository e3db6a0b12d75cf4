"""Concurrent separate-chaining hash tables over 64-bit keys and values.

``CacheHashTable`` inlines the first chain link of each bucket into a
three-word atomic cell (key, value, successor), so lookups that resolve at
the head touch no heap link and take no epoch guard.  ``ChainingTable`` is
the same algorithm without the inlining: every bucket is a single-word head
handle and even a length-one chain costs a guarded dereference.

Links past the inline slot are immutable once published; deletes splice by
path copying and retire the replaced links through epoch-based reclamation.
"""

from __future__ import annotations

from .epoch import EpochDomain
from .words import AtomicWord

_M64 = (1 << 64) - 1
_FIB = 0x9E3779B97F4A7C15


def mix64(x: int) -> int:
    """64-bit finalizer-style mixer; also maps benchmark ranks to keys."""
    x = (x + _FIB) & _M64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _M64
    return x ^ (x >> 31)


class _EmptyFlag:
    def __repr__(self):
        return "<empty bucket>"


#: Successor-word flag meaning the bucket holds no inline link at all.
#: Distinct from None, which means the chain ends at the inline link.
EMPTY = _EmptyFlag()

_EMPTY_LINK = (0, 0, EMPTY)


class ChainNode:
    """Heap chain link.  Published links are never mutated in place."""

    __slots__ = ("key", "value", "next", "freed")

    def __init__(self, key, value, nxt):
        self.key = key
        self.value = value
        self.next = nxt
        self.freed = False


class _TableBase:
    def __init__(self, capacity: int, epochs: EpochDomain | None,
                 check_reclaim: bool = False):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        size = 1 << max(0, (capacity - 1).bit_length())
        self.size = size
        self._mask = size - 1
        self._shift = 64 - size.bit_length() + 1  # 64 - log2(size)
        self.epochs = epochs if epochs is not None else EpochDomain()
        self._check = check_reclaim

    def bucket_index(self, key: int) -> int:
        """Deterministic multiplicative mix of the key, masked to the table."""
        return ((key * _FIB) & _M64) >> self._shift if self._shift < 64 else 0

    def _touch(self, node):
        if self._check and node.freed:
            raise RuntimeError("traversed a reclaimed link while pinned")


class CacheHashTable(_TableBase):
    """Chaining table with the first link inlined into a big atomic."""

    def __init__(self, capacity: int, cell_factory, *,
                 epochs: EpochDomain | None = None,
                 check_reclaim: bool = False):
        super().__init__(capacity, epochs, check_reclaim)
        self.buckets = [cell_factory(_EMPTY_LINK) for _ in range(self.size)]

    def find(self, key: int):
        """Value stored under `key`, or None if absent."""
        cell = self.buckets[self.bucket_index(key)]
        k0, v0, succ = cell.load()
        if succ is EMPTY:
            return None
        if k0 == key:
            return v0
        if succ is None:
            return None
        ep = self.epochs
        ep.pin()
        try:
            # Reload under the pin: links reachable from this snapshot
            # cannot be freed before we unpin.
            k0, v0, succ = cell.load()
            if succ is EMPTY:
                return None
            if k0 == key:
                return v0
            n = succ
            while n is not None:
                self._touch(n)
                if n.key == key:
                    return n.value
                n = n.next
            return None
        finally:
            ep.unpin()

    def insert(self, key: int, value: int) -> bool:
        """Add the key; False without change if it is already present."""
        cell = self.buckets[self.bucket_index(key)]
        ep = self.epochs
        while True:
            link = cell.load()
            k0, v0, succ = link
            if succ is EMPTY:
                if cell.cas(link, (key, value, None)):
                    return True
                continue
            if k0 == key:
                return False
            if succ is not None:
                # Search the heap chain under a pin, against a snapshot
                # reloaded inside the pin.
                ep.pin()
                try:
                    link = cell.load()
                    k0, v0, succ = link
                    if succ is EMPTY:
                        continue
                    if k0 == key:
                        return False
                    if succ is not None and self._chain_has(succ, key):
                        return False
                finally:
                    ep.unpin()
            # Not present: inline the new link, demoting the old first link
            # to a heap node so no existing link is modified.  The CAS
            # validates that the snapshot (and so the whole immutable chain)
            # is unchanged.
            moved = ChainNode(k0, v0, succ)
            if cell.cas(link, (key, value, moved)):
                return True

    def _chain_has(self, node, key) -> bool:
        while node is not None:
            self._touch(node)
            if node.key == key:
                return True
            node = node.next
        return False

    def delete(self, key: int) -> bool:
        """Remove the key; False if absent.  Splices by path copying."""
        cell = self.buckets[self.bucket_index(key)]
        ep = self.epochs
        while True:
            link = cell.load()
            k0, v0, succ = link
            if succ is EMPTY:
                return False
            if succ is None:
                if k0 != key:
                    return False
                if cell.cas(link, _EMPTY_LINK):
                    return True
                continue
            ep.pin()
            try:
                link = cell.load()
                k0, v0, succ = link
                if succ is EMPTY:
                    return False
                if succ is None:
                    if k0 != key:
                        return False
                    if cell.cas(link, _EMPTY_LINK):
                        return True
                    continue
                if k0 == key:
                    # Pull the successor's contents into the inline link.
                    self._touch(succ)
                    if cell.cas(link, (succ.key, succ.value, succ.next)):
                        ep.retire(succ)
                        return True
                    continue
                # Walk to the victim, collecting the links ahead of it.
                prefix = []
                n = succ
                while n is not None and n.key != key:
                    self._touch(n)
                    prefix.append(n)
                    n = n.next
                if n is None:
                    return False
                victim = n
                tail = victim.next
                for src in reversed(prefix):
                    tail = ChainNode(src.key, src.value, tail)
                if cell.cas(link, (k0, v0, tail)):
                    ep.retire(victim)
                    for src in prefix:
                        ep.retire(src)
                    return True
                # Copies were never published; drop them and retry.
            finally:
                ep.unpin()


class ChainingTable(_TableBase):
    """Baseline: identical chain algorithm without the inlined first link."""

    def __init__(self, capacity: int, *, epochs: EpochDomain | None = None,
                 check_reclaim: bool = False):
        super().__init__(capacity, epochs, check_reclaim)
        self.buckets = [AtomicWord(None) for _ in range(self.size)]

    def find(self, key: int):
        bucket = self.buckets[self.bucket_index(key)]
        if bucket.load() is None:
            return None
        ep = self.epochs
        ep.pin()
        try:
            n = bucket.load()
            while n is not None:
                self._touch(n)
                if n.key == key:
                    return n.value
                n = n.next
            return None
        finally:
            ep.unpin()

    def insert(self, key: int, value: int) -> bool:
        bucket = self.buckets[self.bucket_index(key)]
        ep = self.epochs
        while True:
            head = bucket.load()
            if head is not None:
                ep.pin()
                try:
                    head = bucket.load()
                    n = head
                    found = False
                    while n is not None:
                        self._touch(n)
                        if n.key == key:
                            found = True
                            break
                        n = n.next
                    if found:
                        return False
                finally:
                    ep.unpin()
            node = ChainNode(key, value, head)
            if bucket.cas(head, node):
                return True

    def delete(self, key: int) -> bool:
        bucket = self.buckets[self.bucket_index(key)]
        ep = self.epochs
        while True:
            head = bucket.load()
            if head is None:
                return False
            ep.pin()
            try:
                head = bucket.load()
                prefix = []
                n = head
                while n is not None and n.key != key:
                    self._touch(n)
                    prefix.append(n)
                    n = n.next
                if n is None:
                    return False
                victim = n
                tail = victim.next
                for src in reversed(prefix):
                    tail = ChainNode(src.key, src.value, tail)
                if bucket.cas(head, tail):
                    ep.retire(victim)
                    for src in prefix:
                        ep.retire(src)
                    return True
            finally:
                ep.unpin()
