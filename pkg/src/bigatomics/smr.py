"""Hazard-slot safe memory reclamation and the worker thread registry.

Threads register with a fixed-capacity :class:`ThreadRegistry` which owns
their hazard slots, retire lists and node pools.  A node announced in any
hazard slot at the time it is retired is not recycled until no slot
announces it.

Reclaimed nodes are poisoned and returned to the reclaiming thread's pool,
so a use-after-reclaim shows up as a :data:`POISON` payload (the canary the
verification harness checks for).
"""

from __future__ import annotations

import threading

from .words import AtomicWord


class _Poison:
    def __repr__(self):
        return "<poisoned node>"


#: Canary value written into a node's payload when its storage is recycled.
POISON = _Poison()

#: Hazard slots per registered thread.  The deepest nesting is a store on
#: the writable cell: its own write-buffer guard, the helper's write-buffer
#: guard, and the central cell's backup guard.
GUARDS_PER_THREAD = 3

DEFAULT_MAX_THREADS = 64

#: Retired handles a thread accumulates before it scans, sized so that
#: roughly a thousand garbage nodes build up per thread between scans.
DEFAULT_SCAN_THRESHOLD = 1000


class Node:
    """Heap copy of a payload, recycled through per-thread pools."""

    __slots__ = ("value", "retired")

    def __init__(self, value):
        self.value = value
        self.retired = False

    def __repr__(self):
        return f"Node({self.value!r})"


class Marked(object):
    """A node handle with its validity bit set.

    Stands in for a pointer with a stolen low bit.  Each install wraps the
    node in a fresh ``Marked`` instance, so a recycled node re-installed on
    the same cell never reproduces an old slot word; a stale
    validate-compare-exchange can therefore never succeed spuriously.
    """

    __slots__ = ("node",)

    def __init__(self, node):
        self.node = node

    def __repr__(self):
        return f"Marked({self.node!r})"


def mark(node) -> Marked:
    return Marked(node)


def is_marked(handle) -> bool:
    return type(handle) is Marked


def node_of(handle):
    """Strip the mark from a handle; identity for plain nodes."""
    return handle.node if type(handle) is Marked else handle


def _as_node(word):
    """The node a slot word refers to, or None for non-node sentinels."""
    if type(word) is Marked:
        return word.node
    if isinstance(word, Node):
        return word
    return None


class HazardGuard:
    """A single hazard slot held for the duration of one protected read."""

    __slots__ = ("_registry", "_slot_index", "busy")

    def __init__(self, registry, slot_index):
        self._registry = registry
        self._slot_index = slot_index
        self.busy = False

    def protect(self, word: AtomicWord, hook=None):
        """Announce-then-revalidate loop; returns a slot word that was
        present in `word` at some point after the call began.  The
        referenced node (if any) stays announced until release()."""
        slots = self._registry.slots
        i = self._slot_index
        while True:
            w = word.load()
            n = _as_node(w)
            if n is None:
                slots[i] = None
                return w
            slots[i] = n
            if word.load() == w:
                return w
            if hook is not None:
                hook("smr.protect.retry")

    def announce(self, node) -> None:
        self._registry.slots[self._slot_index] = node

    def release(self) -> None:
        self._registry.slots[self._slot_index] = None
        self.busy = False


class ThreadRegistry:
    """Fixed-capacity registry of worker threads and their SMR state.

    The capacity is fixed at construction; registering more threads than
    that is a startup error.  Hazard slots are written only by their owner
    and read by all threads during scans.  Retire lists and node pools are
    thread-private.
    """

    def __init__(self, max_threads: int = DEFAULT_MAX_THREADS,
                 scan_threshold: int = DEFAULT_SCAN_THRESHOLD):
        if max_threads < 1:
            raise ValueError("max_threads must be >= 1")
        self.max_threads = max_threads
        self.scan_threshold = scan_threshold
        self._lock = threading.Lock()
        self._indices: dict[int, int] = {}
        self._local = threading.local()
        self.slots: list = [None] * (max_threads * GUARDS_PER_THREAD)
        self._guards = [
            [HazardGuard(self, t * GUARDS_PER_THREAD + j)
             for j in range(GUARDS_PER_THREAD)]
            for t in range(max_threads)
        ]
        self._retired: list[list] = [[] for _ in range(max_threads)]
        self._pools: list[list] = [[] for _ in range(max_threads)]
        # Nodes constructed minus nodes dropped from over-full pools.
        self._node_count = [0] * max_threads

    # -- thread identity ---------------------------------------------------

    def thread_index(self) -> int:
        """Index of the calling thread, registering it on first use."""
        try:
            return self._local.index
        except AttributeError:
            pass
        ident = threading.get_ident()
        with self._lock:
            idx = self._indices.get(ident)
            if idx is None:
                idx = len(self._indices)
                if idx >= self.max_threads:
                    raise RuntimeError(
                        f"thread registry full ({self.max_threads}); "
                        "size the registry for the worker count at startup")
                self._indices[ident] = idx
        self._local.index = idx
        return idx

    @property
    def registered_count(self) -> int:
        return len(self._indices)

    # -- hazard guards ------------------------------------------------------

    def acquire_guard(self) -> HazardGuard:
        for g in self._guards[self.thread_index()]:
            if not g.busy:
                g.busy = True
                return g
        raise RuntimeError("no free hazard slot; a guard leaked")

    def announced_nodes(self) -> set:
        """Identity set of the nodes currently announced in any slot."""
        return {id(n) for n in self.slots if n is not None}

    # -- node allocation ----------------------------------------------------

    def alloc_node(self, value) -> Node:
        tid = self.thread_index()
        pool = self._pools[tid]
        if pool:
            node = pool.pop()
            node.value = value
            return node
        self._node_count[tid] += 1
        return Node(value)

    def discard_node(self, node) -> None:
        """Return a never-published node straight to the pool."""
        node.value = POISON
        self._push_pool(node)

    def _push_pool(self, node) -> None:
        tid = self.thread_index()
        pool = self._pools[tid]
        if len(pool) < 2 * self.scan_threshold:
            pool.append(node)
        else:
            self._node_count[tid] -= 1  # dropped to the allocator

    # -- retire / scan -------------------------------------------------------

    def retire(self, node) -> None:
        """Queue an unlinked node for reclamation at a future scan."""
        if node.retired:
            raise RuntimeError("double retire of a node")
        node.retired = True
        tid = self.thread_index()
        lst = self._retired[tid]
        lst.append(node)
        if len(lst) > self.scan_threshold:
            self.scan_reclaim()

    def scan_reclaim(self) -> int:
        """Free every retired node not currently announced; returns count."""
        tid = self.thread_index()
        lst = self._retired[tid]
        if not lst:
            return 0
        announced = self.announced_nodes()
        keep = []
        freed = 0
        for node in lst:
            if id(node) in announced:
                keep.append(node)
            else:
                node.retired = False
                node.value = POISON
                self._push_pool(node)
                freed += 1
        lst[:] = keep
        return freed

    # -- observational accounting (tests) ------------------------------------

    def retired_backlog(self) -> int:
        return sum(len(lst) for lst in self._retired)

    def pooled_count(self) -> int:
        return sum(len(p) for p in self._pools)

    def live_node_count(self) -> int:
        """Nodes currently installed somewhere: created - pooled - retired."""
        return sum(self._node_count) - self.pooled_count() - self.retired_backlog()

    def drain_for_testing(self) -> int:
        """Scan every thread's retire list.  Only valid at quiescence."""
        announced = self.announced_nodes()
        freed = 0
        for lst in self._retired:
            keep = []
            for node in lst:
                if id(node) in announced:
                    keep.append(node)
                else:
                    node.retired = False
                    node.value = POISON
                    freed += 1
                    # return to the owner-agnostic first pool at quiescence
                    if len(self._pools[0]) < 2 * self.scan_threshold:
                        self._pools[0].append(node)
                    else:
                        self._node_count[0] -= 1
            lst[:] = keep
        return freed


_default_registry = None
_default_lock = threading.Lock()


def default_registry() -> ThreadRegistry:
    """Process-wide registry for casual use; tests build their own."""
    global _default_registry
    with _default_lock:
        if _default_registry is None:
            _default_registry = ThreadRegistry()
        return _default_registry
