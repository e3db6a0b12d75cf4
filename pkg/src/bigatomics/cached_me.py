"""Lock-free load/store/CAS cell that uninstalls its backup node once the
value is cached, plus the thread-private slab allocator it recycles
through.

The backup slot holds either a real node (the live value) or a
version-tagged null sentinel (the cache is the live value).  A CAS installs
a node taken from the calling thread's slab, then loops re-caching until
the cell is consistent again, helping any writer that overwrote it in the
meantime.  Once a tagged null is back in the slot the node count of the
whole cell population is bounded by the number of in-progress writes.

Slabs hold 3P nodes per thread (6P in deamortized mode, where reclamation
is spread out over writes instead of running as one scan).
"""

from __future__ import annotations

from .smr import POISON, Node, default_registry
from .words import (AtomicWord, as_payload, read_words, read_words_hooked,
                    write_words, write_words_hooked)


class TaggedNull:
    """Null sentinel carrying the version that published it.

    Distinguishable from any real node handle; two tagged nulls are equal
    exactly when their versions are equal, which rules out slot-word reuse
    because unlock version values never repeat.
    """

    __slots__ = ("version",)

    def __init__(self, version: int):
        self.version = version

    def __eq__(self, other):
        if type(other) is TaggedNull:
            return self.version == other.version
        return NotImplemented

    def __hash__(self):
        return hash(("tagged-null", self.version))

    def __repr__(self):
        return f"TaggedNull({self.version})"


# Fresh cells all start with the same version-0 null; tag equality is by
# version, so sharing one instance is safe and keeps big arrays small.
_INITIAL_NULL = TaggedNull(0)


class SlabNode(Node):
    """Slab-managed backup node; all fields beyond value exist for
    reclamation.  Only the owner thread reads the private flags."""

    __slots__ = ("owner", "is_installed", "was_installed", "is_protected",
                 "in_free")

    def __init__(self, owner: int):
        super().__init__(POISON)
        self.owner = owner
        self.is_installed = False   # cleared by whoever uninstalls the node
        self.was_installed = False  # private reclaim snapshot
        self.is_protected = False   # private reclaim scratch
        self.in_free = True


class _SlabState:
    __slots__ = ("tid", "nodes", "free", "phase", "idx", "writes_in_phase",
                 "phase_completions", "last_phase_free", "last_phase_writes",
                 "sweep_pushes")

    def __init__(self, tid, size):
        self.tid = tid
        self.nodes = [SlabNode(tid) for _ in range(size)]
        self.free = list(self.nodes)
        self.phase = 0
        self.idx = 0
        self.writes_in_phase = 0
        self.phase_completions = 0
        self.last_phase_free = None
        self.last_phase_writes = None
        self.sweep_pushes = 0


class SlabDomain:
    """Per-thread slabs of recyclable backup nodes over one registry.

    Amortized mode scans the whole slab when the free list runs dry;
    deamortized mode performs at least six reclaim iterations per node
    allocation so a full phase completes every <= 3P writes.
    """

    def __init__(self, registry=None, deamortized: bool = False):
        self.registry = registry if registry is not None else default_registry()
        self.deamortized = deamortized
        p = self.registry.max_threads
        self.slab_size = (6 if deamortized else 3) * p
        self._states: list[_SlabState | None] = [None] * p

    def _state(self) -> _SlabState:
        tid = self.registry.thread_index()
        st = self._states[tid]
        if st is None:
            st = _SlabState(tid, self.slab_size)
            self._states[tid] = st
        return st

    def get_free_node(self, value, hook=None) -> SlabNode:
        st = self._state()
        if self.deamortized:
            st.writes_in_phase += 1
            self._steps(st, 6, hook)
            if not st.free:
                raise RuntimeError(
                    "deamortized slab exhausted; the 6P sizing invariant broke")
        elif not st.free:
            if hook is not None:
                hook("slab.reclaim.begin")
            self._reclaim_full(st, hook)
            if not st.free:
                raise RuntimeError(
                    "slab reclaim yielded zero nodes; the 3P sizing invariant broke")
        node = st.free.pop()
        node.in_free = False
        node.value = value
        node.is_installed = True
        return node

    def free_node(self, node: SlabNode) -> None:
        """Return a node that was never published (losing CAS path)."""
        st = self._state()
        node.is_installed = False
        node.value = POISON
        node.in_free = True
        st.free.append(node)

    def reclaim(self, hook=None) -> int:
        """Full scan pass over the calling thread's slab; returns freed count."""
        return self._reclaim_full(self._state(), hook)

    def _reclaim_full(self, st: _SlabState, hook=None) -> int:
        # Pass 1: snapshot installed flags.  A node observed uninstalled
        # here was uninstalled before the announcement scan below, so any
        # protection of it must already be visible there.
        for n in st.nodes:
            if hook is not None:
                hook("slab.reclaim.snapshot")
            n.was_installed = n.is_installed
        # Pass 2: mark own nodes announced in any hazard slot.
        for a in self.registry.slots:
            if hook is not None:
                hook("slab.reclaim.scan")
            if type(a) is SlabNode and a.owner == st.tid:
                a.is_protected = True
        # Pass 3: sweep.
        freed = 0
        for n in st.nodes:
            if hook is not None:
                hook("slab.reclaim.sweep")
            if not n.was_installed and not n.is_protected and not n.in_free:
                n.value = POISON
                n.in_free = True
                st.free.append(n)
                freed += 1
            n.is_protected = False
        return freed

    def _steps(self, st: _SlabState, count: int, hook=None) -> None:
        """Run `count` iterations of the incremental reclaim state machine."""
        nodes = st.nodes
        slots = self.registry.slots
        for _ in range(count):
            if st.phase == 0:
                if hook is not None:
                    hook("slab.reclaim.snapshot")
                n = nodes[st.idx]
                n.was_installed = n.is_installed
                st.idx += 1
                if st.idx == len(nodes):
                    st.phase, st.idx = 1, 0
            elif st.phase == 1:
                if hook is not None:
                    hook("slab.reclaim.scan")
                if st.idx < len(slots):
                    a = slots[st.idx]
                    if type(a) is SlabNode and a.owner == st.tid:
                        a.is_protected = True
                st.idx += 1
                if st.idx >= len(slots):
                    st.phase, st.idx = 2, 0
            else:
                if hook is not None:
                    hook("slab.reclaim.sweep")
                n = nodes[st.idx]
                if not n.was_installed and not n.is_protected and not n.in_free:
                    n.value = POISON
                    n.in_free = True
                    st.free.append(n)
                    st.sweep_pushes += 1
                n.is_protected = False
                st.idx += 1
                if st.idx == len(nodes):
                    st.phase, st.idx = 0, 0
                    st.phase_completions += 1
                    st.last_phase_free = len(st.free)
                    st.last_phase_writes = st.writes_in_phase
                    st.writes_in_phase = 0

    # -- accounting (tests) --------------------------------------------------

    def installed_count(self) -> int:
        return sum(1 for st in self._states if st is not None
                   for n in st.nodes if n.is_installed)

    def free_count(self, tid: int) -> int:
        st = self._states[tid]
        return len(st.free) if st is not None else self.slab_size

    def state_for_testing(self, tid: int) -> _SlabState | None:
        return self._states[tid]


class CachedMemEffCell:
    PROGRESS = "lock-free"
    SUPPORTS_STORE = True

    __slots__ = ("_version", "_backup", "_cache", "_k", "_domain", "_hook")

    def __init__(self, initial, *, domain: SlabDomain | None = None, hook=None):
        payload = as_payload(initial)
        self._k = len(payload)
        self._domain = domain if domain is not None else SlabDomain()
        self._version = AtomicWord(0)
        self._backup = AtomicWord(_INITIAL_NULL)
        self._cache = list(payload)
        self._hook = hook

    def load(self) -> tuple:
        hook = self._hook
        if hook is None:
            ver = self._version.load()
            val = read_words(self._cache)
            p = self._backup.load()
            if type(p) is TaggedNull and self._version.load() == ver:
                return val
        else:
            hook("cme.load.ver1")
            ver = self._version.load()
            val = read_words_hooked(self._cache, hook, "cme.load.word")
            hook("cme.load.backup")
            p = self._backup.load()
            if type(p) is TaggedNull:
                hook("cme.load.ver2")
                if self._version.load() == ver:
                    return val
        guard = self._domain.registry.acquire_guard()
        try:
            while True:
                if hook is not None:
                    hook.note("cme.load.round", self)
                ok, ver, val, p = self._try_load_indirect(guard, 0)
                if ok:
                    return val
                # Each failed round implies another update completed.
        finally:
            guard.release()

    def _try_load_indirect(self, guard, ver):
        """One protected attempt to read either the backup node or a
        version-stable cache; returns (success, version, payload, handle)."""
        hook = self._hook
        if hook is not None:
            hook("cme.indirect.protect")
        p = guard.protect(self._backup, hook)
        if type(p) is not TaggedNull:
            if hook is not None:
                hook("cme.indirect.node")
            return True, ver, p.value, p
        if hook is None:
            ver = self._version.load()
            val = read_words(self._cache)
            p = self._backup.load()
            ok = type(p) is TaggedNull and self._version.load() == ver
        else:
            hook("cme.indirect.ver1")
            ver = self._version.load()
            val = read_words_hooked(self._cache, hook, "cme.indirect.word")
            hook("cme.indirect.backup")
            p = self._backup.load()
            hook("cme.indirect.ver2")
            ok = type(p) is TaggedNull and self._version.load() == ver
        return ok, ver, val, p

    def cas(self, expected, desired) -> bool:
        if len(expected) != self._k or len(desired) != self._k:
            raise ValueError("payload size mismatch")
        expected = tuple(expected)
        desired = tuple(desired)
        domain = self._domain
        hook = self._hook
        guard = domain.registry.acquire_guard()
        try:
            if hook is not None:
                hook("cme.cas.ver1")
            ver = self._version.load()
            ok, ver, val, p = self._try_load_indirect(guard, ver)
            if not ok:
                # The value changed during the attempt; since installs never
                # re-install an equal value, some momentary value differed
                # from `expected`.
                return False
            if val != expected:
                return False
            if expected == desired:
                return True
            node = domain.get_free_node(desired, hook)
            old = p
            if hook is not None:
                hook("cme.cas.install")
            ok, cur = self._backup.cas_strong(p, node)
            if ok:
                if hook is not None:
                    hook.note("installed", self, desired)
                if type(old) is not TaggedNull:
                    if hook is not None:
                        hook("cme.cas.uninstall_old")
                    old.is_installed = False
                self._try_seqlock(ver, desired, node, guard)
                return True
            if type(old) is not TaggedNull and type(cur) is TaggedNull:
                # Our incumbent was uninstalled after its value was cached;
                # re-validate against the cache and try once more.
                if hook is not None:
                    hook("cme.cas.revalidate")
                ver = self._version.load()
                if hook is None:
                    val = read_words(self._cache)
                else:
                    val = read_words_hooked(self._cache, hook, "cme.cas.word2")
                if not (ver & 1) and val == expected:
                    if hook is not None:
                        hook("cme.cas.install2")
                    ok, cur = self._backup.cas_strong(cur, node)
                    if ok:
                        if hook is not None:
                            hook.note("installed", self, desired)
                            hook.note("cme.second_attempt_won", self)
                        self._try_seqlock(ver, desired, node, guard)
                        return True
            domain.free_node(node)
            return False
        finally:
            guard.release()

    def _try_seqlock(self, ver, desired, p, guard):
        """Cache `desired` and uninstall `p`, helping overwriters until the
        backup is a tagged null again or someone else holds the lock."""
        hook = self._hook
        version = self._version
        while True:
            if hook is not None:
                hook("cme.seqlock.lock")
            if (ver & 1) or not version.cas(ver, ver + 1):
                return
            if hook is None:
                write_words(self._cache, desired)
            else:
                write_words_hooked(self._cache, desired, hook, "cme.seqlock.word")
                hook("cme.seqlock.unlock")
            ver += 2
            version.store(ver)
            if hook is not None:
                hook("cme.seqlock.uninstall")
            ok, cur = self._backup.cas_strong(p, TaggedNull(ver))
            if ok:
                if hook is not None:
                    hook.note("cme.uninstalled", self)
                p.is_installed = False
                return
            if type(cur) is TaggedNull:
                return  # someone else restored consistency
            if hook is not None:
                hook("cme.seqlock.adopt")
            p = guard.protect(self._backup, hook)
            if type(p) is TaggedNull:
                return
            if hook is not None:
                hook.note("cme.helped", self)
            desired = p.value

    def store(self, desired) -> None:
        if len(desired) != self._k:
            raise ValueError("payload size mismatch")
        desired = tuple(desired)
        while not self.cas(self.load(), desired):
            pass
