"""Epoch-based deferred reclamation for hash table chain links.

Readers announce the global epoch while traversing; retired links are freed
only once the global epoch has advanced two past their retirement epoch, so
no link is freed while any thread's announced epoch still pins it.  Freed
links are flagged so that the verification harness can treat touching one
as a use-after-free.
"""

from __future__ import annotations

from .smr import ThreadRegistry, default_registry
from .words import AtomicWord

#: Announcement of a thread that is not currently traversing.
QUIESCENT = -1


class EpochDomain:
    def __init__(self, registry: ThreadRegistry | None = None,
                 advance_every: int = 64):
        self.registry = registry if registry is not None else default_registry()
        self.advance_every = advance_every
        self._global = AtomicWord(0)
        p = self.registry.max_threads
        self._announced = [QUIESCENT] * p
        self._retired: list[list] = [[] for _ in range(p)]  # (epoch, node)
        self._since_advance = [0] * p
        self._pin_depth = [0] * p

    def pin(self) -> None:
        tid = self.registry.thread_index()
        depth = self._pin_depth[tid]
        if depth == 0:
            self._announced[tid] = self._global.load()
        self._pin_depth[tid] = depth + 1

    def unpin(self) -> None:
        tid = self.registry.thread_index()
        depth = self._pin_depth[tid] - 1
        self._pin_depth[tid] = depth
        if depth == 0:
            self._announced[tid] = QUIESCENT

    def retire(self, node) -> None:
        """Defer freeing `node` until two epochs have passed."""
        tid = self.registry.thread_index()
        e = self._global.load()
        self._retired[tid].append((e, node))
        self._since_advance[tid] += 1
        if self._since_advance[tid] >= self.advance_every:
            self._since_advance[tid] = 0
            self._try_advance()
            self._collect(tid)

    def _try_advance(self) -> bool:
        e = self._global.load()
        for a in self._announced:
            if a != QUIESCENT and a != e:
                return False
        return self._global.cas(e, e + 1)

    def _collect(self, tid: int) -> int:
        e = self._global.load()
        lst = self._retired[tid]
        keep = []
        freed = 0
        for item in lst:
            if item[0] <= e - 2:
                item[1].freed = True
                freed += 1
            else:
                keep.append(item)
        lst[:] = keep
        return freed

    # -- observational accounting (tests) ------------------------------------

    def global_epoch(self) -> int:
        return self._global.load()

    def announced_epochs(self) -> list:
        return list(self._announced)

    def retired_backlog(self) -> int:
        return sum(len(lst) for lst in self._retired)

    def flush_for_testing(self) -> int:
        """Advance and collect aggressively.  Only valid at quiescence."""
        freed = 0
        for _ in range(3):
            self._try_advance()
        for tid in range(len(self._retired)):
            freed += self._collect(tid)
        return freed
