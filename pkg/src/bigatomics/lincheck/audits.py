"""Shadow-state invariant audits run at every step boundary.

A shadow model tracks the authoritative value of each cell, updated only at
the algorithms' claimed linearization events (the install notes the cells
emit).  Between any two granted steps the auditor compares the observable
cell state against the declared invariants:

  cached-wf:  the backup node always holds the current value; an unmarked
              backup implies cache == backup value; cache words change only
              while the version is odd.
  cached-me:  either the backup holds a live node with the current value,
              or it is a tagged null and the cache is current.
  writable:   the marks of W and Z mismatch exactly while a buffered write
              is pending, and Z's sequence number strictly increases.
"""

from __future__ import annotations

import random

from ..cached_me import CachedMemEffCell, TaggedNull
from ..cached_wf import CachedWaitFreeCell
from ..smr import Marked, node_of
from ..writable import WritableCell, _wmark
from .stepping import StepController


class AuditViolation(AssertionError):
    pass


class _BaseAuditor:
    def __init__(self, cells):
        self.cells = list(cells)
        self.violations: list[str] = []
        self._notes_seen = 0

    def _fail(self, msg: str) -> None:
        self.violations.append(msg)

    def on_boundary(self, controller: StepController) -> None:
        notes = controller.notes
        while self._notes_seen < len(notes):
            self.on_note(*notes[self._notes_seen])
            self._notes_seen += 1
        self.check()

    def on_note(self, thread, label, payload) -> None:
        pass

    def check(self) -> None:
        raise NotImplementedError


class CachedWaitFreeAuditor(_BaseAuditor):
    def __init__(self, cells):
        super().__init__(cells)
        self.shadow = {id(c): tuple(c._cache) for c in cells}
        self._last_cache = {id(c): tuple(c._cache) for c in cells}

    def on_note(self, thread, label, payload) -> None:
        if label == "installed":
            cell, value = payload
            self.shadow[id(cell)] = value

    def check(self) -> None:
        for cell in self.cells:
            p = cell._backup.load()
            node = node_of(p)
            if node is None:
                self._fail("backup slot lost its node")
                continue
            current = self.shadow[id(cell)]
            if node.value != current:
                self._fail(f"backup node holds {node.value!r}, "
                           f"current value is {current!r}")
            cache = tuple(cell._cache)
            if type(p) is not Marked and cache != node.value:
                self._fail(f"unmarked backup but cache {cache!r} != "
                           f"backup {node.value!r}")
            if cache != self._last_cache[id(cell)]:
                if not cell._version.load() & 1:
                    self._fail("cache changed while the version was even")
                self._last_cache[id(cell)] = cache


class CachedMemEffAuditor(_BaseAuditor):
    def __init__(self, cells):
        super().__init__(cells)
        self.shadow = {id(c): tuple(c._cache) for c in cells}
        self._last_cache = {id(c): tuple(c._cache) for c in cells}

    def on_note(self, thread, label, payload) -> None:
        if label == "installed":
            cell, value = payload
            self.shadow[id(cell)] = value

    def check(self) -> None:
        for cell in self.cells:
            p = cell._backup.load()
            current = self.shadow[id(cell)]
            ver = cell._version.load()
            if type(p) is TaggedNull:
                cache = tuple(cell._cache)
                if cache != current:
                    self._fail(f"null backup but cache {cache!r} != "
                               f"current {current!r}")
                if p.version > ver:
                    self._fail("tagged null from the future")
            else:
                if not p.is_installed:
                    self._fail("installed backup node not flagged installed")
                if p.value != current:
                    self._fail(f"backup node holds {p.value!r}, "
                               f"current value is {current!r}")
            cache = tuple(cell._cache)
            if cache != self._last_cache[id(cell)]:
                if not ver & 1:
                    self._fail("cache changed while the version was even")
                self._last_cache[id(cell)] = cache


class WritableAuditor(_BaseAuditor):
    def __init__(self, cells):
        super().__init__(cells)
        self._by_z = {id(c._z): c for c in cells}
        self.pending = {id(c): None for c in cells}  # buffered value or None
        self._last_seq = {id(c): 0 for c in cells}

    def on_note(self, thread, label, payload) -> None:
        if label == "winstalled":
            cell, value = payload
            self.pending[id(cell)] = value
        elif label == "installed":
            cell = self._by_z.get(id(payload[0]))
            if cell is None:
                return
            triple = payload[1]
            zmark = triple[cell._k] & 1
            w = cell._w.load()
            if zmark == _wmark(w):
                # marks rematched: the pending write just transferred
                self.pending[id(cell)] = None

    def check(self) -> None:
        for cell in self.cells:
            znode = node_of(cell._z._backup.load())
            triple = znode.value
            meta = triple[cell._k]
            zmark, zseq = meta & 1, meta >> 1
            wmark = _wmark(cell._w.load())
            mismatch = zmark != wmark
            pending = self.pending[id(cell)] is not None
            if mismatch != pending:
                self._fail(f"mark mismatch={mismatch} but pending={pending}")
            last = self._last_seq[id(cell)]
            if zseq < last:
                self._fail(f"sequence number moved backwards {last}->{zseq}")
            self._last_seq[id(cell)] = zseq


AUDITORS = {
    "cached-wf": (CachedWaitFreeCell, CachedWaitFreeAuditor),
    "cached-me": (CachedMemEffCell, CachedMemEffAuditor),
    "writable": (WritableCell, WritableAuditor),
}


def shadow_audit(impl_name: str, factory_builder, *, threads: int = 3,
                 cells: int = 2, k: int = 2, steps: int = 10000,
                 seed: int = 0, ops_per_thread: int = 0) -> list[str]:
    """Run randomly scheduled workers over instrumented cells, checking the
    implementation's invariants at every step boundary; returns violations.

    `factory_builder(hook)` must return a cell factory wired to that hook.
    Workers run random supported ops until `steps` grants have been made."""
    controller = StepController(seed=seed)
    cell_factory = factory_builder(controller)
    population = [cell_factory((0,) * k) for _ in range(cells)]
    auditor_cls = AUDITORS[impl_name][1]
    auditor = auditor_cls(population)

    supports_store = getattr(population[0], "SUPPORTS_STORE", True)
    rng = random.Random(seed ^ 0x5EED)

    def worker(wid):
        wrng = random.Random(rng.randrange(2 ** 63) + wid)
        count = 0
        while ops_per_thread == 0 or count < ops_per_thread:
            cell = population[wrng.randrange(len(population))]
            choice = wrng.random()
            a = tuple(wrng.randrange(4) for _ in range(k))
            b = tuple(wrng.randrange(4) for _ in range(k))
            if choice < 0.4:
                cell.load()
            elif choice < 0.7 or not supports_store:
                cell.cas(a, b)
            else:
                cell.store(a)
            count += 1

    for i in range(threads):
        controller.spawn(worker, i, name=f"w{i}")
        controller.start(f"w{i}")
    controller.run_random(steps, on_boundary=lambda: auditor.on_boundary(controller))
    for i in range(threads):
        controller.suspend(f"w{i}")  # workers loop forever; stop granting
    return auditor.violations
