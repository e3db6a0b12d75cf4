"""Registry of the interchangeable cell implementations.

Factories bind a cell class to the shared runtime pieces it needs (thread
registry, slab domain, lock pool) so callers can build populations of cells
by implementation name.
"""

from __future__ import annotations

from dataclasses import dataclass

from .cached_me import CachedMemEffCell, SlabDomain
from .cached_wf import CachedWaitFreeCell
from .indirect import IndirectCell
from .locks import LockPool, SeqLockCell, SimpLockCell
from .smr import ThreadRegistry, default_registry
from .writable import WritableCell


class CellFactory:
    """Builds cells of one implementation sharing one runtime context."""

    def __init__(self, name, build, domain=None):
        self.name = name
        self._build = build
        self.domain = domain  # slab domain, for implementations that use one

    def __call__(self, initial):
        return self._build(initial)


@dataclass(frozen=True)
class ImplInfo:
    name: str
    cls: type
    progress: str
    supports_store: bool

    def make_factory(self, registry: ThreadRegistry | None = None, hook=None,
                     **options) -> CellFactory:
        reg = registry if registry is not None else default_registry()
        name = self.name
        if name == "simplock":
            pool = LockPool() if options.get("lock_pool") else None
            return CellFactory(name, lambda initial: SimpLockCell(
                initial, lock_pool=pool, hook=hook,
                backoff=options.get("backoff", False)))
        if name == "seqlock":
            return CellFactory(name, lambda initial: SeqLockCell(
                initial, hook=hook, backoff=options.get("backoff", False)))
        if name == "indirect":
            return CellFactory(name, lambda initial: IndirectCell(
                initial, registry=reg, hook=hook))
        if name == "cached-wf":
            return CellFactory(name, lambda initial: CachedWaitFreeCell(
                initial, registry=reg, hook=hook))
        if name == "cached-me":
            domain = SlabDomain(reg, deamortized=options.get("deamortized", False))
            return CellFactory(name, lambda initial: CachedMemEffCell(
                initial, domain=domain, hook=hook), domain=domain)
        if name == "writable":
            return CellFactory(name, lambda initial: WritableCell(
                initial, registry=reg, hook=hook))
        raise ValueError(f"unknown implementation {name!r}")


IMPLEMENTATIONS: dict[str, ImplInfo] = {
    info.name: info for info in (
        ImplInfo("simplock", SimpLockCell, "blocking", True),
        ImplInfo("seqlock", SeqLockCell, "blocking", True),
        ImplInfo("indirect", IndirectCell, "lock-free", True),
        ImplInfo("cached-wf", CachedWaitFreeCell, "wait-free", False),
        ImplInfo("cached-me", CachedMemEffCell, "lock-free", True),
        ImplInfo("writable", WritableCell, "wait-free", True),
    )
}

IMPL_NAMES = tuple(IMPLEMENTATIONS)
