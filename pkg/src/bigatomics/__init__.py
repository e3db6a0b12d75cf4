"""Interchangeable multi-word atomic cells, a hash table built on them, a
workload benchmark, and a linearizability harness.

Every cell implementation offers linearizable ``load()``/``cas(expected,
desired)`` over a fixed-size tuple-of-words payload; all but the cached
wait-free cell offer ``store(desired)`` as well.  Implementations declare
their progress guarantee (``PROGRESS``) and store support
(``SUPPORTS_STORE``) as class attributes.
"""

from .cached_me import CachedMemEffCell, SlabDomain, TaggedNull
from .cached_wf import CachedWaitFreeCell
from .epoch import EpochDomain
from .hashtable import EMPTY, CacheHashTable, ChainingTable, mix64
from .impls import IMPL_NAMES, IMPLEMENTATIONS, ImplInfo
from .indirect import IndirectCell
from .locks import LockPool, SeqLockCell, SimpLockCell
from .smr import (POISON, HazardGuard, Marked, Node, ThreadRegistry,
                  default_registry, is_marked, mark, node_of)
from .words import MAX_WORDS, AtomicWord, as_payload, zero_payload
from .workload import ZipfianSampler, rank_to_key, thread_seed
from .writable import WritableCell

__all__ = [
    "AtomicWord", "MAX_WORDS", "as_payload", "zero_payload",
    "POISON", "HazardGuard", "Marked", "Node", "ThreadRegistry",
    "default_registry", "is_marked", "mark", "node_of",
    "SimpLockCell", "SeqLockCell", "LockPool",
    "IndirectCell", "CachedWaitFreeCell",
    "CachedMemEffCell", "SlabDomain", "TaggedNull",
    "WritableCell",
    "EpochDomain", "CacheHashTable", "ChainingTable", "EMPTY", "mix64",
    "ZipfianSampler", "rank_to_key", "thread_seed",
    "IMPLEMENTATIONS", "IMPL_NAMES", "ImplInfo",
]
