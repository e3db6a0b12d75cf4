"""Single-word atomic primitives and fixed-size word-tuple payloads.

A payload is a tuple of ``k`` machine words (1 <= k <= 16) compared for
bitwise equality.  Cells store payloads in mutable per-word buffers; copying
in or out happens one word at a time, so a concurrent copy may observe words
from different writes.  Readers mask that tearing with version validation.
Individual words never tear.

``AtomicWord`` models one 64-bit word with sequentially consistent
load/store/CAS.  The held value may be an int or an object reference; CAS
compares with ``==``, which is identity for plain node objects and value
equality for ints.
"""

from __future__ import annotations

import threading

MAX_WORDS = 16

# A word-sized CAS is a single instruction on real hardware.  Simulating it
# needs a mutual-exclusion section; a fixed stripe pool keeps the lock count
# bounded no matter how many words exist.
_N_STRIPES = 512
_STRIPES = tuple(threading.Lock() for _ in range(_N_STRIPES))


class AtomicWord:
    """One machine word supporting sequentially consistent load/store/CAS."""

    __slots__ = ("_value", "_lock")

    def __init__(self, value=0):
        self._value = value
        self._lock = _STRIPES[(id(self) >> 6) % _N_STRIPES]

    def load(self):
        return self._value

    def store(self, value) -> None:
        with self._lock:
            self._value = value

    def cas(self, expected, desired) -> bool:
        """Install `desired` iff the current value equals `expected`."""
        with self._lock:
            if self._value == expected:
                self._value = desired
                return True
            return False

    def cas_strong(self, expected, desired):
        """CAS that also returns the witnessed value (compare-exchange)."""
        with self._lock:
            cur = self._value
            if cur == expected:
                self._value = desired
                return True, cur
            return False, cur

    def exchange(self, value):
        with self._lock:
            old = self._value
            self._value = value
            return old

    def fetch_add(self, delta=1):
        with self._lock:
            old = self._value
            self._value = old + delta
            return old

    def __repr__(self):
        return f"AtomicWord({self._value!r})"


def zero_payload(k: int) -> tuple:
    if not 1 <= k <= MAX_WORDS:
        raise ValueError(f"payload size must be 1..{MAX_WORDS}, got {k}")
    return (0,) * k


def as_payload(words, max_words: int = MAX_WORDS) -> tuple:
    """Validate and freeze a word sequence into a payload tuple."""
    p = tuple(words)
    if not 1 <= len(p) <= max_words:
        raise ValueError(f"payload size must be 1..{max_words}, got {len(p)}")
    return p


def read_words(buf) -> tuple:
    # One load per word; a racing writer can be observed mid-copy.
    return tuple([buf[i] for i in range(len(buf))])


def read_words_hooked(buf, hook, label) -> tuple:
    out = []
    for i in range(len(buf)):
        hook(label)
        out.append(buf[i])
    return tuple(out)


def write_words(buf, payload) -> None:
    for i in range(len(payload)):
        buf[i] = payload[i]


def write_words_hooked(buf, payload, hook, label) -> None:
    for i in range(len(payload)):
        hook(label)
        buf[i] = payload[i]
