"""Concurrent operation histories: recording and sequential replay models.

An operation is recorded as (thread, kind, args, result) plus invocation
and response indices drawn from one global counter, so index order is
consistent with real time: if op A's response index is below op B's
invocation index, A really did complete before B began.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass


@dataclass(frozen=True)
class CompletedOp:
    thread: int
    kind: str
    args: tuple
    result: object
    inv: int
    resp: int


class Recorder:
    """Collects per-thread op logs stamped with a global event counter."""

    def __init__(self):
        self._lock = threading.Lock()
        self._counter = 0
        self._logs: dict[int, list] = {}

    def _tick(self) -> int:
        with self._lock:
            n = self._counter
            self._counter = n + 1
            return n

    def invoked(self, thread: int, kind: str, args: tuple) -> list:
        entry = [thread, kind, args, None, self._tick(), None]
        self._logs.setdefault(thread, []).append(entry)
        return entry

    def responded(self, entry: list, result) -> None:
        entry[3] = result
        entry[5] = self._tick()

    def history(self) -> list[CompletedOp]:
        ops = []
        for log in self._logs.values():
            for thread, kind, args, result, inv, resp in log:
                if resp is None:
                    raise ValueError("history has an unresponded operation")
                ops.append(CompletedOp(thread, kind, args, result, inv, resp))
        ops.sort(key=lambda op: op.inv)
        return ops


class RegisterSpec:
    """Sequential model of a population of multi-word registers.

    State is a tuple of payloads, one per cell.  Ops are
    ("load", cell), ("store", cell, v) and ("cas", cell, expected, desired).
    """

    @staticmethod
    def apply(state: tuple, kind: str, args: tuple):
        if kind == "load":
            return state[args[0]], state
        if kind == "store":
            c, v = args
            return None, state[:c] + (v,) + state[c + 1:]
        if kind == "cas":
            c, expected, desired = args
            if state[c] != expected:
                return False, state
            return True, state[:c] + (desired,) + state[c + 1:]
        raise ValueError(f"unknown register op {kind!r}")


class MapSpec:
    """Sequential model of a set-of-pairs map.

    State is a frozenset of (key, value).  Ops are ("find", k),
    ("insert", k, v) and ("delete", k).
    """

    @staticmethod
    def apply(state: frozenset, kind: str, args: tuple):
        if kind == "find":
            k = args[0]
            for key, value in state:
                if key == k:
                    return value, state
            return None, state
        if kind == "insert":
            k, v = args
            for key, _ in state:
                if key == k:
                    return False, state
            return True, state | {(k, v)}
        if kind == "delete":
            k = args[0]
            for pair in state:
                if pair[0] == k:
                    return True, state - {pair}
            return False, state
        raise ValueError(f"unknown map op {kind!r}")
