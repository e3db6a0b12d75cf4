"""Randomized free-running stress: record small concurrent histories and
check them for linearizability against the sequential register model.
"""

from __future__ import annotations

import random
import sys
import threading

from ..impls import IMPLEMENTATIONS
from ..smr import ThreadRegistry
from .checker import check_linearizable
from .history import Recorder, RegisterSpec

_STRESS_SWITCH_INTERVAL = 2e-6


def random_ops(rng: random.Random, n_ops: int, n_cells: int, k: int,
               supports_store: bool, value_range: int = 3) -> list:
    """A per-thread op script over a small payload value domain, so racing
    threads actually collide on values."""
    ops = []
    for _ in range(n_ops):
        cell = rng.randrange(n_cells)
        a = (rng.randrange(value_range),) * k
        b = (rng.randrange(value_range),) * k
        roll = rng.random()
        if roll < 0.4:
            ops.append(("load", (cell,)))
        elif roll < 0.7 or not supports_store:
            ops.append(("cas", (cell, a, b)))
        else:
            ops.append(("store", (cell, a)))
    return ops


def run_history(impl_name: str, seed: int, *, threads: int = 3,
                n_cells: int = 2, ops_per_thread: int = 8, k: int = 2):
    """Run one seeded free-running round; returns (history, initial_state)."""
    info = IMPLEMENTATIONS[impl_name]
    registry = ThreadRegistry(max_threads=threads + 1, scan_threshold=4)
    factory = info.make_factory(registry)
    initial = (0,) * k
    cells = [factory(initial) for _ in range(n_cells)]
    rec = Recorder()
    rng = random.Random(seed)
    scripts = [random_ops(rng, ops_per_thread, n_cells, k, info.supports_store)
               for _ in range(threads)]
    barrier = threading.Barrier(threads)

    def worker(tid: int):
        barrier.wait()
        for kind, args in scripts[tid]:
            entry = rec.invoked(tid, kind, args)
            cell = cells[args[0]]
            if kind == "load":
                result = cell.load()
            elif kind == "cas":
                result = cell.cas(args[1], args[2])
            else:
                result = cell.store(args[1])
            rec.responded(entry, result)

    ts = [threading.Thread(target=worker, args=(t,)) for t in range(threads)]
    old = sys.getswitchinterval()
    sys.setswitchinterval(_STRESS_SWITCH_INTERVAL)
    try:
        for t in ts:
            t.start()
        for t in ts:
            t.join()
    finally:
        sys.setswitchinterval(old)
    return rec.history(), (initial,) * n_cells


def stress_linearizability(impl_name: str, rounds: int, *, seed: int = 0,
                           threads: int = 3, n_cells: int = 2,
                           ops_per_thread: int = 8, k: int = 2) -> int:
    """Run `rounds` seeded histories; returns how many were linearizable.

    All of them should be: the caller asserts the count equals `rounds`."""
    passed = 0
    for r in range(rounds):
        history, init = run_history(
            impl_name, seed + r, threads=threads, n_cells=n_cells,
            ops_per_thread=ops_per_thread, k=k)
        if check_linearizable(history, RegisterSpec, init):
            passed += 1
    return passed
