"""Torn-read and progress probes.

The torn-read probe races free-running writers that always write payloads
whose k words are equal against readers that flag any load mixing words
from different writes.  Any linearizable cell shows zero violations; the
broken-seqlock mutant shows them within a second.

The progress probe parks one thread at a chosen schedule point mid
operation and measures whether other threads can still complete a fixed
number of operations within a step budget.  Lock-free cells can; the
blocking cells stall when the parked thread holds the write lock.
"""

from __future__ import annotations

import sys
import threading
import time

from .stepping import StepController

_TORN_SWITCH_INTERVAL = 1e-5


def torn_read_probe(cell_factory, k: int, threads: int, duration: float,
                    supports_store: bool = True):
    """Race writers of all-equal-word payloads against readers for
    `duration` seconds; returns (violations, loads)."""
    cell = cell_factory((0,) * k)
    stop = threading.Event()
    violations = [0] * threads
    loads = [0] * threads

    def writer(wid):
        c = wid << 40
        while not stop.is_set():
            c += 1
            payload = (c,) * k
            if supports_store:
                cell.store(payload)
            else:
                cell.cas(cell.load(), payload)

    def reader(rid):
        n = 0
        bad = 0
        while not stop.is_set():
            val = cell.load()
            n += 1
            w0 = val[0]
            for w in val:
                if w != w0:
                    bad += 1
                    break
        violations[rid] = bad
        loads[rid] = n

    nw = max(1, threads // 2)
    nr = max(1, threads - nw)
    ts = [threading.Thread(target=writer, args=(i,)) for i in range(nw)]
    ts += [threading.Thread(target=reader, args=(i,)) for i in range(nr)]
    old = sys.getswitchinterval()
    sys.setswitchinterval(_TORN_SWITCH_INTERVAL)
    try:
        for t in ts:
            t.start()
        time.sleep(duration)
        stop.set()
        for t in ts:
            t.join()
    finally:
        sys.setswitchinterval(old)
    return sum(violations), sum(loads)


def progress_probe(make_fixture, suspend_label: str, n_ops: int = 1000,
                   step_budget: int = 200000, others: int = 2,
                   seed: int = 0) -> str:
    """Park one thread at `suspend_label` mid-operation and check whether
    `others` threads complete `n_ops` operations total.

    `make_fixture(hook)` must return (victim_op, other_op) callables.
    Returns "completed" or "stalled"."""
    controller = StepController(seed=seed)
    victim_op, other_op = make_fixture(controller)

    controller.spawn(victim_op, name="victim")
    controller.start("victim")
    controller.advance_to("victim", suspend_label)
    controller.suspend("victim")

    remaining = [n_ops]

    def worker():
        while remaining[0] > 0:
            other_op()
            remaining[0] -= 1  # benign race: both workers decrement

    for i in range(others):
        name = f"w{i}"
        controller.spawn(worker, name=name)
        controller.start(name)

    granted = controller.run_random(step_budget)
    outcome = "completed" if not controller.runnable() else "stalled"
    if outcome == "completed":
        for i in range(others):
            controller.result(f"w{i}")  # surface worker errors
    return outcome
