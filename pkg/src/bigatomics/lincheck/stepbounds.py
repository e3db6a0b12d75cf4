"""Step-count budgets: the testable form of per-operation time bounds.

Every schedule point is one shared-memory step.  For the wait-free cells,
an operation's step count (excluding hazard-protect retry iterations, the
one loop whose length is driven by other threads' completed updates) must
stay within a fixed budget C*k under any schedule.  C is calibrated once
from solo runs and widened by a fixed slack factor that covers the bounded
algorithmic retries an adversary can force; it is not tuned per run.
"""

from __future__ import annotations

import random

from ..impls import IMPLEMENTATIONS
from ..smr import ThreadRegistry
from .stepping import CountingHook, StepController

#: Fixed adversarial allowance over the solo-calibrated per-word constant.
SLACK = 4

_CAL_KS = (1, 2, 4, 8, 16)


def _ops_for(info, k):
    a = (1,) * k
    b = (2,) * k
    ops = {
        "load": lambda cell: cell.load(),
        "cas": lambda cell: cell.cas(cell.load(), b),
    }
    if info.supports_store:
        ops["store"] = lambda cell: cell.store(a)
    return ops


def solo_steps(impl_name: str, op_name: str, k: int) -> int:
    """Worst solo step count for one op at one payload size."""
    info = IMPLEMENTATIONS[impl_name]
    hook = CountingHook()
    registry = ThreadRegistry(max_threads=2)
    factory = info.make_factory(registry, hook=hook)
    if impl_name == "writable" and k >= 16:
        k = 15  # one word is reserved for the sequence number
    cell = factory((0,) * k)
    op = _ops_for(info, k)[op_name]
    worst = 0
    # Run the op a few times so both fresh-cell and steady-state paths are
    # covered (a first CAS on a fresh cell takes different branches).
    for _ in range(4):
        before = hook.effective_steps
        op(cell)
        worst = max(worst, hook.effective_steps - before)
    return worst


def calibrate(impl_name: str, op_name: str) -> int:
    """Per-word constant C: the worst solo steps/k ratio across sizes."""
    c = 0
    for k in _CAL_KS:
        steps = solo_steps(impl_name, op_name, k)
        kk = 15 if impl_name == "writable" and k >= 16 else k
        c = max(c, -(-steps // kk))
    return c


def budget(impl_name: str, op_name: str, k: int, c: int | None = None) -> int:
    if c is None:
        c = calibrate(impl_name, op_name)
    return SLACK * c * k


def adversarial_op_steps(impl_name: str, op_name: str, k: int, *,
                         seed: int = 0, rounds: int = 40,
                         threads: int = 3) -> list[int]:
    """Per-op effective step counts for a measured thread running under a
    random 3-thread schedule of mixed operations."""
    info = IMPLEMENTATIONS[impl_name]
    controller = StepController(seed=seed)
    registry = ThreadRegistry(max_threads=threads + 1)
    factory = info.make_factory(registry, hook=controller)
    cell = factory((0,) * k)
    ops = _ops_for(info, k)
    target = ops[op_name]

    def measured():
        for i in range(rounds):
            controller.note("op-start", i)
            target(cell)
            controller.note("op-end", i)

    def adversary(wid):
        rng = random.Random(seed * 97 + wid)
        names = list(ops)
        while True:
            ops[names[rng.randrange(len(names))]](cell)

    controller.spawn(measured, name="measured")
    controller.start("measured")
    for w in range(threads - 1):
        controller.spawn(adversary, w, name=f"adv{w}")
        controller.start(f"adv{w}")

    per_op: list[int] = []
    note_cursor = 0
    start_steps = None
    rng = random.Random(seed ^ 0xADVE)
    while not controller._gate("measured").done:
        names = controller.runnable()
        controller.step(rng.choice(names))
        notes = controller.notes
        while note_cursor < len(notes):
            name, label, payload = notes[note_cursor]
            note_cursor += 1
            if name != "measured":
                continue
            steps, retries = controller.steps_of("measured")
            if label == "op-start":
                start_steps = steps - retries
            elif label == "op-end" and start_steps is not None:
                per_op.append(steps - retries - start_steps)
                start_steps = None
    for w in range(threads - 1):
        controller.suspend(f"adv{w}")
    return per_op
