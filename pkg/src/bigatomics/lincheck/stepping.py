"""Schedule points and controlled thread stepping.

Cells built with a hook call it at every labeled shared-memory step.  A
hook is any object with ``__call__(label)`` (a schedule point, which may
park the thread) and ``note(label, *payload)`` (a non-blocking event
notification).  Cells built with ``hook=None`` skip all of it.

:class:`StepController` gates real threads through their points one at a
time: a worker parks at each point until the controller grants it one step,
so shared state is stable between grants and invariants can be audited at
every step boundary.  Schedules can be scripted (advance thread A to label
X, then run thread B to completion, ...) or random under a seed.
"""

from __future__ import annotations

import random
import threading
from collections import Counter

_STEP_TIMEOUT = 60.0


class CountingHook:
    """Tallies points and events without gating; for solo step counting."""

    def __init__(self):
        self.counts = Counter()
        self.total = 0
        self.protect_retries = 0
        self.notes = []

    def __call__(self, label):
        self.counts[label] += 1
        self.total += 1
        if label == "smr.protect.retry":
            self.protect_retries += 1

    def note(self, label, *payload):
        self.notes.append((label, payload))

    @property
    def effective_steps(self) -> int:
        """Steps excluding protect retry loops, which are the one loop whose
        length depends on other threads (see the reclamation caveat)."""
        return self.total - self.protect_retries


class _Gate:
    __slots__ = ("name", "go", "reached", "label", "done", "error", "result",
                 "steps", "protect_retries", "suspended", "thread")

    def __init__(self, name):
        self.name = name
        self.go = threading.Semaphore(0)
        self.reached = threading.Semaphore(0)
        self.label = None
        self.done = False
        self.error = None
        self.result = None
        self.steps = 0
        self.protect_retries = 0
        self.suspended = False
        self.thread = None


class StepDeadlock(Exception):
    pass


class StepController:
    """Single-steps spawned threads through their labeled points.

    The controller object itself is the hook to build cells with: worker
    threads park in ``__call__``; threads that were never spawned through
    the controller (the main thread building fixtures) pass through freely.
    """

    def __init__(self, seed: int | None = None):
        self._gates: dict[int, _Gate] = {}
        self._order: list[_Gate] = []
        self._rng = random.Random(seed)
        self.trace: list[tuple[str, str]] = []
        self.notes: list[tuple] = []
        self._pending_notes: list[tuple] = []

    # -- hook protocol (called from worker threads) ---------------------------

    def __call__(self, label):
        gate = self._gates.get(threading.get_ident())
        if gate is None:
            return
        gate.label = label
        gate.reached.release()
        gate.go.acquire()
        gate.steps += 1
        if label == "smr.protect.retry":
            gate.protect_retries += 1

    def note(self, label, *payload):
        gate = self._gates.get(threading.get_ident())
        name = gate.name if gate is not None else "?"
        self._pending_notes.append((name, label, payload))

    # -- spawning --------------------------------------------------------------

    def spawn(self, fn, *args, name: str | None = None) -> str:
        """Start a controlled thread; it parks before its first action."""
        gate = _Gate(name or f"t{len(self._order)}")

        def body():
            gate.go.acquire()
            try:
                gate.result = fn(*args)
            except BaseException as exc:  # surfaced at join
                gate.error = exc
            finally:
                gate.done = True
                gate.reached.release()

        t = threading.Thread(target=body, daemon=True)
        gate.thread = t
        self._order.append(gate)
        t.start()
        self._gates[t.ident] = gate
        return gate.name

    def _gate(self, name: str) -> _Gate:
        for g in self._order:
            if g.name == name:
                return g
        raise KeyError(name)

    # -- stepping ---------------------------------------------------------------

    def step(self, name: str) -> str | None:
        """Grant one step; returns the next pending label or None if the
        thread finished."""
        gate = self._gate(name)
        if gate.done:
            return None
        gate.go.release()
        if not gate.reached.acquire(timeout=_STEP_TIMEOUT):
            raise StepDeadlock(f"thread {name} did not reach a point")
        self.notes.extend(self._pending_notes)
        self._pending_notes.clear()
        if gate.done:
            self.trace.append((name, "<done>"))
            return None
        self.trace.append((name, gate.label))
        return gate.label

    def start(self, name: str) -> str | None:
        """Let a just-spawned thread run to its first point."""
        gate = self._gate(name)
        gate.go.release()
        if not gate.reached.acquire(timeout=_STEP_TIMEOUT):
            raise StepDeadlock(f"thread {name} never started")
        self.notes.extend(self._pending_notes)
        self._pending_notes.clear()
        if gate.done:
            return None
        return gate.label

    def pending_label(self, name: str) -> str | None:
        gate = self._gate(name)
        return None if gate.done else gate.label

    def advance_to(self, name: str, label: str, limit: int = 100000) -> None:
        """Step the thread until its next pending action is `label`."""
        gate = self._gate(name)
        for _ in range(limit):
            if gate.done:
                raise AssertionError(
                    f"{name} finished before reaching {label!r}")
            if gate.label == label:
                return
            self.step(name)
        raise AssertionError(f"{name} never reached {label!r}")

    def advance_past(self, name: str, label: str, limit: int = 100000) -> None:
        """Step the thread until it has executed a `label` action."""
        self.advance_to(name, label, limit)
        self.step(name)

    def run_to_completion(self, name: str, limit: int = 1000000) -> None:
        gate = self._gate(name)
        for _ in range(limit):
            if gate.done:
                return
            self.step(name)
        raise AssertionError(f"{name} did not complete within {limit} steps")

    def suspend(self, name: str) -> None:
        """Exclude the thread from random scheduling from now on."""
        self._gate(name).suspended = True

    def runnable(self) -> list[str]:
        return [g.name for g in self._order if not g.done and not g.suspended]

    def run_random(self, max_steps: int, on_boundary=None) -> int:
        """Grant steps to random runnable threads; returns steps granted.

        `on_boundary`, if given, runs after every granted step while all
        controlled threads are parked."""
        granted = 0
        while granted < max_steps:
            names = self.runnable()
            if not names:
                break
            self.step(self._rng.choice(names))
            granted += 1
            if on_boundary is not None:
                on_boundary()
        return granted

    def finish_all(self, limit: int = 1000000) -> None:
        """Run every non-suspended thread to completion, round-robin."""
        for _ in range(limit):
            names = self.runnable()
            if not names:
                break
            for name in names:
                self.step(name)
        else:
            raise AssertionError("threads did not finish within the limit")

    # -- results ------------------------------------------------------------------

    def result(self, name: str):
        gate = self._gate(name)
        if not gate.done:
            raise AssertionError(f"{name} has not finished")
        if gate.error is not None:
            raise gate.error
        return gate.result

    def steps_of(self, name: str) -> tuple[int, int]:
        gate = self._gate(name)
        return gate.steps, gate.protect_retries

    def join_all(self, timeout: float = 30.0) -> None:
        for g in self._order:
            if not g.done and not g.suspended:
                raise AssertionError(f"thread {g.name} still parked at join")
        for g in self._order:
            if g.suspended:
                continue
            g.thread.join(timeout)
        for g in self._order:
            if not g.suspended and g.error is not None:
                raise g.error
