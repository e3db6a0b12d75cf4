import threading

import pytest

from bigatomics.smr import (GUARDS_PER_THREAD, POISON, Marked, Node,
                            ThreadRegistry, is_marked, mark, node_of)
from bigatomics.words import AtomicWord


def test_mark_unmark_roundtrip():
    n = Node((1,))
    m = mark(n)
    assert is_marked(m)
    assert not is_marked(n)
    assert node_of(m) is n
    assert node_of(n) is n
    assert mark(n) is not m  # fresh wrapper per install


def test_thread_index_is_stable_and_capacity_checked():
    reg = ThreadRegistry(max_threads=2)
    assert reg.thread_index() == reg.thread_index() == 0

    # Two live extra threads: the first registers, the second exceeds the
    # fixed capacity and must fail at registration.
    barrier = threading.Barrier(2)
    seen, err = [], []

    def first():
        seen.append(reg.thread_index())
        barrier.wait()

    def second():
        barrier.wait()  # ensure `first` is registered and still alive
        try:
            reg.thread_index()
        except RuntimeError as exc:
            err.append(exc)

    ts = [threading.Thread(target=first), threading.Thread(target=second)]
    for t in ts:
        t.start()
    for t in ts:
        t.join()
    assert seen == [1]
    assert err, "third concurrent thread must be a startup error"


def test_protect_returns_stable_handle():
    reg = ThreadRegistry(4)
    node = reg.alloc_node((1, 2))
    slot = AtomicWord(node)
    guard = reg.acquire_guard()
    got = guard.protect(slot)
    assert got is node
    assert id(node) in reg.announced_nodes()
    guard.release()
    assert id(node) not in reg.announced_nodes()


def test_protect_passes_marked_and_null_words_through():
    reg = ThreadRegistry(4)
    node = reg.alloc_node((1,))
    slot = AtomicWord(mark(node))
    guard = reg.acquire_guard()
    got = guard.protect(slot)
    assert is_marked(got) and node_of(got) is node
    assert id(node) in reg.announced_nodes()
    guard.release()

    slot2 = AtomicWord(None)
    guard = reg.acquire_guard()
    assert guard.protect(slot2) is None
    guard.release()


def test_protect_retries_when_source_changes(monkeypatch):
    reg = ThreadRegistry(4)
    a = reg.alloc_node((1,))
    b = reg.alloc_node((2,))
    slot = AtomicWord(a)
    loads = [a, b, b]  # announce a, revalidate sees b, then b stabilizes

    class FlakySlot:
        def load(self):
            return loads.pop(0) if loads else b

    retries = []

    class Hook:
        def __call__(self, label):
            retries.append(label)

        def note(self, label, *payload):
            pass

    guard = reg.acquire_guard()
    got = guard.protect(FlakySlot(), Hook())
    assert got is b
    assert retries.count("smr.protect.retry") == 1
    guard.release()


def test_retire_scan_respects_announcements():
    reg = ThreadRegistry(4, scan_threshold=1000)
    node = reg.alloc_node((7,))
    slot = AtomicWord(node)
    guard = reg.acquire_guard()
    guard.protect(slot)
    reg.retire(node)
    assert reg.scan_reclaim() == 0  # announced: deferred
    assert node.value == (7,)
    guard.release()
    assert reg.scan_reclaim() == 1
    assert node.value is POISON


def test_double_retire_is_detected():
    reg = ThreadRegistry(4)
    node = reg.alloc_node((1,))
    reg.retire(node)
    with pytest.raises(RuntimeError):
        reg.retire(node)


def test_empty_retire_list_scan_frees_nothing():
    reg = ThreadRegistry(4)
    assert reg.scan_reclaim() == 0


def test_backlog_stays_under_scan_threshold():
    reg = ThreadRegistry(4, scan_threshold=50)
    for i in range(500):
        reg.retire(reg.alloc_node((i,)))
        assert reg.retired_backlog() <= 50 + 1
    # all unannounced, so a final scan empties the backlog
    reg.scan_reclaim()
    assert reg.retired_backlog() == 0


def test_pool_recycles_nodes_and_counts_live():
    reg = ThreadRegistry(4, scan_threshold=4)
    nodes = [reg.alloc_node((i,)) for i in range(8)]
    assert reg.live_node_count() == 8
    for n in nodes:
        reg.retire(n)
    reg.scan_reclaim()
    assert reg.live_node_count() == 0
    again = reg.alloc_node((9,))
    assert again in nodes  # recycled, not fresh
    assert again.value == (9,)


def test_protected_node_never_recycled_under_stress():
    # Poison-on-free canary: a reader holding a guard must never observe
    # its protected node's storage reused.
    reg = ThreadRegistry(4, scan_threshold=8)
    slot = AtomicWord(reg.alloc_node((0,)))
    stop = threading.Event()
    bad = []

    def writer():
        i = 0
        while not stop.is_set():
            i += 1
            node = reg.alloc_node((i,))
            old = slot.exchange(node)
            reg.retire(old)
        reg.scan_reclaim()

    def reader():
        while not stop.is_set():
            guard = reg.acquire_guard()
            node = guard.protect(slot)
            val = node.value
            if val is POISON or node.retired and val is POISON:
                bad.append(val)
            guard.release()

    ts = [threading.Thread(target=writer), threading.Thread(target=reader)]
    for t in ts:
        t.start()
    stop_after = threading.Timer(1.0, stop.set)
    stop_after.start()
    for t in ts:
        t.join()
    assert not bad


def test_guard_capacity_per_thread():
    reg = ThreadRegistry(2)
    guards = [reg.acquire_guard() for _ in range(GUARDS_PER_THREAD)]
    with pytest.raises(RuntimeError):
        reg.acquire_guard()
    for g in guards:
        g.release()
    reg.acquire_guard().release()
