import threading

from bigatomics.locks import LockPool, SeqLockCell, SimpLockCell


def test_simplock_sequential_semantics():
    c = SimpLockCell((0, 0))
    assert c.load() == (0, 0)
    c.store((1, 2))
    assert c.load() == (1, 2)
    assert c.cas((1, 2), (3, 4))
    assert not c.cas((1, 2), (5, 6))
    assert c.load() == (3, 4)
    assert c.cas((3, 4), (3, 4))  # equal-value success


def test_simplock_external_pool():
    pool = LockPool(size=8)
    cells = [SimpLockCell((0,), lock_pool=pool) for _ in range(32)]
    for i, c in enumerate(cells):
        c.store((i,))
    assert [c.load() for c in cells] == [(i,) for i in range(32)]


def test_seqlock_sequential_semantics():
    c = SeqLockCell((0, 0, 0))
    c.store((1, 2, 3))
    assert c.load() == (1, 2, 3)
    c.store((4, 5, 6))
    assert c.load() == (4, 5, 6)
    assert c.cas((4, 5, 6), (7, 8, 9))
    assert c.load() == (7, 8, 9)
    assert not c.cas((0, 0, 0), (1, 1, 1))
    assert c.load() == (7, 8, 9)


def test_seqlock_version_parity_on_store():
    c = SeqLockCell((0,))
    assert c._version.load() == 0
    c.store((1,))
    assert c._version.load() == 2
    c.store((2,))
    assert c._version.load() == 4


def test_seqlock_failed_cas_still_releases_with_plus_two():
    c = SeqLockCell((0,))
    assert not c.cas((9,), (1,))
    assert c._version.load() == 2
    assert not (c._version.load() & 1)


def test_seqlock_version_counts_completed_writes_under_race():
    c = SeqLockCell((0, 0))
    writes_per_thread = 500
    p = 4

    def writer(tid):
        for i in range(writes_per_thread):
            c.store((tid, i))

    ts = [threading.Thread(target=writer, args=(i,)) for i in range(p)]
    for t in ts:
        t.start()
    for t in ts:
        t.join()
    assert c._version.load() == 2 * writes_per_thread * p


def test_racing_stores_leave_one_of_the_stored_values():
    for cell_cls in (SimpLockCell, SeqLockCell):
        c = cell_cls((0, 0))
        p = 4
        barrier = threading.Barrier(p)

        def writer(tid):
            barrier.wait()
            c.store((tid + 1, tid + 1))

        ts = [threading.Thread(target=writer, args=(i,)) for i in range(p)]
        for t in ts:
            t.start()
        for t in ts:
            t.join()
        assert c.load() in {(i + 1, i + 1) for i in range(p)}


def test_concurrent_cas_from_same_expected_has_one_winner():
    for cell_cls in (SimpLockCell, SeqLockCell):
        rounds = 100
        p = 4
        c = cell_cls((0, 0))
        wins = [0] * p
        barrier = threading.Barrier(p)

        def run(tid):
            for r in range(rounds):
                barrier.wait()
                if c.cas((r, r), (r + 1, r + 1)):
                    wins[tid] += 1
                barrier.wait()

        ts = [threading.Thread(target=run, args=(i,)) for i in range(p)]
        for t in ts:
            t.start()
        for t in ts:
            t.join()
        assert sum(wins) == rounds
        assert c.load() == (rounds, rounds)
