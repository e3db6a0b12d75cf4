import threading

import pytest

from bigatomics.words import (MAX_WORDS, AtomicWord, as_payload, read_words,
                              write_words, zero_payload)


def test_atomic_word_load_store_cas():
    w = AtomicWord(0)
    assert w.load() == 0
    w.store(5)
    assert w.load() == 5
    assert w.cas(5, 6)
    assert not w.cas(5, 7)
    assert w.load() == 6
    ok, cur = w.cas_strong(9, 10)
    assert (ok, cur) == (False, 6)
    ok, cur = w.cas_strong(6, 10)
    assert (ok, cur) == (True, 6)
    assert w.exchange(11) == 10
    assert w.fetch_add(3) == 11
    assert w.load() == 14


def test_atomic_word_object_identity_semantics():
    a, b = object(), object()
    w = AtomicWord(a)
    assert not w.cas(b, a)
    assert w.cas(a, b)
    assert w.load() is b


def test_concurrent_cas_single_winner_per_round():
    w = AtomicWord(0)
    rounds = 200
    p = 4
    wins = [0] * p
    barrier = threading.Barrier(p)

    def run(tid):
        for r in range(rounds):
            barrier.wait()
            if w.cas(r, (tid + 1) << 32 | r):
                wins[tid] += 1
            barrier.wait()
            if tid == 0:
                w.store(r + 1)
            barrier.wait()

    ts = [threading.Thread(target=run, args=(i,)) for i in range(p)]
    for t in ts:
        t.start()
    for t in ts:
        t.join()
    assert sum(wins) == rounds


def test_payload_validation():
    assert zero_payload(3) == (0, 0, 0)
    assert as_payload([1, 2]) == (1, 2)
    with pytest.raises(ValueError):
        zero_payload(0)
    with pytest.raises(ValueError):
        zero_payload(MAX_WORDS + 1)
    with pytest.raises(ValueError):
        as_payload([])


def test_word_copies_round_trip():
    buf = [0] * 4
    write_words(buf, (1, 2, 3, 4))
    assert read_words(buf) == (1, 2, 3, 4)


def test_payload_bitwise_inequality():
    assert (1, 2, 3) != (1, 2, 4)
    assert (0,) * 4 == (0, 0, 0, 0)
