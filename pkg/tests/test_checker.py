"""The linearizability checker is validated against an independent oracle
before anything else trusts it: enumerate every real-time-consistent
permutation of a history and replay it with a local model."""

import itertools
import random

import pytest

from bigatomics.lincheck.checker import (HistoryTooLargeError,
                                         check_linearizable)
from bigatomics.lincheck.history import CompletedOp, MapSpec, RegisterSpec


def _replay_registers(order, initial):
    """Independent sequential replay: plain dict of cell -> payload."""
    state = list(initial)
    for op in order:
        if op.kind == "load":
            if op.result != state[op.args[0]]:
                return False
        elif op.kind == "store":
            state[op.args[0]] = op.args[1]
            if op.result is not None:
                return False
        elif op.kind == "cas":
            c, e, d = op.args
            ok = state[c] == e
            if ok:
                state[c] = d
            if op.result != ok:
                return False
        else:
            raise AssertionError(op.kind)
    return True


def _oracle(history, initial):
    """Brute-force oracle: try every permutation consistent with real time."""
    n = len(history)
    for perm in itertools.permutations(range(n)):
        ok = True
        for pos, i in enumerate(perm):
            for j in perm[pos + 1:]:
                if history[j].resp < history[i].inv:
                    ok = False
                    break
            if not ok:
                break
        if ok and _replay_registers([history[i] for i in perm], initial):
            return True
    return False


def _op(thread, kind, args, result, inv, resp):
    return CompletedOp(thread, kind, args, result, inv, resp)


def test_sequential_history_is_linearizable():
    h = [
        _op(0, "store", (0, (1,)), None, 0, 1),
        _op(0, "load", (0,), (1,), 2, 3),
        _op(0, "cas", (0, (1,), (2,)), True, 4, 5),
        _op(0, "load", (0,), (2,), 6, 7),
    ]
    assert _oracle(h, [(0,)])
    assert check_linearizable(h, RegisterSpec, ((0,),))


def test_load_of_never_written_value_is_rejected():
    h = [
        _op(0, "store", (0, (1,)), None, 0, 1),
        _op(1, "load", (0,), (9,), 2, 3),
    ]
    assert not _oracle(h, [(0,)])
    assert not check_linearizable(h, RegisterSpec, ((0,),))


def test_overlapping_three_thread_history_hand_checked():
    # Three threads, six ops, heavy overlap.  The oracle enumerates all
    # real-time-consistent interleavings first; the checker must agree.
    h = [
        _op(0, "cas", (0, (0,), (1,)), True, 0, 7),
        _op(1, "cas", (0, (0,), (2,)), False, 1, 6),
        _op(2, "load", (0,), (0,), 2, 3),
        _op(2, "load", (0,), (1,), 8, 9),
        _op(1, "cas", (0, (1,), (3,)), True, 10, 13),
        _op(0, "load", (0,), (3,), 11, 12),
    ]
    assert _oracle(h, [(0,)])
    assert check_linearizable(h, RegisterSpec, ((0,),))


def test_overlap_allows_reordering_against_invocation_order():
    # A load that begins before a store is invoked may still see its value.
    h = [
        _op(0, "load", (0,), (5,), 0, 3),
        _op(1, "store", (0, (5,)), None, 1, 2),
    ]
    assert _oracle(h, [(0,)])
    assert check_linearizable(h, RegisterSpec, ((0,),))


def test_strict_precedence_is_enforced():
    # The load completes before the store is invoked: must see the old value.
    h = [
        _op(0, "load", (0,), (5,), 0, 1),
        _op(1, "store", (0, (5,)), None, 2, 3),
    ]
    assert not _oracle(h, [(0,)])
    assert not check_linearizable(h, RegisterSpec, ((0,),))


def _random_history(rng, n_threads=3, max_ops=6, n_cells=2):
    """Well-formed random history: per-thread sequential ops, random
    interleaving of invocation/response events, random plausible results."""
    values = [(v,) for v in range(3)]
    ops_per_thread = [rng.randint(0, max_ops) for _ in range(n_threads)]
    while sum(ops_per_thread) == 0 or sum(ops_per_thread) > max_ops:
        ops_per_thread = [rng.randint(0, max_ops) for _ in range(n_threads)]
    events = []
    for t, cnt in enumerate(ops_per_thread):
        for i in range(cnt):
            events.append((t, i))
    # Build a legal event order directly: at each step either invoke some
    # thread's next op or respond to a pending one.
    next_op = [0] * n_threads
    pending = [None] * n_threads
    stamp = {}
    idx = 0
    while True:
        choices = []
        for t in range(n_threads):
            if pending[t] is not None:
                choices.append(("resp", t))
            elif next_op[t] < ops_per_thread[t]:
                choices.append(("inv", t))
        if not choices:
            break
        ev, t = rng.choice(choices)
        if ev == "inv":
            stamp[("inv", t, next_op[t])] = idx
            pending[t] = next_op[t]
            next_op[t] += 1
        else:
            stamp[("resp", t, pending[t])] = idx
            pending[t] = None
        idx += 1
    history = []
    for t, i in events:
        kind = rng.choice(["load", "store", "cas"])
        cell = rng.randrange(n_cells)
        if kind == "load":
            args, result = (cell,), rng.choice(values)
        elif kind == "store":
            args, result = (cell, rng.choice(values)), None
        else:
            args = (cell, rng.choice(values), rng.choice(values))
            result = rng.random() < 0.5
        history.append(_op(t, kind, args, result,
                           stamp[("inv", t, i)], stamp[("resp", t, i)]))
    return history


def test_checker_agrees_with_permutation_oracle_on_random_histories():
    rng = random.Random(20260810)
    initial = ((0,), (0,))
    agree_true = agree_false = 0
    for _ in range(300):
        h = _random_history(rng)
        expected = _oracle(h, list(initial))
        got = check_linearizable(h, RegisterSpec, initial)
        assert got == expected, f"disagreement on {h}"
        if expected:
            agree_true += 1
        else:
            agree_false += 1
    # The sample must exercise both verdicts to mean anything.
    assert agree_true > 20
    assert agree_false > 20


def test_empty_history_is_linearizable():
    assert check_linearizable([], RegisterSpec, ((0,),))


def test_size_limit_is_a_refusal_not_a_verdict():
    h = [_op(0, "load", (0,), (0,), i * 2, i * 2 + 1) for i in range(30)]
    with pytest.raises(HistoryTooLargeError):
        check_linearizable(h, RegisterSpec, ((0,),))


def test_map_spec_replay():
    h = [
        _op(0, "insert", (1, 10), True, 0, 1),
        _op(1, "insert", (1, 20), False, 2, 3),
        _op(0, "find", (1,), 10, 4, 5),
        _op(1, "delete", (1,), True, 6, 7),
        _op(0, "find", (1,), None, 8, 9),
        _op(1, "delete", (1,), False, 10, 11),
    ]
    assert check_linearizable(h, MapSpec, frozenset())


def test_map_spec_rejects_find_after_delete():
    h = [
        _op(0, "insert", (1, 10), True, 0, 1),
        _op(0, "delete", (1,), True, 2, 3),
        _op(0, "find", (1,), 10, 4, 5),
    ]
    assert not check_linearizable(h, MapSpec, frozenset())
