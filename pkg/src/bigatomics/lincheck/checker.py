"""Brute-force linearizability check over small complete histories.

Searches for a total order of the recorded operations that respects real
time (an op responding before another's invocation must come first) and
replays correctly against a sequential model.  Exponential in the worst
case, with memoized pruning on (set of linearized ops, model state); fine
at the <= 24-op sizes used here.
"""

from __future__ import annotations

DEFAULT_MAX_OPS = 24


class HistoryTooLargeError(Exception):
    """The history exceeds the brute-force size limit; not a verdict."""


def check_linearizable(history, spec, initial_state,
                       max_ops: int = DEFAULT_MAX_OPS) -> bool:
    """True iff some real-time-respecting total order of `history` replays
    correctly against `spec` starting from `initial_state`."""
    n = len(history)
    if n == 0:
        return True
    if n > max_ops:
        raise HistoryTooLargeError(
            f"history has {n} ops; brute-force limit is {max_ops}")

    ops = sorted(history, key=lambda op: op.inv)
    invs = [op.inv for op in ops]
    resps = [op.resp for op in ops]
    all_done = (1 << n) - 1
    seen = set()

    # Iterative DFS; recursion depth n is small but the explicit stack
    # avoids re-applying the spec on backtrack.
    stack = [(0, initial_state)]
    while stack:
        done_mask, state = stack.pop()
        if done_mask == all_done:
            return True
        key = (done_mask, state)
        if key in seen:
            continue
        seen.add(key)
        # An op may linearize next iff every op that responded before its
        # invocation is already linearized: inv < min resp over undone ops.
        min_resp = min(resps[i] for i in range(n) if not done_mask & (1 << i))
        for i in range(n):
            bit = 1 << i
            if done_mask & bit or invs[i] > min_resp:
                continue
            op = ops[i]
            result, new_state = spec.apply(state, op.kind, op.args)
            if result == op.result:
                stack.append((done_mask | bit, new_state))
    return False
