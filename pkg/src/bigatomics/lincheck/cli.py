"""Command line front end for the verification suites.

``lincheck --impl X --suite {histories,probes,audits} --seed N`` runs a
smoke-scale pass of the chosen suite and exits nonzero on any violation.
"""

from __future__ import annotations

import argparse
import sys

from ..impls import IMPL_NAMES, IMPLEMENTATIONS
from ..smr import ThreadRegistry
from .audits import AUDITORS, shadow_audit
from .probes import progress_probe, torn_read_probe
from .stress import stress_linearizability

_SUSPEND_POINTS = {
    "simplock": ("simplock.release", "stalled"),
    "seqlock": ("seqlock.store.word", "stalled"),
    "indirect": ("indirect.cas.swap", "completed"),
    "cached-wf": ("cwf.cas.cacheword", "completed"),
    "cached-me": ("cme.seqlock.lock", "completed"),
    "writable": ("wr.store.help1", "completed"),
}


def _run_histories(impl: str, seed: int) -> int:
    rounds = 30
    passed = stress_linearizability(impl, rounds, seed=seed)
    print(f"histories {impl}: {passed}/{rounds} linearizable")
    return 0 if passed == rounds else 1


def _run_probes(impl: str, seed: int) -> int:
    info = IMPLEMENTATIONS[impl]
    failures = 0
    for k in (2, 4):
        factory = info.make_factory(ThreadRegistry(8))
        violations, loads = torn_read_probe(
            factory, k, threads=4, duration=1.0,
            supports_store=info.supports_store)
        print(f"torn-read {impl} k={k}: {violations} violations "
              f"over {loads} loads")
        failures += violations

    label, expected = _SUSPEND_POINTS[impl]

    def fixture(hook):
        registry = ThreadRegistry(8)
        factory = info.make_factory(registry, hook=hook)
        cell = factory((0, 0))
        if info.supports_store:
            victim = lambda: cell.store((7, 7))
        else:
            victim = lambda: cell.cas(cell.load(), (7, 7))
        return victim, cell.load

    outcome = progress_probe(fixture, label, n_ops=200,
                             step_budget=30000, seed=seed)
    print(f"progress {impl} suspended at {label}: {outcome} "
          f"(expected {expected})")
    if outcome != expected:
        failures += 1
    return 1 if failures else 0


def _run_audits(impl: str, seed: int) -> int:
    if impl not in AUDITORS:
        print(f"audits {impl}: no shadow invariants declared; skipping")
        return 0
    info = IMPLEMENTATIONS[impl]

    def factory_builder(hook):
        return info.make_factory(ThreadRegistry(8), hook=hook)

    violations = shadow_audit(impl, factory_builder, steps=3000, seed=seed)
    print(f"audits {impl}: {len(violations)} violations")
    for v in violations[:5]:
        print(f"  {v}")
    return 1 if violations else 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="lincheck", description="Concurrency verification suites")
    parser.add_argument("--impl", default="all",
                        choices=IMPL_NAMES + ("all",))
    parser.add_argument("--suite", required=True,
                        choices=("histories", "probes", "audits"))
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    impls = IMPL_NAMES if args.impl == "all" else (args.impl,)
    runner = {"histories": _run_histories, "probes": _run_probes,
              "audits": _run_audits}[args.suite]
    rc = 0
    for impl in impls:
        rc |= runner(impl, args.seed)
    return rc


if __name__ == "__main__":
    sys.exit(main())
