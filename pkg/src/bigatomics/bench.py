"""Throughput benchmark over an array of cells or the hash tables.

Workers draw ranks from a Zipfian distribution (z=0 uniform) and perform a
find (load) or, u percent of the time, an update (an equal mix of inserts
and deletes done as load-then-CAS on the array, or map insert/delete on the
tables).  Runs are duration-based with a warmup excluded from the counts;
workload generation is deterministic per (seed, thread index).

Results append to a CSV with the header
``impl,mode,p,n,u,z,k,seconds,ops,mops``.
"""

from __future__ import annotations

import argparse
import os
import sys
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from .epoch import EpochDomain
from .hashtable import CacheHashTable, ChainingTable, ChainNode, EMPTY
from .impls import IMPL_NAMES, IMPLEMENTATIONS
from .smr import ThreadRegistry
from .workload import ZipfianSampler, thread_seed
from .words import MAX_WORDS, zero_payload

MODES = ("array", "hash", "hash-chaining")

_M64 = np.uint64((1 << 64) - 1)
_BATCH = 256

CSV_HEADER = "impl,mode,p,n,u,z,k,seconds,ops,mops"


class ConfigError(ValueError):
    pass


@dataclass
class BenchConfig:
    impl: str
    mode: str = "array"
    p: int = 0  # 0: use the hardware thread count
    n: int = 10_000_000
    u: int = 5
    z: float = 0.0
    k: int = 4
    seconds: float = 5.0
    seed: int = 1
    warmup: float = 1.0

    def validated(self) -> "BenchConfig":
        if self.impl not in IMPL_NAMES:
            raise ConfigError(f"unknown impl {self.impl!r}; choose from {IMPL_NAMES}")
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; choose from {MODES}")
        if self.p == 0:
            self.p = os.cpu_count() or 1
        if self.p < 1:
            raise ConfigError("p must be >= 1")
        if self.n < 1:
            raise ConfigError("n must be >= 1")
        if not 0 <= self.u <= 100:
            raise ConfigError("u must be in 0..100")
        if not 0.0 <= self.z <= 0.99:
            raise ConfigError("z must be in 0..0.99")
        if not 1 <= self.k <= MAX_WORDS:
            raise ConfigError(f"k must be in 1..{MAX_WORDS}")
        if self.impl == "writable" and self.mode == "array" and self.k >= MAX_WORDS:
            raise ConfigError("writable cells reserve one word; k must be <= 15")
        if self.seconds <= 0:
            raise ConfigError("seconds must be positive")
        return self


@dataclass
class ThroughputReport:
    impl: str
    mode: str
    p: int
    n: int
    u: int
    z: float
    k: int
    seconds: float
    ops: int
    find_ops: int = field(default=0, repr=False)
    update_ops: int = field(default=0, repr=False)

    @property
    def throughput(self) -> float:
        return self.ops / self.seconds

    @property
    def mops(self) -> float:
        return self.ops / self.seconds / 1e6

    def csv_row(self) -> str:
        return (f"{self.impl},{self.mode},{self.p},{self.n},{self.u},"
                f"{self.z:g},{self.k},{self.seconds:g},{self.ops},"
                f"{self.mops:.3f}")


def _mix64_np(x: np.ndarray) -> np.ndarray:
    x = (x + np.uint64(0x9E3779B97F4A7C15)) & _M64
    x = ((x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & _M64
    x = ((x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & _M64
    return x ^ (x >> np.uint64(31))


def _run_workers(cfg: BenchConfig, worker, n_threads: int) -> ThroughputReport:
    """Spawn workers, measure the post-warmup window, and aggregate."""
    stop = threading.Event()
    counts = [0] * n_threads
    finds = [0] * n_threads
    updates = [0] * n_threads
    threads = [
        threading.Thread(target=worker, args=(tid, counts, finds, updates, stop),
                         daemon=True)
        for tid in range(n_threads)
    ]
    for t in threads:
        t.start()
    time.sleep(cfg.warmup)
    t0 = time.perf_counter()
    base = (list(counts), list(finds), list(updates))
    time.sleep(cfg.seconds)
    t1 = time.perf_counter()
    top = (list(counts), list(finds), list(updates))
    stop.set()
    for t in threads:
        t.join()
    elapsed = t1 - t0
    ops = sum(top[0]) - sum(base[0])
    return ThroughputReport(
        impl=cfg.impl, mode=cfg.mode, p=cfg.p, n=cfg.n, u=cfg.u, z=cfg.z,
        k=cfg.k, seconds=elapsed, ops=ops,
        find_ops=sum(top[1]) - sum(base[1]),
        update_ops=sum(top[2]) - sum(base[2]))


def run_array_bench(cfg: BenchConfig) -> ThroughputReport:
    """Find/insert/delete over an array of n cells each holding a
    full/empty flag word plus value words."""
    cfg = cfg.validated()
    registry = ThreadRegistry(max_threads=cfg.p + 1)
    factory = IMPLEMENTATIONS[cfg.impl].make_factory(registry)
    empty = zero_payload(cfg.k)
    cells = [factory(empty) for _ in range(cfg.n)]
    fulls = [(1,) + (v,) * (cfg.k - 1) for v in range(256)]
    sampler = ZipfianSampler(cfg.n, cfg.z)
    u = cfg.u

    def worker(tid, counts, finds, updates, stop):
        rng = np.random.default_rng(thread_seed(cfg.seed, tid))
        ops = nf = nu = 0
        while not stop.is_set():
            ranks = sampler.sample_batch(rng, _BATCH).tolist()
            coins = rng.integers(0, 100, size=_BATCH).tolist()
            insdel = rng.integers(0, 2, size=_BATCH).tolist()
            vals = rng.integers(0, 256, size=_BATCH).tolist()
            for j in range(_BATCH):
                cell = cells[ranks[j]]
                if coins[j] < u:
                    cur = cell.load()
                    if insdel[j]:
                        if cur[0] == 0:
                            cell.cas(cur, fulls[vals[j]])
                    elif cur[0] == 1:
                        cell.cas(cur, empty)
                    nu += 1
                else:
                    cell.load()
                    nf += 1
                ops += 1
            counts[tid] = ops
            finds[tid] = nf
            updates[tid] = nu
    return _run_workers(cfg, worker, cfg.p)


def _build_table(cfg: BenchConfig, registry: ThreadRegistry):
    """Build the table for a hash-mode run, prefilled to ~50% occupancy
    deterministically from the seed."""
    epochs = EpochDomain(registry)
    ranks = np.arange(cfg.n, dtype=np.uint64)
    keys = _mix64_np(ranks + np.uint64(1))
    present = (_mix64_np(keys ^ np.uint64(cfg.seed & ((1 << 64) - 1)))
               & np.uint64(1)).astype(bool)
    pkeys = keys[present]
    values = ((pkeys >> np.uint64(8)) & np.uint64(0xFF)).astype(np.int64)

    if cfg.mode == "hash":
        factory = IMPLEMENTATIONS[cfg.impl].make_factory(registry)
        table = CacheHashTable(cfg.n, factory, epochs=epochs)
    else:
        table = ChainingTable(cfg.n, epochs=epochs)

    # Group the prefill keys by bucket and splice whole chains in, one CAS
    # per bucket; this is single-threaded initialization, not measured work.
    if table._shift >= 64:
        buckets = np.zeros(len(pkeys), dtype=np.uint64)
    else:
        buckets = ((pkeys * np.uint64(0x9E3779B97F4A7C15)) & _M64) \
            >> np.uint64(table._shift)
    order = np.argsort(buckets, kind="stable")
    b_sorted = buckets[order].tolist()
    k_sorted = pkeys[order].tolist()
    v_sorted = values[order].tolist()
    i = 0
    total = len(k_sorted)
    while i < total:
        b = b_sorted[i]
        j = i
        while j < total and b_sorted[j] == b:
            j += 1
        chain = None
        if cfg.mode == "hash":
            for m in range(j - 1, i, -1):
                chain = ChainNode(k_sorted[m], v_sorted[m], chain)
            link = (k_sorted[i], v_sorted[i], chain)
            if not table.buckets[b].cas((0, 0, EMPTY), link):
                raise RuntimeError("prefill raced; table must be quiescent")
        else:
            for m in range(j - 1, i - 1, -1):
                chain = ChainNode(k_sorted[m], v_sorted[m], chain)
            table.buckets[b].store(chain)
        i = j
    return table


def run_hash_bench(cfg: BenchConfig) -> ThroughputReport:
    """Find/insert/delete over a prefilled hash table keyed by the mixed
    Zipfian ranks."""
    cfg = cfg.validated()
    registry = ThreadRegistry(max_threads=cfg.p + 1)
    table = _build_table(cfg, registry)
    sampler = ZipfianSampler(cfg.n, cfg.z)
    u = cfg.u

    def worker(tid, counts, finds, updates, stop):
        rng = np.random.default_rng(thread_seed(cfg.seed, tid))
        ops = nf = nu = 0
        find = table.find
        insert = table.insert
        delete = table.delete
        while not stop.is_set():
            ranks = sampler.sample_batch(rng, _BATCH).astype(np.uint64)
            keys = _mix64_np(ranks + np.uint64(1)).tolist()
            coins = rng.integers(0, 100, size=_BATCH).tolist()
            insdel = rng.integers(0, 2, size=_BATCH).tolist()
            vals = rng.integers(0, 256, size=_BATCH).tolist()
            for j in range(_BATCH):
                if coins[j] < u:
                    if insdel[j]:
                        insert(keys[j], vals[j])
                    else:
                        delete(keys[j])
                    nu += 1
                else:
                    find(keys[j])
                    nf += 1
                ops += 1
            counts[tid] = ops
            finds[tid] = nf
            updates[tid] = nu

    report = _run_workers(cfg, worker, cfg.p)
    report.k = 3  # a chain link is key + value + successor
    return report


def run_bench(cfg: BenchConfig) -> ThroughputReport:
    cfg = cfg.validated()
    if cfg.mode == "array":
        return run_array_bench(cfg)
    return run_hash_bench(cfg)


def emit_report(rows, path: str) -> None:
    """Append rows to the CSV at `path`, writing the header only once."""
    try:
        need_header = not os.path.exists(path) or os.path.getsize(path) == 0
        with open(path, "a", encoding="utf-8", newline="") as f:
            if need_header:
                f.write(CSV_HEADER + "\n")
            for row in rows:
                f.write(row.csv_row() + "\n")
    except OSError as exc:
        raise ConfigError(f"cannot write CSV at {path}: {exc}") from exc


def parse_csv(path: str) -> list[ThroughputReport]:
    """Read back a results CSV; the golden-file tests round-trip this."""
    out = []
    with open(path, encoding="utf-8") as f:
        header = f.readline().rstrip("\n")
        if header != CSV_HEADER:
            raise ValueError(f"bad CSV header {header!r}")
        for line in f:
            impl, mode, p, n, u, z, k, seconds, ops, _mops = line.rstrip("\n").split(",")
            out.append(ThroughputReport(
                impl=impl, mode=mode, p=int(p), n=int(n), u=int(u),
                z=float(z), k=int(k), seconds=float(seconds), ops=int(ops)))
    return out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="bench",
        description="Throughput benchmark for the cell implementations")
    parser.add_argument("--impl", required=True, choices=IMPL_NAMES)
    parser.add_argument("--mode", default="array", choices=MODES)
    parser.add_argument("-p", type=int, default=0,
                        help="worker threads (default: hardware threads)")
    parser.add_argument("-n", type=int, default=10_000_000)
    parser.add_argument("-u", type=int, default=5, help="update percent 0..100")
    parser.add_argument("-z", type=float, default=0.0,
                        help="Zipfian exponent 0..0.99 (0 = uniform)")
    parser.add_argument("-k", type=int, default=4, help="payload words 1..16")
    parser.add_argument("--seconds", type=float, default=5.0)
    parser.add_argument("--warmup", type=float, default=1.0)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--csv", default=None, help="append results here")
    args = parser.parse_args(argv)
    cfg = BenchConfig(impl=args.impl, mode=args.mode, p=args.p, n=args.n,
                      u=args.u, z=args.z, k=args.k, seconds=args.seconds,
                      seed=args.seed, warmup=args.warmup)
    try:
        cfg = cfg.validated()
        report = run_bench(cfg)
        if args.csv:
            emit_report([report], args.csv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(CSV_HEADER)
    print(report.csv_row())
    return 0


if __name__ == "__main__":
    sys.exit(main())
