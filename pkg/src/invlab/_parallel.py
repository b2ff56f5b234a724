"""Deterministic chunked fan-out for Monte Carlo kernels.

Chunk boundaries depend only on (paths, budget), never on the thread
count, and results are reduced in ascending chunk order, so any thread
count reproduces the single-threaded output bit for bit (each path draws
from its own counter-based substream).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

ELEMENT_BUDGET = 1 << 21  # ~16 MB of float64 per in-flight chunk


def chunk_ranges(paths: int, n: int, budget: int = ELEMENT_BUDGET):
    """(start, count) chunks sized so a (count, n) matrix stays in budget."""
    chunk = max(1, min(paths, budget // max(n, 1)))
    out = []
    start = 0
    while start < paths:
        count = min(chunk, paths - start)
        out.append((start, count))
        start += count
    return out


def map_ordered(fn, items, threads: int = 1):
    """Apply fn over items, returning results in item order."""
    if threads <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))
