"""Random-stream derivation and an order-preserving worker map.

Every unit of Monte Carlo work gets its own stream derived from a master
seed plus a structural key, so results never depend on scheduling or on the
number of workers.
"""
from __future__ import annotations

import hashlib
from concurrent.futures import ProcessPoolExecutor

import numpy as np

# elements of the (trials, num_blocks) energy array drawn per chunk
CHUNK_ELEMENTS = 1 << 20


def key_int(value) -> int:
    """Stable 32-bit integer for a spawn-key component (floats, strings, ints)."""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool) and value >= 0:
        return int(value)
    if isinstance(value, float):
        value = repr(round(value, 12))
    digest = hashlib.sha256(str(value).encode()).digest()
    return int.from_bytes(digest[:4], "little")


def derive_rng(master_seed: int, *key) -> np.random.Generator:
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(key_int(k) for k in key))
    return np.random.default_rng(ss)


def stream_id(rng: np.random.Generator) -> str:
    ss = rng.bit_generator.seed_seq
    entropy = getattr(ss, "entropy", None)
    spawn_key = getattr(ss, "spawn_key", ())
    return f"{entropy}:{'.'.join(str(k) for k in spawn_key)}"


def chunk_sizes(trials: int, num_blocks: int) -> list[int]:
    per = max(1, CHUNK_ELEMENTS // max(1, num_blocks))
    full, rest = divmod(int(trials), per)
    return [per] * full + ([rest] if rest else [])


def worker_map(fn, jobs, workers: int = 1) -> list:
    """``[fn(*job) for job in jobs]``, optionally across processes, in job order."""
    jobs = list(jobs)
    if workers <= 1 or len(jobs) <= 1:
        return [fn(*job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*jobs)))
