"""Process-level parallelism capped by the CRNET_THREADS environment variable."""

import os
from concurrent.futures import ProcessPoolExecutor

from .config import ConfigError


def thread_cap():
    raw = os.environ.get("CRNET_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"CRNET_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError("CRNET_THREADS must be at least 1")
    return n


def keyed_map(fn, items):
    """Evaluate fn(key, arg) for (key, arg) items and return a dict by key.

    Work is spread over at most CRNET_THREADS processes; results do not
    depend on scheduling because every cell is seeded on its own.
    """
    items = list(items)
    workers = min(thread_cap(), len(items)) if items else 1
    if workers <= 1:
        return {k: fn(k, a) for k, a in items}
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = {k: pool.submit(fn, k, a) for k, a in items}
        return {k: f.result() for k, f in futures.items()}
