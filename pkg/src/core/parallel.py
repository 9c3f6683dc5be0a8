"""Order-preserving fan-out of independent work units onto worker threads."""

from __future__ import annotations

import asyncio
import logging
import os
from typing import Callable, List, Optional, Sequence, TypeVar

T = TypeVar("T")


def default_threads() -> int:
    """Thread cap from ``SPECTRALSHAPE_THREADS`` (falls back to the CPU count)."""
    env = os.environ.get("SPECTRALSHAPE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            logging.debug("[parallel] ignoring invalid SPECTRALSHAPE_THREADS=%r", env)
    return max(1, os.cpu_count() or 1)


def gather_threads(tasks: Sequence[Callable[[], T]], threads: Optional[int] = None) -> List[T]:
    """
    Run zero-argument callables concurrently, at most ``threads`` at a time.

    Results come back in the order of ``tasks``; the first exception propagates.
    """
    if not tasks:
        return []
    cap = max(1, int(threads)) if threads else default_threads()
    if cap == 1 or len(tasks) == 1:
        return [task() for task in tasks]

    async def _run_all() -> List[T]:
        gate = asyncio.Semaphore(cap)

        async def _run_one(idx: int, task: Callable[[], T]) -> T:
            async with gate:
                logging.debug("[parallel] starting unit %d/%d", idx + 1, len(tasks))
                return await asyncio.to_thread(task)

        return list(await asyncio.gather(*(_run_one(i, t) for i, t in enumerate(tasks))))

    return asyncio.run(_run_all())
