"""Parallel execution of observation jobs during dataset generation."""

from __future__ import annotations

import logging
import multiprocessing as mp
import multiprocessing.pool
import threading
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from trotterml.core.config import settings

if TYPE_CHECKING:
    from trotterml.processing.pipeline import ObservationJob

logger = logging.getLogger(__name__)

ResultCallback = Callable[["WorkerResult"], None]

# Live process pools, for shutdown_all_pools.
_live_pools: set[mp.pool.Pool] = set()
_live_lock = threading.Lock()


@dataclass
class WorkerResult:
    """Outcome of one (initial state, time index) job."""

    key: tuple[str, int]
    records: list[dict] = field(default_factory=list)  # plain dicts, pickled back to the parent
    success: bool = True
    error: str | None = None


def run_job(job: ObservationJob) -> WorkerResult:
    """Simulate one job; an exception becomes a failed result instead of killing the pool."""
    try:
        from trotterml.processing.pipeline import observe

        return WorkerResult(key=job.key, records=observe(job))
    except Exception as exc:
        logger.exception("Observation job %s failed", job.key)
        return WorkerResult(key=job.key, success=False, error=f"{type(exc).__name__}: {exc}")


class WorkerPool:
    """Runs observation jobs over processes, threads, or inline.

    ``kind`` is "process" or "thread"; it defaults to ``settings.pool_kind``.
    One worker always runs inline.
    """

    def __init__(self, worker_count: int | None = None, kind: str | None = None):
        self.worker_count = worker_count or settings.worker_count
        self.kind = (kind or settings.pool_kind).lower()
        if self.kind not in ("process", "thread"):
            raise ValueError(f"unknown pool kind {self.kind!r}")

    def process_batch(
        self, jobs: Sequence[ObservationJob], on_result: ResultCallback | None = None
    ) -> list[WorkerResult]:
        """Results come back in completion order; callers sort by key."""
        if not jobs:
            return []
        if self.worker_count <= 1:
            return self.process_batch_sequential(jobs, on_result)
        if self.kind == "thread":
            return self._run_threads(jobs, on_result)
        return self._run_processes(jobs, on_result)

    def _run_processes(
        self, jobs: Sequence[ObservationJob], on_result: ResultCallback | None
    ) -> list[WorkerResult]:
        workers = min(self.worker_count, len(jobs))
        chunk = max(1, min(settings.chunk_size, len(jobs) // workers))
        logger.debug("Process pool: %d workers, chunks of %d", workers, chunk)
        results: list[WorkerResult] = []
        pool = mp.Pool(processes=workers)
        with _live_lock:
            _live_pools.add(pool)
        try:
            for result in pool.imap_unordered(run_job, jobs, chunksize=chunk):
                results.append(result)
                if on_result:
                    on_result(result)
        finally:
            pool.terminate()
            pool.join()
            with _live_lock:
                _live_pools.discard(pool)
        return results

    def _run_threads(
        self, jobs: Sequence[ObservationJob], on_result: ResultCallback | None
    ) -> list[WorkerResult]:
        logger.debug("Thread pool: %d workers", self.worker_count)
        results: list[WorkerResult] = []
        with ThreadPoolExecutor(max_workers=self.worker_count) as executor:
            for future in as_completed([executor.submit(run_job, job) for job in jobs]):
                result = future.result()
                results.append(result)
                if on_result:
                    on_result(result)
        return results

    def process_batch_sequential(
        self, jobs: Sequence[ObservationJob], on_result: ResultCallback | None = None
    ) -> list[WorkerResult]:
        results = []
        for job in jobs:
            result = run_job(job)
            results.append(result)
            if on_result:
                on_result(result)
        return results


def shutdown_all_pools() -> None:
    """Terminate every live process pool; the CLI registers this at exit."""
    with _live_lock:
        pools = list(_live_pools)
        _live_pools.clear()
    for pool in pools:
        try:
            pool.terminate()
            pool.join()
        except Exception:
            logger.warning("Could not terminate a worker pool", exc_info=True)
