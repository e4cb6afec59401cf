"""
Replica scheduling.

Replicas are cut into fixed-size chunks; chunks run on a process pool and come
back in chunk order, so the reduction is independent of the worker count.
"""

import logging
import os
import sys

import numpy as np
from concurrent.futures import ProcessPoolExecutor
from dotenv import load_dotenv
from tqdm import tqdm

logger = logging.getLogger(__name__)

load_dotenv()

CHUNK_SIZE = 1024


def default_workers():
    """LRP_WORKERS when it is a positive integer, otherwise one worker per CPU"""
    workers_env = os.getenv("LRP_WORKERS", "")
    if workers_env and workers_env.isdigit() and int(workers_env) > 0:
        return int(workers_env)
    return os.cpu_count() or 1


def replica_chunks(n_replicas, chunk_size=CHUNK_SIZE):
    if n_replicas < 0 or chunk_size < 1:
        raise ValueError("replica count must be nonnegative and chunk size positive")
    return [(start, min(start + chunk_size, n_replicas)) for start in range(0, n_replicas, chunk_size)]


def _call(job):
    fn, start, stop = job
    return fn(start, stop)


class ReplicaPool:
    """
    Runs `fn(start, stop) -> array` over replica ranges and concatenates in order.

    `fn` must be picklable (a module-level function or a functools.partial of one).
    """

    def __init__(self, workers=None, chunk_size=CHUNK_SIZE, progress=None, checkpoint=None):
        self.workers = default_workers() if workers is None else int(workers)
        if self.workers < 1:
            raise ValueError(f"worker count must be positive, got {self.workers}")
        self.chunk_size = chunk_size
        self.progress = sys.stderr.isatty() if progress is None else progress
        self.checkpoint = checkpoint

    def map(self, fn, n_replicas, label="replicas"):
        chunks = replica_chunks(n_replicas, self.chunk_size)
        results = [None] * len(chunks)
        todo = []
        for i, (start, stop) in enumerate(chunks):
            stored = self.checkpoint.load(label, start, stop) if self.checkpoint else None
            if stored is not None:
                results[i] = stored
            else:
                todo.append(i)
        if len(todo) < len(chunks):
            logger.info("%s: %d of %d chunks restored from checkpoint", label, len(chunks) - len(todo), len(chunks))

        jobs = [(fn, *chunks[i]) for i in todo]
        bar = tqdm(total=len(jobs), desc=label, unit="chunk", disable=not self.progress or not jobs)
        if self.workers == 1 or len(jobs) <= 1:
            outputs = map(_call, jobs)
            self._collect(outputs, todo, chunks, results, label, bar)
        else:
            with ProcessPoolExecutor(max_workers=min(self.workers, len(jobs))) as ex:
                self._collect(ex.map(_call, jobs), todo, chunks, results, label, bar)
        bar.close()

        if not results:
            return np.zeros(0)
        return np.concatenate([np.asarray(r) for r in results], axis=0)

    def _collect(self, outputs, todo, chunks, results, label, bar):
        for i, values in zip(todo, outputs):
            results[i] = values
            if self.checkpoint:
                self.checkpoint.save(label, *chunks[i], values)
            bar.update(1)


def serial_pool():
    return ReplicaPool(workers=1, progress=False)
