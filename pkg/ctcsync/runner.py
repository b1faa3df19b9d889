"""Parallel execution of experiment cells; supports multiprocessing and concurrent programming.

Results are always collected in submission order, so that the output of an experiment does not depend on the number
of workers.
"""
from __future__ import annotations
from typing import Any, Callable, List, Optional
import logging
import multiprocessing
from concurrent.futures import ThreadPoolExecutor as _ThreadPoolExecutor
from concurrent.futures import Future as _Future

__all__ = ['Runner', 'RunnerException']
_logger = logging.getLogger(__name__)


class RunnerException(Exception):
    """Exception raised for errors in the runner module."""

    def __init__(self, m):
        self.message = m

    def __str__(self):
        return self.message


class Runner:
    """Thread pool running experiment cells."""

    def __init__(self, n_procs: Optional[int] = None):
        """

        Args:
            n_procs: maximum number of cells run in parallel (default to `multiprocessing.cpu_count`)
        """
        if n_procs is not None and n_procs < 1:
            raise RunnerException(f"n_procs must be at least 1 (got {n_procs}).")
        self._n_procs: int = n_procs or multiprocessing.cpu_count()
        self._futures: List[_Future] = []
        self._pool: _ThreadPoolExecutor = _ThreadPoolExecutor(max_workers=self._n_procs)

    def __del__(self):
        self._pool.shutdown(wait=False)

    @property
    def n_procs(self) -> int:
        return self._n_procs

    def __call__(self, f: Callable, *args, **kwargs) -> Runner:
        """Submit one cell."""
        _logger.debug(f"Submitting {getattr(f, '__name__', f)} (cell {len(self._futures)}).")
        self._futures.append(self._pool.submit(f, *args, **kwargs))
        return self

    def wait(self):
        self._pool.shutdown(wait=True)
        self._pool = _ThreadPoolExecutor(max_workers=self._n_procs)

    def collect(self) -> List[Any]:
        """Wait for every submitted cell and return their results in submission order.

        Raises:
            the first exception raised by a cell.
        """
        futures, self._futures = self._futures, []
        self.wait()
        return [f.result() for f in futures]
